#include "fairhp/fairness.hpp"

#include <cmath>

namespace fairhp {

GroupRates group_rates_from_predictions(const Eigen::VectorXi& predictions,
                                        const Eigen::VectorXi& labels,
                                        const Eigen::VectorXi& groups,
                                        RatesDenominator denom) {
  const Eigen::Index n = predictions.size();
  if (n == 0) throw ArgumentError("group_rates: empty validation set");
  if (labels.size() != n || groups.size() != n)
    throw ArgumentError("group_rates: predictions, labels and groups differ in length");

  Eigen::Index tp[2] = {0, 0}, fp[2] = {0, 0}, pos[2] = {0, 0}, neg[2] = {0, 0};
  for (Eigen::Index i = 0; i < n; ++i) {
    const int g = groups[i];
    if (labels[i] == 1) {
      ++pos[g];
      if (predictions[i] == 1) ++tp[g];
    } else {
      ++neg[g];
      if (predictions[i] == 1) ++fp[g];
    }
  }

  GroupRates r;
  r.pos0 = pos[0];
  r.pos1 = pos[1];
  r.neg0 = neg[0];
  r.neg1 = neg[1];
  r.n0 = pos[0] + neg[0];
  r.n1 = pos[1] + neg[1];
  if (r.n0 == 0 || r.n1 == 0)
    throw ArgumentError("group_rates: a protected group is absent from the validation set");

  auto rate = [&](Eigen::Index count, Eigen::Index conditioned, Eigen::Index group_size) {
    const Eigen::Index div = denom == RatesDenominator::Conditioned ? conditioned : group_size;
    if (div == 0) {
      r.degenerate = true;
      return 0.0;
    }
    return static_cast<double>(count) / static_cast<double>(div);
  };
  r.tpr0 = rate(tp[0], pos[0], r.n0);
  r.fpr0 = rate(fp[0], neg[0], r.n0);
  r.tpr1 = rate(tp[1], pos[1], r.n1);
  r.fpr1 = rate(fp[1], neg[1], r.n1);
  // group-size denominators are never zero, but the degeneracy still matters
  if (pos[0] == 0 || pos[1] == 0 || neg[0] == 0 || neg[1] == 0) r.degenerate = true;
  return r;
}

GroupRates group_rates(const TrainedModel& model, const TabularDataset& val,
                       RatesDenominator denom) {
  return group_rates_from_predictions(predict(model, val.rows), val.labels, val.groups, denom);
}

double eod(const GroupRates& r) { return std::abs(r.tpr0 - r.tpr1); }

double aod(const GroupRates& r) {
  return 0.5 * (std::abs(r.tpr0 - r.tpr1) + std::abs(r.fpr0 - r.fpr1));
}

double accuracy_from_predictions(const Eigen::VectorXi& predictions,
                                 const Eigen::VectorXi& labels) {
  const Eigen::Index n = predictions.size();
  if (n == 0) throw ArgumentError("accuracy: empty validation set");
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) correct += predictions[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(n);
}

double accuracy(const TrainedModel& model, const TabularDataset& val) {
  return accuracy_from_predictions(predict(model, val.rows), val.labels);
}

}  // namespace fairhp
