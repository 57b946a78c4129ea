#pragma once

#include <Eigen/Dense>

#include "fairhp/dataset.hpp"
#include "fairhp/trainers.hpp"

namespace fairhp {

/// Denominator convention for the per-group rates. Conditioned divides true
/// positives by the group's ground-truth positives (the standard TPR/FPR
/// reading); Group divides by the whole group size.
enum class RatesDenominator { Conditioned, Group };

struct GroupRates {
  double tpr0 = 0.0, fpr0 = 0.0, tpr1 = 0.0, fpr1 = 0.0;
  Eigen::Index n0 = 0, n1 = 0;
  Eigen::Index pos0 = 0, pos1 = 0, neg0 = 0, neg1 = 0;
  bool degenerate = false;  // a group had no positives or no negatives
};

GroupRates group_rates(const TrainedModel& model, const TabularDataset& val,
                       RatesDenominator denom = RatesDenominator::Conditioned);

/// Rates from precomputed predictions; the model-based overload forwards here.
GroupRates group_rates_from_predictions(const Eigen::VectorXi& predictions,
                                        const Eigen::VectorXi& labels,
                                        const Eigen::VectorXi& groups,
                                        RatesDenominator denom = RatesDenominator::Conditioned);

/// |TPR(0) - TPR(1)|.
double eod(const GroupRates& r);

/// (|TPR(0) - TPR(1)| + |FPR(0) - FPR(1)|) / 2.
double aod(const GroupRates& r);

double accuracy(const TrainedModel& model, const TabularDataset& val);
double accuracy_from_predictions(const Eigen::VectorXi& predictions, const Eigen::VectorXi& labels);

}  // namespace fairhp
