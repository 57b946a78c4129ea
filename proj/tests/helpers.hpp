#pragma once

// Shared builders for the test suites.

#include <functional>
#include <initializer_list>

#include "fairhp/dataset.hpp"
#include "fairhp/tracegen.hpp"

namespace fairhp::testing {

inline Eigen::VectorXi ivec(std::initializer_list<int> values) {
  Eigen::VectorXi v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (int x : values) v[i++] = x;
  return v;
}

inline Eigen::VectorXd dvec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

/// Trace whose target is an arbitrary function of the config plus optional
/// Gaussian noise; aod and eod both carry the target.
inline FairnessTrace make_function_trace(
    Algorithm algorithm, int n, uint64_t seed,
    const std::function<double(const HPSpace&, const HPConfig&)>& fn, double noise_sigma = 0.0) {
  FairnessTrace trace;
  trace.algorithm = algorithm;
  trace.space = hp_space(algorithm);
  trace.dataset_name = "constructed";
  trace.release = "base";
  trace.protected_attribute = "group";
  trace.meta.budget = n;
  trace.meta.seed = seed;
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    FairnessRecord rec;
    rec.config = sample_config(trace.space, rng);
    const double t = clamp01(fn(trace.space, rec.config) +
                             (noise_sigma > 0.0 ? noise_sigma * rng.normal() : 0.0));
    rec.aod = t;
    rec.eod = t;
    rec.accuracy = 0.9;
    rec.eval_seed = static_cast<uint64_t>(i);
    trace.records.push_back(std::move(rec));
  }
  return trace;
}

/// Balanced two-group labeled dataset where features carry group and label
/// signal; small and fast to train on.
inline TabularDataset small_classifier_dataset(int n = 200, uint64_t seed = 11) {
  SynthSpec spec;
  spec.n_rows = n;
  spec.n_numeric = 3;
  spec.n_categorical = 1;
  spec.group1_fraction = 0.5;
  spec.base_rate_g0 = 0.6;
  spec.base_rate_g1 = 0.4;
  spec.signal_strength = 0.8;
  spec.seed = seed;
  return synth_generate(spec);
}

}  // namespace fairhp::testing
