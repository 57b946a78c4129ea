#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fairhp/surrogates.hpp"
#include "fairhp/tracegen.hpp"

namespace fairhp {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Coefficient of determination; may be negative. Throws
/// UndefinedMetricError when the truth vector is constant.
double r2(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred);

/// RMSE divided by the mean observed value. Throws UndefinedMetricError when
/// mean(truth) is zero.
double relative_rmse(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred);

enum class FairnessTarget { Aod, Eod };
FairnessTarget target_from_string(const std::string& id);
std::string to_string(FairnessTarget t);

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct MetricSummary {
  double r2_mean = 0.0;
  double r2_std = 0.0;  // population std over repeats
  double rel_rmse_mean = 0.0;
  double rel_rmse_std = 0.0;
  int repeats = 0;
  bool nv = false;  // mean R2 <= 0, or the metric was undefined
  std::string note;
  std::vector<double> r2_values;  // per-repeat values, kept for inspection
  std::vector<double> rel_rmse_values;
};

using BenchmarkCells = std::map<SurrogateKind, MetricSummary>;

/// Repeated fit/score protocol: per repeat, re-split the trace records,
/// re-seed and fit every kind on the training side, score on the test side.
BenchmarkCells run_benchmark(const FairnessTrace& trace, const std::vector<SurrogateKind>& kinds,
                             int repeats, double train_fraction, FairnessTarget target,
                             uint64_t base_seed, const SurrogateOptions& opts = {});

/// The best-mean-R2 kind plus every kind within two of the best cell's
/// standard deviations. NV cells never qualify.
std::set<SurrogateKind> mark_best(const BenchmarkCells& cells);

/// Fits on a seeded 80% subsample of the base trace per repeat and scores on
/// the full shifted trace. Both traces must share algorithm, protected
/// attribute and space snapshot.
BenchmarkCells shift_eval(const FairnessTrace& trace_base, const FairnessTrace& trace_shifted,
                          const std::vector<SurrogateKind>& kinds, int repeats,
                          FairnessTarget target, uint64_t base_seed,
                          const SurrogateOptions& opts = {});

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct ReportRow {
  std::string algorithm;
  std::string dataset;
  std::string release;
  std::string protected_attribute;
  std::string scenario;  // release for benchmark rows, "base -> shifted" for shift rows
  BenchmarkCells cells;  // baseline included
  std::set<SurrogateKind> best;
};

struct R2Buckets {
  int gt95 = 0;
  int gt80 = 0;
  int gt50 = 0;
};

struct EvalReport {
  FairnessTarget target = FairnessTarget::Aod;
  int repeats = 0;
  std::vector<ReportRow> rows;
  std::vector<ReportRow> shift_rows;

  /// Per-kind counts of benchmark rows whose mean R2 clears each threshold.
  std::map<SurrogateKind, R2Buckets> buckets() const;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  std::string to_markdown() const;

  void save(const std::string& path) const;
  static EvalReport load(const std::string& path);
};

ReportRow make_report_row(const FairnessTrace& trace, const BenchmarkCells& cells,
                          const std::string& scenario = "");

}  // namespace fairhp
