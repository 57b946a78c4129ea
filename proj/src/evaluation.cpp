#include "fairhp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

namespace fairhp {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

double r2(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred) {
  if (truth.size() == 0 || truth.size() != pred.size())
    throw ArgumentError("r2: truth and prediction lengths differ or are empty");
  if (truth.minCoeff() == truth.maxCoeff())
    throw UndefinedMetricError("r2 is undefined: observed values are constant");
  const double mean = truth.mean();
  const double ss_tot = (truth.array() - mean).square().sum();
  const double ss_res = (truth - pred).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

double relative_rmse(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred) {
  if (truth.size() == 0 || truth.size() != pred.size())
    throw ArgumentError("relative_rmse: truth and prediction lengths differ or are empty");
  const double mean = truth.mean();
  if (mean == 0.0)
    throw UndefinedMetricError("relative rmse is undefined: observed mean is zero");
  const double rmse =
      std::sqrt((truth - pred).squaredNorm() / static_cast<double>(truth.size()));
  return rmse / mean;
}

FairnessTarget target_from_string(const std::string& id) {
  if (id == "aod") return FairnessTarget::Aod;
  if (id == "eod") return FairnessTarget::Eod;
  throw ArgumentError("unknown fairness target '" + id + "' (expected aod or eod)");
}

std::string to_string(FairnessTarget t) {
  return t == FairnessTarget::Aod ? "aod" : "eod";
}

// ---------------------------------------------------------------------------
// run_benchmark / shift_eval
// ---------------------------------------------------------------------------

namespace {

Eigen::VectorXd trace_targets(const FairnessTrace& trace, FairnessTarget target) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(trace.records.size()));
  for (size_t i = 0; i < trace.records.size(); ++i)
    y[static_cast<Eigen::Index>(i)] =
        target == FairnessTarget::Aod ? trace.records[i].aod : trace.records[i].eod;
  return y;
}

struct RepeatScore {
  bool defined = false;
  double r2_value = 0.0;
  double rel_rmse_value = 0.0;
};

MetricSummary aggregate(const std::vector<RepeatScore>& scores) {
  MetricSummary s;
  s.repeats = static_cast<int>(scores.size());
  int undefined = 0;
  for (const auto& sc : scores) {
    if (!sc.defined) {
      ++undefined;
      continue;
    }
    s.r2_values.push_back(sc.r2_value);
    s.rel_rmse_values.push_back(sc.rel_rmse_value);
  }
  auto mean_std = [](const std::vector<double>& v, double& mean, double& std) {
    if (v.empty()) {
      mean = std = 0.0;
      return;
    }
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    std = std::sqrt(var / static_cast<double>(v.size()));
  };
  mean_std(s.r2_values, s.r2_mean, s.r2_std);
  mean_std(s.rel_rmse_values, s.rel_rmse_mean, s.rel_rmse_std);
  if (undefined > 0) {
    s.nv = true;
    s.note = std::to_string(undefined) + " of " + std::to_string(s.repeats) +
             " repeats had undefined metrics (degenerate targets)";
  } else {
    s.nv = s.r2_mean <= 0.0;
  }
  return s;
}

BenchmarkCells score_repeats(const Eigen::MatrixXd& x_train_pool,
                             const Eigen::VectorXd& y_train_pool,
                             const Eigen::MatrixXd& x_test_pool,
                             const Eigen::VectorXd& y_test_pool, bool shared_pool,
                             const std::vector<SurrogateKind>& kinds, int repeats,
                             double train_fraction, const std::string& space,
                             uint64_t base_seed, const SurrogateOptions& opts) {
  if (kinds.empty()) throw ArgumentError("no surrogate kinds requested");
  if (repeats < 1) throw ArgumentError("repeats must be >= 1");

  std::map<SurrogateKind, std::vector<RepeatScore>> scores;
  for (auto k : kinds) scores[k].resize(static_cast<size_t>(repeats));

  const int n = static_cast<int>(x_train_pool.rows());
  for (int r = 0; r < repeats; ++r) {
    const uint64_t repeat_seed = base_seed + static_cast<uint64_t>(r);
    Rng rng(derive_seed(repeat_seed, "benchmark-split"));
    std::vector<int> perm = rng.permutation(n);
    const int n_train =
        static_cast<int>(std::ceil(train_fraction * static_cast<double>(n)));

    Eigen::MatrixXd x_train(n_train, x_train_pool.cols());
    Eigen::VectorXd y_train(n_train);
    for (int i = 0; i < n_train; ++i) {
      x_train.row(i) = x_train_pool.row(perm[static_cast<size_t>(i)]);
      y_train[i] = y_train_pool[perm[static_cast<size_t>(i)]];
    }

    Eigen::MatrixXd x_test;
    Eigen::VectorXd y_test;
    if (shared_pool) {
      const int n_test = n - n_train;
      if (n_test < 2)
        throw ArgumentError("benchmark split leaves fewer than 2 test records; "
                            "use a larger trace or smaller train fraction");
      x_test.resize(n_test, x_train_pool.cols());
      y_test.resize(n_test);
      for (int i = 0; i < n_test; ++i) {
        x_test.row(i) = x_train_pool.row(perm[static_cast<size_t>(n_train + i)]);
        y_test[i] = y_train_pool[perm[static_cast<size_t>(n_train + i)]];
      }
    } else {
      x_test = x_test_pool;
      y_test = y_test_pool;
    }

    for (auto kind : kinds) {
      const uint64_t fit_seed = derive_seed(repeat_seed, "fit-" + to_string(kind));
      const Surrogate s = fit_surrogate(kind, x_train, y_train, space, fit_seed, opts);
      const Eigen::VectorXd pred = s.predict(x_test);
      RepeatScore& slot = scores[kind][static_cast<size_t>(r)];
      try {
        slot.r2_value = r2(y_test, pred);
        slot.rel_rmse_value = relative_rmse(y_test, pred);
        slot.defined = true;
      } catch (const UndefinedMetricError&) {
        slot.defined = false;
      }
    }
  }

  BenchmarkCells cells;
  for (auto k : kinds) cells[k] = aggregate(scores[k]);
  return cells;
}

}  // namespace

BenchmarkCells run_benchmark(const FairnessTrace& trace, const std::vector<SurrogateKind>& kinds,
                             int repeats, double train_fraction, FairnessTarget target,
                             uint64_t base_seed, const SurrogateOptions& opts) {
  trace.validate();
  if (trace.records.size() < 10)
    throw ArgumentError("benchmark needs a trace with at least 10 records, got " +
                        std::to_string(trace.records.size()));
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ArgumentError("train fraction must lie in (0,1)");

  std::vector<HPConfig> configs;
  configs.reserve(trace.records.size());
  for (const auto& rec : trace.records) configs.push_back(rec.config);
  const Eigen::MatrixXd x = encode_batch(configs, trace.space);
  const Eigen::VectorXd y = trace_targets(trace, target);
  return score_repeats(x, y, {}, {}, true, kinds, repeats, train_fraction,
                       space_tag(trace.space), base_seed, opts);
}

BenchmarkCells shift_eval(const FairnessTrace& trace_base, const FairnessTrace& trace_shifted,
                          const std::vector<SurrogateKind>& kinds, int repeats,
                          FairnessTarget target, uint64_t base_seed,
                          const SurrogateOptions& opts) {
  trace_base.validate();
  trace_shifted.validate();
  if (trace_base.algorithm != trace_shifted.algorithm)
    throw ArgumentError("shift_eval: traces come from different training algorithms");
  if (trace_base.protected_attribute != trace_shifted.protected_attribute)
    throw ArgumentError("shift_eval: traces use different protected attributes");
  if (trace_base.space.to_json() != trace_shifted.space.to_json())
    throw ArgumentError("shift_eval: space snapshots differ between the traces");

  std::vector<HPConfig> base_configs, shifted_configs;
  for (const auto& rec : trace_base.records) base_configs.push_back(rec.config);
  for (const auto& rec : trace_shifted.records) shifted_configs.push_back(rec.config);
  const Eigen::MatrixXd x_base = encode_batch(base_configs, trace_base.space);
  const Eigen::VectorXd y_base = trace_targets(trace_base, target);
  const Eigen::MatrixXd x_shift = encode_batch(shifted_configs, trace_shifted.space);
  const Eigen::VectorXd y_shift = trace_targets(trace_shifted, target);

  // fixed 80% training subsample of the base trace per repeat
  return score_repeats(x_base, y_base, x_shift, y_shift, false, kinds, repeats, 0.8,
                       space_tag(trace_base.space), base_seed, opts);
}

// ---------------------------------------------------------------------------
// mark_best
// ---------------------------------------------------------------------------

std::set<SurrogateKind> mark_best(const BenchmarkCells& cells) {
  const MetricSummary* best = nullptr;
  for (const auto& [kind, summary] : cells) {
    (void)kind;
    if (summary.nv) continue;
    if (!best || summary.r2_mean > best->r2_mean) best = &summary;
  }
  std::set<SurrogateKind> out;
  if (!best) return out;
  const double floor = best->r2_mean - 2.0 * best->r2_std;
  for (const auto& [kind, summary] : cells)
    if (!summary.nv && summary.r2_mean >= floor) out.insert(kind);
  return out;
}

// ---------------------------------------------------------------------------
// EvalReport
// ---------------------------------------------------------------------------

ReportRow make_report_row(const FairnessTrace& trace, const BenchmarkCells& cells,
                          const std::string& scenario) {
  ReportRow row;
  row.algorithm = to_string(trace.algorithm);
  row.dataset = trace.dataset_name;
  row.release = trace.release;
  row.protected_attribute = trace.protected_attribute;
  row.scenario = scenario.empty() ? trace.release : scenario;
  row.cells = cells;
  BenchmarkCells without_baseline = cells;
  without_baseline.erase(SurrogateKind::Baseline);
  row.best = mark_best(without_baseline);
  return row;
}

std::map<SurrogateKind, R2Buckets> EvalReport::buckets() const {
  std::map<SurrogateKind, R2Buckets> out;
  for (const auto& row : rows) {
    for (const auto& [kind, summary] : row.cells) {
      if (kind == SurrogateKind::Baseline) continue;
      auto& b = out[kind];
      if (summary.nv) continue;
      if (summary.r2_mean > 0.95) ++b.gt95;
      if (summary.r2_mean > 0.8) ++b.gt80;
      if (summary.r2_mean > 0.5) ++b.gt50;
    }
  }
  return out;
}

namespace {

json summary_to_json(const MetricSummary& s) {
  return json{{"r2_mean", s.r2_mean},
              {"r2_std", s.r2_std},
              {"rel_rmse_mean", s.rel_rmse_mean},
              {"rel_rmse_std", s.rel_rmse_std},
              {"repeats", s.repeats},
              {"nv", s.nv},
              {"note", s.note}};
}

MetricSummary summary_from_json(const json& j) {
  MetricSummary s;
  s.r2_mean = j.at("r2_mean").get<double>();
  s.r2_std = j.at("r2_std").get<double>();
  s.rel_rmse_mean = j.at("rel_rmse_mean").get<double>();
  s.rel_rmse_std = j.at("rel_rmse_std").get<double>();
  s.repeats = j.at("repeats").get<int>();
  s.nv = j.at("nv").get<bool>();
  s.note = j.value("note", "");
  return s;
}

json row_to_json(const ReportRow& row) {
  json cells = json::object();
  for (const auto& [kind, summary] : row.cells) cells[to_string(kind)] = summary_to_json(summary);
  json best = json::array();
  for (auto k : row.best) best.push_back(to_string(k));
  return json{{"algorithm", row.algorithm},
              {"dataset", row.dataset},
              {"release", row.release},
              {"protected", row.protected_attribute},
              {"scenario", row.scenario},
              {"cells", cells},
              {"best", best}};
}

ReportRow row_from_json(const json& j) {
  ReportRow row;
  row.algorithm = j.at("algorithm").get<std::string>();
  row.dataset = j.at("dataset").get<std::string>();
  row.release = j.at("release").get<std::string>();
  row.protected_attribute = j.at("protected").get<std::string>();
  row.scenario = j.at("scenario").get<std::string>();
  for (const auto& [key, value] : j.at("cells").items())
    row.cells[surrogate_kind_from_string(key)] = summary_from_json(value);
  for (const auto& b : j.at("best"))
    row.best.insert(surrogate_kind_from_string(b.get<std::string>()));
  return row;
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return std::string(buf);
}

std::string cell_text(const MetricSummary& s, bool rel_rmse, bool bold) {
  if (!s.note.empty()) return "NV";  // metrics were undefined for some repeats
  if (!rel_rmse && s.nv) return "NV";
  const double mean = rel_rmse ? s.rel_rmse_mean : s.r2_mean;
  const double std = rel_rmse ? s.rel_rmse_std : s.r2_std;
  std::string text = fmt3(mean) + " (" + fmt3(std) + ")";
  return bold ? "**" + text + "**" : text;
}

const std::vector<SurrogateKind>& display_order() {
  static const std::vector<SurrogateKind> order = {SurrogateKind::Mlp, SurrogateKind::Svr,
                                                   SurrogateKind::Forest, SurrogateKind::Gbt};
  return order;
}

void render_table(std::string& md, const std::vector<ReportRow>& rows, bool shift) {
  std::vector<SurrogateKind> kinds;
  for (auto k : display_order())
    for (const auto& row : rows)
      if (row.cells.count(k)) {
        kinds.push_back(k);
        break;
      }

  md += "| Algorithm | Dataset | Prot. | Baseline |";
  for (auto k : kinds) md += " " + to_string(k) + " Rel.RMSE | " + to_string(k) + " R2 |";
  md += "\n|---|---|---|---|";
  for (size_t i = 0; i < kinds.size(); ++i) md += "---|---|";
  md += "\n";

  for (const auto& row : rows) {
    const std::string dataset_label =
        shift ? row.dataset + " " + row.scenario : row.dataset + " (" + row.release + ")";
    md += "| " + row.algorithm + " | " + dataset_label + " | " + row.protected_attribute + " | ";
    const auto base_it = row.cells.find(SurrogateKind::Baseline);
    md += base_it != row.cells.end() ? cell_text(base_it->second, true, false) : "-";
    md += " |";
    for (auto k : kinds) {
      const auto it = row.cells.find(k);
      if (it == row.cells.end()) {
        md += " - | - |";
        continue;
      }
      const bool bold = row.best.count(k) > 0;
      md += " " + cell_text(it->second, true, false) + " | " + cell_text(it->second, false, bold) +
            " |";
    }
    md += "\n";
  }
}

}  // namespace

json EvalReport::to_json() const {
  json rows_json = json::array();
  for (const auto& row : rows) rows_json.push_back(row_to_json(row));
  json shift_json = json::array();
  for (const auto& row : shift_rows) shift_json.push_back(row_to_json(row));
  return json{{"type", "eval_report"},
              {"format_version", 1},
              {"target", to_string(target)},
              {"repeats", repeats},
              {"rows", rows_json},
              {"shift_rows", shift_json}};
}

EvalReport EvalReport::from_json(const json& j) {
  if (j.value("type", "") != "eval_report")
    throw FileFormatError("not an eval report file");
  if (j.value("format_version", 0) != 1)
    throw FileFormatError("unsupported eval report format version");
  EvalReport report;
  report.target = target_from_string(j.at("target").get<std::string>());
  report.repeats = j.at("repeats").get<int>();
  for (const auto& jr : j.at("rows")) report.rows.push_back(row_from_json(jr));
  for (const auto& jr : j.at("shift_rows")) report.shift_rows.push_back(row_from_json(jr));
  return report;
}

std::string EvalReport::to_markdown() const {
  std::string md;
  md += "# Surrogate evaluation report\n\n";
  md += "Target: " + to_string(target) + ", repeats: " + std::to_string(repeats) +
        ". Cells show mean (std) over repeats; NV marks mean R2 <= 0; "
        "bold marks the best R2 and everything within two of its standard deviations.\n\n";
  if (!rows.empty()) {
    md += "## In-distribution benchmark\n\n";
    render_table(md, rows, false);
    md += "\nR2 threshold counts over " + std::to_string(rows.size()) + " benchmark row(s):\n\n";
    md += "| Kind | R2 > 0.95 | R2 > 0.8 | R2 > 0.5 |\n|---|---|---|---|\n";
    for (const auto& [kind, b] : buckets())
      md += "| " + to_string(kind) + " | " + std::to_string(b.gt95) + " | " +
            std::to_string(b.gt80) + " | " + std::to_string(b.gt50) + " |\n";
  }
  if (!shift_rows.empty()) {
    md += "\n## Temporal-shift study\n\n";
    render_table(md, shift_rows, true);
  }
  return md;
}

void EvalReport::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report file: " + path);
  out << to_json().dump(2) << "\n";
}

EvalReport EvalReport::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FileFormatError("report file " + path + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace fairhp
