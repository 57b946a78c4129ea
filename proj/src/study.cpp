#include "fairhp/study.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fairhp/trainers.hpp"

namespace fairhp {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// ConfigError
// ---------------------------------------------------------------------------

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string msg = "invalid study config:";
  for (const auto& p : problems) msg += "\n  - " + p;
  return msg;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems_in)
    : Error(join_problems(problems_in)), problems(std::move(problems_in)) {}

// ---------------------------------------------------------------------------
// StudyConfig parsing
// ---------------------------------------------------------------------------

namespace {

SurrogateOptions overrides_from_json(const json& j, std::vector<std::string>& problems) {
  SurrogateOptions o;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "mlp_hidden_layers") o.mlp_hidden_layers = value.get<int>();
      else if (key == "mlp_hidden_units") o.mlp_hidden_units = value.get<int>();
      else if (key == "mlp_epochs") o.mlp_epochs = value.get<int>();
      else if (key == "mlp_batch_size") o.mlp_batch_size = value.get<int>();
      else if (key == "mlp_learning_rate") o.mlp_learning_rate = value.get<double>();
      else if (key == "svr_epsilon") o.svr_epsilon = value.get<double>();
      else if (key == "svr_c") o.svr_c = value.get<double>();
      else if (key == "svr_tol") o.svr_tol = value.get<double>();
      else if (key == "svr_max_iterations") o.svr_max_iterations = value.get<int>();
      else if (key == "forest_trees") o.forest_trees = value.get<int>();
      else if (key == "forest_max_depth") o.forest_max_depth = value.get<int>();
      else if (key == "forest_bootstrap") o.forest_bootstrap = value.get<bool>();
      else if (key == "gbt_rounds") o.gbt_rounds = value.get<int>();
      else if (key == "gbt_learning_rate") o.gbt_learning_rate = value.get<double>();
      else if (key == "gbt_max_depth") o.gbt_max_depth = value.get<int>();
      else problems.push_back("surrogates.overrides: unknown key '" + key + "'");
    } catch (const json::exception&) {
      problems.push_back("surrogates.overrides." + key + ": wrong value type");
    }
  }
  return o;
}

}  // namespace

StudyConfig StudyConfig::from_json(const json& j) {
  std::vector<std::string> problems;
  StudyConfig c;

  auto guarded = [&problems](const std::string& where, auto fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      problems.push_back(where + ": " + e.what());
    }
  };

  guarded("base_seed", [&] { c.base_seed = j.value("base_seed", uint64_t{1}); });
  guarded("out_dir", [&] { c.out_dir = j.value("out_dir", std::string{}); });
  guarded("target", [&] { c.target = target_from_string(j.value("target", "aod")); });

  guarded("algorithms", [&] {
    for (const auto& a : j.at("algorithms"))
      c.algorithms.push_back(algorithm_from_string(a.get<std::string>()));
  });
  if (c.algorithms.empty()) problems.push_back("algorithms: at least one is required");

  guarded("datasets", [&] {
    for (const auto& jd : j.at("datasets")) {
      DatasetDecl d;
      d.name = jd.at("name").get<std::string>();
      d.release = jd.at("release").get<std::string>();
      int sources = 0;
      if (jd.contains("synth")) {
        d.synth = synth_spec_from_json(jd.at("synth"));
        ++sources;
      }
      if (jd.contains("csv")) {
        CsvSource src;
        src.csv_path = jd.at("csv").get<std::string>();
        src.schema_path = jd.at("schema").get<std::string>();
        d.csv = src;
        ++sources;
      }
      if (jd.contains("shift")) {
        ShiftSource src;
        src.of_release = jd.at("shift").at("of").get<std::string>();
        src.drift = jd.at("shift").at("drift").get<double>();
        d.shift = src;
        ++sources;
      }
      if (sources != 1)
        problems.push_back("dataset " + d.name + "/" + d.release +
                           ": exactly one of synth, csv or shift is required");
      c.datasets.push_back(std::move(d));
    }
  });
  if (c.datasets.empty()) problems.push_back("datasets: at least one is required");

  guarded("tracegen", [&] {
    if (!j.contains("tracegen")) return;
    const json& t = j.at("tracegen");
    c.budget = t.value("budget", c.budget);
    c.acc_degrade = t.value("acc_degrade", c.acc_degrade);
    c.search.population = t.value("population", c.search.population);
    c.search.tournament = t.value("tournament", c.search.tournament);
    c.search.strength_hi = t.value("strength_hi", c.search.strength_hi);
    c.search.strength_lo = t.value("strength_lo", c.search.strength_lo);
    c.search.classifier_train_fraction =
        t.value("classifier_train_fraction", c.search.classifier_train_fraction);
    if (t.contains("rates_denominator"))
      c.search.rates_denominator = t.at("rates_denominator").get<std::string>() == "group"
                                       ? RatesDenominator::Group
                                       : RatesDenominator::Conditioned;
  });

  guarded("surrogates", [&] {
    if (j.contains("surrogates")) {
      const json& s = j.at("surrogates");
      if (s.contains("kinds"))
        for (const auto& k : s.at("kinds"))
          c.kinds.push_back(surrogate_kind_from_string(k.get<std::string>()));
      if (s.contains("overrides"))
        c.surrogate_opts = overrides_from_json(s.at("overrides"), problems);
    }
    if (c.kinds.empty()) c.kinds = all_surrogate_kinds();
    // reports lead with the baseline column, so it always participates
    if (std::find(c.kinds.begin(), c.kinds.end(), SurrogateKind::Baseline) == c.kinds.end())
      c.kinds.insert(c.kinds.begin(), SurrogateKind::Baseline);
  });

  guarded("evaluation", [&] {
    if (!j.contains("evaluation")) return;
    const json& e = j.at("evaluation");
    c.repeats = e.value("repeats", c.repeats);
    c.train_fraction = e.value("train_fraction", c.train_fraction);
  });

  guarded("shift_pairs", [&] {
    if (!j.contains("shift_pairs")) return;
    for (const auto& jp : j.at("shift_pairs")) {
      ShiftPairDecl p;
      p.dataset = jp.at("dataset").get<std::string>();
      p.base_release = jp.at("base").get<std::string>();
      p.shifted_release = jp.at("shifted").get<std::string>();
      c.shift_pairs.push_back(std::move(p));
    }
  });

  // cross-field validation
  if (c.repeats < 2) problems.push_back("evaluation.repeats must be >= 2");
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0))
    problems.push_back("evaluation.train_fraction must lie in (0,1)");
  if (!(c.acc_degrade >= 0.0 && c.acc_degrade <= 1.0))
    problems.push_back("tracegen.acc_degrade must lie in [0,1]");
  if (c.budget < c.search.population)
    problems.push_back("tracegen.budget must be >= the search population");

  auto declared = [&](const std::string& name, const std::string& release) {
    for (const auto& d : c.datasets)
      if (d.name == name && d.release == release) return true;
    return false;
  };
  for (size_t i = 0; i < c.datasets.size(); ++i) {
    const auto& d = c.datasets[i];
    for (size_t k = i + 1; k < c.datasets.size(); ++k)
      if (c.datasets[k].name == d.name && c.datasets[k].release == d.release)
        problems.push_back("dataset " + d.name + "/" + d.release + " is declared twice");
    if (d.shift) {
      bool base_ok = false;
      for (const auto& other : c.datasets)
        if (other.name == d.name && other.release == d.shift->of_release && other.synth)
          base_ok = true;
      if (!base_ok)
        problems.push_back("dataset " + d.name + "/" + d.release +
                           ": shift references release '" + d.shift->of_release +
                           "' which is not a declared synth dataset of the same name");
    }
  }
  for (const auto& p : c.shift_pairs) {
    if (!declared(p.dataset, p.base_release))
      problems.push_back("shift pair: unknown release " + p.dataset + "/" + p.base_release);
    if (!declared(p.dataset, p.shifted_release))
      problems.push_back("shift pair: unknown release " + p.dataset + "/" + p.shifted_release);
  }

  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

StudyConfig StudyConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file: " + path});
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
  }
  return from_json(j);
}

json StudyConfig::to_json() const {
  json datasets = json::array();
  for (const auto& d : this->datasets) {
    json jd{{"name", d.name}, {"release", d.release}};
    if (d.synth) jd["synth"] = synth_spec_to_json(*d.synth);
    if (d.csv) {
      jd["csv"] = d.csv->csv_path;
      jd["schema"] = d.csv->schema_path;
    }
    if (d.shift) jd["shift"] = json{{"of", d.shift->of_release}, {"drift", d.shift->drift}};
    datasets.push_back(std::move(jd));
  }
  json algorithms = json::array();
  for (auto a : this->algorithms) algorithms.push_back(to_string(a));
  json kinds = json::array();
  for (auto k : this->kinds) kinds.push_back(to_string(k));
  json shift_pairs = json::array();
  for (const auto& p : this->shift_pairs)
    shift_pairs.push_back(json{
        {"dataset", p.dataset}, {"base", p.base_release}, {"shifted", p.shifted_release}});
  return json{
      {"base_seed", base_seed},
      {"out_dir", out_dir},
      {"target", to_string(target)},
      {"algorithms", algorithms},
      {"datasets", datasets},
      {"tracegen",
       {{"budget", budget},
        {"acc_degrade", acc_degrade},
        {"population", search.population},
        {"tournament", search.tournament},
        {"strength_hi", search.strength_hi},
        {"strength_lo", search.strength_lo},
        {"classifier_train_fraction", search.classifier_train_fraction},
        {"rates_denominator",
         search.rates_denominator == RatesDenominator::Group ? "group" : "conditioned"}}},
      {"surrogates", {{"kinds", kinds}}},
      {"evaluation", {{"repeats", repeats}, {"train_fraction", train_fraction}}},
      {"shift_pairs", shift_pairs}};
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

namespace {

std::string sanitize(const std::string& s) {
  std::string out;
  for (char ch : s) out.push_back(std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_');
  return out;
}

uint64_t hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot hash file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a64(ss.str());
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

class StudyRunner {
 public:
  StudyRunner(const StudyConfig& config, std::string out_dir, const RunOptions& opts)
      : cfg_(config), out_(std::move(out_dir)), opts_(opts) {
    if (opts_.seed_override) cfg_.base_seed = *opts_.seed_override;
    cfg_.surrogate_opts.jobs = std::max(1, opts_.jobs);
    fs::create_directories(out_ / "datasets");
    fs::create_directories(out_ / "traces");
    fs::create_directories(out_ / "surrogates");
    load_previous_manifest();
  }

  void stage_trace() {
    for (const auto& decl : cfg_.datasets) {
      TabularDataset ds;
      try {
        ds = build_dataset(decl);
        std::ofstream meta(out_ / "datasets" / (stem(decl) + ".meta.json"));
        meta << ds.meta_to_json().dump(2) << "\n";
      } catch (const std::exception& e) {
        failures_.push_back("dataset " + decl.name + "/" + decl.release + ": " + e.what());
        continue;
      }
      for (Algorithm algorithm : cfg_.algorithms) {
        const std::string rel = trace_rel_path(decl, algorithm);
        const fs::path path = out_ / rel;
        try {
          if (!opts_.force && reusable_trace(path, rel, decl, algorithm)) {
            cache_hits_.push_back(rel);
          } else {
            const uint64_t seed = derive_seed(
                cfg_.base_seed, "trace/" + stem(decl) + "-" + to_string(algorithm));
            FairnessTrace trace = generate_trace(algorithm, ds, cfg_.budget, cfg_.acc_degrade,
                                                 seed, cfg_.search);
            write_trace(trace, path.string());
            export_trace_csv(trace, (out_ / csv_rel_path(decl, algorithm)).string());
          }
        } catch (const std::exception& e) {
          failures_.push_back("trace " + rel + ": " + e.what());
        }
      }
    }
  }

  void stage_fit() {
    for (const auto& decl : cfg_.datasets) {
      for (Algorithm algorithm : cfg_.algorithms) {
        const fs::path trace_path = out_ / trace_rel_path(decl, algorithm);
        FairnessTrace trace;
        try {
          trace = read_trace(trace_path.string());
        } catch (const std::exception& e) {
          failures_.push_back("fit: cannot read " + trace_path.string() + ": " + e.what());
          continue;
        }
        std::vector<HPConfig> configs;
        for (const auto& rec : trace.records) configs.push_back(rec.config);
        const Eigen::MatrixXd x = encode_batch(configs, trace.space);
        Eigen::VectorXd y(static_cast<Eigen::Index>(trace.records.size()));
        for (size_t i = 0; i < trace.records.size(); ++i)
          y[static_cast<Eigen::Index>(i)] = cfg_.target == FairnessTarget::Aod
                                                ? trace.records[i].aod
                                                : trace.records[i].eod;
        for (SurrogateKind kind : cfg_.kinds) {
          const std::string rel = surrogate_rel_path(decl, algorithm, kind);
          try {
            const uint64_t seed = derive_seed(cfg_.base_seed, "fit/" + stem(decl) + "-" +
                                                                  to_string(algorithm) + "-" +
                                                                  to_string(kind));
            Surrogate s = fit_surrogate(kind, x, y, space_tag(trace.space), seed,
                                        cfg_.surrogate_opts);
            s.save((out_ / rel).string());
          } catch (const std::exception& e) {
            failures_.push_back("fit " + rel + ": " + e.what());
          }
        }
      }
    }
  }

  void stage_eval() {
    EvalReport report = load_or_new_report();
    report.target = cfg_.target;
    report.repeats = cfg_.repeats;
    report.rows.clear();
    for (const auto& decl : cfg_.datasets) {
      for (Algorithm algorithm : cfg_.algorithms) {
        const fs::path trace_path = out_ / trace_rel_path(decl, algorithm);
        try {
          const FairnessTrace trace = read_trace(trace_path.string());
          const uint64_t seed = derive_seed(
              cfg_.base_seed, "eval/" + stem(decl) + "-" + to_string(algorithm));
          const BenchmarkCells cells =
              run_benchmark(trace, cfg_.kinds, cfg_.repeats, cfg_.train_fraction, cfg_.target,
                            seed, cfg_.surrogate_opts);
          report.rows.push_back(make_report_row(trace, cells));
        } catch (const std::exception& e) {
          failures_.push_back("eval " + trace_path.filename().string() + ": " + e.what());
        }
      }
    }
    report.save((out_ / "report.json").string());
  }

  void stage_shift() {
    if (cfg_.shift_pairs.empty()) return;
    EvalReport report = load_or_new_report();
    report.target = cfg_.target;
    report.repeats = cfg_.repeats;
    report.shift_rows.clear();
    for (const auto& pair : cfg_.shift_pairs) {
      for (Algorithm algorithm : cfg_.algorithms) {
        const std::string base_rel =
            trace_rel_name(pair.dataset, pair.base_release, algorithm);
        const std::string shifted_rel =
            trace_rel_name(pair.dataset, pair.shifted_release, algorithm);
        try {
          const FairnessTrace base = read_trace((out_ / base_rel).string());
          const FairnessTrace shifted = read_trace((out_ / shifted_rel).string());
          const uint64_t seed =
              derive_seed(cfg_.base_seed, "shift-eval/" + sanitize(pair.dataset) + "-" +
                                              sanitize(pair.base_release) + "-" +
                                              sanitize(pair.shifted_release) + "-" +
                                              to_string(algorithm));
          const BenchmarkCells cells = shift_eval(base, shifted, cfg_.kinds, cfg_.repeats,
                                                  cfg_.target, seed, cfg_.surrogate_opts);
          ReportRow row = make_report_row(base, cells,
                                          pair.base_release + " -> " + pair.shifted_release);
          report.shift_rows.push_back(std::move(row));
        } catch (const std::exception& e) {
          failures_.push_back("shift " + base_rel + " -> " + shifted_rel + ": " + e.what());
        }
      }
    }
    report.save((out_ / "report.json").string());
  }

  void stage_report() {
    try {
      const EvalReport report = EvalReport::load((out_ / "report.json").string());
      std::ofstream md(out_ / "report.md");
      if (!md) throw IoError("cannot write report.md");
      md << report.to_markdown();
    } catch (const std::exception& e) {
      failures_.push_back(std::string("report: ") + e.what());
    }
  }

  RunSummary finalize() {
    write_manifest();
    RunSummary summary;
    summary.failures = failures_;
    summary.cache_hits = cache_hits_;
    summary.exit_code = failures_.empty() ? 0 : 3;
    return summary;
  }

 private:
  std::string stem(const DatasetDecl& decl) const {
    return sanitize(decl.name) + "-" + sanitize(decl.release);
  }
  std::string trace_rel_name(const std::string& name, const std::string& release,
                             Algorithm a) const {
    return "traces/" + sanitize(name) + "-" + sanitize(release) + "-" + to_string(a) + ".jsonl";
  }
  std::string trace_rel_path(const DatasetDecl& decl, Algorithm a) const {
    return trace_rel_name(decl.name, decl.release, a);
  }
  std::string csv_rel_path(const DatasetDecl& decl, Algorithm a) const {
    return "traces/" + stem(decl) + "-" + to_string(a) + ".csv";
  }
  std::string surrogate_rel_path(const DatasetDecl& decl, Algorithm a, SurrogateKind k) const {
    return "surrogates/" + stem(decl) + "-" + to_string(a) + "-" + to_string(k) + ".json";
  }

  TabularDataset build_dataset(const DatasetDecl& decl) {
    TabularDataset ds;
    if (decl.synth) {
      SynthSpec spec = *decl.synth;
      if (spec.seed == 0) spec.seed = derive_seed(cfg_.base_seed, "dataset/" + stem(decl));
      ds = synth_generate(spec);
    } else if (decl.shift) {
      const DatasetDecl* base = nullptr;
      for (const auto& d : cfg_.datasets)
        if (d.name == decl.name && d.release == decl.shift->of_release && d.synth) base = &d;
      if (!base) throw ArgumentError("shift base dataset not found");
      const TabularDataset base_ds = build_dataset(*base);
      ds = synth_shift(base_ds, decl.shift->drift,
                       derive_seed(cfg_.base_seed, "shift/" + stem(decl)));
    } else {
      const DatasetSchema schema = DatasetSchema::load(decl.csv->schema_path);
      ds = load_csv(decl.csv->csv_path, schema);
    }
    ds.name = decl.name;
    ds.release = decl.release;
    return ds;
  }

  bool reusable_trace(const fs::path& path, const std::string& rel, const DatasetDecl& decl,
                      Algorithm algorithm) {
    if (!fs::exists(path)) return false;
    // a cached trace must match the manifest hash (when known) and the
    // generation settings this config asks for
    const auto it = previous_hashes_.find(rel);
    if (it != previous_hashes_.end() && hex64(hash_file(path)) != it->second) return false;
    try {
      const FairnessTrace trace = read_trace(path.string());
      const uint64_t seed =
          derive_seed(cfg_.base_seed, "trace/" + stem(decl) + "-" + to_string(algorithm));
      return trace.dataset_name == decl.name && trace.release == decl.release &&
             trace.algorithm == algorithm && trace.meta.budget == cfg_.budget &&
             trace.meta.seed == seed && trace.meta.acc_degrade == cfg_.acc_degrade &&
             trace.meta.options.population == cfg_.search.population;
    } catch (const std::exception&) {
      return false;
    }
  }

  void load_previous_manifest() {
    const fs::path path = out_ / "manifest.json";
    if (!fs::exists(path)) return;
    try {
      std::ifstream in(path);
      json j;
      in >> j;
      for (const auto& f : j.at("files"))
        previous_hashes_[f.at("path").get<std::string>()] = f.at("fnv1a64").get<std::string>();
    } catch (const std::exception&) {
      previous_hashes_.clear();
    }
  }

  void write_manifest() {
    json files = json::array();
    std::vector<fs::path> paths;
    for (const char* dir : {"datasets", "traces", "surrogates"}) {
      const fs::path d = out_ / dir;
      if (!fs::exists(d)) continue;
      for (const auto& entry : fs::directory_iterator(d))
        if (entry.is_regular_file()) paths.push_back(entry.path());
    }
    for (const char* f : {"report.json", "report.md"})
      if (fs::exists(out_ / f)) paths.push_back(out_ / f);
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) {
      files.push_back(json{{"path", fs::relative(p, out_).generic_string()},
                           {"fnv1a64", hex64(hash_file(p))},
                           {"bytes", fs::file_size(p)}});
    }
    std::sort(failures_.begin(), failures_.end());
    std::sort(cache_hits_.begin(), cache_hits_.end());
    json manifest{{"type", "run_manifest"},
                  {"format_version", 1},
                  {"base_seed", cfg_.base_seed},
                  {"space_version", kHpSpaceVersion},
                  {"config", cfg_.to_json()},
                  {"config_fnv1a64", hex64(fnv1a64(cfg_.to_json().dump()))},
                  {"cache_hits", cache_hits_},
                  {"failures", failures_},
                  {"files", files}};
    std::ofstream out(out_ / "manifest.json");
    if (!out) throw IoError("cannot write manifest.json");
    out << manifest.dump(2) << "\n";
  }

  EvalReport load_or_new_report() {
    const fs::path path = out_ / "report.json";
    if (fs::exists(path)) {
      try {
        return EvalReport::load(path.string());
      } catch (const std::exception&) {
      }
    }
    EvalReport report;
    report.target = cfg_.target;
    report.repeats = cfg_.repeats;
    return report;
  }

  StudyConfig cfg_;
  fs::path out_;
  RunOptions opts_;
  std::vector<std::string> failures_;
  std::vector<std::string> cache_hits_;
  std::map<std::string, std::string> previous_hashes_;
};

}  // namespace

RunSummary run_study(const StudyConfig& config, const std::string& out_dir,
                     const RunOptions& opts) {
  StudyRunner runner(config, out_dir, opts);
  runner.stage_trace();
  runner.stage_fit();
  runner.stage_eval();
  runner.stage_shift();
  runner.stage_report();
  return runner.finalize();
}

RunSummary run_stage(const std::string& stage, const StudyConfig& config,
                     const std::string& out_dir, const RunOptions& opts) {
  StudyRunner runner(config, out_dir, opts);
  if (stage == "trace") runner.stage_trace();
  else if (stage == "fit") runner.stage_fit();
  else if (stage == "eval") runner.stage_eval();
  else if (stage == "shift") runner.stage_shift();
  else if (stage == "report") runner.stage_report();
  else throw ArgumentError("unknown stage '" + stage + "'");
  return runner.finalize();
}

}  // namespace fairhp

