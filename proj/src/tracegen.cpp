#include "fairhp/tracegen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fairhp/trainers.hpp"

namespace fairhp {

using nlohmann::json;

// ---------------------------------------------------------------------------
// mutate
// ---------------------------------------------------------------------------

namespace {
constexpr double kMutationSigma = 0.2;  // noise std as a fraction of the dim range
}

HPConfig mutate(const HPConfig& config, const HPSpace& space, double strength, Rng& rng) {
  space.validate_config(config);
  if (!(strength > 0.0 && strength <= 1.0))
    throw ArgumentError("mutation strength must lie in (0,1]");
  HPConfig out = config;
  for (size_t i = 0; i < space.dims.size(); ++i) {
    const auto& d = space.dims[i];
    if (rng.uniform() >= strength) continue;
    if (d.kind == DimKind::Categorical) {
      out.values[i] = static_cast<int>(rng.uniform_int(static_cast<int64_t>(d.levels.size())));
      continue;
    }
    double v = std::get<double>(out.values[i]);
    if (d.scale == Scale::Log) {
      const double llo = std::log(d.lo), lhi = std::log(d.hi);
      double lv = std::log(v) + rng.normal() * kMutationSigma * (lhi - llo);
      v = std::exp(std::clamp(lv, llo, lhi));
    } else {
      v += rng.normal() * kMutationSigma * (d.hi - d.lo);
    }
    if (d.is_integer) v = std::round(v);
    out.values[i] = std::clamp(v, d.lo, d.hi);
  }
  return out;
}

// ---------------------------------------------------------------------------
// generate_trace
// ---------------------------------------------------------------------------

namespace {

// Stratified by (group, label) so both classes reach the training side and
// both groups reach the validation side whenever the data allows it.
std::pair<TabularDataset, TabularDataset> classifier_split(const TabularDataset& ds,
                                                           double train_fraction,
                                                           uint64_t seed) {
  std::array<std::vector<int>, 4> cells;
  for (Eigen::Index i = 0; i < ds.n_rows(); ++i)
    cells[static_cast<size_t>(ds.groups[i] * 2 + ds.labels[i])].push_back(static_cast<int>(i));

  Rng rng(derive_seed(seed, "classifier-split"));
  std::vector<int> train_idx, val_idx;
  for (auto& cell : cells) {
    rng.shuffle(cell);
    const int take = static_cast<int>(
        std::ceil(train_fraction * static_cast<double>(cell.size())));
    for (size_t k = 0; k < cell.size(); ++k)
      (static_cast<int>(k) < take ? train_idx : val_idx).push_back(cell[k]);
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());

  auto take_rows = [&](const std::vector<int>& idx) {
    TabularDataset out;
    out.name = ds.name;
    out.release = ds.release;
    out.column_meta = ds.column_meta;
    out.protected_attribute = ds.protected_attribute;
    out.synth_spec = ds.synth_spec;
    out.rows.resize(static_cast<Eigen::Index>(idx.size()), ds.rows.cols());
    out.labels.resize(static_cast<Eigen::Index>(idx.size()));
    out.groups.resize(static_cast<Eigen::Index>(idx.size()));
    for (size_t i = 0; i < idx.size(); ++i) {
      out.rows.row(static_cast<Eigen::Index>(i)) = ds.rows.row(idx[i]);
      out.labels[static_cast<Eigen::Index>(i)] = ds.labels[idx[i]];
      out.groups[static_cast<Eigen::Index>(i)] = ds.groups[idx[i]];
    }
    return out;
  };
  return {take_rows(train_idx), take_rows(val_idx)};
}

struct Candidate {
  HPConfig config;
  double aod = 0.0;
  double accuracy = 0.0;
  bool feasible = false;
};

// minimize phase: feasible first, then low AOD, then high accuracy.
// maximize phase: feasible first, then high AOD, then high accuracy.
bool better(const Candidate& a, const Candidate& b, bool minimize) {
  if (a.feasible != b.feasible) return a.feasible;
  if (!a.feasible) return a.accuracy > b.accuracy;
  if (a.aod != b.aod) return minimize ? a.aod < b.aod : a.aod > b.aod;
  return a.accuracy > b.accuracy;
}

void archive_insert(std::vector<ArchiveEntry>& archive, const ArchiveEntry& e, bool minimize) {
  auto dominates = [minimize](const ArchiveEntry& a, const ArchiveEntry& b) {
    const bool aod_no_worse = minimize ? a.aod <= b.aod : a.aod >= b.aod;
    const bool aod_strict = minimize ? a.aod < b.aod : a.aod > b.aod;
    return aod_no_worse && a.accuracy >= b.accuracy && (aod_strict || a.accuracy > b.accuracy);
  };
  for (const auto& m : archive)
    if (dominates(m, e)) return;
  archive.erase(std::remove_if(archive.begin(), archive.end(),
                               [&](const ArchiveEntry& m) { return dominates(e, m); }),
                archive.end());
  archive.push_back(e);
}

}  // namespace

FairnessTrace generate_trace(Algorithm algorithm, const TabularDataset& dataset, int budget,
                             double acc_degrade, uint64_t seed, const SearchOptions& options,
                             SearchState* state_out) {
  dataset.validate();
  if (options.population < 2) throw ArgumentError("population must be >= 2");
  if (budget < options.population)
    throw ArgumentError("budget (" + std::to_string(budget) +
                        ") must be >= population size (" + std::to_string(options.population) +
                        ")");
  if (!(acc_degrade >= 0.0 && acc_degrade <= 1.0))
    throw ArgumentError("acc_degrade must lie in [0,1]");

  const HPSpace space = hp_space(algorithm);
  auto [train_ds, val_ds] = classifier_split(dataset, options.classifier_train_fraction, seed);
  {
    // both labels must reach training, both groups the validation side
    const Eigen::Index tn = train_ds.n_rows();
    Eigen::Index t1 = 0;
    for (Eigen::Index i = 0; i < tn; ++i) t1 += train_ds.labels[i];
    if (tn == 0 || t1 == 0 || t1 == tn)
      throw TrainingError("classifier split left a single label class in the training side");
    Eigen::Index g1 = 0;
    for (Eigen::Index i = 0; i < val_ds.n_rows(); ++i) g1 += val_ds.groups[i];
    if (val_ds.n_rows() == 0 || g1 == 0 || g1 == val_ds.n_rows())
      throw TrainingError("classifier split left a single protected group in the validation side");
  }

  FairnessTrace trace;
  trace.dataset_name = dataset.name;
  trace.release = dataset.release;
  trace.protected_attribute = dataset.protected_attribute;
  trace.algorithm = algorithm;
  trace.space = space;
  trace.meta.budget = budget;
  trace.meta.seed = seed;
  trace.meta.acc_degrade = acc_degrade;
  trace.meta.options = options;

  SearchState state;
  Rng search_rng(derive_seed(seed, "search"));
  int evals = 0;

  auto evaluate = [&](const HPConfig& config) -> std::optional<Candidate> {
    const uint64_t eval_seed = derive_seed(seed, "eval", static_cast<uint64_t>(evals));
    ++evals;
    TrainedModel model;
    try {
      model = train(algorithm, config, train_ds, eval_seed);
    } catch (const TrainingError&) {
      ++trace.meta.skipped;
      return std::nullopt;
    }
    const GroupRates rates = group_rates(model, val_ds, options.rates_denominator);
    FairnessRecord rec;
    rec.config = config;
    rec.aod = aod(rates);
    rec.eod = eod(rates);
    rec.accuracy = accuracy(model, val_ds);
    rec.degenerate = rates.degenerate;
    rec.eval_seed = eval_seed;
    const int record_index = static_cast<int>(trace.records.size());
    trace.records.push_back(rec);
    Candidate cand{config, rec.aod, rec.accuracy, false};
    archive_insert(state.min_archive, {record_index, rec.aod, rec.accuracy}, true);
    archive_insert(state.max_archive, {record_index, rec.aod, rec.accuracy}, false);
    return cand;
  };

  // default configuration anchors the accuracy floor and is always record 0
  std::vector<Candidate> population;
  auto first = evaluate(default_config(space));
  if (!first)
    throw TrainingError("default configuration failed to train; cannot anchor the accuracy floor");
  trace.meta.default_accuracy = first->accuracy;
  trace.meta.accuracy_threshold = (1.0 - acc_degrade) * first->accuracy;
  const double threshold = trace.meta.accuracy_threshold;
  first->feasible = first->accuracy >= threshold;
  population.push_back(*first);

  while (evals < budget && static_cast<int>(population.size()) < options.population) {
    auto cand = evaluate(sample_config(space, search_rng));
    if (cand) {
      cand->feasible = cand->accuracy >= threshold;
      population.push_back(*cand);
    }
  }

  int generation = 0;
  while (evals < budget) {
    const bool minimize = generation % 2 == 0;
    const double progress = static_cast<double>(evals) / static_cast<double>(budget);
    const double strength =
        options.strength_hi + (options.strength_lo - options.strength_hi) * progress;

    std::vector<Candidate> children;
    for (int c = 0; c < options.population && evals < budget; ++c) {
      const Candidate* parent = nullptr;
      for (int t = 0; t < options.tournament; ++t) {
        const auto& pick = population[static_cast<size_t>(
            search_rng.uniform_int(static_cast<int64_t>(population.size())))];
        if (!parent || better(pick, *parent, minimize)) parent = &pick;
      }
      auto child = evaluate(mutate(parent->config, space, strength, search_rng));
      if (child) {
        child->feasible = child->accuracy >= threshold;
        children.push_back(*child);
      }
    }
    if (!children.empty()) population = std::move(children);
    ++generation;
  }

  if (trace.records.empty())
    throw TrainingError("every configuration failed to train; trace is empty");
  if (state_out) *state_out = std::move(state);
  return trace;
}

// ---------------------------------------------------------------------------
// Trace invariants
// ---------------------------------------------------------------------------

void FairnessTrace::validate() const {
  if (records.empty()) throw Error("trace has no records");
  space.validate();
  for (const auto& rec : records) {
    space.validate_config(rec.config);
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(rec.aod) || !in01(rec.eod) || !in01(rec.accuracy))
      throw Error("trace record carries a metric outside [0,1]");
  }
}

// ---------------------------------------------------------------------------
// Trace IO
// ---------------------------------------------------------------------------

namespace {

json options_to_json(const SearchOptions& o) {
  return json{{"population", o.population},
              {"tournament", o.tournament},
              {"strength_hi", o.strength_hi},
              {"strength_lo", o.strength_lo},
              {"classifier_train_fraction", o.classifier_train_fraction},
              {"rates_denominator",
               o.rates_denominator == RatesDenominator::Conditioned ? "conditioned" : "group"}};
}

SearchOptions options_from_json(const json& j) {
  SearchOptions o;
  o.population = j.at("population").get<int>();
  o.tournament = j.at("tournament").get<int>();
  o.strength_hi = j.at("strength_hi").get<double>();
  o.strength_lo = j.at("strength_lo").get<double>();
  o.classifier_train_fraction = j.at("classifier_train_fraction").get<double>();
  o.rates_denominator = j.at("rates_denominator").get<std::string>() == "group"
                            ? RatesDenominator::Group
                            : RatesDenominator::Conditioned;
  return o;
}

}  // namespace

void write_trace(const FairnessTrace& trace, const std::string& path) {
  trace.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trace file: " + path);
  json header{{"type", "fairness_trace"},
              {"format_version", 1},
              {"dataset", {{"name", trace.dataset_name}, {"release", trace.release}}},
              {"algorithm", to_string(trace.algorithm)},
              {"protected", trace.protected_attribute},
              {"space", trace.space.to_json()},
              {"metadata",
               {{"budget", trace.meta.budget},
                {"seed", trace.meta.seed},
                {"acc_degrade", trace.meta.acc_degrade},
                {"default_accuracy", trace.meta.default_accuracy},
                {"accuracy_threshold", trace.meta.accuracy_threshold},
                {"skipped", trace.meta.skipped},
                {"options", options_to_json(trace.meta.options)}}}};
  out << header.dump() << "\n";
  for (const auto& rec : trace.records) {
    json jr{{"values", config_to_json(trace.space, rec.config)},
            {"aod", rec.aod},
            {"eod", rec.eod},
            {"accuracy", rec.accuracy},
            {"degenerate", rec.degenerate},
            {"eval_seed", rec.eval_seed}};
    out << jr.dump() << "\n";
  }
}

FairnessTrace read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FileFormatError(path + ": empty trace file");

  FairnessTrace trace;
  try {
    const json header = json::parse(line);
    if (header.value("type", "") != "fairness_trace")
      throw FileFormatError(path + ": not a fairness trace file");
    if (header.value("format_version", 0) != 1)
      throw FileFormatError(path + ": unsupported trace format version");
    trace.dataset_name = header.at("dataset").at("name").get<std::string>();
    trace.release = header.at("dataset").at("release").get<std::string>();
    trace.algorithm = algorithm_from_string(header.at("algorithm").get<std::string>());
    trace.protected_attribute = header.at("protected").get<std::string>();
    trace.space = HPSpace::from_json(header.at("space"));
    const json& meta = header.at("metadata");
    trace.meta.budget = meta.at("budget").get<int>();
    trace.meta.seed = meta.at("seed").get<uint64_t>();
    trace.meta.acc_degrade = meta.at("acc_degrade").get<double>();
    trace.meta.default_accuracy = meta.at("default_accuracy").get<double>();
    trace.meta.accuracy_threshold = meta.at("accuracy_threshold").get<double>();
    trace.meta.skipped = meta.at("skipped").get<int>();
    trace.meta.options = options_from_json(meta.at("options"));
  } catch (const json::exception& e) {
    throw FileFormatError(path + ": malformed header: " + e.what());
  }

  // the stored snapshot must match today's definition of the same space
  const HPSpace current = hp_space(trace.algorithm);
  if (trace.space.to_json() != current.to_json())
    throw FileFormatError(path + ": trace was generated against space version '" +
                          trace.space.version + "' which differs from the current " +
                          to_string(trace.algorithm) + " space (version '" + current.version +
                          "'); regenerate the trace");

  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json jr = json::parse(line);
      FairnessRecord rec;
      rec.config = config_from_json(trace.space, jr.at("values"));
      rec.aod = jr.at("aod").get<double>();
      rec.eod = jr.at("eod").get<double>();
      rec.accuracy = jr.at("accuracy").get<double>();
      rec.degenerate = jr.at("degenerate").get<bool>();
      rec.eval_seed = jr.at("eval_seed").get<uint64_t>();
      trace.records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw FileFormatError(path + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (trace.records.empty())
    throw FileFormatError(path + ": trace file contains no records");
  trace.validate();
  return trace;
}

void export_trace_csv(const FairnessTrace& trace, const std::string& path) {
  trace.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write CSV file: " + path);

  auto escape = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += "\"\"";
      else q.push_back(c);
    }
    q.push_back('"');
    return q;
  };

  for (const auto& d : trace.space.dims) out << escape(d.name) << ",";
  out << "aod,eod,accuracy\n";
  for (const auto& rec : trace.records) {
    for (size_t i = 0; i < trace.space.dims.size(); ++i) {
      const auto& d = trace.space.dims[i];
      if (d.kind == DimKind::Numeric)
        out << double_to_string(std::get<double>(rec.config.values[i]));
      else
        out << escape(d.levels[static_cast<size_t>(std::get<int>(rec.config.values[i]))]);
      out << ",";
    }
    out << double_to_string(rec.aod) << "," << double_to_string(rec.eod) << ","
        << double_to_string(rec.accuracy) << "\n";
  }
}

}  // namespace fairhp
