#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "fairhp/tracegen.hpp"
#include "helpers.hpp"

using namespace fairhp;
using fairhp::testing::small_classifier_dataset;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() /
                       ("fairhp-tr-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// dataset where the protected group is itself a feature and labels are
// strongly group-correlated: trees that split on it are maximally unfair,
// trees blocked from splitting are constant and perfectly fair
TabularDataset group_feature_dataset() {
  const int n = 200;
  TabularDataset ds;
  ds.name = "group-feature";
  ds.release = "base";
  ds.protected_attribute = "group";
  ds.rows.resize(n, 2);
  ds.labels.resize(n);
  ds.groups.resize(n);
  Rng rng(99);
  for (int i = 0; i < n; ++i) {
    const bool g1 = i < 60;
    ds.groups[i] = g1 ? 1 : 0;
    if (g1)
      ds.labels[i] = i < 54 ? 1 : 0;  // 90% favorable
    else
      ds.labels[i] = i < 74 ? 1 : 0;  // 10% favorable
    ds.rows(i, 0) = ds.groups[i];
    ds.rows(i, 1) = rng.normal();
  }
  ds.column_meta = {{"group", ColumnKind::Categorical, {"g0", "g1"}},
                    {"noise", ColumnKind::Numeric, {}}};
  return ds;
}

}  // namespace

TEST_CASE("a vanishing strength never mutates") {
  const auto space = hp_space(Algorithm::Svm);
  const auto config = default_config(space);
  Rng rng(1);
  const auto out = mutate(config, space, 1e-12, rng);
  CHECK(config_to_json(space, out) == config_to_json(space, config));
}

TEST_CASE("mutations always stay inside the space") {
  for (auto a : all_algorithms()) {
    const auto space = hp_space(a);
    Rng rng(fnv1a64(to_string(a)));
    HPConfig config = default_config(space);
    for (int i = 0; i < 2000; ++i) {
      config = mutate(config, space, 0.5, rng);
      CHECK_NOTHROW(space.validate_config(config));
    }
  }
}

TEST_CASE("values pinned at a bound stay clamped under mutation") {
  const auto space = hp_space(Algorithm::DecisionTree);
  HPConfig config = default_config(space);
  const int depth_idx = space.index_of("max_depth");
  config.values[static_cast<size_t>(depth_idx)] = 64.0;  // hi bound
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const auto out = mutate(config, space, 1.0, rng);
    CHECK(std::get<double>(out.values[static_cast<size_t>(depth_idx)]) <= 64.0);
    CHECK(std::get<double>(out.values[static_cast<size_t>(depth_idx)]) >= 1.0);
  }
}

TEST_CASE("trace generation honors budget, bounds and default-first") {
  const auto ds = small_classifier_dataset(300, 71);
  SearchOptions options;
  options.population = 10;
  SearchState state;
  const auto trace = generate_trace(Algorithm::DiscriminantAnalysis, ds, 50, 0.05, 123, options,
                                    &state);
  CHECK(trace.records.size() >= 1);
  CHECK(trace.records.size() <= 50);
  CHECK(static_cast<int>(trace.records.size()) + trace.meta.skipped == 50);
  for (const auto& rec : trace.records) {
    CHECK(rec.aod >= 0.0);
    CHECK(rec.aod <= 1.0);
    CHECK(rec.eod >= 0.0);
    CHECK(rec.eod <= 1.0);
    CHECK(rec.accuracy >= 0.0);
    CHECK(rec.accuracy <= 1.0);
  }
  // record 0 is the default configuration
  const auto space = hp_space(Algorithm::DiscriminantAnalysis);
  CHECK(config_to_json(space, trace.records[0].config) ==
        config_to_json(space, default_config(space)));
  CHECK(trace.meta.accuracy_threshold ==
        doctest::Approx(0.95 * trace.meta.default_accuracy));
}

TEST_CASE("archives are mutually non-dominated") {
  const auto ds = small_classifier_dataset(300, 72);
  SearchOptions options;
  options.population = 10;
  SearchState state;
  generate_trace(Algorithm::DecisionTree, ds, 60, 0.05, 9, options, &state);
  auto check_archive = [](const std::vector<ArchiveEntry>& archive, bool minimize) {
    for (size_t i = 0; i < archive.size(); ++i)
      for (size_t j = 0; j < archive.size(); ++j) {
        if (i == j) continue;
        const auto& a = archive[i];
        const auto& b = archive[j];
        const bool aod_better = minimize ? a.aod < b.aod : a.aod > b.aod;
        const bool dominates = (aod_better || a.aod == b.aod) && a.accuracy >= b.accuracy &&
                               (aod_better || a.accuracy > b.accuracy);
        CHECK_FALSE(dominates);
      }
  };
  CHECK(state.min_archive.size() >= 1);
  CHECK(state.max_archive.size() >= 1);
  check_archive(state.min_archive, true);
  check_archive(state.max_archive, false);
}

TEST_CASE("search finds both fair and unfair regimes when one dim controls them") {
  SearchOptions options;
  options.population = 10;
  const auto trace =
      generate_trace(Algorithm::DecisionTree, group_feature_dataset(), 60, 0.3, 4, options);
  double lo = 1.0, hi = 0.0;
  for (const auto& rec : trace.records) {
    lo = std::min(lo, rec.aod);
    hi = std::max(hi, rec.aod);
  }
  CHECK(hi - lo >= 0.3);
}

TEST_CASE("the same seed produces byte-identical trace files") {
  const auto dir = temp_dir();
  const auto ds = small_classifier_dataset(250, 73);
  SearchOptions options;
  options.population = 10;
  const auto t1 = generate_trace(Algorithm::DiscriminantAnalysis, ds, 30, 0.05, 2024, options);
  const auto t2 = generate_trace(Algorithm::DiscriminantAnalysis, ds, 30, 0.05, 2024, options);
  write_trace(t1, (dir / "a.jsonl").string());
  write_trace(t2, (dir / "b.jsonl").string());
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
  fs::remove_all(dir);
}

TEST_CASE("budget below the population size is rejected") {
  const auto ds = small_classifier_dataset(100, 74);
  CHECK_THROWS_AS(generate_trace(Algorithm::DecisionTree, ds, 5, 0.05, 1), ArgumentError);
}

TEST_CASE("write and read round-trip the trace") {
  const auto dir = temp_dir();
  const auto ds = small_classifier_dataset(250, 75);
  SearchOptions options;
  options.population = 10;
  const auto trace = generate_trace(Algorithm::Svm, ds, 25, 0.05, 5, options);
  const auto path = (dir / "trace.jsonl").string();
  write_trace(trace, path);
  const auto back = read_trace(path);
  CHECK(back.records.size() == trace.records.size());
  CHECK(back.algorithm == trace.algorithm);
  CHECK(back.meta.seed == trace.meta.seed);
  CHECK(back.meta.skipped == trace.meta.skipped);
  const auto rewritten = (dir / "rewritten.jsonl").string();
  write_trace(back, rewritten);
  CHECK(slurp(path) == slurp(rewritten));
  fs::remove_all(dir);
}

TEST_CASE("malformed trace files are rejected") {
  const auto dir = temp_dir();
  const auto ds = small_classifier_dataset(250, 76);
  SearchOptions options;
  options.population = 10;
  const auto trace = generate_trace(Algorithm::DecisionTree, ds, 25, 0.05, 6, options);
  const auto path = (dir / "trace.jsonl").string();
  write_trace(trace, path);

  // unknown dimension in a record
  {
    std::ifstream in(path);
    std::string header, record;
    std::getline(in, header);
    std::getline(in, record);
    const auto pos = record.find("max_depth");
    REQUIRE(pos != std::string::npos);
    record.replace(pos, 9, "mega_dept");
    std::ofstream out(dir / "bad_dim.jsonl");
    out << header << "\n" << record << "\n";
  }
  CHECK_THROWS_AS(read_trace((dir / "bad_dim.jsonl").string()), FileFormatError);

  // space version mismatch
  {
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    const auto pos = header.find("\"version\":\"1\"");
    REQUIRE(pos != std::string::npos);
    header.replace(pos, 13, "\"version\":\"0\"");
    std::ofstream out(dir / "bad_version.jsonl");
    out << header << "\n";
    std::ifstream full(path);
    std::string line;
    std::getline(full, line);
    while (std::getline(full, line)) out << line << "\n";
  }
  CHECK_THROWS_AS(read_trace((dir / "bad_version.jsonl").string()), FileFormatError);

  // no records
  {
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    std::ofstream out(dir / "empty.jsonl");
    out << header << "\n";
  }
  CHECK_THROWS_AS(read_trace((dir / "empty.jsonl").string()), FileFormatError);
  fs::remove_all(dir);
}

TEST_CASE("csv export carries one column per dimension plus the metrics") {
  const auto dir = temp_dir();
  const auto ds = small_classifier_dataset(250, 77);
  SearchOptions options;
  options.population = 10;
  const auto trace = generate_trace(Algorithm::DecisionTree, ds, 20, 0.05, 7, options);
  const auto path = (dir / "trace.csv").string();
  export_trace_csv(trace, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "max_depth,min_samples_split,min_samples_leaf,min_weight_fraction_leaf,criterion,"
        "splitter,max_features,aod,eod,accuracy");
  size_t rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == trace.records.size());
  fs::remove_all(dir);
}
