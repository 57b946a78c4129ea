#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fairhp/evaluation.hpp"

namespace fairhp {

/// Carries every problem found while validating a study config.
struct ConfigError : Error {
  explicit ConfigError(std::vector<std::string> problems_in);
  std::vector<std::string> problems;
};

struct CsvSource {
  std::string csv_path;
  std::string schema_path;
};

struct ShiftSource {
  std::string of_release;
  double drift = 0.0;
};

/// One dataset entry: exactly one of synth, csv or shift supplies the data.
struct DatasetDecl {
  std::string name;
  std::string release;
  std::optional<SynthSpec> synth;
  std::optional<CsvSource> csv;
  std::optional<ShiftSource> shift;
};

struct ShiftPairDecl {
  std::string dataset;
  std::string base_release;
  std::string shifted_release;
};

struct StudyConfig {
  uint64_t base_seed = 1;
  std::string out_dir;  // optional; the CLI --out flag overrides
  FairnessTarget target = FairnessTarget::Aod;
  std::vector<Algorithm> algorithms;
  std::vector<DatasetDecl> datasets;
  int budget = 300;
  double acc_degrade = 0.05;
  SearchOptions search;
  std::vector<SurrogateKind> kinds;
  SurrogateOptions surrogate_opts;
  int repeats = 10;
  double train_fraction = 0.8;
  std::vector<ShiftPairDecl> shift_pairs;

  /// Parses and validates, reporting every problem at once via ConfigError.
  static StudyConfig from_json(const nlohmann::json& j);
  static StudyConfig load(const std::string& path);
  nlohmann::json to_json() const;
};

struct RunOptions {
  bool force = false;                    // regenerate traces even when cached
  std::optional<uint64_t> seed_override;
  int jobs = 1;
};

struct RunSummary {
  int exit_code = 0;  // 0 ok, 3 when any stage item failed
  std::vector<std::string> failures;
  std::vector<std::string> cache_hits;
};

/// Full pipeline: trace -> fit -> eval -> shift -> report, then the manifest.
RunSummary run_study(const StudyConfig& config, const std::string& out_dir,
                     const RunOptions& opts = {});

/// Standalone stages operating on the files earlier stages produced.
RunSummary run_stage(const std::string& stage, const StudyConfig& config,
                     const std::string& out_dir, const RunOptions& opts = {});

}  // namespace fairhp
