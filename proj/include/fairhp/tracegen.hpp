#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fairhp/dataset.hpp"
#include "fairhp/fairness.hpp"
#include "fairhp/hp_space.hpp"

namespace fairhp {

struct FairnessRecord {
  HPConfig config;
  double aod = 0.0;
  double eod = 0.0;
  double accuracy = 0.0;
  bool degenerate = false;  // a group rate had an empty denominator
  uint64_t eval_seed = 0;
};

struct SearchOptions {
  int population = 20;
  int tournament = 3;
  double strength_hi = 0.3;  // mutation strength at the start of the run
  double strength_lo = 0.1;  // ... decayed to this by the end
  double classifier_train_fraction = 0.7;
  RatesDenominator rates_denominator = RatesDenominator::Conditioned;
};

struct TraceMetadata {
  int budget = 0;
  uint64_t seed = 0;
  double acc_degrade = 0.05;
  double default_accuracy = 0.0;
  double accuracy_threshold = 0.0;
  int skipped = 0;  // evaluations lost to training failures
  SearchOptions options;
};

struct FairnessTrace {
  std::string dataset_name;
  std::string release;
  std::string protected_attribute;
  Algorithm algorithm = Algorithm::DecisionTree;
  HPSpace space;  // snapshot the records were generated against
  std::vector<FairnessRecord> records;
  TraceMetadata meta;

  void validate() const;
};

struct ArchiveEntry {
  int record_index = 0;
  double aod = 0.0;
  double accuracy = 0.0;
};

/// The two non-dominated fronts the search maintains: one trading low AOD
/// against accuracy, one trading high AOD against accuracy.
struct SearchState {
  std::vector<ArchiveEntry> min_archive;
  std::vector<ArchiveEntry> max_archive;
};

/// Perturbs each dimension independently with probability `strength`:
/// numeric dims by Gaussian noise sized to the range (log-space for log
/// dims), clamped and rounded as needed; categorical dims by a uniform
/// resample. The result is always valid for the space.
HPConfig mutate(const HPConfig& config, const HPSpace& space, double strength, Rng& rng);

/// Explores the algorithm's space with a two-phase evolutionary search that
/// alternates between minimizing and maximizing AOD subject to an accuracy
/// floor relative to the default configuration. Every evaluated configuration
/// is recorded; training failures are counted and skipped. Consumes exactly
/// `budget` evaluations and is deterministic given `seed`.
FairnessTrace generate_trace(Algorithm algorithm, const TabularDataset& dataset, int budget,
                             double acc_degrade, uint64_t seed, const SearchOptions& options = {},
                             SearchState* state_out = nullptr);

/// JSON Lines: a header object on line one, one record per following line.
void write_trace(const FairnessTrace& trace, const std::string& path);
FairnessTrace read_trace(const std::string& path);

/// Flat CSV view: one column per dimension plus aod, eod, accuracy.
void export_trace_csv(const FairnessTrace& trace, const std::string& path);

}  // namespace fairhp
