#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fairhp/common.hpp"

namespace fairhp {

enum class ColumnKind { Numeric, Categorical };

struct ColumnMeta {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  std::vector<std::string> levels;  // categorical only, in code order
};

/// Parameters of a generated dataset. Embedded in the dataset's metadata so
/// drifted variants can be derived from it later.
struct SynthSpec {
  int n_rows = 1000;
  int n_numeric = 4;
  int n_categorical = 2;
  double group1_fraction = 0.5;
  double base_rate_g0 = 0.5;
  double base_rate_g1 = 0.5;
  double signal_strength = 0.5;
  uint64_t seed = 0;

  // Drift extension: structure (column means, signal coefficients) always
  // derives from `seed`; rows are drawn from `sample_seed` when set, and
  // means/base rates are offset by `drift` with directions from `drift_seed`.
  double drift = 0.0;
  uint64_t drift_seed = 0;
  std::optional<uint64_t> sample_seed;

  void validate() const;
};

struct LabelSpec {
  std::string column;
  std::string favorable_level;
};

struct ProtectedSpec {
  std::string column;
  std::vector<std::string> group1_levels;
};

/// Column layout plus the label/protected binarization rules for a CSV file.
struct DatasetSchema {
  std::vector<ColumnMeta> columns;  // includes the label column
  LabelSpec label;
  ProtectedSpec protected_attr;

  const ColumnMeta* find_column(const std::string& name) const;
  void validate() const;

  nlohmann::json to_json() const;
  static DatasetSchema from_json(const nlohmann::json& j);
  static DatasetSchema load(const std::string& path);
  void save(const std::string& path) const;
};

/// Numeric-coded feature matrix with binary labels and a binary protected
/// group per row. Immutable after construction by convention; all operations
/// below return fresh datasets.
struct TabularDataset {
  std::string name;
  std::string release;
  Eigen::MatrixXd rows;        // n x d, categorical cells hold level codes
  Eigen::VectorXi labels;      // {0,1}, 1 = favorable
  Eigen::VectorXi groups;      // {0,1} protected group per row
  std::vector<ColumnMeta> column_meta;  // feature columns (label excluded)
  std::string protected_attribute;
  std::optional<SynthSpec> synth_spec;
  bool degenerate_warning = false;

  Eigen::Index n_rows() const { return rows.rows(); }
  Eigen::Index n_features() const { return rows.cols(); }

  /// Checks the structural invariants, throwing on violation.
  void validate() const;

  nlohmann::json meta_to_json() const;
};

TabularDataset load_csv(const std::string& path, const DatasetSchema& schema);

/// Writes a CSV that `load_csv` with the same schema reads back into an
/// identical dataset. A multi-level label column is collapsed to the
/// favorable level and one representative non-favorable level.
void save_csv(const TabularDataset& ds, const DatasetSchema& schema, const std::string& path);

/// Seeded disjoint partition with sizes (ceil(n*f), n - ceil(n*f)).
std::pair<TabularDataset, TabularDataset> split(const TabularDataset& ds, double train_fraction,
                                                uint64_t seed);

TabularDataset synth_generate(const SynthSpec& spec);

/// Re-draws a dataset from the stored spec with feature means and group base
/// rates offset proportionally to `drift`. drift = 0 yields a fresh i.i.d.
/// sample from the original spec.
TabularDataset synth_shift(const TabularDataset& ds, double drift, uint64_t seed);

nlohmann::json synth_spec_to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

}  // namespace fairhp
