#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fairhp/common.hpp"

namespace fairhp {

enum class Algorithm {
  DecisionTree,
  LogisticRegression,
  Svm,
  RandomForest,
  DiscriminantAnalysis,
};

Algorithm algorithm_from_string(const std::string& id);
std::string to_string(Algorithm a);
const std::vector<Algorithm>& all_algorithms();

enum class DimKind { Numeric, Categorical };
enum class Scale { Linear, Log };

struct HPDimension {
  std::string name;
  DimKind kind = DimKind::Numeric;
  // numeric dims
  double lo = 0.0;
  double hi = 1.0;
  Scale scale = Scale::Linear;
  bool is_integer = false;
  // categorical dims
  std::vector<std::string> levels;

  void validate() const;
  int level_index(std::string_view level) const;  // -1 when absent
};

/// One value per dimension, in dimension order: double for numeric dims,
/// level code for categorical dims.
using HPValue = std::variant<double, int>;

struct HPConfig {
  std::vector<HPValue> values;
};

/// Bump when any dimension list, range or level order changes; trace and
/// surrogate files carry it and refuse to load across versions.
inline constexpr const char* kHpSpaceVersion = "1";

struct HPSpace {
  Algorithm algorithm = Algorithm::DecisionTree;
  std::string version = kHpSpaceVersion;
  std::vector<HPDimension> dims;

  int index_of(std::string_view name) const;      // -1 when absent
  const HPDimension& dim(std::string_view name) const;
  void validate() const;
  void validate_config(const HPConfig& config) const;

  double numeric(const HPConfig& config, std::string_view name) const;
  int level_code(const HPConfig& config, std::string_view name) const;
  const std::string& level(const HPConfig& config, std::string_view name) const;

  nlohmann::json to_json() const;
  static HPSpace from_json(const nlohmann::json& j);
};

/// The fixed, versioned space for one training algorithm.
HPSpace hp_space(Algorithm a);
HPSpace hp_space(const std::string& algorithm_id);

/// Documented per-algorithm defaults; always valid for the space.
HPConfig default_config(const HPSpace& space);

/// Uniform draw: numeric dims uniform on their (possibly log) scale,
/// categorical dims uniform over levels.
HPConfig sample_config(const HPSpace& space, Rng& rng);

/// {dim name: number | level name} representation used in trace files.
nlohmann::json config_to_json(const HPSpace& space, const HPConfig& config);
HPConfig config_from_json(const HPSpace& space, const nlohmann::json& j);

}  // namespace fairhp
