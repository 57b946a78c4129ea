#include "fairhp/hp_space.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

namespace fairhp {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Algorithm ids
// ---------------------------------------------------------------------------

Algorithm algorithm_from_string(const std::string& id) {
  if (id == "decision_tree") return Algorithm::DecisionTree;
  if (id == "logistic_regression") return Algorithm::LogisticRegression;
  if (id == "svm") return Algorithm::Svm;
  if (id == "random_forest") return Algorithm::RandomForest;
  if (id == "discriminant_analysis") return Algorithm::DiscriminantAnalysis;
  throw ArgumentError("unknown training algorithm '" + id + "'");
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::DecisionTree: return "decision_tree";
    case Algorithm::LogisticRegression: return "logistic_regression";
    case Algorithm::Svm: return "svm";
    case Algorithm::RandomForest: return "random_forest";
    case Algorithm::DiscriminantAnalysis: return "discriminant_analysis";
  }
  throw ArgumentError("invalid algorithm enum value");
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> all = {
      Algorithm::DecisionTree, Algorithm::LogisticRegression, Algorithm::Svm,
      Algorithm::RandomForest, Algorithm::DiscriminantAnalysis};
  return all;
}

// ---------------------------------------------------------------------------
// HPDimension / HPSpace
// ---------------------------------------------------------------------------

void HPDimension::validate() const {
  if (name.empty()) throw ArgumentError("dimension without a name");
  if (kind == DimKind::Numeric) {
    if (!(lo < hi)) throw ArgumentError("dimension '" + name + "': lo must be < hi");
    if (scale == Scale::Log && !(lo > 0.0))
      throw ArgumentError("dimension '" + name + "': log scale requires lo > 0");
  } else {
    if (levels.size() < 2)
      throw ArgumentError("dimension '" + name + "': categorical needs >= 2 levels");
  }
}

int HPDimension::level_index(std::string_view level) const {
  for (size_t i = 0; i < levels.size(); ++i)
    if (levels[i] == level) return static_cast<int>(i);
  return -1;
}

int HPSpace::index_of(std::string_view name) const {
  for (size_t i = 0; i < dims.size(); ++i)
    if (dims[i].name == name) return static_cast<int>(i);
  return -1;
}

const HPDimension& HPSpace::dim(std::string_view name) const {
  const int i = index_of(name);
  if (i < 0)
    throw ArgumentError("space " + to_string(algorithm) + " has no dimension '" +
                        std::string(name) + "'");
  return dims[static_cast<size_t>(i)];
}

void HPSpace::validate() const {
  if (dims.empty()) throw ArgumentError("space without dimensions");
  for (size_t i = 0; i < dims.size(); ++i) {
    dims[i].validate();
    for (size_t k = i + 1; k < dims.size(); ++k)
      if (dims[k].name == dims[i].name)
        throw ArgumentError("duplicate dimension '" + dims[i].name + "'");
  }
}

void HPSpace::validate_config(const HPConfig& config) const {
  if (config.values.size() != dims.size())
    throw ArgumentError("config has " + std::to_string(config.values.size()) +
                        " values, space " + to_string(algorithm) + " has " +
                        std::to_string(dims.size()) + " dimensions");
  for (size_t i = 0; i < dims.size(); ++i) {
    const auto& d = dims[i];
    if (d.kind == DimKind::Numeric) {
      const double* v = std::get_if<double>(&config.values[i]);
      if (!v) throw ArgumentError("dimension '" + d.name + "' expects a numeric value");
      if (!std::isfinite(*v) || *v < d.lo || *v > d.hi)
        throw ArgumentError("dimension '" + d.name + "': value " + double_to_string(*v) +
                            " outside [" + double_to_string(d.lo) + ", " +
                            double_to_string(d.hi) + "]");
      if (d.is_integer && *v != std::floor(*v))
        throw ArgumentError("dimension '" + d.name + "': value must be an integer");
    } else {
      const int* c = std::get_if<int>(&config.values[i]);
      if (!c) throw ArgumentError("dimension '" + d.name + "' expects a level code");
      if (*c < 0 || *c >= static_cast<int>(d.levels.size()))
        throw ArgumentError("dimension '" + d.name + "': level code " + std::to_string(*c) +
                            " out of range");
    }
  }
}

double HPSpace::numeric(const HPConfig& config, std::string_view name) const {
  const int i = index_of(name);
  if (i < 0) throw ArgumentError("no dimension '" + std::string(name) + "'");
  return std::get<double>(config.values[static_cast<size_t>(i)]);
}

int HPSpace::level_code(const HPConfig& config, std::string_view name) const {
  const int i = index_of(name);
  if (i < 0) throw ArgumentError("no dimension '" + std::string(name) + "'");
  return std::get<int>(config.values[static_cast<size_t>(i)]);
}

const std::string& HPSpace::level(const HPConfig& config, std::string_view name) const {
  const HPDimension& d = dim(name);
  return d.levels[static_cast<size_t>(level_code(config, name))];
}

json HPSpace::to_json() const {
  json dims_json = json::array();
  for (const auto& d : dims) {
    if (d.kind == DimKind::Numeric) {
      dims_json.push_back(json{{"name", d.name},
                               {"kind", "numeric"},
                               {"lo", d.lo},
                               {"hi", d.hi},
                               {"scale", d.scale == Scale::Log ? "log" : "linear"},
                               {"integer", d.is_integer}});
    } else {
      dims_json.push_back(json{{"name", d.name}, {"kind", "categorical"}, {"levels", d.levels}});
    }
  }
  return json{{"algorithm", to_string(algorithm)}, {"version", version}, {"dims", dims_json}};
}

HPSpace HPSpace::from_json(const json& j) {
  HPSpace s;
  s.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
  s.version = j.at("version").get<std::string>();
  for (const auto& jd : j.at("dims")) {
    HPDimension d;
    d.name = jd.at("name").get<std::string>();
    const std::string kind = jd.at("kind").get<std::string>();
    if (kind == "numeric") {
      d.kind = DimKind::Numeric;
      d.lo = jd.at("lo").get<double>();
      d.hi = jd.at("hi").get<double>();
      d.scale = jd.at("scale").get<std::string>() == "log" ? Scale::Log : Scale::Linear;
      d.is_integer = jd.at("integer").get<bool>();
    } else if (kind == "categorical") {
      d.kind = DimKind::Categorical;
      d.levels = jd.at("levels").get<std::vector<std::string>>();
    } else {
      throw FileFormatError("unknown dimension kind '" + kind + "'");
    }
    s.dims.push_back(std::move(d));
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Space definitions (version 1)
// ---------------------------------------------------------------------------

namespace {

HPDimension num(std::string name, double lo, double hi, Scale scale = Scale::Linear,
                bool integer = false) {
  HPDimension d;
  d.name = std::move(name);
  d.kind = DimKind::Numeric;
  d.lo = lo;
  d.hi = hi;
  d.scale = scale;
  d.is_integer = integer;
  return d;
}

HPDimension cat(std::string name, std::vector<std::string> levels) {
  HPDimension d;
  d.name = std::move(name);
  d.kind = DimKind::Categorical;
  d.levels = std::move(levels);
  return d;
}

}  // namespace

HPSpace hp_space(Algorithm a) {
  HPSpace s;
  s.algorithm = a;
  s.version = kHpSpaceVersion;
  switch (a) {
    case Algorithm::DecisionTree:
      s.dims = {
          num("max_depth", 1, 64, Scale::Linear, true),
          num("min_samples_split", 2, 64, Scale::Linear, true),
          num("min_samples_leaf", 1, 32, Scale::Linear, true),
          num("min_weight_fraction_leaf", 0.0, 0.5),
          cat("criterion", {"gini", "entropy", "log_loss"}),
          cat("splitter", {"best", "random"}),
          cat("max_features", {"all", "sqrt", "log2"}),
      };
      break;
    case Algorithm::LogisticRegression:
      s.dims = {
          num("tol", 1e-6, 1e-1, Scale::Log),
          num("C", 1e-4, 1e4, Scale::Log),
          num("intercept_scaling", 0.1, 10.0, Scale::Log),
          num("max_iteration", 10, 1000, Scale::Log, true),
          num("l1_ratio", 0.0, 1.0),
          cat("solver", {"lbfgs", "liblinear", "newton-cg", "sag", "saga"}),
          cat("penalty", {"l2", "l1", "elasticnet", "none"}),
          cat("dual_prime", {"prime", "dual"}),
          cat("fit_intercept", {"true", "false"}),
          cat("multi_class", {"auto", "ovr", "multinomial"}),
      };
      break;
    case Algorithm::Svm:
      s.dims = {
          num("tol", 1e-6, 1e-1, Scale::Log),
          num("C", 1e-4, 1e4, Scale::Log),
          num("intercept_scaling", 0.1, 10.0, Scale::Log),
          cat("penalty", {"l2", "l1"}),
          cat("loss", {"squared_hinge", "hinge"}),
          cat("degree", {"2", "3", "4", "5"}),
          cat("fit_intercept", {"true", "false"}),
          cat("class_weight", {"none", "balanced"}),
      };
      break;
    case Algorithm::RandomForest:
      s.dims = {
          num("max_depth", 1, 64, Scale::Linear, true),
          num("min_samples_split", 2, 64, Scale::Linear, true),
          num("min_samples_leaf", 1, 32, Scale::Linear, true),
          num("min_weight_fraction_leaf", 0.0, 0.5),
          num("n_estimators", 1, 64, Scale::Linear, true),
          num("max_samples", 0.1, 1.0),
          cat("criterion", {"gini", "entropy", "log_loss"}),
          cat("max_features", {"sqrt", "log2", "all"}),
          cat("oob_score", {"false", "true"}),
          cat("warm_start", {"false", "true"}),
      };
      break;
    case Algorithm::DiscriminantAnalysis:
      s.dims = {
          num("tol", 1e-6, 1e-1, Scale::Log),
          num("reg_param", 0.0, 1.0),
          cat("linear(0)_quadratic(1)", {"linear", "quadratic"}),
          cat("solve_Linear", {"svd", "lsqr", "eigen"}),
          cat("Shrinkage_Linear", {"none", "auto"}),
          cat("component", {"none", "one"}),
          cat("store_covariance", {"false", "true"}),
          cat("type_dataset", {"0", "1"}),
      };
      break;
  }
  s.validate();
  return s;
}

HPSpace hp_space(const std::string& algorithm_id) {
  return hp_space(algorithm_from_string(algorithm_id));
}

// ---------------------------------------------------------------------------
// Defaults and sampling
// ---------------------------------------------------------------------------

namespace {

// Documented default table. Numeric entries hold the value, categorical
// entries the level name.
std::map<std::string, std::variant<double, std::string>> default_table(Algorithm a) {
  using V = std::variant<double, std::string>;
  switch (a) {
    case Algorithm::DecisionTree:
      return {{"max_depth", V{64.0}},
              {"min_samples_split", V{2.0}},
              {"min_samples_leaf", V{1.0}},
              {"min_weight_fraction_leaf", V{0.0}},
              {"criterion", V{std::string("gini")}},
              {"splitter", V{std::string("best")}},
              {"max_features", V{std::string("all")}}};
    case Algorithm::LogisticRegression:
      return {{"tol", V{1e-4}},
              {"C", V{1.0}},
              {"intercept_scaling", V{1.0}},
              {"max_iteration", V{100.0}},
              {"l1_ratio", V{0.5}},
              {"solver", V{std::string("lbfgs")}},
              {"penalty", V{std::string("l2")}},
              {"dual_prime", V{std::string("prime")}},
              {"fit_intercept", V{std::string("true")}},
              {"multi_class", V{std::string("auto")}}};
    case Algorithm::Svm:
      return {{"tol", V{1e-4}},
              {"C", V{1.0}},
              {"intercept_scaling", V{1.0}},
              {"penalty", V{std::string("l2")}},
              {"loss", V{std::string("squared_hinge")}},
              {"degree", V{std::string("3")}},
              {"fit_intercept", V{std::string("true")}},
              {"class_weight", V{std::string("none")}}};
    case Algorithm::RandomForest:
      return {{"max_depth", V{64.0}},
              {"min_samples_split", V{2.0}},
              {"min_samples_leaf", V{1.0}},
              {"min_weight_fraction_leaf", V{0.0}},
              {"n_estimators", V{16.0}},
              {"max_samples", V{1.0}},
              {"criterion", V{std::string("gini")}},
              {"max_features", V{std::string("sqrt")}},
              {"oob_score", V{std::string("false")}},
              {"warm_start", V{std::string("false")}}};
    case Algorithm::DiscriminantAnalysis:
      return {{"tol", V{1e-4}},
              {"reg_param", V{0.0}},
              {"linear(0)_quadratic(1)", V{std::string("linear")}},
              {"solve_Linear", V{std::string("svd")}},
              {"Shrinkage_Linear", V{std::string("none")}},
              {"component", V{std::string("none")}},
              {"store_covariance", V{std::string("false")}},
              {"type_dataset", V{std::string("0")}}};
  }
  throw ArgumentError("invalid algorithm enum value");
}

}  // namespace

HPConfig default_config(const HPSpace& space) {
  const auto table = default_table(space.algorithm);
  HPConfig c;
  c.values.reserve(space.dims.size());
  for (const auto& d : space.dims) {
    const auto it = table.find(d.name);
    if (it == table.end())
      throw ArgumentError("no default for dimension '" + d.name + "'");
    if (d.kind == DimKind::Numeric) {
      c.values.emplace_back(std::get<double>(it->second));
    } else {
      const int code = d.level_index(std::get<std::string>(it->second));
      if (code < 0) throw ArgumentError("default level missing for '" + d.name + "'");
      c.values.emplace_back(code);
    }
  }
  space.validate_config(c);
  return c;
}

HPConfig sample_config(const HPSpace& space, Rng& rng) {
  HPConfig c;
  c.values.reserve(space.dims.size());
  for (const auto& d : space.dims) {
    if (d.kind == DimKind::Categorical) {
      c.values.emplace_back(static_cast<int>(rng.uniform_int(static_cast<int64_t>(d.levels.size()))));
      continue;
    }
    double v;
    if (d.scale == Scale::Log)
      v = std::exp(rng.uniform(std::log(d.lo), std::log(d.hi)));
    else
      v = rng.uniform(d.lo, d.hi);
    if (d.is_integer) v = std::clamp(std::round(v), d.lo, d.hi);
    c.values.emplace_back(v);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Config JSON
// ---------------------------------------------------------------------------

json config_to_json(const HPSpace& space, const HPConfig& config) {
  space.validate_config(config);
  json j = json::object();
  for (size_t i = 0; i < space.dims.size(); ++i) {
    const auto& d = space.dims[i];
    if (d.kind == DimKind::Numeric) {
      const double v = std::get<double>(config.values[i]);
      if (d.is_integer)
        j[d.name] = static_cast<int64_t>(v);
      else
        j[d.name] = v;
    } else {
      j[d.name] = d.levels[static_cast<size_t>(std::get<int>(config.values[i]))];
    }
  }
  return j;
}

HPConfig config_from_json(const HPSpace& space, const json& j) {
  if (!j.is_object()) throw FileFormatError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (space.index_of(key) < 0)
      throw FileFormatError("config names unknown dimension '" + key + "'");
  }
  HPConfig c;
  c.values.reserve(space.dims.size());
  for (const auto& d : space.dims) {
    if (!j.contains(d.name))
      throw FileFormatError("config is missing dimension '" + d.name + "'");
    const json& v = j.at(d.name);
    if (d.kind == DimKind::Numeric) {
      if (!v.is_number()) throw FileFormatError("dimension '" + d.name + "' expects a number");
      c.values.emplace_back(v.get<double>());
    } else {
      if (!v.is_string())
        throw FileFormatError("dimension '" + d.name + "' expects a level name");
      const int code = d.level_index(v.get<std::string>());
      if (code < 0)
        throw FileFormatError("dimension '" + d.name + "': unknown level '" +
                              v.get<std::string>() + "'");
      c.values.emplace_back(code);
    }
  }
  space.validate_config(c);
  return c;
}

}  // namespace fairhp
