#include "fairhp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fairhp {

using nlohmann::json;

// ---------------------------------------------------------------------------
// SynthSpec
// ---------------------------------------------------------------------------

void SynthSpec::validate() const {
  auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (n_rows < 10) throw ArgumentError("synth spec: n_rows must be >= 10");
  if (n_numeric < 0 || n_categorical < 0)
    throw ArgumentError("synth spec: negative column counts");
  if (!in01(group1_fraction) || !in01(base_rate_g0) || !in01(base_rate_g1) ||
      !in01(signal_strength))
    throw ArgumentError("synth spec: rates and fractions must lie in [0,1]");
  if (drift < 0.0) throw ArgumentError("synth spec: drift must be >= 0");
}

json synth_spec_to_json(const SynthSpec& spec) {
  json j{{"n_rows", spec.n_rows},
         {"n_numeric", spec.n_numeric},
         {"n_categorical", spec.n_categorical},
         {"group1_fraction", spec.group1_fraction},
         {"base_rate_g0", spec.base_rate_g0},
         {"base_rate_g1", spec.base_rate_g1},
         {"signal_strength", spec.signal_strength},
         {"seed", spec.seed},
         {"drift", spec.drift},
         {"drift_seed", spec.drift_seed}};
  if (spec.sample_seed) j["sample_seed"] = *spec.sample_seed;
  return j;
}

SynthSpec synth_spec_from_json(const json& j) {
  SynthSpec s;
  s.n_rows = j.at("n_rows").get<int>();
  s.n_numeric = j.at("n_numeric").get<int>();
  s.n_categorical = j.at("n_categorical").get<int>();
  s.group1_fraction = j.at("group1_fraction").get<double>();
  s.base_rate_g0 = j.at("base_rate_g0").get<double>();
  s.base_rate_g1 = j.at("base_rate_g1").get<double>();
  s.signal_strength = j.at("signal_strength").get<double>();
  s.seed = j.at("seed").get<uint64_t>();
  s.drift = j.value("drift", 0.0);
  s.drift_seed = j.value("drift_seed", uint64_t{0});
  if (j.contains("sample_seed")) s.sample_seed = j.at("sample_seed").get<uint64_t>();
  return s;
}

// ---------------------------------------------------------------------------
// DatasetSchema
// ---------------------------------------------------------------------------

const ColumnMeta* DatasetSchema::find_column(const std::string& name) const {
  for (const auto& c : columns)
    if (c.name == name) return &c;
  return nullptr;
}

void DatasetSchema::validate() const {
  if (columns.empty()) throw SchemaError("schema has no columns");
  for (size_t i = 0; i < columns.size(); ++i) {
    const auto& c = columns[i];
    if (c.name.empty()) throw SchemaError("schema column without a name");
    for (size_t k = i + 1; k < columns.size(); ++k)
      if (columns[k].name == c.name)
        throw SchemaError("duplicate schema column '" + c.name + "'");
    if (c.kind == ColumnKind::Categorical && c.levels.size() < 2)
      throw SchemaError("categorical column '" + c.name + "' needs >= 2 levels");
    if (c.kind == ColumnKind::Numeric && !c.levels.empty())
      throw SchemaError("numeric column '" + c.name + "' must not list levels");
  }
  const ColumnMeta* lab = find_column(label.column);
  if (!lab) throw SchemaError("label column '" + label.column + "' not in schema");
  if (lab->kind != ColumnKind::Categorical)
    throw SchemaError("label column must be categorical");
  if (std::find(lab->levels.begin(), lab->levels.end(), label.favorable_level) ==
      lab->levels.end())
    throw SchemaError("favorable level '" + label.favorable_level +
                      "' is not a level of the label column");

  const ColumnMeta* prot = find_column(protected_attr.column);
  if (!prot) throw SchemaError("protected column '" + protected_attr.column + "' not in schema");
  if (prot->kind != ColumnKind::Categorical)
    throw SchemaError("protected column must be categorical");
  if (protected_attr.column == label.column)
    throw SchemaError("protected column must differ from the label column");
  if (protected_attr.group1_levels.empty())
    throw SchemaError("group-1 level set is empty");
  if (protected_attr.group1_levels.size() >= prot->levels.size())
    throw SchemaError("group-1 level set must be a proper subset of the protected levels");
  for (const auto& g : protected_attr.group1_levels)
    if (std::find(prot->levels.begin(), prot->levels.end(), g) == prot->levels.end())
      throw SchemaError("group-1 level '" + g + "' is not a level of the protected column");
}

json DatasetSchema::to_json() const {
  json cols = json::array();
  for (const auto& c : columns) {
    json jc{{"name", c.name},
            {"kind", c.kind == ColumnKind::Numeric ? "numeric" : "categorical"}};
    if (c.kind == ColumnKind::Categorical) jc["levels"] = c.levels;
    cols.push_back(jc);
  }
  return json{{"columns", cols},
              {"label", {{"column", label.column}, {"favorable_level", label.favorable_level}}},
              {"protected",
               {{"column", protected_attr.column},
                {"group1_levels", protected_attr.group1_levels}}}};
}

DatasetSchema DatasetSchema::from_json(const json& j) {
  DatasetSchema s;
  for (const auto& jc : j.at("columns")) {
    ColumnMeta c;
    c.name = jc.at("name").get<std::string>();
    const std::string kind = jc.at("kind").get<std::string>();
    if (kind == "numeric") {
      c.kind = ColumnKind::Numeric;
    } else if (kind == "categorical") {
      c.kind = ColumnKind::Categorical;
      c.levels = jc.at("levels").get<std::vector<std::string>>();
    } else {
      throw SchemaError("unknown column kind '" + kind + "'");
    }
    s.columns.push_back(std::move(c));
  }
  s.label.column = j.at("label").at("column").get<std::string>();
  s.label.favorable_level = j.at("label").at("favorable_level").get<std::string>();
  s.protected_attr.column = j.at("protected").at("column").get<std::string>();
  s.protected_attr.group1_levels =
      j.at("protected").at("group1_levels").get<std::vector<std::string>>();
  s.validate();
  return s;
}

DatasetSchema DatasetSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FileFormatError("schema file " + path + ": " + e.what());
  }
  return from_json(j);
}

void DatasetSchema::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write schema file: " + path);
  out << to_json().dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// TabularDataset invariants
// ---------------------------------------------------------------------------

void TabularDataset::validate() const {
  const Eigen::Index n = rows.rows();
  if (n < 1) throw Error("dataset '" + name + "' is empty");
  if (labels.size() != n || groups.size() != n)
    throw Error("dataset '" + name + "': rows, labels and groups differ in length");
  if (static_cast<Eigen::Index>(column_meta.size()) != rows.cols())
    throw Error("dataset '" + name + "': column metadata does not match the feature matrix");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw Error("dataset '" + name + "': label outside {0,1}");
    if (groups[i] != 0 && groups[i] != 1)
      throw Error("dataset '" + name + "': protected value outside {0,1}");
  }
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    const auto& meta = column_meta[static_cast<size_t>(c)];
    if (meta.kind != ColumnKind::Categorical) continue;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = rows(i, c);
      if (v != std::floor(v) || v < 0 || v >= static_cast<double>(meta.levels.size()))
        throw Error("dataset '" + name + "': invalid level code in column '" + meta.name + "'");
    }
  }
}

json TabularDataset::meta_to_json() const {
  json cols = json::array();
  for (const auto& c : column_meta) {
    json jc{{"name", c.name},
            {"kind", c.kind == ColumnKind::Numeric ? "numeric" : "categorical"}};
    if (c.kind == ColumnKind::Categorical) jc["levels"] = c.levels;
    cols.push_back(jc);
  }
  json j{{"name", name},
         {"release", release},
         {"protected_attribute", protected_attribute},
         {"n_rows", n_rows()},
         {"columns", cols},
         {"degenerate_warning", degenerate_warning}};
  if (synth_spec) j["synth_spec"] = synth_spec_to_json(*synth_spec);
  return j;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

// RFC-4180-ish field splitting: double quotes wrap fields, "" escapes a quote.
std::vector<std::string> split_csv_line(const std::string& line, size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"' && cur.empty()) {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (ch == '\r' && i + 1 == line.size()) {
      // tolerate CRLF
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted)
    throw ParseError("line " + std::to_string(line_no) + ": unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

int level_index(const ColumnMeta& col, const std::string& value) {
  for (size_t i = 0; i < col.levels.size(); ++i)
    if (col.levels[i] == value) return static_cast<int>(i);
  return -1;
}

}  // namespace

TabularDataset load_csv(const std::string& path, const DatasetSchema& schema) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  const auto header = split_csv_line(line, 1);

  // Map each schema column to its position in the file.
  std::vector<int> file_pos(schema.columns.size(), -1);
  for (size_t s = 0; s < schema.columns.size(); ++s) {
    for (size_t h = 0; h < header.size(); ++h)
      if (header[h] == schema.columns[s].name) file_pos[s] = static_cast<int>(h);
    if (file_pos[s] < 0)
      throw SchemaError(path + ": missing column '" + schema.columns[s].name + "'");
  }

  const ColumnMeta& label_col = *schema.find_column(schema.label.column);
  const ColumnMeta& prot_col = *schema.find_column(schema.protected_attr.column);

  std::vector<size_t> feature_cols;  // schema indices, label excluded
  for (size_t s = 0; s < schema.columns.size(); ++s)
    if (schema.columns[s].name != schema.label.column) feature_cols.push_back(s);

  std::vector<std::vector<double>> feat_rows;
  std::vector<int> labels, groups;
  size_t missing_rows = 0;
  std::string first_missing;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    const auto fields = split_csv_line(line, line_no);
    if (fields.size() != header.size())
      throw ParseError(path + ": line " + std::to_string(line_no) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(header.size()));

    bool missing = false;
    for (size_t s = 0; s < schema.columns.size() && !missing; ++s) {
      if (fields[static_cast<size_t>(file_pos[s])].empty()) {
        missing = true;
        if (missing_rows == 0)
          first_missing = "line " + std::to_string(line_no) + ", column '" +
                          schema.columns[s].name + "'";
      }
    }
    if (missing) {
      ++missing_rows;
      continue;
    }

    std::vector<double> row(feature_cols.size());
    for (size_t f = 0; f < feature_cols.size(); ++f) {
      const auto& col = schema.columns[feature_cols[f]];
      const std::string& cell = fields[static_cast<size_t>(file_pos[feature_cols[f]])];
      if (col.kind == ColumnKind::Numeric) {
        try {
          size_t consumed = 0;
          row[f] = std::stod(cell, &consumed);
          if (consumed != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
          throw ParseError(path + ": line " + std::to_string(line_no) + ", column '" +
                           col.name + "': cannot parse '" + cell + "' as a number");
        }
      } else {
        const int idx = level_index(col, cell);
        if (idx < 0)
          throw ParseError(path + ": line " + std::to_string(line_no) + ", column '" +
                           col.name + "': unknown level '" + cell + "'");
        row[f] = static_cast<double>(idx);
      }
    }

    const std::string& label_cell = fields[static_cast<size_t>(
        file_pos[static_cast<size_t>(&label_col - schema.columns.data())])];
    if (level_index(label_col, label_cell) < 0)
      throw ParseError(path + ": line " + std::to_string(line_no) + ", column '" +
                       label_col.name + "': unknown level '" + label_cell + "'");
    labels.push_back(label_cell == schema.label.favorable_level ? 1 : 0);

    const std::string& prot_cell = fields[static_cast<size_t>(
        file_pos[static_cast<size_t>(&prot_col - schema.columns.data())])];
    const bool g1 = std::find(schema.protected_attr.group1_levels.begin(),
                              schema.protected_attr.group1_levels.end(),
                              prot_cell) != schema.protected_attr.group1_levels.end();
    groups.push_back(g1 ? 1 : 0);

    feat_rows.push_back(std::move(row));
  }

  if (missing_rows > 0)
    throw SchemaError(path + ": " + std::to_string(missing_rows) +
                      " row(s) with missing values (first at " + first_missing +
                      "); missing values are not supported");
  if (feat_rows.empty()) throw ParseError(path + ": no data rows");

  TabularDataset ds;
  ds.name = path;
  ds.release = "file";
  ds.protected_attribute = schema.protected_attr.column;
  ds.rows.resize(static_cast<Eigen::Index>(feat_rows.size()),
                 static_cast<Eigen::Index>(feature_cols.size()));
  for (size_t i = 0; i < feat_rows.size(); ++i)
    for (size_t f = 0; f < feature_cols.size(); ++f)
      ds.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = feat_rows[i][f];
  ds.labels = Eigen::Map<Eigen::VectorXi>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  ds.groups = Eigen::Map<Eigen::VectorXi>(groups.data(), static_cast<Eigen::Index>(groups.size()));
  for (size_t f = 0; f < feature_cols.size(); ++f)
    ds.column_meta.push_back(schema.columns[feature_cols[f]]);
  ds.validate();
  return ds;
}

void save_csv(const TabularDataset& ds, const DatasetSchema& schema, const std::string& path) {
  schema.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write CSV file: " + path);

  // Feature index per schema column; -1 marks the label column.
  std::vector<int> feat_idx(schema.columns.size(), -1);
  {
    int f = 0;
    for (size_t s = 0; s < schema.columns.size(); ++s)
      if (schema.columns[s].name != schema.label.column) feat_idx[s] = f++;
    if (f != ds.n_features())
      throw SchemaError("schema does not match the dataset's feature columns");
  }
  const ColumnMeta& label_col = *schema.find_column(schema.label.column);
  std::string unfavorable;
  for (const auto& lv : label_col.levels)
    if (lv != schema.label.favorable_level) {
      unfavorable = lv;
      break;
    }

  for (size_t s = 0; s < schema.columns.size(); ++s)
    out << (s ? "," : "") << csv_escape(schema.columns[s].name);
  out << "\n";

  for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
    for (size_t s = 0; s < schema.columns.size(); ++s) {
      if (s) out << ",";
      if (feat_idx[s] < 0) {
        out << csv_escape(ds.labels[i] ? schema.label.favorable_level : unfavorable);
        continue;
      }
      const auto& col = schema.columns[s];
      const double v = ds.rows(i, feat_idx[s]);
      if (col.kind == ColumnKind::Numeric)
        out << double_to_string(v);
      else
        out << csv_escape(col.levels[static_cast<size_t>(v)]);
    }
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// split
// ---------------------------------------------------------------------------

namespace {

TabularDataset take_rows(const TabularDataset& ds, const std::vector<int>& idx) {
  TabularDataset out;
  out.name = ds.name;
  out.release = ds.release;
  out.column_meta = ds.column_meta;
  out.protected_attribute = ds.protected_attribute;
  out.synth_spec = ds.synth_spec;
  out.degenerate_warning = ds.degenerate_warning;
  out.rows.resize(static_cast<Eigen::Index>(idx.size()), ds.rows.cols());
  out.labels.resize(static_cast<Eigen::Index>(idx.size()));
  out.groups.resize(static_cast<Eigen::Index>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) {
    out.rows.row(static_cast<Eigen::Index>(i)) = ds.rows.row(idx[i]);
    out.labels[static_cast<Eigen::Index>(i)] = ds.labels[idx[i]];
    out.groups[static_cast<Eigen::Index>(i)] = ds.groups[idx[i]];
  }
  return out;
}

}  // namespace

std::pair<TabularDataset, TabularDataset> split(const TabularDataset& ds, double train_fraction,
                                                uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ArgumentError("train fraction must lie in (0,1)");
  ds.validate();
  const int n = static_cast<int>(ds.n_rows());
  const int n_train = static_cast<int>(
      std::ceil(static_cast<double>(n) * train_fraction));
  Rng rng(derive_seed(seed, "dataset-split"));
  std::vector<int> idx = rng.permutation(n);
  std::vector<int> train_idx(idx.begin(), idx.begin() + n_train);
  std::vector<int> test_idx(idx.begin() + n_train, idx.end());
  return {take_rows(ds, train_idx), take_rows(ds, test_idx)};
}

// ---------------------------------------------------------------------------
// Synthetic generation
// ---------------------------------------------------------------------------

namespace {

struct SynthStructure {
  std::vector<double> num_mean;       // base mean per numeric column
  std::vector<double> label_coef;     // label signal per numeric column
  std::vector<double> group_coef;     // group signal per numeric column
  std::vector<int> cat_levels;        // level count per categorical column
  std::vector<double> cat_tilt;       // label tilt per categorical column
};

// Structure derives from the family seed only, so drifted variants share
// columns, levels and signal directions with their base dataset.
SynthStructure draw_structure(const SynthSpec& spec) {
  SynthStructure st;
  Rng rng(derive_seed(spec.seed, "synth-structure"));
  for (int j = 0; j < spec.n_numeric; ++j) {
    st.num_mean.push_back(rng.uniform(-1.0, 1.0));
    const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
    st.label_coef.push_back(sign * rng.uniform(0.5, 1.5));
    st.group_coef.push_back(rng.uniform(-0.5, 0.5));
  }
  for (int j = 0; j < spec.n_categorical; ++j) {
    st.cat_levels.push_back(2 + j % 3);
    st.cat_tilt.push_back(rng.uniform(0.2, 0.5));
  }
  return st;
}

constexpr double kDriftMeanStep = 0.75;  // numeric mean offset per unit drift, in noise stds

}  // namespace

TabularDataset synth_generate(const SynthSpec& spec) {
  spec.validate();
  const SynthStructure st = draw_structure(spec);

  double rate_g0 = spec.base_rate_g0;
  double rate_g1 = spec.base_rate_g1;
  std::vector<double> mean_offset(static_cast<size_t>(spec.n_numeric), 0.0);
  if (spec.drift > 0.0) {
    Rng drng(derive_seed(spec.drift_seed, "synth-drift"));
    for (int j = 0; j < spec.n_numeric; ++j)
      mean_offset[static_cast<size_t>(j)] =
          spec.drift * kDriftMeanStep * (drng.bernoulli(0.5) ? 1.0 : -1.0);
    // group base rates converge toward their midpoint, eroding whatever
    // group-outcome association the base release carried
    const double mid = 0.5 * (rate_g0 + rate_g1);
    rate_g0 = std::clamp(rate_g0 + spec.drift * (mid - rate_g0), 0.02, 0.98);
    rate_g1 = std::clamp(rate_g1 + spec.drift * (mid - rate_g1), 0.02, 0.98);
  }

  const int n = spec.n_rows;
  const int d = spec.n_numeric + spec.n_categorical + 1;  // + protected column
  TabularDataset ds;
  ds.name = "synth";
  ds.release = "base";
  ds.synth_spec = spec;
  ds.protected_attribute = "group";
  ds.rows.resize(n, d);
  ds.labels.resize(n);
  ds.groups.resize(n);

  Rng rng(derive_seed(spec.sample_seed.value_or(spec.seed), "synth-rows"));
  const double s = spec.signal_strength;
  for (int i = 0; i < n; ++i) {
    const int g = rng.bernoulli(spec.group1_fraction) ? 1 : 0;
    const int y = rng.bernoulli(g ? rate_g1 : rate_g0) ? 1 : 0;
    ds.groups[i] = g;
    ds.labels[i] = y;
    int c = 0;
    for (int j = 0; j < spec.n_numeric; ++j, ++c) {
      ds.rows(i, c) = st.num_mean[static_cast<size_t>(j)] +
                      mean_offset[static_cast<size_t>(j)] +
                      s * st.label_coef[static_cast<size_t>(j)] * (y - 0.5) +
                      s * st.group_coef[static_cast<size_t>(j)] * (g - 0.5) + rng.normal();
    }
    for (int j = 0; j < spec.n_categorical; ++j, ++c) {
      const int n_levels = st.cat_levels[static_cast<size_t>(j)];
      int level;
      if (rng.uniform() < s * st.cat_tilt[static_cast<size_t>(j)])
        level = y;  // label-aligned level
      else
        level = static_cast<int>(rng.uniform_int(n_levels));
      ds.rows(i, c) = static_cast<double>(level);
    }
    ds.rows(i, c) = static_cast<double>(g);
  }

  for (int j = 0; j < spec.n_numeric; ++j)
    ds.column_meta.push_back({"num" + std::to_string(j), ColumnKind::Numeric, {}});
  for (int j = 0; j < spec.n_categorical; ++j) {
    ColumnMeta c{"cat" + std::to_string(j), ColumnKind::Categorical, {}};
    for (int l = 0; l < st.cat_levels[static_cast<size_t>(j)]; ++l)
      c.levels.push_back("l" + std::to_string(l));
    ds.column_meta.push_back(std::move(c));
  }
  ds.column_meta.push_back({"group", ColumnKind::Categorical, {"g0", "g1"}});

  const double ef = static_cast<double>(n);
  ds.degenerate_warning = ef * spec.group1_fraction < 1.0 || ef * (1.0 - spec.group1_fraction) < 1.0;
  if (spec.drift > 0.0) ds.release = "drift-" + double_to_string(spec.drift);
  ds.validate();
  return ds;
}

TabularDataset synth_shift(const TabularDataset& ds, double drift, uint64_t seed) {
  if (!ds.synth_spec)
    throw ArgumentError("synth_shift: dataset '" + ds.name +
                        "' carries no generation spec; only generated datasets can be shifted");
  if (drift < 0.0) throw ArgumentError("synth_shift: drift must be >= 0");
  SynthSpec spec = *ds.synth_spec;
  spec.drift = drift;
  spec.drift_seed = seed;
  spec.sample_seed = derive_seed(seed, "synth-resample");
  TabularDataset out = synth_generate(spec);
  out.name = ds.name;
  out.release = "drift-" + double_to_string(drift);
  return out;
}

}  // namespace fairhp
