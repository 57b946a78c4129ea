#include "fairhp/surrogates.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

namespace fairhp {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

Eigen::VectorXd encode(const HPConfig& config, const HPSpace& space) {
  space.validate_config(config);
  Eigen::VectorXd out(static_cast<Eigen::Index>(space.dims.size()));
  for (size_t i = 0; i < space.dims.size(); ++i) {
    const auto& d = space.dims[i];
    if (d.kind == DimKind::Numeric) {
      const double v = std::get<double>(config.values[i]);
      out[static_cast<Eigen::Index>(i)] = d.scale == Scale::Log ? std::log(v) : v;
    } else {
      out[static_cast<Eigen::Index>(i)] = static_cast<double>(std::get<int>(config.values[i]));
    }
  }
  return out;
}

Eigen::MatrixXd encode_batch(const std::vector<HPConfig>& configs, const HPSpace& space) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(configs.size()),
                      static_cast<Eigen::Index>(space.dims.size()));
  for (size_t i = 0; i < configs.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = encode(configs[i], space).transpose();
  return out;
}

std::string space_tag(const HPSpace& space) {
  return to_string(space.algorithm) + ":" + space.version;
}

// ---------------------------------------------------------------------------
// Kind ids
// ---------------------------------------------------------------------------

SurrogateKind surrogate_kind_from_string(const std::string& id) {
  if (id == "baseline") return SurrogateKind::Baseline;
  if (id == "mlp") return SurrogateKind::Mlp;
  if (id == "svr") return SurrogateKind::Svr;
  if (id == "forest") return SurrogateKind::Forest;
  if (id == "gbt") return SurrogateKind::Gbt;
  throw ArgumentError("unknown surrogate kind '" + id + "'");
}

std::string to_string(SurrogateKind k) {
  switch (k) {
    case SurrogateKind::Baseline: return "baseline";
    case SurrogateKind::Mlp: return "mlp";
    case SurrogateKind::Svr: return "svr";
    case SurrogateKind::Forest: return "forest";
    case SurrogateKind::Gbt: return "gbt";
  }
  throw ArgumentError("invalid surrogate kind enum value");
}

const std::vector<SurrogateKind>& all_surrogate_kinds() {
  static const std::vector<SurrogateKind> all = {SurrogateKind::Baseline, SurrogateKind::Mlp,
                                                 SurrogateKind::Svr, SurrogateKind::Forest,
                                                 SurrogateKind::Gbt};
  return all;
}

// ---------------------------------------------------------------------------
// RegressionTree
// ---------------------------------------------------------------------------

double RegressionTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int idx = 0;
  while (nodes[static_cast<size_t>(idx)].feature >= 0) {
    const auto& nd = nodes[static_cast<size_t>(idx)];
    idx = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<size_t>(idx)].value;
}

Eigen::VectorXd RegressionTree::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = predict_row(x.row(i));
  return out;
}

namespace {

class RegressionTreeBuilder {
 public:
  RegressionTreeBuilder(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int max_depth,
                        int min_samples_leaf)
      : x_(x), y_(y), max_depth_(max_depth), min_leaf_(min_samples_leaf) {
    idx_.resize(static_cast<size_t>(x.rows()));
    std::iota(idx_.begin(), idx_.end(), 0);
  }

  RegressionTree build() {
    RegressionTree tree;
    grow(tree, 0, static_cast<int>(idx_.size()), 0);
    return tree;
  }

 private:
  struct Split {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double sse = 0.0;
  };

  Split best_split(int begin, int end) {
    const int n = end - begin;
    Split best;
    for (int f = 0; f < static_cast<int>(x_.cols()); ++f) {
      sorted_.assign(idx_.begin() + begin, idx_.begin() + end);
      std::sort(sorted_.begin(), sorted_.end(), [&](int a, int b) {
        const double va = x_(a, f), vb = x_(b, f);
        return va < vb || (va == vb && a < b);
      });
      double total = 0.0, total_sq = 0.0;
      for (int r : sorted_) {
        total += y_[r];
        total_sq += y_[r] * y_[r];
      }
      double left = 0.0, left_sq = 0.0;
      for (int i = 0; i + 1 < n; ++i) {
        const int r = sorted_[static_cast<size_t>(i)];
        left += y_[r];
        left_sq += y_[r] * y_[r];
        const double v = x_(r, f);
        const double vn = x_(sorted_[static_cast<size_t>(i + 1)], f);
        if (v == vn) continue;
        const int nl = i + 1, nr = n - nl;
        if (nl < min_leaf_ || nr < min_leaf_) continue;
        const double sse_l = left_sq - left * left / nl;
        const double right = total - left;
        const double sse_r = (total_sq - left_sq) - right * right / nr;
        const double sse = sse_l + sse_r;
        if (!best.found || sse < best.sse) best = {true, f, v + 0.5 * (vn - v), sse};
      }
    }
    return best;
  }

  int grow(RegressionTree& tree, int begin, int end, int depth) {
    const int n = end - begin;
    double sum = 0.0;
    double lo = y_[idx_[static_cast<size_t>(begin)]], hi = lo;
    for (int i = begin; i < end; ++i) {
      const double v = y_[idx_[static_cast<size_t>(i)]];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const int node_idx = static_cast<int>(tree.nodes.size());
    RegressionTree::Node nd;
    nd.value = sum / n;
    tree.nodes.push_back(nd);

    if (depth >= max_depth_ || n < 2 * min_leaf_ || n < 2 || lo == hi) return node_idx;
    const Split split = best_split(begin, end);
    if (!split.found) return node_idx;

    const int mid = static_cast<int>(
        std::partition(idx_.begin() + begin, idx_.begin() + end,
                       [&](int r) { return x_(r, split.feature) <= split.threshold; }) -
        idx_.begin());
    if (mid == begin || mid == end) return node_idx;

    tree.nodes[static_cast<size_t>(node_idx)].feature = split.feature;
    tree.nodes[static_cast<size_t>(node_idx)].threshold = split.threshold;
    const int left = grow(tree, begin, mid, depth + 1);
    const int right = grow(tree, mid, end, depth + 1);
    tree.nodes[static_cast<size_t>(node_idx)].left = left;
    tree.nodes[static_cast<size_t>(node_idx)].right = right;
    return node_idx;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  int max_depth_;
  int min_leaf_;
  std::vector<int> idx_;
  std::vector<int> sorted_;
};

}  // namespace

RegressionTree fit_regression_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   int max_depth, int min_samples_leaf) {
  if (x.rows() == 0) throw ArgumentError("regression tree: empty training set");
  RegressionTreeBuilder builder(x, y, max_depth, min_samples_leaf);
  return builder.build();
}

// ---------------------------------------------------------------------------
// MlpModel
// ---------------------------------------------------------------------------

MlpModel MlpModel::initialize(int in_dim, int hidden_layers, int hidden_units, Rng& rng) {
  MlpModel m;
  std::vector<int> sizes;
  sizes.push_back(in_dim);
  for (int l = 0; l < hidden_layers; ++l) sizes.push_back(hidden_units);
  sizes.push_back(1);
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Eigen::MatrixXd w(out, in);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
    Eigen::VectorXd b(out);
    for (Eigen::Index r = 0; r < out; ++r) b[r] = rng.uniform(-bound, bound);
    m.weights.push_back(std::move(w));
    m.biases.push_back(std::move(b));
  }
  return m;
}

namespace {

// Forward pass keeping pre-activations for backprop. Columns are samples.
struct MlpTrace {
  std::vector<Eigen::MatrixXd> activations;  // a_0 = input, ..., a_L = output
  std::vector<Eigen::MatrixXd> pre;          // z_1 .. z_L
};

MlpTrace mlp_forward(const MlpModel& m, const Eigen::MatrixXd& x_cols) {
  MlpTrace t;
  t.activations.push_back(x_cols);
  const size_t layers = m.weights.size();
  for (size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = (m.weights[l] * t.activations.back()).colwise() + m.biases[l];
    t.pre.push_back(z);
    if (l + 1 < layers)
      t.activations.push_back(z.cwiseMax(0.0));
    else
      t.activations.push_back(z);
  }
  return t;
}

}  // namespace

Eigen::VectorXd MlpModel::predict(const Eigen::MatrixXd& x) const {
  const MlpTrace t = mlp_forward(*this, x.transpose());
  return t.activations.back().row(0).transpose();
}

double MlpModel::mse(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) const {
  const Eigen::VectorXd pred = predict(x);
  return (pred - y).squaredNorm() / static_cast<double>(y.size());
}

Eigen::VectorXd MlpModel::mse_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) const {
  const Eigen::Index b = x.rows();
  const MlpTrace t = mlp_forward(*this, x.transpose());
  const size_t layers = weights.size();

  std::vector<Eigen::MatrixXd> grad_w(layers);
  std::vector<Eigen::VectorXd> grad_b(layers);
  // dL/dz at the linear head
  Eigen::MatrixXd delta =
      2.0 / static_cast<double>(b) * (t.activations.back() - y.transpose());
  for (size_t l = layers; l-- > 0;) {
    grad_w[l] = delta * t.activations[l].transpose();
    grad_b[l] = delta.rowwise().sum();
    if (l > 0) {
      delta = weights[l].transpose() * delta;
      delta = delta.cwiseProduct((t.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }

  Eigen::VectorXd flat(parameter_count());
  Eigen::Index pos = 0;
  for (size_t l = 0; l < layers; ++l) {
    for (Eigen::Index r = 0; r < grad_w[l].rows(); ++r)
      for (Eigen::Index c = 0; c < grad_w[l].cols(); ++c) flat[pos++] = grad_w[l](r, c);
    for (Eigen::Index r = 0; r < grad_b[l].size(); ++r) flat[pos++] = grad_b[l][r];
  }
  return flat;
}

Eigen::Index MlpModel::parameter_count() const {
  Eigen::Index n = 0;
  for (size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

Eigen::VectorXd MlpModel::flat_parameters() const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index pos = 0;
  for (size_t l = 0; l < weights.size(); ++l) {
    for (Eigen::Index r = 0; r < weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < weights[l].cols(); ++c) flat[pos++] = weights[l](r, c);
    for (Eigen::Index r = 0; r < biases[l].size(); ++r) flat[pos++] = biases[l][r];
  }
  return flat;
}

void MlpModel::set_flat_parameters(const Eigen::VectorXd& theta) {
  Eigen::Index pos = 0;
  for (size_t l = 0; l < weights.size(); ++l) {
    for (Eigen::Index r = 0; r < weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < weights[l].cols(); ++c) weights[l](r, c) = theta[pos++];
    for (Eigen::Index r = 0; r < biases[l].size(); ++r) biases[l][r] = theta[pos++];
  }
}

namespace {

MlpModel fit_mlp(const Eigen::MatrixXd& xs, const Eigen::VectorXd& y, uint64_t seed,
                 const SurrogateOptions& o) {
  const Eigen::Index n = xs.rows();
  Rng rng(derive_seed(seed, "mlp"));
  MlpModel m = MlpModel::initialize(static_cast<int>(xs.cols()), o.mlp_hidden_layers,
                                    o.mlp_hidden_units, rng);

  Eigen::VectorXd adam_m = Eigen::VectorXd::Zero(m.parameter_count());
  Eigen::VectorXd adam_v = Eigen::VectorXd::Zero(m.parameter_count());
  int step = 0;
  for (int epoch = 0; epoch < o.mlp_epochs; ++epoch) {
    std::vector<int> perm = rng.permutation(static_cast<int>(n));
    for (Eigen::Index start = 0; start < n; start += o.mlp_batch_size) {
      const Eigen::Index count = std::min<Eigen::Index>(o.mlp_batch_size, n - start);
      Eigen::MatrixXd bx(count, xs.cols());
      Eigen::VectorXd by(count);
      for (Eigen::Index i = 0; i < count; ++i) {
        bx.row(i) = xs.row(perm[static_cast<size_t>(start + i)]);
        by[i] = y[perm[static_cast<size_t>(start + i)]];
      }
      const Eigen::VectorXd grad = m.mse_gradient(bx, by);
      ++step;
      adam_m = o.adam_beta1 * adam_m + (1.0 - o.adam_beta1) * grad;
      adam_v = o.adam_beta2 * adam_v.array().matrix() +
               (1.0 - o.adam_beta2) * grad.array().square().matrix();
      const double bc1 = 1.0 - std::pow(o.adam_beta1, step);
      const double bc2 = 1.0 - std::pow(o.adam_beta2, step);
      Eigen::VectorXd theta = m.flat_parameters();
      theta.array() -= o.mlp_learning_rate * (adam_m.array() / bc1) /
                       ((adam_v.array() / bc2).sqrt() + o.adam_epsilon);
      m.set_flat_parameters(theta);
    }
    const double loss = m.mse(xs, y);
    if (!std::isfinite(loss))
      throw TrainingError("mlp: loss diverged to a non-finite value at epoch " +
                          std::to_string(epoch + 1));
  }
  return m;
}

// ---------------------------------------------------------------------------
// SvrModel fitting: exact coordinate descent on the box-constrained dual
//   min 1/2 b'Kb - y'b + eps*|b|_1,  b in [-C, C]^n
// with the intercept absorbed by centering targets.
// ---------------------------------------------------------------------------

double kkt_violation(double beta, double g, double eps, double c) {
  if (beta == 0.0) return std::max(0.0, std::abs(g) - eps);
  if (beta >= c) return std::max(0.0, g + eps);
  if (beta <= -c) return std::max(0.0, eps - g);
  return beta > 0.0 ? std::abs(g + eps) : std::abs(g - eps);
}

SvrModel fit_svr(const Eigen::MatrixXd& xs, const Eigen::VectorXd& y,
                 const SurrogateOptions& o) {
  const Eigen::Index n = xs.rows();
  SvrModel m;
  m.support = xs;
  m.y_mean = y.mean();
  const Eigen::VectorXd yc = y.array() - m.y_mean;

  const double var = (xs.array() - xs.mean()).square().sum() /
                     std::max<double>(1.0, static_cast<double>(xs.size()));
  m.gamma = var > 0.0 ? 1.0 / (static_cast<double>(xs.cols()) * var)
                      : 1.0 / static_cast<double>(xs.cols());

  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d2 = (xs.row(i) - xs.row(j)).squaredNorm();
      k(i, j) = k(j, i) = std::exp(-m.gamma * d2);
    }
  }

  m.beta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);  // K * beta
  const double c = o.svr_c, eps = o.svr_epsilon;
  m.hit_iteration_cap = true;
  for (int sweep = 0; sweep < o.svr_max_iterations; ++sweep) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double q = f[i] - k(i, i) * m.beta[i] - yc[i];
      double next;
      if (q > eps)
        next = -(q - eps) / k(i, i);
      else if (q < -eps)
        next = -(q + eps) / k(i, i);
      else
        next = 0.0;
      next = std::clamp(next, -c, c);
      const double delta = next - m.beta[i];
      if (delta != 0.0) {
        f += delta * k.col(i);
        m.beta[i] = next;
      }
    }
    m.sweeps = sweep + 1;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      worst = std::max(worst, kkt_violation(m.beta[i], f[i] - yc[i], eps, c));
    m.max_kkt_violation = worst;
    if (worst <= o.svr_tol) {
      m.hit_iteration_cap = false;
      break;
    }
  }
  return m;
}

}  // namespace

Eigen::VectorXd SvrModel::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < support.rows(); ++j) {
      if (beta[j] == 0.0) continue;
      acc += beta[j] * std::exp(-gamma * (x.row(i) - support.row(j)).squaredNorm());
    }
    out[i] = acc + y_mean;
  }
  return out;
}

Eigen::VectorXd ForestModel::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(x.rows());
  for (const auto& tree : trees) acc += tree.predict(x);
  return acc / static_cast<double>(trees.size());
}

Eigen::VectorXd GbtModel::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd acc = Eigen::VectorXd::Constant(x.rows(), init);
  for (const auto& tree : trees) acc += learning_rate * tree.predict(x);
  return acc;
}

// ---------------------------------------------------------------------------
// Standardizer
// ---------------------------------------------------------------------------

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  Standardizer s;
  s.mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - s.mean.transpose();
  s.std = centered.array().square().colwise().mean().sqrt();
  for (Eigen::Index j = 0; j < s.std.size(); ++j)
    if (s.std[j] <= 0.0) s.std[j] = 1.0;
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  return (x.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array();
}

// ---------------------------------------------------------------------------
// Surrogate
// ---------------------------------------------------------------------------

Eigen::VectorXd Surrogate::predict_raw(const Eigen::MatrixXd& encoded) const {
  const Eigen::MatrixXd& input = encoded;
  Eigen::MatrixXd transformed;
  const Eigen::MatrixXd* use = &input;
  if (standardizer) {
    transformed = standardizer->apply(encoded);
    use = &transformed;
  }
  if (const auto* b = std::get_if<BaselineModel>(&model))
    return Eigen::VectorXd::Constant(encoded.rows(), b->mean);
  if (const auto* mlp = std::get_if<MlpModel>(&model)) return mlp->predict(*use);
  if (const auto* svr = std::get_if<SvrModel>(&model)) return svr->predict(*use);
  if (const auto* forest = std::get_if<ForestModel>(&model)) return forest->predict(*use);
  return std::get<GbtModel>(model).predict(*use);
}

Eigen::VectorXd Surrogate::predict(const Eigen::MatrixXd& encoded) const {
  Eigen::VectorXd raw = predict_raw(encoded);
  for (Eigen::Index i = 0; i < raw.size(); ++i) raw[i] = clamp01(raw[i]);
  return raw;
}

Surrogate fit_surrogate(SurrogateKind kind, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const std::string& space, uint64_t seed, const SurrogateOptions& opts) {
  if (x.rows() == 0) throw ArgumentError("fit_surrogate: empty training set");
  if (x.rows() != y.size())
    throw ArgumentError("fit_surrogate: inputs and targets differ in length");
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (!(y[i] >= 0.0 && y[i] <= 1.0))
      throw ArgumentError("fit_surrogate: target " + double_to_string(y[i]) +
                          " outside [0,1] at index " + std::to_string(i));

  Surrogate s;
  s.kind = kind;
  s.space = space;
  switch (kind) {
    case SurrogateKind::Baseline: {
      s.model = BaselineModel{y.mean()};
      break;
    }
    case SurrogateKind::Mlp: {
      s.standardizer = Standardizer::fit(x);
      s.model = fit_mlp(s.standardizer->apply(x), y, seed, opts);
      break;
    }
    case SurrogateKind::Svr: {
      s.standardizer = Standardizer::fit(x);
      s.model = fit_svr(s.standardizer->apply(x), y, opts);
      break;
    }
    case SurrogateKind::Forest: {
      ForestModel forest;
      forest.trees.resize(static_cast<size_t>(opts.forest_trees));
      const Eigen::Index n = x.rows();
      parallel_for(opts.forest_trees, opts.jobs, [&](int t) {
        Rng rng(derive_seed(seed, "forest-tree", static_cast<uint64_t>(t)));
        if (opts.forest_bootstrap) {
          Eigen::MatrixXd bx(n, x.cols());
          Eigen::VectorXd by(n);
          for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index r = rng.uniform_int(n);
            bx.row(i) = x.row(r);
            by[i] = y[r];
          }
          forest.trees[static_cast<size_t>(t)] =
              fit_regression_tree(bx, by, opts.forest_max_depth);
        } else {
          forest.trees[static_cast<size_t>(t)] =
              fit_regression_tree(x, y, opts.forest_max_depth);
        }
      });
      s.model = std::move(forest);
      break;
    }
    case SurrogateKind::Gbt: {
      GbtModel gbt;
      gbt.init = y.mean();
      gbt.learning_rate = opts.gbt_learning_rate;
      Eigen::VectorXd current = Eigen::VectorXd::Constant(y.size(), gbt.init);
      for (int round = 0; round < opts.gbt_rounds; ++round) {
        const Eigen::VectorXd residual = y - current;
        RegressionTree tree = fit_regression_tree(x, residual, opts.gbt_max_depth);
        current += gbt.learning_rate * tree.predict(x);
        gbt.trees.push_back(std::move(tree));
        gbt.train_mse_per_round.push_back((y - current).squaredNorm() /
                                          static_cast<double>(y.size()));
      }
      s.model = std::move(gbt);
      break;
    }
  }
  return s;
}

Eigen::VectorXd predict_configs(const Surrogate& s, const HPSpace& space,
                                const std::vector<HPConfig>& configs) {
  if (space_tag(space) != s.space)
    throw ArgumentError("surrogate was fitted on space '" + s.space +
                        "' but is being applied to '" + space_tag(space) + "'");
  return s.predict(encode_batch(configs, space));
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd mat_from_json(const json& rows) {
  const Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index nc = nr > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
  Eigen::MatrixXd m(nr, nc);
  for (Eigen::Index r = 0; r < nr; ++r)
    for (Eigen::Index c = 0; c < nc; ++c)
      m(r, c) = rows[static_cast<size_t>(r)][static_cast<size_t>(c)].get<double>();
  return m;
}

json tree_to_json(const RegressionTree& t) {
  json nodes = json::array();
  for (const auto& nd : t.nodes)
    nodes.push_back(json{{"f", nd.feature},
                         {"t", nd.threshold},
                         {"l", nd.left},
                         {"r", nd.right},
                         {"v", nd.value}});
  return json{{"nodes", nodes}};
}

RegressionTree tree_from_json(const json& j) {
  RegressionTree t;
  for (const auto& jn : j.at("nodes")) {
    RegressionTree::Node nd;
    nd.feature = jn.at("f").get<int>();
    nd.threshold = jn.at("t").get<double>();
    nd.left = jn.at("l").get<int>();
    nd.right = jn.at("r").get<int>();
    nd.value = jn.at("v").get<double>();
    t.nodes.push_back(nd);
  }
  if (t.nodes.empty()) throw FileFormatError("regression tree without nodes");
  return t;
}

}  // namespace

json Surrogate::to_json() const {
  json j{{"type", "surrogate"}, {"format_version", 1}, {"kind", to_string(kind)},
         {"space", space}};
  if (standardizer)
    j["standardizer"] = json{{"mean", vec_to_json(standardizer->mean)},
                             {"std", vec_to_json(standardizer->std)}};
  json jm;
  if (const auto* b = std::get_if<BaselineModel>(&model)) {
    jm = json{{"mean", b->mean}};
  } else if (const auto* mlp = std::get_if<MlpModel>(&model)) {
    json layers = json::array();
    for (size_t l = 0; l < mlp->weights.size(); ++l)
      layers.push_back(json{{"w", mat_to_json(mlp->weights[l])},
                            {"b", vec_to_json(mlp->biases[l])}});
    jm = json{{"layers", layers}};
  } else if (const auto* svr = std::get_if<SvrModel>(&model)) {
    jm = json{{"support", mat_to_json(svr->support)}, {"beta", vec_to_json(svr->beta)},
              {"gamma", svr->gamma},                  {"y_mean", svr->y_mean},
              {"kkt", svr->max_kkt_violation},        {"hit_cap", svr->hit_iteration_cap},
              {"sweeps", svr->sweeps}};
  } else if (const auto* forest = std::get_if<ForestModel>(&model)) {
    json trees = json::array();
    for (const auto& t : forest->trees) trees.push_back(tree_to_json(t));
    jm = json{{"trees", trees}};
  } else {
    const auto& gbt = std::get<GbtModel>(model);
    json trees = json::array();
    for (const auto& t : gbt.trees) trees.push_back(tree_to_json(t));
    jm = json{{"init", gbt.init},
              {"learning_rate", gbt.learning_rate},
              {"trees", trees},
              {"train_mse", gbt.train_mse_per_round}};
  }
  j["model"] = std::move(jm);
  return j;
}

Surrogate Surrogate::from_json(const json& j) {
  if (j.value("type", "") != "surrogate")
    throw FileFormatError("not a surrogate file");
  if (j.value("format_version", 0) != 1)
    throw FileFormatError("unsupported surrogate format version");
  Surrogate s;
  s.kind = surrogate_kind_from_string(j.at("kind").get<std::string>());
  s.space = j.at("space").get<std::string>();
  if (j.contains("standardizer")) {
    Standardizer st;
    st.mean = vec_from_json(j.at("standardizer").at("mean"));
    st.std = vec_from_json(j.at("standardizer").at("std"));
    s.standardizer = std::move(st);
  }
  const json& jm = j.at("model");
  switch (s.kind) {
    case SurrogateKind::Baseline:
      s.model = BaselineModel{jm.at("mean").get<double>()};
      break;
    case SurrogateKind::Mlp: {
      MlpModel m;
      for (const auto& jl : jm.at("layers")) {
        m.weights.push_back(mat_from_json(jl.at("w")));
        m.biases.push_back(vec_from_json(jl.at("b")));
      }
      s.model = std::move(m);
      break;
    }
    case SurrogateKind::Svr: {
      SvrModel m;
      m.support = mat_from_json(jm.at("support"));
      m.beta = vec_from_json(jm.at("beta"));
      m.gamma = jm.at("gamma").get<double>();
      m.y_mean = jm.at("y_mean").get<double>();
      m.max_kkt_violation = jm.at("kkt").get<double>();
      m.hit_iteration_cap = jm.at("hit_cap").get<bool>();
      m.sweeps = jm.at("sweeps").get<int>();
      s.model = std::move(m);
      break;
    }
    case SurrogateKind::Forest: {
      ForestModel m;
      for (const auto& jt : jm.at("trees")) m.trees.push_back(tree_from_json(jt));
      s.model = std::move(m);
      break;
    }
    case SurrogateKind::Gbt: {
      GbtModel m;
      m.init = jm.at("init").get<double>();
      m.learning_rate = jm.at("learning_rate").get<double>();
      for (const auto& jt : jm.at("trees")) m.trees.push_back(tree_from_json(jt));
      m.train_mse_per_round = jm.at("train_mse").get<std::vector<double>>();
      s.model = std::move(m);
      break;
    }
  }
  return s;
}

void Surrogate::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write surrogate file: " + path);
  out << to_json().dump() << "\n";
}

Surrogate Surrogate::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open surrogate file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FileFormatError("surrogate file " + path + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace fairhp
