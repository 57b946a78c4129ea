#include "fairhp/trainers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fairhp {

// ---------------------------------------------------------------------------
// ClassTree
// ---------------------------------------------------------------------------

int ClassTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int idx = 0;
  while (nodes[static_cast<size_t>(idx)].feature >= 0) {
    const auto& nd = nodes[static_cast<size_t>(idx)];
    idx = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<size_t>(idx)].label;
}

int ClassTree::depth() const {
  int d = 0;
  for (const auto& nd : nodes) d = std::max(d, nd.depth);
  return d;
}

std::vector<int> ClassTree::leaf_sizes() const {
  std::vector<int> sizes;
  for (const auto& nd : nodes)
    if (nd.feature < 0) sizes.push_back(nd.n_samples);
  return sizes;
}

Eigen::VectorXi predict_tree(const ClassTree& tree, const Eigen::MatrixXd& rows) {
  Eigen::VectorXi out(rows.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out[i] = tree.predict_row(rows.row(i));
  return out;
}

// ---------------------------------------------------------------------------
// Decision tree induction
// ---------------------------------------------------------------------------

namespace {

struct TreeParams {
  int max_depth = 64;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  double min_weight_fraction_leaf = 0.0;
  bool use_entropy = false;
  bool random_splitter = false;
  int max_features = 0;  // resolved candidate count per node
};

double impurity(double n1, double n, bool entropy) {
  if (n <= 0.0) return 0.0;
  const double p1 = n1 / n;
  const double p0 = 1.0 - p1;
  if (!entropy) return 1.0 - p0 * p0 - p1 * p1;
  double h = 0.0;
  if (p0 > 0.0) h -= p0 * std::log(p0);
  if (p1 > 0.0) h -= p1 * std::log(p1);
  return h;
}

int resolve_max_features(const std::string& level, int d) {
  if (level == "sqrt") return std::max(1, static_cast<int>(std::sqrt(static_cast<double>(d))));
  if (level == "log2") return std::max(1, static_cast<int>(std::log2(static_cast<double>(d))));
  return d;  // "all"
}

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // child-weighted impurity, lower is better
};

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, const TreeParams& p, Rng& rng)
      : x_(x), y_(y), p_(p), rng_(rng), total_(static_cast<int>(x.rows())) {
    idx_.resize(static_cast<size_t>(total_));
    std::iota(idx_.begin(), idx_.end(), 0);
  }

  ClassTree build() {
    ClassTree tree;
    grow(tree, 0, total_, 0);
    return tree;
  }

 private:
  int count_ones(int begin, int end) const {
    int c = 0;
    for (int i = begin; i < end; ++i) c += y_[idx_[static_cast<size_t>(i)]];
    return c;
  }

  // min_samples_leaf and the weight-fraction floor together give the minimum
  // rows either side of a split must keep.
  int leaf_floor() const {
    const int by_fraction =
        static_cast<int>(std::ceil(p_.min_weight_fraction_leaf * static_cast<double>(total_)));
    return std::max(p_.min_samples_leaf, by_fraction);
  }

  std::vector<int> candidate_features() {
    const int d = static_cast<int>(x_.cols());
    std::vector<int> feats(static_cast<size_t>(d));
    std::iota(feats.begin(), feats.end(), 0);
    if (p_.max_features >= d) return feats;
    // partial Fisher-Yates; first max_features entries are the draw
    for (int i = 0; i < p_.max_features; ++i) {
      const int j = i + static_cast<int>(rng_.uniform_int(d - i));
      std::swap(feats[static_cast<size_t>(i)], feats[static_cast<size_t>(j)]);
    }
    feats.resize(static_cast<size_t>(p_.max_features));
    return feats;
  }

  SplitChoice best_split(int begin, int end) {
    const int n = end - begin;
    const int floor = leaf_floor();
    SplitChoice best;
    for (int f : candidate_features()) {
      if (p_.random_splitter) {
        double lob = x_(idx_[static_cast<size_t>(begin)], f);
        double hib = lob;
        for (int i = begin; i < end; ++i) {
          const double v = x_(idx_[static_cast<size_t>(i)], f);
          lob = std::min(lob, v);
          hib = std::max(hib, v);
        }
        const double thr = rng_.uniform(lob, hib);
        if (!(lob < hib)) continue;
        int nl = 0, nl1 = 0, n1 = 0;
        for (int i = begin; i < end; ++i) {
          const int row = idx_[static_cast<size_t>(i)];
          const bool left = x_(row, f) <= thr;
          n1 += y_[row];
          if (left) {
            ++nl;
            nl1 += y_[row];
          }
        }
        const int nr = n - nl;
        if (nl < floor || nr < floor) continue;
        const double score = (nl * impurity(nl1, nl, p_.use_entropy) +
                              nr * impurity(n1 - nl1, nr, p_.use_entropy)) /
                             static_cast<double>(n);
        if (!best.found || score < best.score) best = {true, f, thr, score};
        continue;
      }

      // exhaustive splitter: sort node rows by feature value, scan boundaries
      sorted_.assign(idx_.begin() + begin, idx_.begin() + end);
      std::sort(sorted_.begin(), sorted_.end(), [&](int a, int b) {
        const double va = x_(a, f), vb = x_(b, f);
        return va < vb || (va == vb && a < b);
      });
      int n1 = 0;
      for (int r : sorted_) n1 += y_[r];
      int nl = 0, nl1 = 0;
      for (int i = 0; i + 1 < n; ++i) {
        const int r = sorted_[static_cast<size_t>(i)];
        ++nl;
        nl1 += y_[r];
        const double v = x_(r, f);
        const double vn = x_(sorted_[static_cast<size_t>(i + 1)], f);
        if (v == vn) continue;
        const int nr = n - nl;
        if (nl < floor || nr < floor) continue;
        const double score = (nl * impurity(nl1, nl, p_.use_entropy) +
                              nr * impurity(n1 - nl1, nr, p_.use_entropy)) /
                             static_cast<double>(n);
        if (!best.found || score < best.score)
          best = {true, f, v + 0.5 * (vn - v), score};
      }
    }
    return best;
  }

  int grow(ClassTree& tree, int begin, int end, int depth) {
    const int n = end - begin;
    const int n1 = count_ones(begin, end);
    const int node_idx = static_cast<int>(tree.nodes.size());
    ClassTreeNode nd;
    nd.n_samples = n;
    nd.depth = depth;
    nd.label = n1 * 2 > n ? 1 : 0;
    tree.nodes.push_back(nd);

    const bool splittable = depth < p_.max_depth && n >= p_.min_samples_split && n1 != 0 &&
                            n1 != n;
    if (!splittable) return node_idx;

    const SplitChoice split = best_split(begin, end);
    if (!split.found) return node_idx;

    const int mid = static_cast<int>(
        std::partition(idx_.begin() + begin, idx_.begin() + end,
                       [&](int r) { return x_(r, split.feature) <= split.threshold; }) -
        idx_.begin());
    if (mid == begin || mid == end) return node_idx;  // degenerate threshold

    tree.nodes[static_cast<size_t>(node_idx)].feature = split.feature;
    tree.nodes[static_cast<size_t>(node_idx)].threshold = split.threshold;
    const int left = grow(tree, begin, mid, depth + 1);
    const int right = grow(tree, mid, end, depth + 1);
    tree.nodes[static_cast<size_t>(node_idx)].left = left;
    tree.nodes[static_cast<size_t>(node_idx)].right = right;
    return node_idx;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXi& y_;
  const TreeParams& p_;
  Rng& rng_;
  int total_;
  std::vector<int> idx_;
  std::vector<int> sorted_;
};

TreeParams tree_params_from(const HPSpace& space, const HPConfig& config, int d) {
  TreeParams p;
  p.max_depth = static_cast<int>(space.numeric(config, "max_depth"));
  p.min_samples_split = static_cast<int>(space.numeric(config, "min_samples_split"));
  p.min_samples_leaf = static_cast<int>(space.numeric(config, "min_samples_leaf"));
  p.min_weight_fraction_leaf = space.numeric(config, "min_weight_fraction_leaf");
  const std::string crit = space.level(config, "criterion");
  p.use_entropy = crit == "entropy" || crit == "log_loss";
  p.max_features = resolve_max_features(space.level(config, "max_features"), d);
  return p;
}

ClassTree train_class_tree(const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                           const TreeParams& params, uint64_t seed) {
  Rng rng(derive_seed(seed, "class-tree"));
  TreeBuilder builder(x, y, params, rng);
  return builder.build();
}

// ---------------------------------------------------------------------------
// Linear trainers (logistic loss / hinge loss)
// ---------------------------------------------------------------------------

struct Standardized {
  Eigen::MatrixXd x;
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
};

Standardized standardize(const Eigen::MatrixXd& x) {
  Standardized s;
  s.mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - s.mean.transpose();
  s.std = (centered.array().square().colwise().mean()).sqrt();
  for (Eigen::Index j = 0; j < s.std.size(); ++j)
    if (s.std[j] <= 0.0) s.std[j] = 1.0;
  s.x = centered.array().rowwise() / s.std.transpose().array();
  return s;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

struct LogisticSettings {
  double tol = 1e-4;
  double inv_c = 1.0;  // 1/C
  double intercept_scaling = 1.0;
  int max_iter = 100;
  double l1_ratio = 0.5;
  std::string penalty = "l2";
  bool fit_intercept = true;
};

LinearModel fit_logistic(const Eigen::MatrixXd& raw_x, const Eigen::VectorXi& y,
                         const LogisticSettings& st, int& iterations, bool& converged) {
  const Eigen::Index n = raw_x.rows();
  Standardized sd = standardize(raw_x);
  Eigen::VectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i) s[i] = y[i] ? 1.0 : -1.0;

  double l1_coef = 0.0, l2_coef = 0.0;
  const double base = st.inv_c / static_cast<double>(n);
  if (st.penalty == "l2") {
    l2_coef = base;
  } else if (st.penalty == "l1") {
    l1_coef = base;
  } else if (st.penalty == "elasticnet") {
    l1_coef = base * st.l1_ratio;
    l2_coef = base * (1.0 - st.l1_ratio);
  }

  const double mean_sq = sd.x.array().square().rowwise().sum().mean();
  const double lip = 0.25 * (mean_sq + st.intercept_scaling * st.intercept_scaling) + l2_coef;
  const double step = 1.0 / std::max(lip, 1e-12);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(sd.x.cols());
  double b = 0.0;
  converged = false;
  iterations = 0;
  for (int t = 0; t < st.max_iter; ++t) {
    ++iterations;
    Eigen::VectorXd z = sd.x * w;
    if (st.fit_intercept) z.array() += st.intercept_scaling * b;
    // d/dz mean log(1+exp(-s z)) = -s * sigmoid(-s z) / n
    Eigen::VectorXd g(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = s[i] * z[i];
      g[i] = -s[i] / (1.0 + std::exp(m));
    }
    g /= static_cast<double>(n);
    Eigen::VectorXd grad_w = sd.x.transpose() * g + l2_coef * w;
    Eigen::VectorXd w_next = w - step * grad_w;
    if (l1_coef > 0.0)
      for (Eigen::Index j = 0; j < w_next.size(); ++j)
        w_next[j] = soft_threshold(w_next[j], step * l1_coef);
    double b_next = b;
    if (st.fit_intercept) b_next = b - step * st.intercept_scaling * g.sum();

    const double delta = std::max((w_next - w).cwiseAbs().maxCoeff(), std::abs(b_next - b));
    w = w_next;
    b = b_next;
    if (delta <= st.tol) {
      converged = true;
      break;
    }
  }

  LinearModel m;
  m.weights = w;
  m.intercept = st.fit_intercept ? b : 0.0;
  m.intercept_scaling = st.intercept_scaling;
  m.feat_mean = sd.mean;
  m.feat_std = sd.std;
  return m;
}

struct HingeSettings {
  double tol = 1e-4;
  double c = 1.0;
  double intercept_scaling = 1.0;
  bool squared = true;
  bool l1_penalty = false;
  bool fit_intercept = true;
  bool balanced = false;
  int max_iter = 500;
};

LinearModel fit_hinge(const Eigen::MatrixXd& raw_x, const Eigen::VectorXi& y,
                      const HingeSettings& st, int& iterations, bool& converged) {
  const Eigen::Index n = raw_x.rows();
  Standardized sd = standardize(raw_x);
  Eigen::VectorXd s(n), omega(n);
  Eigen::Index n1 = 0;
  for (Eigen::Index i = 0; i < n; ++i) n1 += y[i];
  for (Eigen::Index i = 0; i < n; ++i) {
    s[i] = y[i] ? 1.0 : -1.0;
    omega[i] = st.balanced
                   ? static_cast<double>(n) / (2.0 * static_cast<double>(y[i] ? n1 : n - n1))
                   : 1.0;
  }

  const double cn = st.c / static_cast<double>(n);
  auto objective = [&](const Eigen::VectorXd& w, double b) {
    Eigen::VectorXd z = sd.x * w;
    if (st.fit_intercept) z.array() += st.intercept_scaling * b;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = std::max(0.0, 1.0 - s[i] * z[i]);
      loss += omega[i] * (st.squared ? v * v : v);
    }
    const double reg = st.l1_penalty ? w.cwiseAbs().sum() : 0.5 * w.squaredNorm();
    return (reg + st.c * loss) / static_cast<double>(n);
  };

  const double mean_sq = sd.x.array().square().rowwise().sum().mean() +
                         st.intercept_scaling * st.intercept_scaling;
  const double omega_max = omega.maxCoeff();
  const double lip = (1.0 + 2.0 * st.c * omega_max * mean_sq * static_cast<double>(n)) /
                     static_cast<double>(n);
  const double eta0 = 1.0 / std::max(lip, 1e-12);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(sd.x.cols());
  double b = 0.0;
  double prev_obj = objective(w, b);
  int stall = 0;
  converged = false;
  iterations = 0;
  for (int t = 0; t < st.max_iter; ++t) {
    ++iterations;
    const double eta = st.squared ? eta0 : eta0 / std::sqrt(static_cast<double>(t + 1));
    Eigen::VectorXd z = sd.x * w;
    if (st.fit_intercept) z.array() += st.intercept_scaling * b;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = s[i] * z[i];
      if (m >= 1.0) continue;
      g[i] = st.squared ? -2.0 * (1.0 - m) * s[i] * omega[i] : -s[i] * omega[i];
    }
    Eigen::VectorXd grad_w = cn * (sd.x.transpose() * g);
    if (!st.l1_penalty) grad_w += w / static_cast<double>(n);
    Eigen::VectorXd w_next = w - eta * grad_w;
    if (st.l1_penalty)
      for (Eigen::Index j = 0; j < w_next.size(); ++j)
        w_next[j] = soft_threshold(w_next[j], eta / static_cast<double>(n));
    double b_next = b;
    if (st.fit_intercept) b_next = b - eta * cn * st.intercept_scaling * g.sum();

    w = w_next;
    b = b_next;
    const double obj = objective(w, b);
    if (std::abs(prev_obj - obj) <= st.tol * std::max(1.0, std::abs(prev_obj))) {
      if (++stall >= 5) {
        converged = true;
        break;
      }
    } else {
      stall = 0;
    }
    prev_obj = obj;
  }

  LinearModel m;
  m.weights = w;
  m.intercept = st.fit_intercept ? b : 0.0;
  m.intercept_scaling = st.intercept_scaling;
  m.feat_mean = sd.mean;
  m.feat_std = sd.std;
  return m;
}

// ---------------------------------------------------------------------------
// Discriminant analysis
// ---------------------------------------------------------------------------

DiscriminantModel fit_discriminant(const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                                   bool quadratic, double reg, double tol) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  std::array<std::vector<Eigen::Index>, 2> members;
  for (Eigen::Index i = 0; i < n; ++i) members[static_cast<size_t>(y[i])].push_back(i);

  DiscriminantModel m;
  m.quadratic = quadratic;
  std::array<Eigen::MatrixXd, 2> cov;
  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < 2; ++k) {
    const auto& rows = members[static_cast<size_t>(k)];
    const double nk = static_cast<double>(rows.size());
    m.log_prior[static_cast<size_t>(k)] = std::log(nk / static_cast<double>(n));
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
    for (Eigen::Index r : rows) mu += x.row(r).transpose();
    mu /= nk;
    m.mean[static_cast<size_t>(k)] = mu;
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index r : rows) {
      const Eigen::VectorXd diff = x.row(r).transpose() - mu;
      c.noalias() += diff * diff.transpose();
    }
    pooled += c;
    cov[static_cast<size_t>(k)] = c / nk;
  }
  pooled /= static_cast<double>(n);

  auto invert = [&](const Eigen::MatrixXd& c, double& log_det) {
    Eigen::MatrixXd reg_c = c;
    if (reg > 0.0) {
      const double avg_ev = c.trace() / static_cast<double>(d);
      reg_c = (1.0 - reg) * c + reg * avg_ev * Eigen::MatrixXd::Identity(d, d);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reg_c);
    Eigen::VectorXd ev = es.eigenvalues();
    const double max_ev = std::max(ev.maxCoeff(), 1e-12);
    const double floor = std::max(tol * max_ev, 1e-10 * max_ev);
    log_det = 0.0;
    Eigen::VectorXd inv_ev(ev.size());
    for (Eigen::Index j = 0; j < ev.size(); ++j) {
      const double e = std::max(ev[j], floor);
      log_det += std::log(e);
      inv_ev[j] = 1.0 / e;
    }
    return Eigen::MatrixXd(es.eigenvectors() * inv_ev.asDiagonal() *
                           es.eigenvectors().transpose());
  };

  if (quadratic) {
    for (int k = 0; k < 2; ++k)
      m.cov_inv[static_cast<size_t>(k)] =
          invert(cov[static_cast<size_t>(k)], m.log_det[static_cast<size_t>(k)]);
  } else {
    double log_det = 0.0;
    const Eigen::MatrixXd inv = invert(pooled, log_det);
    m.cov_inv[0] = inv;
    m.cov_inv[1] = inv;
    m.log_det[0] = log_det;
    m.log_det[1] = log_det;
  }
  return m;
}

int discriminant_predict_row(const DiscriminantModel& m, const Eigen::RowVectorXd& x) {
  double score[2];
  for (int k = 0; k < 2; ++k) {
    const Eigen::VectorXd diff = x.transpose() - m.mean[static_cast<size_t>(k)];
    score[k] = -0.5 * diff.dot(m.cov_inv[static_cast<size_t>(k)] * diff) -
               0.5 * m.log_det[static_cast<size_t>(k)] + m.log_prior[static_cast<size_t>(k)];
  }
  return score[1] > score[0] ? 1 : 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// LinearModel
// ---------------------------------------------------------------------------

Eigen::VectorXd LinearModel::decision(const Eigen::MatrixXd& rows) const {
  Eigen::MatrixXd z = (rows.rowwise() - feat_mean.transpose()).array().rowwise() /
                      feat_std.transpose().array();
  Eigen::VectorXd out = z * weights;
  out.array() += intercept_scaling * intercept;
  return out;
}

// ---------------------------------------------------------------------------
// train / predict
// ---------------------------------------------------------------------------

TrainedModel train(Algorithm algorithm, const HPConfig& config, const TabularDataset& data,
                   uint64_t seed) {
  data.validate();
  const HPSpace space = hp_space(algorithm);
  space.validate_config(config);

  const Eigen::Index n = data.n_rows();
  Eigen::Index n1 = 0;
  for (Eigen::Index i = 0; i < n; ++i) n1 += data.labels[i];
  if (n1 == 0 || n1 == n)
    throw TrainingError("training data for " + to_string(algorithm) +
                        " contains a single label class");

  TrainedModel model;
  model.algorithm = algorithm;
  model.n_features = data.n_features();
  model.seed = seed;

  switch (algorithm) {
    case Algorithm::DecisionTree: {
      TreeParams p = tree_params_from(space, config, static_cast<int>(data.n_features()));
      p.random_splitter = space.level(config, "splitter") == "random";
      model.params = train_class_tree(data.rows, data.labels, p, seed);
      break;
    }
    case Algorithm::RandomForest: {
      TreeParams p = tree_params_from(space, config, static_cast<int>(data.n_features()));
      const int n_estimators = static_cast<int>(space.numeric(config, "n_estimators"));
      const double max_samples = space.numeric(config, "max_samples");
      ForestClassifier forest;
      forest.trees.resize(static_cast<size_t>(n_estimators));
      for (int t = 0; t < n_estimators; ++t) {
        const uint64_t tree_seed = derive_seed(seed, "rf-tree", static_cast<uint64_t>(t));
        if (max_samples >= 1.0) {
          forest.trees[static_cast<size_t>(t)] =
              train_class_tree(data.rows, data.labels, p, tree_seed);
        } else {
          // subsample without replacement; ceil keeps at least one row
          const int m = std::min<int>(
              static_cast<int>(n),
              std::max(1, static_cast<int>(std::ceil(max_samples * static_cast<double>(n)))));
          Rng rows_rng(derive_seed(tree_seed, "rf-rows"));
          std::vector<int> perm = rows_rng.permutation(static_cast<int>(n));
          Eigen::MatrixXd xs(m, data.n_features());
          Eigen::VectorXi ys(m);
          for (int i = 0; i < m; ++i) {
            xs.row(i) = data.rows.row(perm[static_cast<size_t>(i)]);
            ys[i] = data.labels[perm[static_cast<size_t>(i)]];
          }
          forest.trees[static_cast<size_t>(t)] = train_class_tree(xs, ys, p, tree_seed);
        }
      }
      model.params = std::move(forest);
      break;
    }
    case Algorithm::LogisticRegression: {
      LogisticSettings st;
      st.tol = space.numeric(config, "tol");
      st.inv_c = 1.0 / space.numeric(config, "C");
      st.intercept_scaling = space.numeric(config, "intercept_scaling");
      st.max_iter = static_cast<int>(space.numeric(config, "max_iteration"));
      st.l1_ratio = space.numeric(config, "l1_ratio");
      st.penalty = space.level(config, "penalty");
      st.fit_intercept = space.level(config, "fit_intercept") == "true";
      model.params = fit_logistic(data.rows, data.labels, st, model.iterations, model.converged);
      break;
    }
    case Algorithm::Svm: {
      HingeSettings st;
      st.tol = space.numeric(config, "tol");
      st.c = space.numeric(config, "C");
      st.intercept_scaling = space.numeric(config, "intercept_scaling");
      st.squared = space.level(config, "loss") == "squared_hinge";
      st.l1_penalty = space.level(config, "penalty") == "l1";
      st.fit_intercept = space.level(config, "fit_intercept") == "true";
      st.balanced = space.level(config, "class_weight") == "balanced";
      model.params = fit_hinge(data.rows, data.labels, st, model.iterations, model.converged);
      break;
    }
    case Algorithm::DiscriminantAnalysis: {
      const bool quadratic = space.level(config, "linear(0)_quadratic(1)") == "quadratic";
      const double tol = space.numeric(config, "tol");
      double reg = space.numeric(config, "reg_param");
      // linear mode applies shrinkage only when requested
      if (!quadratic && space.level(config, "Shrinkage_Linear") != "auto") reg = 0.0;
      model.params = fit_discriminant(data.rows, data.labels, quadratic, reg, tol);
      break;
    }
  }
  return model;
}

TrainedModel train(const std::string& algorithm_id, const HPConfig& config,
                   const TabularDataset& data, uint64_t seed) {
  return train(algorithm_from_string(algorithm_id), config, data, seed);
}

Eigen::VectorXi predict(const TrainedModel& model, const Eigen::MatrixXd& rows) {
  if (rows.cols() != model.n_features)
    throw ArgumentError("predict: got " + std::to_string(rows.cols()) + " columns, model wants " +
                        std::to_string(model.n_features));
  const Eigen::Index n = rows.rows();
  Eigen::VectorXi out(n);
  if (n == 0) return out;

  if (const auto* tree = std::get_if<ClassTree>(&model.params)) {
    out = predict_tree(*tree, rows);
  } else if (const auto* linear = std::get_if<LinearModel>(&model.params)) {
    const Eigen::VectorXd z = linear->decision(rows);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = z[i] >= 0.0 ? 1 : 0;
  } else if (const auto* forest = std::get_if<ForestClassifier>(&model.params)) {
    Eigen::VectorXi votes = Eigen::VectorXi::Zero(n);
    for (const auto& tree : forest->trees) votes += predict_tree(tree, rows);
    const int total = static_cast<int>(forest->trees.size());
    for (Eigen::Index i = 0; i < n; ++i) out[i] = 2 * votes[i] > total ? 1 : 0;
  } else {
    const auto& da = std::get<DiscriminantModel>(model.params);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = discriminant_predict_row(da, rows.row(i));
  }
  return out;
}

}  // namespace fairhp
