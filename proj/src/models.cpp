#include "bsel/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "bsel/errors.hpp"
#include "bsel/parallel.hpp"
#include "bsel/rng.hpp"

namespace bsel {

namespace {

constexpr double kSigmoidClamp = 30.0;

double sigmoid(double z) {
  if (z > kSigmoidClamp) z = kSigmoidClamp;
  if (z < -kSigmoidClamp) z = -kSigmoidClamp;
  return 1.0 / (1.0 + std::exp(-z));
}

void check_training_inputs(const Matrix& X, const std::vector<int>& y,
                           const std::vector<std::string>& names) {
  if (X.rows() != y.size())
    throw Error(Errc::dimension_mismatch, "fit: row count does not match label count");
  if (X.cols() != names.size())
    throw Error(Errc::dimension_mismatch, "fit: column count does not match feature names");
  if (X.rows() == 0 || X.cols() == 0) throw Error(Errc::empty_table, "fit: empty input");
  bool has0 = false, has1 = false;
  for (int l : y) {
    if (l == 0) has0 = true;
    else if (l == 1) has1 = true;
    else throw Error(Errc::non_binary_label, "fit: label outside {0,1}");
  }
  if (!has0 || !has1) throw Error(Errc::single_class, "fit: training labels contain one class");
  for (std::size_t r = 0; r < X.rows(); ++r)
    for (std::size_t c = 0; c < X.cols(); ++c)
      if (!std::isfinite(X(r, c)))
        throw Error(Errc::non_finite_value, "fit: non-finite value in training matrix");
}

struct TreeNode {
  int feature = -1;  // -1 = leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(const double* row) const {
    int i = 0;
    while (nodes[i].feature >= 0)
      i = row[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].value;
  }
};

// ---- classification trees (forests) ----

struct ClsTreeParams {
  std::size_t mtry = 0;
  int max_depth = 0;      // 0 = unlimited
  bool random_threshold = false;  // extra-trees style splits
};

double gini_pair(std::size_t n1, std::size_t n) {
  if (n == 0) return 0.0;
  double p = static_cast<double>(n1) / static_cast<double>(n);
  return 2.0 * p * (1.0 - p);
}

class ClsTreeBuilder {
 public:
  ClsTreeBuilder(const Matrix& X, const std::vector<int>& y, const ClsTreeParams& params, Rng& rng)
      : X_(X), y_(y), params_(params), rng_(rng) {}

  Tree build(std::vector<std::size_t> idx) {
    tree_.nodes.clear();
    grow(std::move(idx), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t> idx, int depth) {
    std::size_t n1 = 0;
    for (std::size_t i : idx) n1 += static_cast<std::size_t>(y_[i]);
    int node = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes[node].value = static_cast<double>(n1) / static_cast<double>(idx.size());

    bool pure = (n1 == 0 || n1 == idx.size());
    bool depth_capped = params_.max_depth > 0 && depth >= params_.max_depth;
    if (pure || depth_capped || idx.size() < 2) return node;

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_impurity = gini_pair(n1, idx.size());
    auto features = sample_features();
    for (std::size_t f : features) {
      if (params_.random_threshold)
        try_random_split(idx, f, n1, best_feature, best_threshold, best_impurity);
      else
        try_best_split(idx, f, n1, best_feature, best_threshold, best_impurity);
    }
    if (best_feature < 0) return node;

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      if (X_(i, static_cast<std::size_t>(best_feature)) <= best_threshold)
        left.push_back(i);
      else
        right.push_back(i);
    }
    if (left.empty() || right.empty()) return node;
    idx.clear();
    idx.shrink_to_fit();

    tree_.nodes[node].feature = best_feature;
    tree_.nodes[node].threshold = best_threshold;
    int l = grow(std::move(left), depth + 1);
    tree_.nodes[node].left = l;
    int r = grow(std::move(right), depth + 1);
    tree_.nodes[node].right = r;
    return node;
  }

  std::vector<std::size_t> sample_features() {
    std::size_t p = X_.cols();
    std::size_t m = std::min(params_.mtry, p);
    std::vector<std::size_t> all(p);
    std::iota(all.begin(), all.end(), std::size_t{0});
    // Partial Fisher-Yates: first m entries are the sample.
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng_.below(p - i));
      std::swap(all[i], all[j]);
    }
    all.resize(m);
    return all;
  }

  void try_best_split(const std::vector<std::size_t>& idx, std::size_t f, std::size_t n1_total,
                      int& best_feature, double& best_threshold, double& best_impurity) {
    scratch_.clear();
    for (std::size_t i : idx) scratch_.emplace_back(X_(i, f), y_[i]);
    std::sort(scratch_.begin(), scratch_.end());

    const std::size_t n = scratch_.size();
    std::size_t left_n1 = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_n1 += static_cast<std::size_t>(scratch_[i].second);
      if (scratch_[i].first == scratch_[i + 1].first) continue;
      std::size_t nl = i + 1, nr = n - nl;
      double impurity = (static_cast<double>(nl) * gini_pair(left_n1, nl) +
                         static_cast<double>(nr) * gini_pair(n1_total - left_n1, nr)) /
                        static_cast<double>(n);
      if (impurity < best_impurity) {
        best_impurity = impurity;
        best_feature = static_cast<int>(f);
        best_threshold = scratch_[i].first + 0.5 * (scratch_[i + 1].first - scratch_[i].first);
      }
    }
  }

  void try_random_split(const std::vector<std::size_t>& idx, std::size_t f, std::size_t n1_total,
                        int& best_feature, double& best_threshold, double& best_impurity) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i : idx) {
      double v = X_(i, f);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (lo == hi) return;
    double threshold = lo + rng_.uniform01() * (hi - lo);
    std::size_t nl = 0, left_n1 = 0;
    for (std::size_t i : idx) {
      if (X_(i, f) <= threshold) {
        ++nl;
        left_n1 += static_cast<std::size_t>(y_[i]);
      }
    }
    std::size_t n = idx.size(), nr = n - nl;
    if (nl == 0 || nr == 0) return;
    double impurity = (static_cast<double>(nl) * gini_pair(left_n1, nl) +
                       static_cast<double>(nr) * gini_pair(n1_total - left_n1, nr)) /
                      static_cast<double>(n);
    if (impurity < best_impurity) {
      best_impurity = impurity;
      best_feature = static_cast<int>(f);
      best_threshold = threshold;
    }
  }

  const Matrix& X_;
  const std::vector<int>& y_;
  ClsTreeParams params_;
  Rng& rng_;
  Tree tree_;
  std::vector<std::pair<double, int>> scratch_;
};

class ForestModel : public FittedModel {
 public:
  std::vector<Tree> trees;

 protected:
  std::vector<double> score_rows(const Matrix& X) const override {
    std::vector<double> scores(X.rows(), 0.0);
    for (std::size_t r = 0; r < X.rows(); ++r) {
      double total = 0.0;
      for (const auto& t : trees) total += t.predict(X.row_ptr(r));
      scores[r] = total / static_cast<double>(trees.size());
    }
    return scores;
  }
};

std::unique_ptr<ForestModel> fit_forest(const ClassifierSpec& spec, const Matrix& X,
                                        const std::vector<int>& y, int threads) {
  bool extra = spec.kind == ClassifierKind::extra_trees;
  ClsTreeParams params;
  params.mtry = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(X.cols()))));
  params.max_depth = spec.max_depth;
  params.random_threshold = extra;

  auto model = std::make_unique<ForestModel>();
  model->trees.resize(static_cast<std::size_t>(spec.n_trees));
  std::uint64_t kind_tag = extra ? 2u : 1u;
  parallel_for(model->trees.size(), threads, [&](std::size_t t) {
    Rng rng(derive_seed(spec.seed, {kind_tag, t}));
    std::vector<std::size_t> idx;
    if (extra) {
      idx.resize(X.rows());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
    } else {
      idx.reserve(X.rows());
      for (std::size_t i = 0; i < X.rows(); ++i)
        idx.push_back(static_cast<std::size_t>(rng.below(X.rows())));
    }
    ClsTreeBuilder builder(X, y, params, rng);
    model->trees[t] = builder.build(std::move(idx));
  });
  return model;
}

// ---- gradient boosting (logistic loss, Newton leaf values) ----

struct RegTreeBuilder {
  const Matrix& X;
  const std::vector<double>& grad;
  const std::vector<double>& hess;
  const std::vector<std::size_t>& columns;  // subsampled columns for this round
  int max_depth;
  std::size_t min_leaf;
  Tree tree;
  std::vector<std::pair<double, std::size_t>> scratch;

  int grow(std::vector<std::size_t> idx, int depth) {
    double g = 0.0, h = 0.0;
    for (std::size_t i : idx) {
      g += grad[i];
      h += hess[i];
    }
    int node = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[node].value = g / (h + 1e-12);

    if (depth >= max_depth || idx.size() < 2 * min_leaf) return node;

    double parent_score = g * g / (h + 1e-12);
    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    for (std::size_t f : columns) {
      scratch.clear();
      for (std::size_t i : idx) scratch.emplace_back(X(i, f), i);
      std::sort(scratch.begin(), scratch.end());
      double gl = 0.0, hl = 0.0;
      for (std::size_t i = 0; i + 1 < scratch.size(); ++i) {
        gl += grad[scratch[i].second];
        hl += hess[scratch[i].second];
        if (scratch[i].first == scratch[i + 1].first) continue;
        std::size_t nl = i + 1, nr = scratch.size() - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        double gr = g - gl, hr = h - hl;
        double gain = gl * gl / (hl + 1e-12) + gr * gr / (hr + 1e-12) - parent_score;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = scratch[i].first + 0.5 * (scratch[i + 1].first - scratch[i].first);
        }
      }
    }
    if (best_feature < 0) return node;

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      if (X(i, static_cast<std::size_t>(best_feature)) <= best_threshold)
        left.push_back(i);
      else
        right.push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    tree.nodes[node].feature = best_feature;
    tree.nodes[node].threshold = best_threshold;
    int l = grow(std::move(left), depth + 1);
    tree.nodes[node].left = l;
    int r = grow(std::move(right), depth + 1);
    tree.nodes[node].right = r;
    return node;
  }
};

class BoostedModel : public FittedModel {
 public:
  double base_score = 0.0;
  double learning_rate = 0.05;
  std::vector<Tree> trees;

 protected:
  std::vector<double> score_rows(const Matrix& X) const override {
    std::vector<double> scores(X.rows(), base_score);
    for (std::size_t r = 0; r < X.rows(); ++r) {
      const double* row = X.row_ptr(r);
      for (const auto& t : trees) scores[r] += learning_rate * t.predict(row);
    }
    return scores;
  }
};

std::unique_ptr<BoostedModel> fit_boosted(const ClassifierSpec& spec, const Matrix& X,
                                          const std::vector<int>& y) {
  const std::size_t n = X.rows(), p = X.cols();
  double ymean = 0.0;
  for (int l : y) ymean += l;
  ymean /= static_cast<double>(n);
  ymean = std::clamp(ymean, 1e-6, 1.0 - 1e-6);

  auto model = std::make_unique<BoostedModel>();
  model->base_score = std::log(ymean / (1.0 - ymean));
  model->learning_rate = spec.learning_rate;

  std::vector<double> f(n, model->base_score);
  std::vector<double> grad(n), hess(n);
  const std::size_t rows_per_round = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(spec.row_subsample * static_cast<double>(n))));
  const std::size_t cols_per_round = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(spec.col_subsample * static_cast<double>(p))));

  for (int round = 0; round < spec.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      double prob = sigmoid(f[i]);
      grad[i] = static_cast<double>(y[i]) - prob;
      hess[i] = std::max(prob * (1.0 - prob), 1e-6);
    }
    Rng rng(derive_seed(spec.seed, {3u, static_cast<std::uint64_t>(round)}));
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    rng.shuffle(rows);
    rows.resize(rows_per_round);
    std::sort(rows.begin(), rows.end());
    std::vector<std::size_t> cols(p);
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    rng.shuffle(cols);
    cols.resize(cols_per_round);
    std::sort(cols.begin(), cols.end());

    RegTreeBuilder builder{X, grad, hess, cols, spec.gbt_max_depth, 20, {}, {}};
    builder.grow(std::move(rows), 0);
    for (std::size_t i = 0; i < n; ++i)
      f[i] += spec.learning_rate * builder.tree.predict(X.row_ptr(i));
    model->trees.push_back(std::move(builder.tree));
  }
  return model;
}

// ---- logistic regression ----

class LogisticModel : public FittedModel {
 public:
  std::vector<double> weights;  // on standardized features
  double bias = 0.0;
  std::vector<double> means;
  std::vector<double> sds;

 protected:
  std::vector<double> score_rows(const Matrix& X) const override {
    std::vector<double> scores(X.rows(), bias);
    for (std::size_t r = 0; r < X.rows(); ++r) {
      double z = bias;
      for (std::size_t c = 0; c < X.cols(); ++c)
        z += weights[c] * (X(r, c) - means[c]) / sds[c];
      scores[r] = z;
    }
    return scores;
  }
};

std::unique_ptr<LogisticModel> fit_logistic(const ClassifierSpec& spec, const Matrix& X,
                                            const std::vector<int>& y) {
  const std::size_t n = X.rows(), p = X.cols();
  auto model = std::make_unique<LogisticModel>();
  model->means.assign(p, 0.0);
  model->sds.assign(p, 1.0);
  for (std::size_t c = 0; c < p; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += X(r, c);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) ss += (X(r, c) - mean) * (X(r, c) - mean);
    double sd = std::sqrt(ss / static_cast<double>(n));
    model->means[c] = mean;
    model->sds[c] = sd > 0.0 ? sd : 1.0;
  }
  Matrix Z(n, p);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < p; ++c)
      Z(r, c) = (X(r, c) - model->means[c]) / model->sds[c];

  // Lipschitz constant of the gradient: 0.25 * lambda_max(Z'Z) + 1/C,
  // lambda_max estimated by power iteration.
  std::vector<double> v(p, 1.0 / std::sqrt(static_cast<double>(p)));
  double lambda = 1.0;
  std::vector<double> zv(n), ztzv(p);
  for (int it = 0; it < 50; ++it) {
    for (std::size_t r = 0; r < n; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < p; ++c) s += Z(r, c) * v[c];
      zv[r] = s;
    }
    std::fill(ztzv.begin(), ztzv.end(), 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < p; ++c) ztzv[c] += Z(r, c) * zv[r];
    double norm = 0.0;
    for (double x : ztzv) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    lambda = norm;
    for (std::size_t c = 0; c < p; ++c) v[c] = ztzv[c] / norm;
  }
  double step = 1.0 / (0.25 * lambda + 1.0 / spec.C + 0.25 * static_cast<double>(n));

  // Full-batch gradient descent on sum log-loss + ||w||^2 / (2C).
  std::vector<double> w(p, 0.0);
  double b = 0.0;
  std::vector<double> gw(p);
  for (int it = 0; it < 1000; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      double z = b;
      for (std::size_t c = 0; c < p; ++c) z += Z(r, c) * w[c];
      double resid = sigmoid(z) - static_cast<double>(y[r]);
      gb += resid;
      for (std::size_t c = 0; c < p; ++c) gw[c] += Z(r, c) * resid;
    }
    double gnorm = gb * gb;
    for (std::size_t c = 0; c < p; ++c) {
      gw[c] += w[c] / spec.C;
      gnorm += gw[c] * gw[c];
    }
    if (std::sqrt(gnorm) < 1e-8) break;
    b -= step * gb;
    for (std::size_t c = 0; c < p; ++c) w[c] -= step * gw[c];
  }
  model->weights = std::move(w);
  model->bias = b;
  return model;
}

}  // namespace

std::string to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::random_forest: return "random_forest";
    case ClassifierKind::extra_trees: return "extra_trees";
    case ClassifierKind::gradient_boosted_trees: return "gradient_boosted_trees";
    case ClassifierKind::logistic_regression: return "logistic_regression";
  }
  return "unknown";
}

ClassifierKind classifier_kind_from_string(const std::string& name) {
  if (name == "rf" || name == "random_forest") return ClassifierKind::random_forest;
  if (name == "et" || name == "extra_trees") return ClassifierKind::extra_trees;
  if (name == "gbt" || name == "gradient_boosted_trees") return ClassifierKind::gradient_boosted_trees;
  if (name == "logreg" || name == "logistic_regression") return ClassifierKind::logistic_regression;
  throw Error(Errc::invalid_argument, "unknown classifier: " + name);
}

ClassifierSpec ClassifierSpec::defaults(ClassifierKind kind, std::uint64_t seed) {
  ClassifierSpec spec;
  spec.kind = kind;
  spec.seed = seed;
  return spec;
}

std::vector<double> FittedModel::predict_scores(
    const Matrix& X, const std::vector<std::string>& feature_names) const {
  if (feature_names != feature_names_)
    throw Error(Errc::dimension_mismatch,
                "predict_scores: feature names/order differ from training");
  if (X.cols() != feature_names_.size())
    throw Error(Errc::dimension_mismatch, "predict_scores: column count mismatch");
  return score_rows(X);
}

std::unique_ptr<FittedModel> fit(const ClassifierSpec& spec, const Matrix& X,
                                 const std::vector<int>& y,
                                 const std::vector<std::string>& feature_names, int threads) {
  check_training_inputs(X, y, feature_names);
  std::unique_ptr<FittedModel> model;
  switch (spec.kind) {
    case ClassifierKind::random_forest:
    case ClassifierKind::extra_trees:
      model = fit_forest(spec, X, y, threads);
      break;
    case ClassifierKind::gradient_boosted_trees:
      model = fit_boosted(spec, X, y);
      break;
    case ClassifierKind::logistic_regression:
      model = fit_logistic(spec, X, y);
      break;
  }
  model->feature_names_ = feature_names;
  return model;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw Error(Errc::length_mismatch, "roc_auc: length mismatch");
  std::size_t n1 = 0, n0 = 0;
  for (int l : labels) {
    if (l == 1) ++n1;
    else if (l == 0) ++n0;
    else throw Error(Errc::non_binary_label, "roc_auc: label outside {0,1}");
  }
  if (n1 == 0 || n0 == 0) throw Error(Errc::single_class, "roc_auc: both classes required");

  // Rank formulation of the Mann-Whitney U statistic; average ranks give the
  // tied-pair = 0.5 convention.
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += mean_rank;
    i = j + 1;
  }
  double u = rank_sum_pos - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;
  return u / (static_cast<double>(n1) * static_cast<double>(n0));
}

FoldPlan grouped_kfold(const std::vector<std::string>& group_ids, int k, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::invalid_argument, "grouped_kfold: k must be >= 2");
  std::vector<std::string> groups;
  std::map<std::string, std::vector<std::size_t>> rows_of;
  for (std::size_t i = 0; i < group_ids.size(); ++i) {
    auto [it, inserted] = rows_of.try_emplace(group_ids[i]);
    if (inserted) groups.push_back(group_ids[i]);
    it->second.push_back(i);
  }
  if (groups.size() < static_cast<std::size_t>(k))
    throw Error(Errc::too_few_groups, "grouped_kfold: fewer distinct groups than folds");

  Rng rng(derive_seed(seed, {0x6B666F6CULL}));
  rng.shuffle(groups);

  FoldPlan plan;
  plan.folds.assign(static_cast<std::size_t>(k), {});
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& fold = plan.folds[g % static_cast<std::size_t>(k)];
    const auto& rows = rows_of[groups[g]];
    fold.insert(fold.end(), rows.begin(), rows.end());
  }
  for (auto& fold : plan.folds) std::sort(fold.begin(), fold.end());
  return plan;
}

std::vector<std::size_t> training_rows(const FoldPlan& plan, std::size_t fold) {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    if (f == fold) continue;
    out.insert(out.end(), plan.folds[f].begin(), plan.folds[f].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace bsel
