#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "bsel/errors.hpp"
#include "bsel/models.hpp"
#include "bsel/rng.hpp"

using namespace bsel;

namespace {

// Independent O(n1*n0) pairwise oracle with the ties-count-half convention.
double auc_pairwise_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

Matrix random_matrix(Rng& rng, std::size_t n, std::size_t p) {
  Matrix X(n, p);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < p; ++c) X(r, c) = rng.normal();
  return X;
}

std::vector<std::string> names_for(std::size_t p) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < p; ++i) out.push_back("f" + std::to_string(i + 1));
  return out;
}

std::vector<std::string> cycle_groups(std::size_t n, std::size_t n_groups) {
  std::vector<std::string> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = "g" + std::to_string(i % n_groups);
  return out;
}

}  // namespace

TEST_CASE("roc_auc worked examples") {
  CHECK(roc_auc({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}) == 1.0);
  CHECK(roc_auc({0.9, 0.8, 0.2, 0.1}, {0, 0, 1, 1}) == 0.0);
  CHECK(roc_auc({0.5, 0.5}, {0, 1}) == 0.5);
  CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {1, 1}), Error);
}

TEST_CASE("roc_auc matches the pairwise oracle on 100 random tied cases") {
  Rng rng(101);
  for (int t = 0; t < 100; ++t) {
    std::size_t n = 5 + rng.below(40);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (auto& s : scores) s = std::floor(rng.uniform01() * 6) / 6.0;  // forces ties
    bool ok = false;
    while (!ok) {
      for (auto& l : labels) l = rng.below(2) ? 1 : 0;
      ok = std::count(labels.begin(), labels.end(), 1) > 0 &&
           std::count(labels.begin(), labels.end(), 0) > 0;
    }
    CHECK(roc_auc(scores, labels) ==
          doctest::Approx(auc_pairwise_oracle(scores, labels)).epsilon(1e-12));
    // Negation symmetry.
    std::vector<double> neg(scores);
    for (auto& s : neg) s = -s;
    CHECK(roc_auc(scores, labels) == doctest::Approx(1.0 - roc_auc(neg, labels)).epsilon(1e-12));
  }
}

TEST_CASE("grouped_kfold keeps groups whole and balanced") {
  SUBCASE("three groups into three folds") {
    auto plan = grouped_kfold({"a", "a", "b", "b", "c", "c"}, 3, 1);
    REQUIRE(plan.folds.size() == 3);
    for (const auto& fold : plan.folds) CHECK(fold.size() == 2);
  }
  SUBCASE("too few groups") {
    CHECK_THROWS_AS(grouped_kfold({"a", "b"}, 3, 1), Error);
  }
  SUBCASE("100 groups, k=5 gives 20 groups per fold") {
    auto plan = grouped_kfold(cycle_groups(300, 100), 5, 7);
    for (const auto& fold : plan.folds) {
      std::set<std::string> groups;
      for (std::size_t r : fold) groups.insert("g" + std::to_string(r % 100));
      CHECK(groups.size() == 20);
    }
  }
  SUBCASE("no group spans two folds; folds cover all rows") {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
      std::size_t n_groups = 5 + rng.below(30);
      std::size_t n = n_groups * (1 + rng.below(4));
      auto gids = cycle_groups(n, n_groups);
      int k = 2 + static_cast<int>(rng.below(4));
      auto plan = grouped_kfold(gids, k, rng.next_u64());
      std::set<std::size_t> covered;
      std::vector<std::set<std::string>> fold_groups;
      for (const auto& fold : plan.folds) {
        std::set<std::string> groups;
        for (std::size_t r : fold) {
          CHECK(covered.insert(r).second);
          groups.insert(gids[r]);
        }
        fold_groups.push_back(std::move(groups));
      }
      CHECK(covered.size() == n);
      std::size_t min_g = n, max_g = 0;
      for (std::size_t i = 0; i < fold_groups.size(); ++i) {
        min_g = std::min(min_g, fold_groups[i].size());
        max_g = std::max(max_g, fold_groups[i].size());
        for (std::size_t j = i + 1; j < fold_groups.size(); ++j)
          for (const auto& g : fold_groups[i]) CHECK_FALSE(fold_groups[j].count(g));
      }
      CHECK(max_g - min_g <= 1);
    }
  }
}

TEST_CASE("logistic regression separates a clean threshold signal") {
  Rng rng(55);
  std::size_t n = 500;
  Matrix X = random_matrix(rng, n, 1);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = X(i, 0) > 0 ? 1 : 0;

  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < n; ++i) (i % 5 ? train_idx : test_idx).push_back(i);
  std::vector<int> y_train, y_test;
  for (std::size_t i : train_idx) y_train.push_back(y[i]);
  for (std::size_t i : test_idx) y_test.push_back(y[i]);

  auto spec = ClassifierSpec::defaults(ClassifierKind::logistic_regression, 1);
  auto model = fit(spec, X.take_rows(train_idx), y_train, {"f1"});
  double auc = roc_auc(model->predict_scores(X.take_rows(test_idx), {"f1"}), y_test);
  CHECK(auc >= 0.99);
}

TEST_CASE("random forest on pure noise stays near chance") {
  Rng rng(56);
  std::size_t n = 500;
  Matrix X = random_matrix(rng, n, 5);
  std::vector<int> y(n);
  for (auto& l : y) l = rng.below(2) ? 1 : 0;

  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < n; ++i) (i % 5 ? train_idx : test_idx).push_back(i);
  std::vector<int> y_train, y_test;
  for (std::size_t i : train_idx) y_train.push_back(y[i]);
  for (std::size_t i : test_idx) y_test.push_back(y[i]);

  auto spec = ClassifierSpec::defaults(ClassifierKind::random_forest, 2);
  auto model = fit(spec, X.take_rows(train_idx), y_train, names_for(5));
  double auc = roc_auc(model->predict_scores(X.take_rows(test_idx), names_for(5)), y_test);
  CHECK(auc >= 0.4);
  CHECK(auc <= 0.6);
}

TEST_CASE("fit rejects single-class labels and dimension mismatches") {
  Matrix X(4, 2, 1.0);
  auto spec = ClassifierSpec::defaults(ClassifierKind::random_forest);
  CHECK_THROWS_AS(fit(spec, X, {0, 0, 0, 0}, names_for(2)), Error);
  CHECK_THROWS_AS(fit(spec, X, {0, 1}, names_for(2)), Error);
  CHECK_THROWS_AS(fit(spec, X, {0, 1, 0, 1}, names_for(3)), Error);
}

TEST_CASE("predict_scores rejects a different feature layout") {
  Rng rng(9);
  Matrix X = random_matrix(rng, 30, 2);
  std::vector<int> y(30);
  for (std::size_t i = 0; i < 30; ++i) y[i] = i % 2;
  auto model = fit(ClassifierSpec::defaults(ClassifierKind::logistic_regression), X, y,
                   {"a", "b"});
  CHECK_THROWS_AS(model->predict_scores(X, {"b", "a"}), Error);
  CHECK(model->predict_scores(X, {"a", "b"}).size() == 30);
}

TEST_CASE("constant features give constant scores") {
  Matrix X(20, 2, 3.0);
  std::vector<int> y(20);
  for (std::size_t i = 0; i < 20; ++i) y[i] = i % 2;
  for (auto kind : {ClassifierKind::random_forest, ClassifierKind::extra_trees,
                    ClassifierKind::gradient_boosted_trees, ClassifierKind::logistic_regression}) {
    auto model = fit(ClassifierSpec::defaults(kind, 4), X, y, names_for(2));
    auto scores = model->predict_scores(X, names_for(2));
    for (double s : scores) CHECK(s == doctest::Approx(scores[0]).epsilon(1e-12));
  }
}

TEST_CASE("logistic scores are affine in the features") {
  Rng rng(77);
  Matrix X = random_matrix(rng, 100, 3);
  std::vector<int> y(100);
  for (std::size_t i = 0; i < 100; ++i) y[i] = X(i, 0) + 0.3 * rng.normal() > 0 ? 1 : 0;
  auto model = fit(ClassifierSpec::defaults(ClassifierKind::logistic_regression), X, y,
                   names_for(3));
  Matrix probe(3, 3);
  for (std::size_t c = 0; c < 3; ++c) {
    probe(0, c) = 0.0;
    probe(1, c) = 1.0;
    probe(2, c) = 0.5;  // midpoint
  }
  auto s = model->predict_scores(probe, names_for(3));
  CHECK(s[2] == doctest::Approx(0.5 * (s[0] + s[1])).epsilon(1e-9));
}

TEST_CASE("forest training is reproducible across thread counts") {
  Rng rng(31);
  Matrix X = random_matrix(rng, 120, 4);
  std::vector<int> y(120);
  for (std::size_t i = 0; i < 120; ++i) y[i] = X(i, 1) > 0 ? 1 : 0;
  auto spec = ClassifierSpec::defaults(ClassifierKind::random_forest, 999);
  spec.n_trees = 60;
  auto m1 = fit(spec, X, y, names_for(4), 1);
  auto m4 = fit(spec, X, y, names_for(4), 4);
  CHECK(m1->predict_scores(X, names_for(4)) == m4->predict_scores(X, names_for(4)));
}

TEST_CASE("extra trees and random forest give distinct but sane models") {
  Rng rng(41);
  Matrix X = random_matrix(rng, 200, 3);
  std::vector<int> y(200);
  for (std::size_t i = 0; i < 200; ++i) y[i] = X(i, 0) > 0 ? 1 : 0;
  auto rf = fit(ClassifierSpec::defaults(ClassifierKind::random_forest, 5), X, y, names_for(3));
  auto et = fit(ClassifierSpec::defaults(ClassifierKind::extra_trees, 5), X, y, names_for(3));
  CHECK(roc_auc(rf->predict_scores(X, names_for(3)), y) > 0.95);
  CHECK(roc_auc(et->predict_scores(X, names_for(3)), y) > 0.95);
  CHECK(rf->predict_scores(X, names_for(3)) != et->predict_scores(X, names_for(3)));
}

TEST_CASE("gradient boosting learns a nonlinear signal") {
  Rng rng(61);
  Matrix X = random_matrix(rng, 400, 2);
  std::vector<int> y(400);
  for (std::size_t i = 0; i < 400; ++i)
    y[i] = (X(i, 0) * X(i, 1) > 0) ? 1 : 0;  // XOR-like, invisible to linear models
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < 400; ++i) (i % 5 ? train_idx : test_idx).push_back(i);
  std::vector<int> y_train, y_test;
  for (std::size_t i : train_idx) y_train.push_back(y[i]);
  for (std::size_t i : test_idx) y_test.push_back(y[i]);
  auto model = fit(ClassifierSpec::defaults(ClassifierKind::gradient_boosted_trees, 8),
                   X.take_rows(train_idx), y_train, names_for(2));
  double auc = roc_auc(model->predict_scores(X.take_rows(test_idx), names_for(2)), y_test);
  CHECK(auc > 0.9);
}
