#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bsel/matrix.hpp"

namespace bsel {

enum class ClassifierKind { random_forest, extra_trees, gradient_boosted_trees, logistic_regression };

std::string to_string(ClassifierKind kind);
ClassifierKind classifier_kind_from_string(const std::string& name);

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::random_forest;

  // Forests (random_forest / extra_trees).
  int n_trees = 500;
  int max_depth = 0;  // 0 = unlimited

  // Gradient boosting.
  int n_rounds = 300;
  double learning_rate = 0.05;
  double row_subsample = 0.80;
  double col_subsample = 0.80;
  int gbt_max_depth = 6;

  // Logistic regression.
  double C = 1.0;

  std::uint64_t seed = 0;

  static ClassifierSpec defaults(ClassifierKind kind, std::uint64_t seed = 0);
};

class FittedModel {
 public:
  virtual ~FittedModel() = default;

  // Scores for each row; larger = more likely class 1. Rejects inputs whose
  // feature names or order differ from training.
  std::vector<double> predict_scores(const Matrix& X,
                                     const std::vector<std::string>& feature_names) const;

  const std::vector<std::string>& feature_names() const { return feature_names_; }

 protected:
  virtual std::vector<double> score_rows(const Matrix& X) const = 0;
  std::vector<std::string> feature_names_;

  friend std::unique_ptr<FittedModel> fit(const ClassifierSpec&, const Matrix&,
                                          const std::vector<int>&,
                                          const std::vector<std::string>&, int);
};

// Trains the given classifier. Deterministic for fixed spec.seed and inputs,
// for any thread count.
std::unique_ptr<FittedModel> fit(const ClassifierSpec& spec, const Matrix& X,
                                 const std::vector<int>& y,
                                 const std::vector<std::string>& feature_names,
                                 int threads = 1);

// ROC AUC with the tied-pair-counts-half convention (Mann-Whitney U / n1*n0).
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct FoldPlan {
  std::vector<std::vector<std::size_t>> folds;  // disjoint row indices covering all rows
};

// Groups shuffled by seed, dealt round-robin into k folds; no group ever
// spans two folds.
FoldPlan grouped_kfold(const std::vector<std::string>& group_ids, int k, std::uint64_t seed);

// Rows outside fold i (the training complement).
std::vector<std::size_t> training_rows(const FoldPlan& plan, std::size_t fold);

}  // namespace bsel
