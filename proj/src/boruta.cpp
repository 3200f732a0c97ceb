#include "bsel/boruta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "bsel/errors.hpp"
#include "bsel/parallel.hpp"
#include "bsel/stats.hpp"

namespace bsel {

namespace {

constexpr std::uint64_t kTagShadow = 0x73686477ULL;
constexpr std::uint64_t kTagModel = 0x6D6F646CULL;
constexpr std::uint64_t kTagPermute = 0x7065726DULL;
constexpr std::uint64_t kTagFolds = 0x666F6C64ULL;

std::vector<double> per_repeat_importances(const FittedModel& model, Matrix& X_work,
                                           const Matrix& X_val,
                                           const std::vector<std::string>& feature_names,
                                           const std::vector<int>& y_val, double baseline_auc,
                                           const std::vector<std::size_t>& block_columns,
                                           int repeats, Rng& rng) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(repeats));
  const std::size_t n = X_val.rows();
  for (int r = 0; r < repeats; ++r) {
    auto perm = rng.permutation(n);
    for (std::size_t c : block_columns)
      for (std::size_t i = 0; i < n; ++i) X_work(i, c) = X_val(perm[i], c);
    double auc = roc_auc(model.predict_scores(X_work, feature_names), y_val);
    out.push_back(baseline_auc - auc);
    for (std::size_t c : block_columns)
      for (std::size_t i = 0; i < n; ++i) X_work(i, c) = X_val(i, c);
  }
  return out;
}

bool single_class(const std::vector<int>& y) {
  bool has0 = false, has1 = false;
  for (int l : y) {
    if (l == 0) has0 = true;
    else has1 = true;
  }
  return !(has0 && has1);
}

}  // namespace

std::string to_string(BlockState s) {
  switch (s) {
    case BlockState::accepted: return "Accepted";
    case BlockState::rejected: return "Rejected";
    case BlockState::tentative_expired: return "TentativeExpired";
    case BlockState::tentative: return "Tentative";
  }
  return "unknown";
}

ColumnBlocks resolve_blocks(const FeatureTable& table, const PreliminaryBlocks& preliminary) {
  ColumnBlocks out;
  for (const auto& [name, feats] : preliminary.blocks) {
    ColumnBlock b;
    b.name = name;
    for (const auto& f : feats) b.columns.push_back(table.feature_index(f));
    out.blocks.push_back(std::move(b));
  }
  return out;
}

ColumnBlocks resolve_blocks(const FeatureTable& table, const PreliminaryBlocks& preliminary,
                            const BlockPartition& partition) {
  std::map<std::string, const std::vector<std::string>*> features_of;
  for (const auto& [name, feats] : preliminary.blocks) features_of[name] = &feats;

  ColumnBlocks out;
  for (const auto& group : partition.groups) {
    ColumnBlock b;
    std::vector<std::string> members = group;
    std::sort(members.begin(), members.end());
    for (std::size_t i = 0; i < members.size(); ++i) {
      auto it = features_of.find(members[i]);
      if (it == features_of.end())
        throw Error(Errc::unknown_feature, "partition names unknown block: " + members[i]);
      b.name += (i ? "+" : "") + members[i];
      for (const auto& f : *it->second) b.columns.push_back(table.feature_index(f));
    }
    out.blocks.push_back(std::move(b));
  }
  return out;
}

Matrix make_shadow(const Matrix& X, const ColumnBlocks& blocks, Rng& rng) {
  std::size_t total_cols = 0;
  for (const auto& b : blocks.blocks) total_cols += b.columns.size();
  Matrix shadow(X.rows(), total_cols);
  std::size_t out_col = 0;
  for (const auto& b : blocks.blocks) {
    auto perm = rng.permutation(X.rows());
    for (std::size_t c : b.columns) {
      for (std::size_t r = 0; r < X.rows(); ++r) shadow(r, out_col) = X(perm[r], c);
      ++out_col;
    }
  }
  return shadow;
}

double block_permutation_importance(const FittedModel& model, const Matrix& X_val,
                                    const std::vector<std::string>& feature_names,
                                    const std::vector<int>& y_val,
                                    const std::vector<std::size_t>& block_columns, int repeats,
                                    Rng& rng) {
  if (single_class(y_val))
    throw Error(Errc::single_class, "block_permutation_importance: single-class validation fold");
  double baseline = roc_auc(model.predict_scores(X_val, feature_names), y_val);
  Matrix work = X_val;
  auto imps = per_repeat_importances(model, work, X_val, feature_names, y_val, baseline,
                                     block_columns, repeats, rng);
  return std::accumulate(imps.begin(), imps.end(), 0.0) / static_cast<double>(imps.size());
}

IterationResult run_iteration(const FeatureTable& table, const ColumnBlocks& active_blocks,
                              const ClassifierSpec& spec, const FoldPlan& fold_plan,
                              const BorutaConfig& config, int iteration) {
  const std::size_t n_blocks = active_blocks.blocks.size();
  if (n_blocks == 0) throw Error(Errc::invalid_argument, "run_iteration: no active blocks");
  const std::size_t n_rows = table.rows();
  const std::size_t k = fold_plan.folds.size();
  const int repeats = config.repeats_per_fold;

  // Extended layout: real block columns, then their shadow counterparts.
  std::vector<std::size_t> real_cols;
  std::vector<std::string> ext_names;
  std::vector<std::vector<std::size_t>> real_block_cols(n_blocks);   // ext indices
  std::vector<std::vector<std::size_t>> shadow_block_cols(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    for (std::size_t c : active_blocks.blocks[b].columns) {
      real_block_cols[b].push_back(real_cols.size());
      real_cols.push_back(c);
      ext_names.push_back(table.feature_names[c]);
    }
  }
  const std::size_t m = real_cols.size();
  for (std::size_t b = 0; b < n_blocks; ++b) {
    for (std::size_t j = 0; j < active_blocks.blocks[b].columns.size(); ++j) {
      shadow_block_cols[b].push_back(ext_names.size());
      ext_names.push_back("shadow__" + active_blocks.blocks[b].name + "__" + std::to_string(j));
    }
  }

  // One shadow draw per iteration, taken over the full table before the
  // fold split so every fold sees the same marginal distributions.
  Rng shadow_rng(derive_seed(config.seed, {kTagShadow, static_cast<std::uint64_t>(iteration)}));
  Matrix shadow = make_shadow(table.values, active_blocks, shadow_rng);

  Matrix ext(n_rows, 2 * m);
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (std::size_t j = 0; j < m; ++j) ext(r, j) = table.values(r, real_cols[j]);
    for (std::size_t j = 0; j < m; ++j) ext(r, m + j) = shadow(r, j);
  }

  struct FoldResult {
    bool skipped = false;
    // importances[block][repeat]; real blocks then shadow blocks.
    std::vector<std::vector<double>> real_imps;
    std::vector<std::vector<double>> shadow_imps;
  };
  std::vector<FoldResult> fold_results(k);

  parallel_for(k, config.threads, [&](std::size_t f) {
    auto& res = fold_results[f];
    const auto& val_rows = fold_plan.folds[f];
    std::vector<int> y_val;
    y_val.reserve(val_rows.size());
    for (std::size_t r : val_rows) y_val.push_back(table.labels[r]);
    if (val_rows.empty() || single_class(y_val)) {
      res.skipped = true;
      return;
    }
    auto train_rows = training_rows(fold_plan, f);
    std::vector<int> y_train;
    y_train.reserve(train_rows.size());
    for (std::size_t r : train_rows) y_train.push_back(table.labels[r]);

    ClassifierSpec fold_spec = spec;
    fold_spec.seed = derive_seed(config.seed, {kTagModel, static_cast<std::uint64_t>(iteration),
                                               static_cast<std::uint64_t>(f), spec.seed});
    auto model = fit(fold_spec, ext.take_rows(train_rows), y_train, ext_names, 1);

    Matrix X_val = ext.take_rows(val_rows);
    double baseline = roc_auc(model->predict_scores(X_val, ext_names), y_val);

    res.real_imps.assign(n_blocks, std::vector<double>(static_cast<std::size_t>(repeats)));
    res.shadow_imps.assign(n_blocks, std::vector<double>(static_cast<std::size_t>(repeats)));
    Matrix work = X_val;
    for (int r = 0; r < repeats; ++r) {
      // One stream per (iteration, fold, repeat); blocks draw from it in a
      // fixed order so the schedule cannot change the outcome.
      Rng rng(derive_seed(config.seed, {kTagPermute, static_cast<std::uint64_t>(iteration),
                                        static_cast<std::uint64_t>(f),
                                        static_cast<std::uint64_t>(r)}));
      for (std::size_t b = 0; b < n_blocks; ++b)
        res.real_imps[b][static_cast<std::size_t>(r)] =
            per_repeat_importances(*model, work, X_val, ext_names, y_val, baseline,
                                   real_block_cols[b], 1, rng)[0];
      for (std::size_t b = 0; b < n_blocks; ++b)
        res.shadow_imps[b][static_cast<std::size_t>(r)] =
            per_repeat_importances(*model, work, X_val, ext_names, y_val, baseline,
                                   shadow_block_cols[b], 1, rng)[0];
    }
  });

  IterationResult result;
  for (std::size_t b = 0; b < n_blocks; ++b)
    result.per_block[active_blocks.blocks[b].name] = BlockTrials{};

  std::vector<double> shadow_means(n_blocks, 0.0);
  long counted_comparisons = 0;
  std::vector<double> real_means(n_blocks, 0.0);

  for (std::size_t f = 0; f < k; ++f) {
    const auto& res = fold_results[f];
    if (res.skipped) {
      ++result.skipped_folds;
      continue;
    }
    for (int r = 0; r < repeats; ++r) {
      double max_shadow = -std::numeric_limits<double>::infinity();
      for (std::size_t b = 0; b < n_blocks; ++b)
        max_shadow = std::max(max_shadow, res.shadow_imps[b][static_cast<std::size_t>(r)]);
      ++counted_comparisons;
      for (std::size_t b = 0; b < n_blocks; ++b) {
        double imp = res.real_imps[b][static_cast<std::size_t>(r)];
        auto& rec = result.per_block[active_blocks.blocks[b].name];
        rec.importances.push_back(imp);
        real_means[b] += imp;
        shadow_means[b] += res.shadow_imps[b][static_cast<std::size_t>(r)];
        if (config.trial_granularity == TrialGranularity::per_comparison) {
          ++rec.trials;
          if (imp > max_shadow) ++rec.hits;
        }
      }
    }
  }

  if (counted_comparisons > 0) {
    for (std::size_t b = 0; b < n_blocks; ++b) {
      real_means[b] /= static_cast<double>(counted_comparisons);
      shadow_means[b] /= static_cast<double>(counted_comparisons);
    }
    result.max_shadow_importance = *std::max_element(shadow_means.begin(), shadow_means.end());
    if (config.trial_granularity == TrialGranularity::per_iteration) {
      for (std::size_t b = 0; b < n_blocks; ++b) {
        auto& rec = result.per_block[active_blocks.blocks[b].name];
        rec.trials = 1;
        rec.hits = real_means[b] > result.max_shadow_importance ? 1 : 0;
      }
    }
  }
  return result;
}

BorutaOutcome run_boruta(const FeatureTable& table, const ColumnBlocks& blocks,
                         const ClassifierSpec& spec, const BorutaConfig& config) {
  if (blocks.blocks.empty()) throw Error(Errc::invalid_argument, "run_boruta: no blocks");
  if (config.max_iterations < 0 || config.repeats_per_fold < 1 || config.k_folds < 2 ||
      config.alpha <= 0.0 || config.alpha >= 1.0)
    throw Error(Errc::invalid_spec, "run_boruta: invalid configuration");
  {
    std::set<std::size_t> seen;
    for (const auto& b : blocks.blocks)
      for (std::size_t c : b.columns)
        if (c >= table.n_features() || !seen.insert(c).second)
          throw Error(Errc::invalid_spec, "run_boruta: block columns invalid or overlapping");
  }

  BorutaOutcome outcome;
  outcome.config = config;
  outcome.spec = spec;
  for (const auto& b : blocks.blocks) outcome.statuses[b.name] = BlockStatus{};

  FoldPlan fold_plan =
      grouped_kfold(table.group_ids, config.k_folds, derive_seed(config.seed, {kTagFolds}));

  const int trials_per_fold = config.repeats_per_fold;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    ColumnBlocks active;
    std::vector<std::string> undecided;
    for (const auto& b : blocks.blocks) {
      const auto& st = outcome.statuses[b.name];
      if (st.state == BlockState::rejected) continue;
      active.blocks.push_back(b);
      if (st.state == BlockState::tentative) undecided.push_back(b.name);
    }
    if (undecided.empty() || active.blocks.empty()) break;

    IterationResult res = run_iteration(table, active, spec, fold_plan, config, iter);

    IterationRecord record;
    record.iteration = iter + 1;  // 1-based in reports
    for (const auto& b : active.blocks) record.active_blocks.push_back(b.name);
    record.undecided_blocks = undecided;
    record.max_shadow_importance = res.max_shadow_importance;
    record.skipped_folds = res.skipped_folds;
    for (const auto& [name, trials] : res.per_block) {
      double mean = trials.importances.empty()
                        ? 0.0
                        : std::accumulate(trials.importances.begin(), trials.importances.end(),
                                          0.0) /
                              static_cast<double>(trials.importances.size());
      record.mean_importance[name] = mean;
    }

    long lost = (config.trial_granularity == TrialGranularity::per_comparison)
                    ? static_cast<long>(res.skipped_folds) * trials_per_fold
                    : 0;
    for (const auto& name : undecided) {
      const auto& trials = res.per_block.at(name);
      auto& st = outcome.statuses[name];
      st.hits += trials.hits;
      st.trials += trials.trials;
      st.skipped_fold_trials += lost;
      record.hits_gained[name] = trials.hits;
    }

    // Cumulative binomial test per undecided block, BH-adjusted across the
    // undecided set of this iteration.
    std::vector<double> p_raw(undecided.size(), 1.0);
    for (std::size_t i = 0; i < undecided.size(); ++i) {
      const auto& st = outcome.statuses[undecided[i]];
      if (st.trials > 0) p_raw[i] = binom_two_tailed(st.hits, st.trials).p_value;
    }
    auto p_adj = bh_adjust(p_raw);
    for (std::size_t i = 0; i < undecided.size(); ++i) {
      auto& st = outcome.statuses[undecided[i]];
      st.p_value_raw = p_raw[i];
      st.p_value_adjusted = p_adj[i];
      if (st.trials == 0) continue;
      double rate = static_cast<double>(st.hits) / static_cast<double>(st.trials);
      if (p_adj[i] < config.alpha && rate > 0.5) {
        st.state = BlockState::accepted;
        st.decided_at_iteration = iter + 1;
      } else if (p_adj[i] < config.alpha && rate < 0.5) {
        st.state = BlockState::rejected;
        st.decided_at_iteration = iter + 1;
      }
    }
    outcome.history.push_back(std::move(record));
  }

  for (auto& [name, st] : outcome.statuses)
    if (st.state == BlockState::tentative) st.state = BlockState::tentative_expired;
  return outcome;
}

}  // namespace bsel
