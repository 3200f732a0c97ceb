#include "bsel/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "bsel/errors.hpp"
#include "bsel/parallel.hpp"
#include "bsel/stats.hpp"

namespace bsel {

namespace {

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

bool fold_has_both_classes(const FeatureTable& table, const std::vector<std::size_t>& rows) {
  bool has0 = false, has1 = false;
  for (std::size_t r : rows) {
    if (table.labels[r] == 0) has0 = true;
    else has1 = true;
  }
  return has0 && has1;
}

// Per-fold held-out AUC of spec trained on the given columns. Single-class
// validation folds are skipped in every evaluation consistently (validity
// depends only on labels and the plan).
std::vector<double> cv_fold_aucs(const FeatureTable& table, const std::vector<std::size_t>& cols,
                                 const std::vector<std::string>& names,
                                 const ClassifierSpec& spec, const FoldPlan& plan, int threads) {
  std::vector<std::size_t> valid_folds;
  for (std::size_t f = 0; f < plan.folds.size(); ++f)
    if (fold_has_both_classes(table, plan.folds[f])) valid_folds.push_back(f);

  Matrix X(table.rows(), cols.size());
  for (std::size_t r = 0; r < table.rows(); ++r)
    for (std::size_t j = 0; j < cols.size(); ++j) X(r, j) = table.values(r, cols[j]);

  std::vector<double> aucs(valid_folds.size(), 0.0);
  parallel_for(valid_folds.size(), threads, [&](std::size_t i) {
    std::size_t f = valid_folds[i];
    auto train = training_rows(plan, f);
    std::vector<int> y_train, y_val;
    for (std::size_t r : train) y_train.push_back(table.labels[r]);
    for (std::size_t r : plan.folds[f]) y_val.push_back(table.labels[r]);
    auto model = fit(spec, X.take_rows(train), y_train, names, 1);
    aucs[i] = roc_auc(model->predict_scores(X.take_rows(plan.folds[f]), names), y_val);
  });
  return aucs;
}

std::vector<std::size_t> block_columns(const ColumnBlocks& blocks) {
  std::vector<std::size_t> cols;
  for (const auto& b : blocks.blocks) cols.insert(cols.end(), b.columns.begin(), b.columns.end());
  return cols;
}

std::vector<std::string> column_names(const FeatureTable& table,
                                      const std::vector<std::size_t>& cols) {
  std::vector<std::string> names;
  for (std::size_t c : cols) names.push_back(table.feature_names[c]);
  return names;
}

std::vector<std::vector<std::string>> fold_group_lists(const FeatureTable& table,
                                                       const FoldPlan& plan) {
  std::vector<std::vector<std::string>> out;
  for (const auto& fold : plan.folds) {
    std::set<std::string> groups;
    for (std::size_t r : fold) groups.insert(table.group_ids[r]);
    out.emplace_back(groups.begin(), groups.end());
  }
  return out;
}

}  // namespace

std::string to_string(ConsensusRule rule) {
  return rule == ConsensusRule::unanimous ? "unanimous" : "majority";
}

ConsensusRule consensus_rule_from_string(const std::string& name) {
  if (name == "unanimous") return ConsensusRule::unanimous;
  if (name == "majority") return ConsensusRule::majority;
  throw Error(Errc::invalid_argument, "unknown consensus rule: " + name);
}

std::vector<std::string> consensus(const std::vector<BorutaOutcome>& outcomes,
                                   ConsensusRule rule) {
  if (outcomes.empty()) throw Error(Errc::invalid_argument, "consensus: no outcomes");
  std::vector<std::string> block_names;
  for (const auto& [name, st] : outcomes.front().statuses) block_names.push_back(name);
  for (const auto& o : outcomes) {
    if (o.statuses.size() != block_names.size())
      throw Error(Errc::block_set_mismatch, "consensus: outcomes cover different block sets");
    for (const auto& name : block_names)
      if (!o.statuses.count(name))
        throw Error(Errc::block_set_mismatch, "consensus: outcomes cover different block sets");
  }

  std::vector<std::string> out;
  for (const auto& name : block_names) {
    std::size_t accepted = 0;
    for (const auto& o : outcomes)
      if (o.statuses.at(name).state == BlockState::accepted) ++accepted;
    bool in = rule == ConsensusRule::unanimous ? accepted == outcomes.size()
                                               : accepted * 2 > outcomes.size();
    if (in) out.push_back(name);
  }
  return out;
}

std::vector<AblationRow> ablation_auc(const FeatureTable& table, const ColumnBlocks& blocks,
                                      const ClassifierSpec& spec, int k, std::uint64_t seed,
                                      int threads) {
  if (blocks.blocks.empty()) throw Error(Errc::invalid_argument, "ablation_auc: no blocks");
  FoldPlan plan = grouped_kfold(table.group_ids, k, seed);
  std::vector<AblationRow> rows;
  auto all_cols = block_columns(blocks);
  auto base = cv_fold_aucs(table, all_cols, column_names(table, all_cols), spec, plan, threads);
  auto [base_mean, base_sd] = mean_sd(base);
  rows.push_back({"all_selected", base_mean, base_sd});
  for (const auto& b : blocks.blocks) {
    auto aucs = cv_fold_aucs(table, b.columns, column_names(table, b.columns), spec, plan,
                             threads);
    auto [mean, sd] = mean_sd(aucs);
    rows.push_back({b.name, mean, sd});
  }
  return rows;
}

SelectionReport run_study(const FeatureTable& table, const PreliminaryBlocks& preliminary,
                          const std::vector<ClassifierSpec>& specs, const StudyConfig& config) {
  if (specs.empty()) throw Error(Errc::invalid_argument, "run_study: need at least one classifier");

  SelectionReport report;
  report.tau = config.tau;
  report.config = config;

  // Correlation + clique partitioning of the preliminary blocks.
  if (preliminary.blocks.size() >= 2) {
    PartitionProblem problem{block_correlation(table, preliminary), config.tau};
    report.partition = solve(problem);
  } else {
    for (const auto& [name, feats] : preliminary.blocks)
      report.partition.groups.push_back({name});
    report.partition.objective = 0.0;
    report.partition.exact = true;
  }
  ColumnBlocks blocks = resolve_blocks(table, preliminary, report.partition);

  // Per-classifier selection; each run owns a derived seed.
  for (std::size_t i = 0; i < specs.size(); ++i) {
    report.classifier_names.push_back(to_string(specs[i].kind));
    BorutaConfig run_config = config.boruta;
    run_config.seed = derive_seed(config.boruta.seed, {0x636C6673ULL, i});
    try {
      report.outcomes.push_back(run_boruta(table, blocks, specs[i], run_config));
    } catch (const Error& e) {
      throw Error(Errc::classifier_failed,
                  "classifier " + to_string(specs[i].kind) + " failed: " + e.what());
    }
  }

  for (const auto& b : blocks.blocks) {
    std::vector<std::string> accepted_by;
    for (std::size_t i = 0; i < specs.size(); ++i)
      if (report.outcomes[i].statuses.at(b.name).state == BlockState::accepted)
        accepted_by.push_back(report.classifier_names[i]);
    report.selection_fraction[b.name] =
        static_cast<double>(accepted_by.size()) / static_cast<double>(specs.size());
    report.selected_by[b.name] = std::move(accepted_by);
  }
  report.unanimous_set = consensus(report.outcomes, ConsensusRule::unanimous);
  report.majority_set = consensus(report.outcomes, ConsensusRule::majority);

  const auto& reduced_names = config.reduced_rule == ConsensusRule::unanimous
                                  ? report.unanimous_set
                                  : report.majority_set;
  ColumnBlocks reduced_blocks;
  for (const auto& b : blocks.blocks)
    if (std::find(reduced_names.begin(), reduced_names.end(), b.name) != reduced_names.end())
      reduced_blocks.blocks.push_back(b);

  report.boruta_fold_groups = fold_group_lists(
      table, grouped_kfold(table.group_ids, config.boruta.k_folds,
                           derive_seed(derive_seed(config.boruta.seed, {0x636C6673ULL, 0}),
                                       {0x666F6C64ULL})));

  if (reduced_blocks.blocks.empty()) {
    report.reduced_evaluation_skipped = true;
    report.reduced_skip_reason = "consensus (" + to_string(config.reduced_rule) +
                                 ") selected no blocks; nothing to retrain on";
  } else {
    // Fresh folds for the retraining comparison, seeded apart from the
    // selection folds.
    FoldPlan eval_plan =
        grouped_kfold(table.group_ids, config.boruta.k_folds, config.boruta.seed + 1);
    report.evaluation_fold_groups = fold_group_lists(table, eval_plan);

    std::vector<std::size_t> all_cols(table.n_features());
    std::iota(all_cols.begin(), all_cols.end(), std::size_t{0});
    auto reduced_cols = block_columns(reduced_blocks);

    for (std::size_t i = 0; i < specs.size(); ++i) {
      ClassifierEvaluation ev;
      ev.classifier = report.classifier_names[i];
      ev.full_fold_aucs = cv_fold_aucs(table, all_cols, column_names(table, all_cols), specs[i],
                                       eval_plan, config.boruta.threads);
      ev.reduced_fold_aucs = cv_fold_aucs(table, reduced_cols,
                                          column_names(table, reduced_cols), specs[i], eval_plan,
                                          config.boruta.threads);
      std::tie(ev.full_mean, ev.full_sd) = mean_sd(ev.full_fold_aucs);
      std::tie(ev.reduced_mean, ev.reduced_sd) = mean_sd(ev.reduced_fold_aucs);
      auto t = paired_t_one_tailed(ev.reduced_fold_aucs, ev.full_fold_aucs,
                                   TailDirection::greater);
      ev.t_statistic = t.statistic;
      ev.p_value = t.p_value;
      ev.degenerate = t.degenerate;
      report.evaluations.push_back(std::move(ev));
    }
  }

  // Single-block ablation over the unanimously accepted blocks.
  ColumnBlocks unanimous_blocks;
  for (const auto& b : blocks.blocks)
    if (std::find(report.unanimous_set.begin(), report.unanimous_set.end(), b.name) !=
        report.unanimous_set.end())
      unanimous_blocks.blocks.push_back(b);
  if (!unanimous_blocks.blocks.empty()) {
    for (std::size_t i = 0; i < specs.size(); ++i) {
      AblationResult ar;
      ar.classifier = report.classifier_names[i];
      ar.rows = ablation_auc(table, unanimous_blocks, specs[i], config.boruta.k_folds,
                             config.boruta.seed + 1, config.boruta.threads);
      report.ablations.push_back(std::move(ar));
    }
  }
  return report;
}

// ---- serialization ----

nlohmann::json outcome_to_json(const BorutaOutcome& outcome) {
  nlohmann::json blocks = nlohmann::json::object();
  for (const auto& [name, st] : outcome.statuses) {
    blocks[name] = {
        {"status", to_string(st.state)},
        {"hits", st.hits},
        {"trials", st.trials},
        {"p_raw", st.p_value_raw},
        {"p_adjusted", st.p_value_adjusted},
        {"decided_at_iteration", st.decided_at_iteration},
        {"skipped_fold_trials", st.skipped_fold_trials},
    };
  }
  nlohmann::json history = nlohmann::json::array();
  for (const auto& rec : outcome.history) {
    history.push_back({
        {"iteration", rec.iteration},
        {"active_blocks", rec.active_blocks},
        {"undecided_blocks", rec.undecided_blocks},
        {"mean_importance", rec.mean_importance},
        {"max_shadow_importance", rec.max_shadow_importance},
        {"hits_gained", rec.hits_gained},
        {"skipped_folds", rec.skipped_folds},
    });
  }
  return {
      {"blocks", blocks},
      {"history", history},
      {"config",
       {{"max_iterations", outcome.config.max_iterations},
        {"repeats_per_fold", outcome.config.repeats_per_fold},
        {"k_folds", outcome.config.k_folds},
        {"alpha", outcome.config.alpha},
        {"seed", outcome.config.seed},
        {"trial_granularity",
         outcome.config.trial_granularity == TrialGranularity::per_comparison
             ? "per_comparison"
             : "per_iteration"}}},
      {"classifier",
       {{"kind", to_string(outcome.spec.kind)}, {"seed", outcome.spec.seed}}},
  };
}

nlohmann::json report_to_json(const SelectionReport& report) {
  nlohmann::json j;
  j["schema"] = report.schema;
  j["config"] = {
      {"tau", report.tau},
      {"alpha", report.config.boruta.alpha},
      {"seed", report.config.boruta.seed},
      {"k_folds", report.config.boruta.k_folds},
      {"max_iterations", report.config.boruta.max_iterations},
      {"repeats_per_fold", report.config.boruta.repeats_per_fold},
      {"consensus_rule", to_string(report.config.reduced_rule)},
  };
  j["partition"] = {
      {"groups", report.partition.groups},
      {"objective", report.partition.objective},
      {"exact", report.partition.exact},
  };
  j["classifiers"] = report.classifier_names;
  nlohmann::json outcomes = nlohmann::json::array();
  for (const auto& o : report.outcomes) outcomes.push_back(outcome_to_json(o));
  j["outcomes"] = outcomes;
  j["consensus"] = {
      {"selected_by", report.selected_by},
      {"selection_fraction", report.selection_fraction},
      {"unanimous", report.unanimous_set},
      {"majority", report.majority_set},
  };
  j["reduced_evaluation"] = nlohmann::json::object();
  j["reduced_evaluation"]["skipped"] = report.reduced_evaluation_skipped;
  if (report.reduced_evaluation_skipped) {
    j["reduced_evaluation"]["reason"] = report.reduced_skip_reason;
  } else {
    nlohmann::json evals = nlohmann::json::array();
    for (const auto& ev : report.evaluations) {
      evals.push_back({
          {"classifier", ev.classifier},
          {"full_fold_aucs", ev.full_fold_aucs},
          {"reduced_fold_aucs", ev.reduced_fold_aucs},
          {"full_mean_auc", ev.full_mean},
          {"full_sd_auc", ev.full_sd},
          {"reduced_mean_auc", ev.reduced_mean},
          {"reduced_sd_auc", ev.reduced_sd},
          {"paired_t_statistic", ev.t_statistic},
          {"paired_t_p_value", ev.p_value},
          {"degenerate", ev.degenerate},
      });
    }
    j["reduced_evaluation"]["per_classifier"] = evals;
  }
  nlohmann::json ablations = nlohmann::json::array();
  for (const auto& ar : report.ablations) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : ar.rows)
      rows.push_back({{"block", row.block}, {"mean_auc", row.mean_auc}, {"sd_auc", row.sd_auc}});
    ablations.push_back({{"classifier", ar.classifier}, {"rows", rows}});
  }
  j["ablation"] = ablations;
  j["fold_plans"] = {
      {"selection", report.boruta_fold_groups},
      {"evaluation", report.evaluation_fold_groups},
  };
  return j;
}

std::string report_to_text(const SelectionReport& report) {
  std::ostringstream out;
  out << "Block partition (tau = " << report.tau << ", objective = " << report.partition.objective
      << (report.partition.exact ? ", exact" : ", greedy") << "):\n";
  for (const auto& g : report.partition.groups) {
    out << "  {";
    for (std::size_t i = 0; i < g.size(); ++i) out << (i ? ", " : "") << g[i];
    out << "}\n";
  }

  out << "\nPer-classifier verdicts:\n";
  for (std::size_t i = 0; i < report.outcomes.size(); ++i) {
    out << "  " << report.classifier_names[i] << ":\n";
    for (const auto& [block, status] : report.outcomes[i].statuses)
      out << "    " << block << ": " << to_string(status.state) << " (hits " << status.hits
          << "/" << status.trials << ", adjusted p = " << status.p_value_adjusted << ")\n";
  }

  out << "\nSelection frequency across classifiers:\n";
  for (const auto& [block, frac] : report.selection_fraction) {
    out << "  " << block << ": " << frac * 100.0 << "% (";
    auto by = report.selected_by.find(block);
    if (by != report.selected_by.end())
      for (std::size_t i = 0; i < by->second.size(); ++i)
        out << (i ? ", " : "") << by->second[i];
    out << ")\n";
  }
  out << "\nConsensus (unanimous):";
  for (const auto& b : report.unanimous_set) out << ' ' << b;
  out << "\nConsensus (majority):";
  for (const auto& b : report.majority_set) out << ' ' << b;
  out << '\n';

  if (report.reduced_evaluation_skipped) {
    out << "\nReduced-set evaluation skipped: " << report.reduced_skip_reason << '\n';
  } else {
    out << "\nFull vs reduced feature set (mean AUC +/- sd over folds):\n";
    for (const auto& ev : report.evaluations) {
      out << "  " << ev.classifier << ": full " << ev.full_mean << " +/- " << ev.full_sd
          << ", reduced " << ev.reduced_mean << " +/- " << ev.reduced_sd
          << ", paired t p = " << ev.p_value << (ev.degenerate ? " (degenerate)" : "") << '\n';
    }
  }
  if (!report.ablations.empty()) {
    out << "\nSingle-block ablation (mean AUC +/- sd over folds):\n";
    for (const auto& ar : report.ablations) {
      out << "  " << ar.classifier << ":\n";
      for (const auto& row : ar.rows)
        out << "    " << row.block << ": " << row.mean_auc << " +/- " << row.sd_auc << '\n';
    }
  }
  return out.str();
}

}  // namespace bsel
