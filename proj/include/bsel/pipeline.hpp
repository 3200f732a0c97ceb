#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "bsel/boruta.hpp"
#include "bsel/correlation.hpp"
#include "bsel/data.hpp"
#include "bsel/models.hpp"
#include "bsel/partition.hpp"

namespace bsel {

enum class ConsensusRule { unanimous, majority };

std::string to_string(ConsensusRule rule);
ConsensusRule consensus_rule_from_string(const std::string& name);

struct StudyConfig {
  BorutaConfig boruta;  // boruta.seed is the master seed
  double tau = 0.6;
  ConsensusRule reduced_rule = ConsensusRule::unanimous;
};

struct ClassifierEvaluation {
  std::string classifier;
  std::vector<double> full_fold_aucs;
  std::vector<double> reduced_fold_aucs;
  double full_mean = 0.0, full_sd = 0.0;
  double reduced_mean = 0.0, reduced_sd = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;  // one-tailed, reduced > full
  bool degenerate = false;
};

struct AblationRow {
  std::string block;  // "all_selected" for the baseline row
  double mean_auc = 0.0;
  double sd_auc = 0.0;
};

struct AblationResult {
  std::string classifier;
  std::vector<AblationRow> rows;
};

struct SelectionReport {
  int schema = 1;
  double tau = 0.6;
  StudyConfig config;
  BlockPartition partition;
  std::vector<std::string> classifier_names;
  std::vector<BorutaOutcome> outcomes;
  std::map<std::string, std::vector<std::string>> selected_by;  // block -> accepting classifiers
  std::map<std::string, double> selection_fraction;
  std::vector<std::string> unanimous_set;
  std::vector<std::string> majority_set;
  bool reduced_evaluation_skipped = false;
  std::string reduced_skip_reason;
  std::vector<ClassifierEvaluation> evaluations;
  std::vector<AblationResult> ablations;
  // Fold -> sorted group ids, for the selection folds and the evaluation folds.
  std::vector<std::vector<std::string>> boruta_fold_groups;
  std::vector<std::vector<std::string>> evaluation_fold_groups;
};

// Accepted-by-all (unanimous) or accepted-by-strictly-more-than-half
// (majority) blocks. All outcomes must cover the same block set.
std::vector<std::string> consensus(const std::vector<BorutaOutcome>& outcomes,
                                   ConsensusRule rule);

// Grouped k-fold AUC of a model trained on each block alone, plus an
// all-selected-blocks baseline row.
std::vector<AblationRow> ablation_auc(const FeatureTable& table, const ColumnBlocks& blocks,
                                      const ClassifierSpec& spec, int k, std::uint64_t seed,
                                      int threads = 1);

// Full study: correlation -> partition -> per-classifier selection ->
// consensus -> reduced-set retraining -> single-block ablation.
SelectionReport run_study(const FeatureTable& table, const PreliminaryBlocks& preliminary,
                          const std::vector<ClassifierSpec>& specs, const StudyConfig& config);

nlohmann::json outcome_to_json(const BorutaOutcome& outcome);
nlohmann::json report_to_json(const SelectionReport& report);
std::string report_to_text(const SelectionReport& report);

}  // namespace bsel
