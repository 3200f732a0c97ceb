#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bsel/data.hpp"
#include "bsel/models.hpp"
#include "bsel/partition.hpp"
#include "bsel/rng.hpp"

namespace bsel {

// A decision unit: a named set of table columns permuted, scored, and
// accepted or rejected together.
struct ColumnBlock {
  std::string name;
  std::vector<std::size_t> columns;
};

struct ColumnBlocks {
  std::vector<ColumnBlock> blocks;
};

// Maps a solved partition back onto table columns. Merged groups are named
// by joining their member block names with '+'.
ColumnBlocks resolve_blocks(const FeatureTable& table, const PreliminaryBlocks& preliminary,
                            const BlockPartition& partition);
ColumnBlocks resolve_blocks(const FeatureTable& table, const PreliminaryBlocks& preliminary);

enum class TrialGranularity { per_comparison, per_iteration };

struct BorutaConfig {
  int max_iterations = 50;
  int repeats_per_fold = 3;
  int k_folds = 5;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  TrialGranularity trial_granularity = TrialGranularity::per_comparison;
  int threads = 1;
};

enum class BlockState { accepted, rejected, tentative_expired, tentative };

std::string to_string(BlockState s);

struct BlockStatus {
  BlockState state = BlockState::tentative;
  int decided_at_iteration = -1;
  long hits = 0;
  long trials = 0;
  double p_value_raw = 1.0;
  double p_value_adjusted = 1.0;
  long skipped_fold_trials = 0;  // trials lost to single-class validation folds
};

struct IterationRecord {
  int iteration = 0;
  std::vector<std::string> active_blocks;     // in-model blocks this iteration
  std::vector<std::string> undecided_blocks;  // subset still accruing trials
  std::map<std::string, double> mean_importance;
  double max_shadow_importance = 0.0;  // max over shadow blocks of mean importance
  std::map<std::string, long> hits_gained;
  int skipped_folds = 0;
};

struct BorutaOutcome {
  std::map<std::string, BlockStatus> statuses;
  std::vector<IterationRecord> history;
  BorutaConfig config;
  ClassifierSpec spec;
};

// Shadow copy of the given blocks' columns: per block, one row permutation
// applied jointly to all of its columns; blocks get independent permutations.
// Output columns follow block order (block 0's columns, then block 1's, ...).
Matrix make_shadow(const Matrix& X, const ColumnBlocks& blocks, Rng& rng);

// Mean drop in held-out AUC over `repeats` joint row-permutations of the
// block's columns.
double block_permutation_importance(const FittedModel& model, const Matrix& X_val,
                                    const std::vector<std::string>& feature_names,
                                    const std::vector<int>& y_val,
                                    const std::vector<std::size_t>& block_columns, int repeats,
                                    Rng& rng);

struct BlockTrials {
  std::vector<double> importances;  // one per counted (fold, repeat) comparison
  long hits = 0;
  long trials = 0;
};

struct IterationResult {
  std::map<std::string, BlockTrials> per_block;  // keyed by active block name
  double max_shadow_importance = 0.0;
  int skipped_folds = 0;
};

// One outer cycle: fresh shadows, per-fold training on [active || shadow],
// per-(fold, repeat) importance comparisons against the best shadow.
IterationResult run_iteration(const FeatureTable& table, const ColumnBlocks& active_blocks,
                              const ClassifierSpec& spec, const FoldPlan& fold_plan,
                              const BorutaConfig& config, int iteration);

// Full accept/reject/tentative lifecycle with cumulative binomial tests and
// Benjamini-Hochberg adjustment per iteration.
BorutaOutcome run_boruta(const FeatureTable& table, const ColumnBlocks& blocks,
                         const ClassifierSpec& spec, const BorutaConfig& config);

}  // namespace bsel
