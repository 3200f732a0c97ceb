#pragma once

#include <string>
#include <vector>

#include "bsel/correlation.hpp"

namespace bsel {

struct PartitionProblem {
  BlockCorrelationMatrix S;
  double tau = 0.6;
};

// Disjoint grouping of block names. Every within-group pair meets the
// threshold, so each group is a clique of the tau-graph.
struct BlockPartition {
  std::vector<std::vector<std::string>> groups;  // canonical: members sorted, groups sorted
  double objective = 0.0;                        // sum of S_ij over within-group pairs
  bool exact = true;
};

// Components with more blocks than this fall back to greedy agglomeration.
inline constexpr std::size_t kExactComponentLimit = 16;

// Threshold-constrained weighted clique partitioning: maximize the sum of
// within-group correlations subject to S_ij >= tau for every merged pair.
BlockPartition solve(const PartitionProblem& problem);

// Exhaustive set-partition enumeration; test oracle. n <= 12.
BlockPartition brute_force_solve(const PartitionProblem& problem);

}  // namespace bsel
