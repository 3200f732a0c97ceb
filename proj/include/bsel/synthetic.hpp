#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bsel/data.hpp"

namespace bsel {

struct SyntheticBlock {
  int size = 1;
  double beta = 0.0;  // 0 for noise blocks
};

struct SyntheticSpec {
  int n_groups = 250;
  int obs_per_group = 2;
  std::vector<SyntheticBlock> relevant_blocks;
  std::vector<int> noise_block_sizes;
  double within_block_correlation = 0.0;  // [0, 1)
  double label_noise = 0.0;               // [0, 0.5)
  std::uint64_t seed = 0;
};

struct SyntheticData {
  FeatureTable table;
  PreliminaryBlocks blocks;
  std::vector<std::string> relevant_block_names;  // ground truth
};

// Seeded dataset with known block-level relevance. Relevant blocks carry a
// latent factor entering the label's log-odds at weight beta; columns within
// a block mix the factor with independent noise at the requested correlation.
SyntheticData generate(const SyntheticSpec& spec);

}  // namespace bsel
