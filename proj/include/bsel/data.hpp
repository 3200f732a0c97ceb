#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bsel/matrix.hpp"

namespace bsel {

// Observations x numeric features with binary labels and per-row group ids.
// Immutable after construction; safe to share across threads.
struct FeatureTable {
  std::vector<std::string> feature_names;
  Matrix values;                    // rows = observations, cols = features
  std::vector<int> labels;          // 0/1
  std::vector<std::string> group_ids;

  std::size_t rows() const { return values.rows(); }
  std::size_t n_features() const { return feature_names.size(); }

  std::size_t feature_index(const std::string& name) const;  // throws unknown_feature
  void validate() const;
};

// Named, disjoint feature groupings. Features absent from every explicit
// block are materialized as singleton blocks named after the feature.
struct PreliminaryBlocks {
  std::vector<std::pair<std::string, std::vector<std::string>>> blocks;

  bool operator==(const PreliminaryBlocks&) const = default;
};

FeatureTable load_csv(const std::string& path);
void save_csv(const FeatureTable& table, const std::string& path);

PreliminaryBlocks load_blocks(const std::string& path, const FeatureTable& table);
// Same validation, from an already-parsed {"blocks": [{"name", "features"}]} document.
PreliminaryBlocks blocks_from_json_text(const std::string& json_text, const FeatureTable& table);
// All-singletons mapping (the empty-document case).
PreliminaryBlocks singleton_blocks(const FeatureTable& table);

}  // namespace bsel
