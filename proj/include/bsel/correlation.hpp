#pragma once

#include <string>
#include <vector>

#include "bsel/data.hpp"

namespace bsel {

// Symmetric matrix of max-pooled absolute Spearman correlations between
// blocks. Diagonal fixed at 1.
struct BlockCorrelationMatrix {
  std::vector<std::string> block_names;
  std::vector<std::vector<double>> S;  // n x n, values in [0,1]

  std::size_t size() const { return block_names.size(); }
};

// Average ranks (1-based); ties get the mean of the ranks they span.
std::vector<double> average_ranks(const std::vector<double>& x);

// Spearman rank correlation (Pearson on average ranks). If either input is
// constant the result is 0 and *constant_warning (when given) is set.
double spearman(const std::vector<double>& x, const std::vector<double>& y,
                bool* constant_warning = nullptr);

BlockCorrelationMatrix block_correlation(const FeatureTable& table,
                                         const PreliminaryBlocks& blocks);

}  // namespace bsel
