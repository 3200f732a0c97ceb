#include "bsel/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bsel/errors.hpp"

namespace bsel {

std::vector<double> average_ranks(const std::vector<double>& x) {
  if (x.empty()) throw Error(Errc::empty_vector, "average_ranks: empty input");
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y,
                bool* constant_warning) {
  if (x.size() != y.size())
    throw Error(Errc::length_mismatch, "spearman: input lengths differ");
  if (x.size() < 2) throw Error(Errc::length_mismatch, "spearman: need at least 2 values");
  if (constant_warning) *constant_warning = false;

  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = rx[i] - mx, dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    if (constant_warning) *constant_warning = true;
    return 0.0;
  }
  return sxy / std::sqrt(sxx * syy);
}

BlockCorrelationMatrix block_correlation(const FeatureTable& table,
                                         const PreliminaryBlocks& blocks) {
  const std::size_t n = blocks.blocks.size();
  if (n < 2)
    throw Error(Errc::invalid_argument, "block_correlation: need at least 2 blocks");

  std::vector<std::vector<std::vector<double>>> cols(n);
  for (std::size_t b = 0; b < n; ++b)
    for (const auto& fname : blocks.blocks[b].second)
      cols[b].push_back(table.values.column(table.feature_index(fname)));

  BlockCorrelationMatrix out;
  for (const auto& [name, feats] : blocks.blocks) out.block_names.push_back(name);
  out.S.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) out.S[i][i] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double best = 0.0;
      for (const auto& f : cols[i])
        for (const auto& g : cols[j]) best = std::max(best, std::abs(spearman(f, g)));
      out.S[i][j] = out.S[j][i] = best;
    }
  }
  return out;
}

}  // namespace bsel
