#include "bsel/synthetic.hpp"

#include <cmath>

#include "bsel/errors.hpp"
#include "bsel/rng.hpp"

namespace bsel {

SyntheticData generate(const SyntheticSpec& spec) {
  if (spec.n_groups < 1 || spec.obs_per_group < 1)
    throw Error(Errc::invalid_spec, "generate: need at least one group and one observation");
  if (spec.relevant_blocks.empty() && spec.noise_block_sizes.empty())
    throw Error(Errc::invalid_spec, "generate: need at least one block");
  if (spec.within_block_correlation < 0.0 || spec.within_block_correlation >= 1.0)
    throw Error(Errc::invalid_spec, "generate: within_block_correlation must lie in [0,1)");
  if (spec.label_noise < 0.0 || spec.label_noise >= 0.5)
    throw Error(Errc::invalid_spec, "generate: label_noise must lie in [0,0.5)");
  for (const auto& b : spec.relevant_blocks)
    if (b.size < 1 || b.beta < 0.0)
      throw Error(Errc::invalid_spec, "generate: invalid relevant block");
  for (int s : spec.noise_block_sizes)
    if (s < 1) throw Error(Errc::invalid_spec, "generate: invalid noise block size");

  struct BlockDef {
    std::string name;
    int size;
    double beta;
  };
  std::vector<BlockDef> defs;
  for (std::size_t i = 0; i < spec.relevant_blocks.size(); ++i)
    defs.push_back({"rel_" + std::to_string(i + 1), spec.relevant_blocks[i].size,
                    spec.relevant_blocks[i].beta});
  for (std::size_t i = 0; i < spec.noise_block_sizes.size(); ++i)
    defs.push_back({"noise_" + std::to_string(i + 1), spec.noise_block_sizes[i], 0.0});

  const std::size_t n_rows =
      static_cast<std::size_t>(spec.n_groups) * static_cast<std::size_t>(spec.obs_per_group);
  std::size_t n_cols = 0;
  for (const auto& d : defs) n_cols += static_cast<std::size_t>(d.size);

  SyntheticData out;
  out.table.values = Matrix(n_rows, n_cols);
  out.table.labels.resize(n_rows);
  out.table.group_ids.resize(n_rows);
  for (const auto& d : defs) {
    std::vector<std::string> feats;
    for (int c = 0; c < d.size; ++c)
      feats.push_back(d.name + "_c" + std::to_string(c + 1));
    out.table.feature_names.insert(out.table.feature_names.end(), feats.begin(), feats.end());
    out.blocks.blocks.emplace_back(d.name, std::move(feats));
    if (d.beta > 0.0) out.relevant_block_names.push_back(d.name);
  }

  Rng rng(derive_seed(spec.seed, {0x73796E74ULL}));
  const double w = spec.within_block_correlation;
  const double factor_weight = std::sqrt(w);
  const double noise_weight = std::sqrt(1.0 - w);

  std::size_t row = 0;
  for (int g = 0; g < spec.n_groups; ++g) {
    std::string gid = "g" + std::to_string(g + 1);
    // Group-level component so observations of one group are dependent.
    std::vector<double> group_effect(defs.size());
    for (auto& e : group_effect) e = rng.normal();
    for (int o = 0; o < spec.obs_per_group; ++o, ++row) {
      out.table.group_ids[row] = gid;
      double logit = 0.0;
      std::size_t col = 0;
      for (std::size_t b = 0; b < defs.size(); ++b) {
        double factor = std::sqrt(0.5) * group_effect[b] + std::sqrt(0.5) * rng.normal();
        logit += defs[b].beta * factor;
        for (int c = 0; c < defs[b].size; ++c, ++col)
          out.table.values(row, col) = factor_weight * factor + noise_weight * rng.normal();
      }
      double prob = 1.0 / (1.0 + std::exp(-logit));
      int label = rng.uniform01() < prob ? 1 : 0;
      if (spec.label_noise > 0.0 && rng.uniform01() < spec.label_noise) label = 1 - label;
      out.table.labels[row] = label;
    }
  }
  out.table.validate();
  return out;
}

}  // namespace bsel
