#include "bsel/partition.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "bsel/errors.hpp"

namespace bsel {

namespace {

void validate_problem(const PartitionProblem& p) {
  if (p.tau < 0.0 || p.tau > 1.0)
    throw Error(Errc::out_of_range, "tau must lie in [0,1]");
  const std::size_t n = p.S.size();
  if (n == 0) throw Error(Errc::invalid_argument, "empty correlation matrix");
  if (p.S.S.size() != n)
    throw Error(Errc::dimension_mismatch, "correlation matrix is not square");
  for (const auto& row : p.S.S)
    if (row.size() != n)
      throw Error(Errc::dimension_mismatch, "correlation matrix is not square");
}

// Canonical form over local indices translated to names: members sorted,
// groups sorted; std::vector's lexicographic < gives the tie-break order.
std::vector<std::vector<std::string>> canonical(
    const std::vector<std::vector<std::size_t>>& groups,
    const std::vector<std::string>& names) {
  std::vector<std::vector<std::string>> out;
  for (const auto& g : groups) {
    std::vector<std::string> members;
    for (std::size_t v : g) members.push_back(names[v]);
    std::sort(members.begin(), members.end());
    out.push_back(std::move(members));
  }
  std::sort(out.begin(), out.end());
  return out;
}

double pair_sum(const std::vector<std::vector<std::size_t>>& groups,
                const std::vector<std::vector<double>>& S) {
  double total = 0.0;
  for (const auto& g : groups)
    for (std::size_t a = 0; a < g.size(); ++a)
      for (std::size_t b = a + 1; b < g.size(); ++b) total += S[g[a]][g[b]];
  return total;
}

bool feasible(const std::vector<std::vector<std::size_t>>& groups,
              const std::vector<std::vector<double>>& S, double tau) {
  for (const auto& g : groups)
    for (std::size_t a = 0; a < g.size(); ++a)
      for (std::size_t b = a + 1; b < g.size(); ++b)
        if (S[g[a]][g[b]] < tau) return false;
  return true;
}

struct ComponentResult {
  std::vector<std::vector<std::size_t>> groups;  // local indices
  double objective = 0.0;
  bool exact = true;
};

// Depth-first search over vertex-to-group assignments with an additive
// upper bound from the undecided feasible edges.
class ExactSearch {
 public:
  ExactSearch(const std::vector<std::vector<double>>& S, double tau,
              const std::vector<std::string>& names)
      : S_(S), tau_(tau), names_(names), n_(S.size()) {
    // rem_[v]: total weight of feasible edges whose larger endpoint is >= v.
    rem_.assign(n_ + 1, 0.0);
    for (std::size_t v = n_; v-- > 0;) {
      rem_[v] = rem_[v + 1];
      for (std::size_t u = 0; u < v; ++u)
        if (S_[u][v] >= tau_) rem_[v] += S_[u][v];
    }
  }

  ComponentResult run() {
    groups_.clear();
    best_obj_ = -1.0;
    descend(0, 0.0);
    ComponentResult r;
    r.groups = best_groups_;
    r.objective = best_obj_;
    r.exact = true;
    return r;
  }

 private:
  void descend(std::size_t v, double current) {
    if (current + rem_[v] < best_obj_) return;
    if (v == n_) {
      auto canon = canonical(groups_, names_);
      if (current > best_obj_ ||
          (current == best_obj_ && canon < best_canon_)) {
        best_obj_ = current;
        best_groups_ = groups_;
        best_canon_ = std::move(canon);
      }
      return;
    }
    // Index loop: the recursive call below grows groups_ and may reallocate.
    for (std::size_t gi = 0, n_groups = groups_.size(); gi < n_groups; ++gi) {
      double gain = 0.0;
      bool ok = true;
      for (std::size_t u : groups_[gi]) {
        if (S_[u][v] < tau_) {
          ok = false;
          break;
        }
        gain += S_[u][v];
      }
      if (!ok) continue;
      groups_[gi].push_back(v);
      descend(v + 1, current + gain);
      groups_[gi].pop_back();
    }
    groups_.push_back({v});
    descend(v + 1, current);
    groups_.pop_back();
  }

  const std::vector<std::vector<double>>& S_;
  double tau_;
  const std::vector<std::string>& names_;
  std::size_t n_;
  std::vector<double> rem_;
  std::vector<std::vector<std::size_t>> groups_;
  std::vector<std::vector<std::size_t>> best_groups_;
  std::vector<std::vector<std::string>> best_canon_;
  double best_obj_ = -1.0;
};

// Merge the feasible group pair with the largest cross-pair weight until no
// positive feasible gain remains.
ComponentResult greedy_solve(const std::vector<std::vector<double>>& S, double tau) {
  const std::size_t n = S.size();
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t v = 0; v < n; ++v) groups.push_back({v});

  for (;;) {
    double best_gain = 0.0;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      for (std::size_t j = i + 1; j < groups.size(); ++j) {
        double gain = 0.0;
        bool ok = true;
        for (std::size_t u : groups[i]) {
          for (std::size_t v : groups[j]) {
            if (S[u][v] < tau) {
              ok = false;
              break;
            }
            gain += S[u][v];
          }
          if (!ok) break;
        }
        if (ok && gain > best_gain) {
          best_gain = gain;
          bi = i;
          bj = j;
        }
      }
    }
    if (best_gain <= 0.0) break;
    groups[bi].insert(groups[bi].end(), groups[bj].begin(), groups[bj].end());
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bj));
  }

  ComponentResult r;
  r.groups = std::move(groups);
  r.objective = pair_sum(r.groups, S);
  r.exact = false;
  return r;
}

std::vector<std::vector<std::size_t>> threshold_components(
    const std::vector<std::vector<double>>& S, double tau) {
  const std::size_t n = S.size();
  std::vector<int> comp(n, -1);
  std::vector<std::vector<std::size_t>> comps;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<std::size_t> stack{s};
    comp[s] = static_cast<int>(comps.size());
    std::vector<std::size_t> members;
    while (!stack.empty()) {
      std::size_t v = stack.back();
      stack.pop_back();
      members.push_back(v);
      for (std::size_t u = 0; u < n; ++u) {
        if (u == v || comp[u] >= 0) continue;
        if (S[v][u] >= tau) {
          comp[u] = comp[v];
          stack.push_back(u);
        }
      }
    }
    std::sort(members.begin(), members.end());
    comps.push_back(std::move(members));
  }
  return comps;
}

BlockPartition finalize(const std::vector<std::vector<std::size_t>>& groups,
                        const PartitionProblem& p, bool exact) {
  BlockPartition out;
  out.groups = canonical(groups, p.S.block_names);
  // Sum in canonical order so equal partitions from different solvers yield
  // bit-identical objectives.
  std::vector<std::vector<std::size_t>> canon_idx;
  for (const auto& g : out.groups) {
    std::vector<std::size_t> members;
    for (const auto& name : g)
      members.push_back(static_cast<std::size_t>(
          std::find(p.S.block_names.begin(), p.S.block_names.end(), name) -
          p.S.block_names.begin()));
    canon_idx.push_back(std::move(members));
  }
  out.objective = pair_sum(canon_idx, p.S.S);
  out.exact = exact;
  return out;
}

}  // namespace

BlockPartition solve(const PartitionProblem& problem) {
  validate_problem(problem);
  const auto& S = problem.S.S;
  const double tau = problem.tau;

  auto comps = threshold_components(S, tau);
  std::vector<std::vector<std::size_t>> groups;
  bool exact = true;
  for (const auto& members : comps) {
    // Local submatrix for this component.
    const std::size_t m = members.size();
    std::vector<std::vector<double>> sub(m, std::vector<double>(m));
    std::vector<std::string> sub_names(m);
    for (std::size_t a = 0; a < m; ++a) {
      sub_names[a] = problem.S.block_names[members[a]];
      for (std::size_t b = 0; b < m; ++b) sub[a][b] = S[members[a]][members[b]];
    }
    ComponentResult r = m <= kExactComponentLimit
                            ? ExactSearch(sub, tau, sub_names).run()
                            : greedy_solve(sub, tau);
    exact = exact && r.exact;
    for (const auto& g : r.groups) {
      std::vector<std::size_t> global;
      for (std::size_t v : g) global.push_back(members[v]);
      groups.push_back(std::move(global));
    }
  }
  return finalize(groups, problem, exact);
}

BlockPartition brute_force_solve(const PartitionProblem& problem) {
  validate_problem(problem);
  const std::size_t n = problem.S.size();
  if (n > 12)
    throw Error(Errc::too_large, "brute_force_solve: limited to 12 blocks");
  const auto& S = problem.S.S;

  // Restricted growth strings enumerate every set partition once.
  std::vector<std::size_t> assign(n, 0);
  double best_obj = -1.0;
  std::vector<std::vector<std::size_t>> best_groups;
  std::vector<std::vector<std::string>> best_canon;

  auto consider = [&]() {
    std::size_t k = *std::max_element(assign.begin(), assign.end()) + 1;
    std::vector<std::vector<std::size_t>> groups(k);
    for (std::size_t v = 0; v < n; ++v) groups[assign[v]].push_back(v);
    if (!feasible(groups, S, problem.tau)) return;
    double obj = pair_sum(groups, S);
    if (obj < best_obj) return;
    auto canon = canonical(groups, problem.S.block_names);
    if (obj > best_obj || canon < best_canon) {
      best_obj = obj;
      best_groups = std::move(groups);
      best_canon = std::move(canon);
    }
  };

  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t v, std::size_t max_used) {
    if (v == n) {
      consider();
      return;
    }
    for (std::size_t g = 0; g <= max_used + 1 && g <= v; ++g) {
      assign[v] = g;
      rec(v + 1, std::max(max_used, g));
    }
  };
  if (n == 1) {
    consider();
  } else {
    assign[0] = 0;
    rec(1, 0);
  }
  return finalize(best_groups, problem, true);
}

}  // namespace bsel
