// Acceptance suite: one PASS/FAIL line per criterion. Expects the path to the
// command-line binary as argv[1] (used by the determinism criterion).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bsel/boruta.hpp"
#include "bsel/correlation.hpp"
#include "bsel/data.hpp"
#include "bsel/models.hpp"
#include "bsel/partition.hpp"
#include "bsel/pipeline.hpp"
#include "bsel/rng.hpp"
#include "bsel/stats.hpp"
#include "bsel/synthetic.hpp"

using namespace bsel;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::cout << "criterion " << criterion << ": " << (pass ? "PASS" : "FAIL") << " - " << detail
            << std::endl;
  if (!pass) ++g_failures;
}

int worker_threads() {
  unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::min(hw == 0 ? 1u : hw, 8u));
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

BlockCorrelationMatrix random_instance(Rng& rng, std::size_t n) {
  BlockCorrelationMatrix m;
  for (std::size_t i = 0; i < n; ++i) m.block_names.push_back("b" + std::to_string(i + 1));
  m.S.assign(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m.S[i][j] = m.S[j][i] = rng.uniform01();
  return m;
}

void criterion_1() {
  Rng rng(2024);
  auto start = std::chrono::steady_clock::now();
  int mismatches = 0;
  for (int t = 0; t < 200; ++t) {
    std::size_t n = 2 + static_cast<std::size_t>(rng.below(8));  // 2..9 blocks
    auto m = random_instance(rng, n);
    PartitionProblem problem{m, 0.6};
    if (solve(problem).objective != brute_force_solve(problem).objective) ++mismatches;
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ostringstream d;
  d << "200 instances, " << mismatches << " objective mismatches, " << secs << " s";
  report(1, mismatches == 0 && secs < 10.0, d.str());
}

void criterion_2() {
  BlockCorrelationMatrix m;
  m.block_names = {"1", "2", "3"};
  m.S = {{1.0, 0.9, 0.7}, {0.9, 1.0, 0.5}, {0.7, 0.5, 1.0}};
  auto p = solve({m, 0.6});
  bool pass = p.groups == std::vector<std::vector<std::string>>{{"1", "2"}, {"3"}} &&
              std::abs(p.objective - 0.9) < 1e-12;
  std::ostringstream d;
  d << "worked instance gave objective " << p.objective << " with " << p.groups.size()
    << " groups";
  report(2, pass, d.str());
}

double auc_pairwise(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      ++pairs;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / static_cast<double>(pairs);
}

void criterion_3() {
  bool pass = true;
  std::ostringstream d;

  double p20 = binom_two_tailed(20, 20).p_value;
  pass = pass && std::abs(p20 - 1.9073e-6) <= 1e-10;
  d << "binom(20,20) p=" << p20;

  auto adj = bh_adjust({0.01, 0.04, 0.03, 0.005});
  pass = pass && adj == std::vector<double>{0.02, 0.04, 0.04, 0.02};

  double rho = spearman({1, 2, 2, 4}, {1, 3, 2, 4});
  pass = pass && std::abs(rho - 0.9487) <= 1e-4;
  d << ", tied spearman=" << rho;

  Rng rng(77);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::size_t n = 5 + rng.below(40);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (auto& s : scores) s = std::floor(rng.uniform01() * 6) / 6.0;
    bool both = false;
    while (!both) {
      int ones = 0;
      for (auto& l : labels) ones += (l = rng.below(2) ? 1 : 0);
      both = ones > 0 && ones < static_cast<int>(n);
    }
    worst = std::max(worst, std::abs(roc_auc(scores, labels) - auc_pairwise(scores, labels)));
  }
  pass = pass && worst <= 1e-12;
  d << ", max AUC-vs-oracle gap=" << worst;
  report(3, pass, d.str());
}

void criterion_4() {
  Rng rng(11);
  bool pass = true;
  for (int t = 0; t < 1000 && pass; ++t) {
    std::size_t n_groups = 5 + rng.below(40);
    std::size_t per_group = 1 + rng.below(4);
    int k = 2 + static_cast<int>(rng.below(std::min<std::uint64_t>(n_groups - 1, 7)));
    std::vector<std::string> gids(n_groups * per_group);
    for (std::size_t i = 0; i < gids.size(); ++i)
      gids[i] = "g" + std::to_string(i % n_groups);
    auto plan = grouped_kfold(gids, k, rng.next_u64());
    std::set<std::string> claimed;
    std::size_t min_g = n_groups, max_g = 0;
    for (const auto& fold : plan.folds) {
      std::set<std::string> groups;
      for (std::size_t r : fold) groups.insert(gids[r]);
      for (const auto& g : groups)
        if (!claimed.insert(g).second) pass = false;  // group spans two folds
      min_g = std::min(min_g, groups.size());
      max_g = std::max(max_g, groups.size());
    }
    if (claimed.size() != n_groups || max_g - min_g > 1) pass = false;
  }
  report(4, pass, "1000 grouped k-fold draws, no leakage, group counts differ by <= 1");
}

void criterion_5() {
  Rng rng(5);
  bool pass = true;
  for (int t = 0; t < 100 && pass; ++t) {
    std::size_t n = 10 + rng.below(50);
    Matrix X(n, 5);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < 5; ++c) X(i, c) = rng.normal();
    ColumnBlocks blocks{{{"A", {0, 1, 2}}, {"B", {3}}, {"C", {4}}}};
    Rng shadow_rng(rng.next_u64());
    Matrix S = make_shadow(X, blocks, shadow_rng);
    for (std::size_t c = 0; c < 5 && pass; ++c) {
      auto a = X.column(c), b = S.column(c);
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      if (a != b) pass = false;
    }
    for (const auto& block : blocks.blocks) {
      std::multiset<std::vector<double>> before, after;
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> rb, ra;
        for (std::size_t c : block.columns) {
          rb.push_back(X(i, c));
          ra.push_back(S(i, c));
        }
        before.insert(rb);
        after.insert(ra);
      }
      if (before != after) pass = false;
    }
  }
  report(5, pass, "100 shadow draws preserve column multisets and block row tuples");
}

struct RecoveryResult {
  BorutaOutcome outcome;
  int relevant_accepted = 0;
  int noise_accepted = 0;
};

RecoveryResult run_recovery(const SyntheticData& data, ClassifierKind kind) {
  auto blocks = resolve_blocks(data.table, data.blocks);
  BorutaConfig config;  // library defaults: 50 iterations, 5 folds, 3 repeats
  config.seed = 1;
  config.threads = worker_threads();
  auto spec = ClassifierSpec::defaults(kind, 1);
  RecoveryResult r;
  r.outcome = run_boruta(data.table, blocks, spec, config);
  std::set<std::string> relevant(data.relevant_block_names.begin(),
                                 data.relevant_block_names.end());
  for (const auto& [name, status] : r.outcome.statuses) {
    if (status.state != BlockState::accepted) continue;
    (relevant.count(name) ? r.relevant_accepted : r.noise_accepted) += 1;
  }
  return r;
}

SyntheticData recovery_dataset() {
  SyntheticSpec spec;
  spec.n_groups = 250;
  spec.obs_per_group = 2;
  spec.relevant_blocks.assign(5, {3, 1.0});
  spec.noise_block_sizes.assign(10, 1);
  spec.within_block_correlation = 0.8;
  spec.seed = 314;
  return generate(spec);
}

void criterion_6_and_7() {
  auto data = recovery_dataset();
  auto start = std::chrono::steady_clock::now();
  auto rf = run_recovery(data, ClassifierKind::random_forest);
  auto gbt = run_recovery(data, ClassifierKind::gradient_boosted_trees);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  bool pass6 = rf.relevant_accepted >= 4 && rf.noise_accepted <= 1 &&
               gbt.relevant_accepted >= 4 && gbt.noise_accepted <= 1 && secs < 300.0;
  std::ostringstream d6;
  d6 << "random_forest " << rf.relevant_accepted << "/5 relevant, " << rf.noise_accepted
     << "/10 noise; gradient_boosted_trees " << gbt.relevant_accepted << "/5 relevant, "
     << gbt.noise_accepted << "/10 noise; " << secs << " s";
  report(6, pass6, d6.str());

  // Criterion 7: reduced (unanimous) set vs full set for both classifiers.
  auto unanimous = consensus({rf.outcome, gbt.outcome}, ConsensusRule::unanimous);
  if (unanimous.empty()) {
    report(7, false, "empty unanimous set, nothing to evaluate");
    return;
  }
  auto all_blocks = resolve_blocks(data.table, data.blocks);
  ColumnBlocks reduced;
  std::set<std::string> keep(unanimous.begin(), unanimous.end());
  for (const auto& b : all_blocks.blocks)
    if (keep.count(b.name)) reduced.blocks.push_back(b);

  auto plan = grouped_kfold(data.table.group_ids, 5, 2);
  auto cv = [&](const ColumnBlocks& blocks, const ClassifierSpec& spec) {
    std::vector<std::size_t> cols;
    std::vector<std::string> names;
    for (const auto& b : blocks.blocks)
      for (std::size_t c : b.columns) {
        cols.push_back(c);
        names.push_back(data.table.feature_names[c]);
      }
    Matrix X(data.table.rows(), cols.size());
    for (std::size_t r = 0; r < data.table.rows(); ++r)
      for (std::size_t j = 0; j < cols.size(); ++j) X(r, j) = data.table.values(r, cols[j]);
    std::vector<double> aucs;
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
      auto train = training_rows(plan, f);
      std::vector<int> y_train, y_val;
      for (std::size_t r : train) y_train.push_back(data.table.labels[r]);
      for (std::size_t r : plan.folds[f]) y_val.push_back(data.table.labels[r]);
      auto model = fit(spec, X.take_rows(train), y_train, names, worker_threads());
      aucs.push_back(roc_auc(model->predict_scores(X.take_rows(plan.folds[f]), names), y_val));
    }
    return aucs;
  };

  bool pass7 = true;
  std::ostringstream d7;
  d7 << unanimous.size() << " unanimous blocks;";
  for (auto kind : {ClassifierKind::random_forest, ClassifierKind::gradient_boosted_trees}) {
    auto spec = ClassifierSpec::defaults(kind, 3);
    auto full = cv(all_blocks, spec);
    auto red = cv(reduced, spec);
    auto t = paired_t_one_tailed(red, full, TailDirection::greater);
    bool valid_p = std::isfinite(t.p_value) && t.p_value >= 0.0 && t.p_value <= 1.0;
    pass7 = pass7 && mean_of(red) >= mean_of(full) - 0.02 && valid_p;
    d7 << ' ' << to_string(kind) << " full=" << mean_of(full) << " reduced=" << mean_of(red)
       << " p=" << t.p_value << ';';
  }
  report(7, pass7, d7.str());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_8(const std::string& cli) {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "bsel_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto run = [&](const std::string& args) {
    std::string cmd = "\"" + cli + "\" " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  std::string data_dir = (dir / "data").string();
  bool ok = run("synth --out " + data_dir +
                " --seed 5 --groups 60 --relevant-blocks 2 --noise-blocks 3") == 0;
  std::string common = "select --input " + data_dir + "/data.csv --blocks " + data_dir +
                       "/blocks.json --classifiers logreg,rf --iterations 6 --seed 7 --out ";
  ok = ok && run(common + (dir / "r1.json").string() + " --threads 1") == 0;
  ok = ok && run(common + (dir / "r2.json").string() + " --threads 1") == 0;
  ok = ok && run(common + (dir / "r3.json").string() + " --threads 8") == 0;
  std::string r1 = slurp(dir / "r1.json");
  bool pass = ok && !r1.empty() && r1 == slurp(dir / "r2.json") && r1 == slurp(dir / "r3.json");
  report(8, pass, "select twice and with --threads 1 vs 8 gave byte-identical reports");
}

void criterion_9() {
  int total_accepted = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SyntheticSpec sspec;
    sspec.n_groups = 250;
    sspec.obs_per_group = 2;
    sspec.noise_block_sizes.assign(15, 1);  // all-noise: no label signal
    sspec.seed = seed;
    auto data = generate(sspec);
    auto blocks = resolve_blocks(data.table, data.blocks);
    BorutaConfig config;
    config.seed = seed;
    config.threads = worker_threads();
    auto spec = ClassifierSpec::defaults(ClassifierKind::logistic_regression, seed);
    auto outcome = run_boruta(data.table, blocks, spec, config);
    for (const auto& [name, status] : outcome.statuses)
      if (status.state == BlockState::accepted) ++total_accepted;
  }
  double per_run = total_accepted / 20.0;
  std::ostringstream d;
  d << total_accepted << " false acceptances across 20 all-noise runs (" << per_run
    << " per run)";
  report(9, per_run <= 1.0, d.str());
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: bsel_acceptance <path-to-cli-binary>" << std::endl;
    return 2;
  }
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6_and_7();
  criterion_8(argv[1]);
  criterion_9();
  std::cout << (g_failures == 0 ? "all criteria passed" : "some criteria failed") << std::endl;
  return g_failures == 0 ? 0 : 1;
}
