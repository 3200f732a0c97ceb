#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bsel/boruta.hpp"
#include "bsel/correlation.hpp"
#include "bsel/data.hpp"
#include "bsel/errors.hpp"
#include "bsel/models.hpp"
#include "bsel/partition.hpp"
#include "bsel/pipeline.hpp"
#include "bsel/stats.hpp"
#include "bsel/synthetic.hpp"

namespace {

using bsel::Errc;
using bsel::Error;

struct CommonOpts {
  std::string input;
  std::string blocks_path;
  std::string out;
  std::string format = "json";
};

void write_output(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw Error(Errc::io_error, "cannot write " + out_path);
  out << content;
}

bsel::PreliminaryBlocks load_blocks_or_singletons(const std::string& path,
                                                  const bsel::FeatureTable& table) {
  if (path.empty()) return bsel::singleton_blocks(table);
  return bsel::load_blocks(path, table);
}

std::vector<bsel::ClassifierSpec> parse_classifiers(const std::string& csv, std::uint64_t seed) {
  std::vector<bsel::ClassifierSpec> specs;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    specs.push_back(
        bsel::ClassifierSpec::defaults(bsel::classifier_kind_from_string(item), seed));
  }
  if (specs.empty()) throw Error(Errc::invalid_argument, "no classifiers given");
  return specs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block-based all-relevant feature selection toolkit"};
  app.require_subcommand(1);

  // Shared defaults mirror the library defaults.
  double tau = 0.6;
  double alpha = 0.05;
  int iterations = 50;
  int folds = 5;
  int repeats = 3;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string classifiers = "rf,et,gbt,logreg";
  std::string consensus_rule = "unanimous";
  std::string granularity = "per_comparison";
  CommonOpts opts;

  auto* sel = app.add_subcommand("select", "Run the full selection study");
  sel->add_option("--input", opts.input, "Input CSV (group_id, label, features)")
      ->required();
  sel->add_option("--blocks", opts.blocks_path,
                  "Block mapping JSON; omitted features become singleton blocks");
  sel->add_option("--tau", tau, "Correlation threshold for block merging")
      ->capture_default_str();
  sel->add_option("--alpha", alpha, "Significance level for the binomial tests")
      ->capture_default_str();
  sel->add_option("--iterations", iterations, "Maximum selection iterations")
      ->capture_default_str();
  sel->add_option("--folds", folds, "Grouped cross-validation folds")->capture_default_str();
  sel->add_option("--repeats", repeats, "Row-permutation repeats per fold")
      ->capture_default_str();
  sel->add_option("--seed", seed, "Master random seed")->capture_default_str();
  sel->add_option("--classifiers", classifiers,
                  "Comma list of rf,et,gbt,logreg")
      ->capture_default_str();
  sel->add_option("--consensus", consensus_rule, "Reduced-set rule: unanimous or majority")
      ->capture_default_str();
  sel->add_option("--granularity", granularity,
                  "Trial granularity: per_comparison or per_iteration")
      ->capture_default_str();
  sel->add_option("--format", opts.format, "Output format: json or text")
      ->capture_default_str();
  sel->add_option("--out", opts.out, "Output path (default: standard output)");
  sel->add_option("--threads", threads, "Worker threads; results do not depend on it")
      ->capture_default_str();

  auto* par = app.add_subcommand("partition", "Group correlated blocks via clique partitioning");
  par->add_option("--input", opts.input, "Input CSV")->required();
  par->add_option("--blocks", opts.blocks_path, "Block mapping JSON");
  par->add_option("--tau", tau, "Correlation threshold for block merging")
      ->capture_default_str();
  par->add_option("--out", opts.out, "Output path (default: standard output)");

  auto* cor = app.add_subcommand("correlate", "Emit the max-pooled block correlation matrix");
  cor->add_option("--input", opts.input, "Input CSV")->required();
  cor->add_option("--blocks", opts.blocks_path, "Block mapping JSON");
  cor->add_option("--out", opts.out, "Output path (default: standard output)");

  auto* syn = app.add_subcommand("synth", "Generate a seeded synthetic dataset");
  std::string out_dir = ".";
  int n_groups = 250, obs_per_group = 2, n_relevant = 5, block_size = 3, n_noise = 10;
  double beta = 1.0, within_corr = 0.8, label_noise = 0.0;
  syn->add_option("--out", out_dir, "Output directory for data.csv, blocks.json, truth.json")
      ->capture_default_str();
  syn->add_option("--seed", seed, "Master random seed")->capture_default_str();
  syn->add_option("--groups", n_groups, "Number of distinct groups")->capture_default_str();
  syn->add_option("--obs-per-group", obs_per_group, "Observations per group")
      ->capture_default_str();
  syn->add_option("--relevant-blocks", n_relevant, "Number of label-carrying blocks")
      ->capture_default_str();
  syn->add_option("--block-size", block_size, "Columns per relevant block")
      ->capture_default_str();
  syn->add_option("--beta", beta, "Signal strength of each relevant block")
      ->capture_default_str();
  syn->add_option("--noise-blocks", n_noise, "Number of single-column noise blocks")
      ->capture_default_str();
  syn->add_option("--within-corr", within_corr, "Within-block column correlation")
      ->capture_default_str();
  syn->add_option("--label-noise", label_noise, "Label flip probability")
      ->capture_default_str();

  auto* eva = app.add_subcommand("evaluate", "Full vs reduced AUC for an explicit block list");
  std::string use_blocks;
  eva->add_option("--input", opts.input, "Input CSV")->required();
  eva->add_option("--blocks", opts.blocks_path, "Block mapping JSON");
  eva->add_option("--use", use_blocks, "Comma list of block names forming the reduced set")
      ->required();
  eva->add_option("--classifiers", classifiers, "Comma list of rf,et,gbt,logreg")
      ->capture_default_str();
  eva->add_option("--folds", folds, "Grouped cross-validation folds")->capture_default_str();
  eva->add_option("--seed", seed, "Master random seed")->capture_default_str();
  eva->add_option("--format", opts.format, "Output format: json or text")
      ->capture_default_str();
  eva->add_option("--out", opts.out, "Output path (default: standard output)");
  eva->add_option("--threads", threads, "Worker threads; results do not depend on it")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (sel->parsed()) {
      auto table = bsel::load_csv(opts.input);
      auto prelim = load_blocks_or_singletons(opts.blocks_path, table);
      bsel::StudyConfig config;
      config.tau = tau;
      config.reduced_rule = bsel::consensus_rule_from_string(consensus_rule);
      config.boruta.max_iterations = iterations;
      config.boruta.repeats_per_fold = repeats;
      config.boruta.k_folds = folds;
      config.boruta.alpha = alpha;
      config.boruta.seed = seed;
      config.boruta.threads = threads;
      if (granularity == "per_comparison")
        config.boruta.trial_granularity = bsel::TrialGranularity::per_comparison;
      else if (granularity == "per_iteration")
        config.boruta.trial_granularity = bsel::TrialGranularity::per_iteration;
      else
        throw Error(Errc::invalid_argument, "unknown granularity: " + granularity);
      auto specs = parse_classifiers(classifiers, seed);
      auto report = bsel::run_study(table, prelim, specs, config);
      if (opts.format == "text")
        write_output(opts.out, bsel::report_to_text(report));
      else
        write_output(opts.out, bsel::report_to_json(report).dump(2));
    } else if (par->parsed()) {
      auto table = bsel::load_csv(opts.input);
      auto prelim = load_blocks_or_singletons(opts.blocks_path, table);
      auto partition = bsel::solve({bsel::block_correlation(table, prelim), tau});
      nlohmann::json j = {{"groups", partition.groups},
                          {"objective", partition.objective},
                          {"exact", partition.exact},
                          {"tau", tau}};
      write_output(opts.out, j.dump(2));
    } else if (cor->parsed()) {
      auto table = bsel::load_csv(opts.input);
      auto prelim = load_blocks_or_singletons(opts.blocks_path, table);
      auto S = bsel::block_correlation(table, prelim);
      std::vector<double> row_major;
      for (const auto& row : S.S) row_major.insert(row_major.end(), row.begin(), row.end());
      nlohmann::json j = {{"block_names", S.block_names}, {"matrix", row_major}};
      write_output(opts.out, j.dump(2));
    } else if (syn->parsed()) {
      bsel::SyntheticSpec spec;
      spec.n_groups = n_groups;
      spec.obs_per_group = obs_per_group;
      for (int i = 0; i < n_relevant; ++i) spec.relevant_blocks.push_back({block_size, beta});
      for (int i = 0; i < n_noise; ++i) spec.noise_block_sizes.push_back(1);
      spec.within_block_correlation = within_corr;
      spec.label_noise = label_noise;
      spec.seed = seed;
      auto data = bsel::generate(spec);
      std::filesystem::create_directories(out_dir);
      bsel::save_csv(data.table, out_dir + "/data.csv");
      nlohmann::json blocks_json;
      blocks_json["blocks"] = nlohmann::json::array();
      for (const auto& [name, feats] : data.blocks.blocks)
        blocks_json["blocks"].push_back({{"name", name}, {"features", feats}});
      write_output(out_dir + "/blocks.json", blocks_json.dump(2));
      nlohmann::json truth = {{"relevant_blocks", data.relevant_block_names}};
      write_output(out_dir + "/truth.json", truth.dump(2));
    } else if (eva->parsed()) {
      auto table = bsel::load_csv(opts.input);
      auto prelim = load_blocks_or_singletons(opts.blocks_path, table);
      auto all_blocks = bsel::resolve_blocks(table, prelim);
      bsel::ColumnBlocks reduced;
      {
        std::stringstream ss(use_blocks);
        std::string name;
        while (std::getline(ss, name, ',')) {
          if (name.empty()) continue;
          bool found = false;
          for (const auto& b : all_blocks.blocks) {
            if (b.name == name) {
              reduced.blocks.push_back(b);
              found = true;
              break;
            }
          }
          if (!found) throw Error(Errc::unknown_feature, "unknown block: " + name);
        }
      }
      if (reduced.blocks.empty())
        throw Error(Errc::invalid_argument, "--use selected no blocks");

      auto specs = parse_classifiers(classifiers, seed);
      auto plan = bsel::grouped_kfold(table.group_ids, folds, seed + 1);
      std::vector<std::size_t> all_cols(table.n_features());
      std::iota(all_cols.begin(), all_cols.end(), std::size_t{0});
      std::vector<std::size_t> reduced_cols;
      for (const auto& b : reduced.blocks)
        reduced_cols.insert(reduced_cols.end(), b.columns.begin(), b.columns.end());

      nlohmann::json j;
      j["schema"] = 1;
      j["per_classifier"] = nlohmann::json::array();
      std::ostringstream text;
      for (const auto& spec : specs) {
        auto eval_one = [&](const std::vector<std::size_t>& cols) {
          bsel::Matrix X(table.rows(), cols.size());
          std::vector<std::string> names;
          for (std::size_t c : cols) names.push_back(table.feature_names[c]);
          std::vector<double> aucs;
          for (std::size_t f = 0; f < plan.folds.size(); ++f) {
            auto train = bsel::training_rows(plan, f);
            std::vector<int> y_train, y_val;
            for (std::size_t r : train) y_train.push_back(table.labels[r]);
            for (std::size_t r : plan.folds[f]) y_val.push_back(table.labels[r]);
            bsel::Matrix sub(table.rows(), cols.size());
            for (std::size_t r = 0; r < table.rows(); ++r)
              for (std::size_t c = 0; c < cols.size(); ++c)
                sub(r, c) = table.values(r, cols[c]);
            auto model = bsel::fit(spec, sub.take_rows(train), y_train, names, threads);
            aucs.push_back(bsel::roc_auc(
                model->predict_scores(sub.take_rows(plan.folds[f]), names), y_val));
          }
          return aucs;
        };
        auto full = eval_one(all_cols);
        auto red = eval_one(reduced_cols);
        auto mean = [](const std::vector<double>& v) {
          double s = 0;
          for (double x : v) s += x;
          return s / static_cast<double>(v.size());
        };
        auto t = bsel::paired_t_one_tailed(red, full, bsel::TailDirection::greater);
        j["per_classifier"].push_back({{"classifier", bsel::to_string(spec.kind)},
                                       {"full_fold_aucs", full},
                                       {"reduced_fold_aucs", red},
                                       {"full_mean_auc", mean(full)},
                                       {"reduced_mean_auc", mean(red)},
                                       {"paired_t_p_value", t.p_value}});
        text << bsel::to_string(spec.kind) << ": full " << mean(full) << ", reduced "
             << mean(red) << ", paired t p = " << t.p_value << '\n';
      }
      write_output(opts.out, opts.format == "text" ? text.str() : j.dump(2));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 0;
}
