// Command-line front end: `dmtl run` executes the full experiment, `dmtl
// validate` prints dataset statistics and checks them against a known profile.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dmtl/experiment.hpp"

namespace {

using dmtl::experiment::ExperimentConfig;

int run(ExperimentConfig config, const std::string& format, const std::string& members, const std::string& scoring,
        const std::string& denominator, const std::string& candidates, bool quiet) {
  config.format = dmtl::experiment::data_format_from_string(format);
  config.dmtl.members = dmtl::model::train_members_from_string(members);
  config.scoring = dmtl::experiment::scoring_from_string(scoring);
  config.relevance.denominator = dmtl::eval::precision_denominator_from_string(denominator);
  config.relevance.candidates = dmtl::eval::candidate_set_from_string(candidates);
  config.apply_seed();
  if (!quiet) config.log = [](const std::string& line) { std::cerr << line << '\n'; };

  const auto result = dmtl::experiment::run_experiment(config);
  std::cout << result.report_markdown;
  for (const auto& path : result.artifacts) std::cerr << "wrote " << path.string() << '\n';
  return 0;
}

int validate(const std::string& path, const std::string& format, const dmtl::data::CsvColumns& columns,
             const std::optional<std::string>& expect) {
  const auto table =
      dmtl::experiment::load_ratings(path, dmtl::experiment::data_format_from_string(format), columns, {});
  const auto result = dmtl::experiment::validate_dataset(table, expect);
  const auto& s = result.stats;
  std::printf("users:    %zu\nitems:    %zu\nratings:  %zu\nscale:    [%g, %g]\nsparsity: %.2f%%\n", s.users,
              s.items, s.ratings, s.scale.min, s.scale.max, 100.0 * s.sparsity);
  if (s.duplicates_dropped > 0) std::printf("duplicates dropped: %zu\n", s.duplicates_dropped);
  if (!result.expected) return 0;
  if (result.mismatches.empty()) {
    std::printf("matches %s\n", result.expected->name.c_str());
    return 0;
  }
  for (const auto& m : result.mismatches) std::printf("MISMATCH %s\n", m.c_str());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group profiling and group recommendation experiments"};
  app.require_subcommand(1);

  ExperimentConfig config;
  std::string format = "movielens";
  std::string members = dmtl::model::to_string(config.dmtl.members);
  std::string scoring = "group";
  std::string denominator = "k";
  std::string candidates = "group_test_items";
  bool quiet = false;

  auto* run_cmd = app.add_subcommand("run", "Train DMTL and the baselines, evaluate, and write reports");
  run_cmd->add_option("--data", config.data, "Ratings file")->capture_default_str();
  run_cmd->add_option("--format", format, "movielens|csv")->capture_default_str();
  run_cmd->add_option("--user-col", config.columns.user, "CSV user column")->capture_default_str();
  run_cmd->add_option("--item-col", config.columns.item, "CSV item column")->capture_default_str();
  run_cmd->add_option("--rating-col", config.columns.rating, "CSV rating column")->capture_default_str();
  run_cmd->add_option("--label", config.dataset_label, "Dataset name in reports")->capture_default_str();
  run_cmd->add_option("--k", config.k, "Number of groups")->capture_default_str();
  run_cmd->add_option("--lambda", config.dmtl.lambda, "Profiling loss weight")->capture_default_str();
  run_cmd->add_option("--threshold", config.relevance.threshold, "Relevance threshold")->capture_default_str();
  run_cmd->add_option("--topk", config.relevance.k, "Ranking cutoff K")->capture_default_str();
  run_cmd->add_option("--seed", config.seed, "Seed for every random component")->capture_default_str();
  run_cmd->add_option("--out", config.out, "Output directory")->capture_default_str();
  run_cmd->add_option("--train-fraction", config.split.train_fraction, "Train share of each user's ratings")
      ->capture_default_str();
  run_cmd->add_option("--epochs", config.dmtl.epochs, "DMTL epochs")->capture_default_str();
  run_cmd->add_option("--lr", config.dmtl.learning_rate, "DMTL learning rate")->capture_default_str();
  run_cmd->add_option("--batch-size", config.dmtl.batch_size, "DMTL batch size")->capture_default_str();
  run_cmd->add_option("--h1", config.dmtl.h1, "Embedding width")->capture_default_str();
  run_cmd->add_option("--h-attn", config.dmtl.h_attn, "Attention hidden width")->capture_default_str();
  run_cmd->add_option("--h2", config.dmtl.h2, "Shared layer width")->capture_default_str();
  run_cmd->add_option("--train-members", members, "contributors|group")->capture_default_str();
  run_cmd->add_option("--max-members", config.dmtl.max_members, "Members sampled per training tuple")
      ->capture_default_str();
  run_cmd->add_option("--scoring", scoring, "group|user")->capture_default_str();
  run_cmd->add_option("--precision-denominator", denominator, "k|min_k_ranked")->capture_default_str();
  run_cmd->add_option("--candidates", candidates, "group_test_items|catalog")->capture_default_str();
  run_cmd->add_flag("--quiet", quiet, "No progress output");

  std::string validate_path = dmtl::experiment::default_data_path().string();
  std::string validate_format = "movielens";
  dmtl::data::CsvColumns validate_columns;
  std::string expect;
  auto* validate_cmd = app.add_subcommand("validate", "Print dataset statistics");
  validate_cmd->add_option("--data", validate_path, "Ratings file")->capture_default_str();
  validate_cmd->add_option("--format", validate_format, "movielens|csv")->capture_default_str();
  validate_cmd->add_option("--user-col", validate_columns.user, "CSV user column")->capture_default_str();
  validate_cmd->add_option("--item-col", validate_columns.item, "CSV item column")->capture_default_str();
  validate_cmd->add_option("--rating-col", validate_columns.rating, "CSV rating column")->capture_default_str();
  validate_cmd->add_option("--expect", expect, "movielens100k|itmrec");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return run(config, format, members, scoring, denominator, candidates, quiet);
    return validate(validate_path, validate_format, validate_columns,
                    expect.empty() ? std::nullopt : std::optional<std::string>(expect));
  } catch (const dmtl::Error& e) {
    std::cerr << "error (" << e.kind() << "): " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
