#pragma once

// End-to-end pipeline: ingest, split, features, groups, DMTL and baseline
// training, evaluation, and on-disk artifacts.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dmtl/baselines.hpp"
#include "dmtl/dataio.hpp"
#include "dmtl/evalrank.hpp"
#include "dmtl/model.hpp"

namespace dmtl::experiment {

enum class DataFormat { movielens, csv };

std::string to_string(DataFormat f);
DataFormat data_format_from_string(const std::string& s);

/// How the comparison rows are scored.
enum class Scoring {
  /// Group-level tuples; baselines average member predictions.
  group,
  /// Every user ranked individually on their own test items.
  user,
};

std::string to_string(Scoring s);
Scoring scoring_from_string(const std::string& s);

/// `$DMTL_DATA_DIR/ml-100k/u.data`, or `data/ml-100k/u.data` when unset.
std::filesystem::path default_data_path();

struct ExperimentConfig {
  std::filesystem::path data = default_data_path();
  DataFormat format = DataFormat::movielens;
  data::CsvColumns columns;
  data::RatingScale scale;
  /// Row label for the dataset in reports.
  std::string dataset_label = "ML-100K";
  data::SplitSpec split;
  std::size_t k = 20;
  std::size_t kmeans_max_iter = 100;
  model::DmtlConfig dmtl;
  baselines::BaselineOptions baselines;
  eval::RelevanceSpec relevance;
  Scoring scoring = Scoring::group;
  std::filesystem::path out = "out";
  std::uint64_t seed = 42;
  bool write_artifacts = true;
  /// Progress lines; not part of any artifact.
  std::function<void(const std::string&)> log;

  /// Propagates `seed` into every seeded component.
  void apply_seed();
  nlohmann::ordered_json to_json() const;
};

/// Wraps a failure with the pipeline stage it happened in. `kind()` is the
/// wrapped error's kind.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause_kind, const std::string& what);
  const char* kind() const noexcept override { return cause_kind_.c_str(); }
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
  std::string cause_kind_;
};

struct ExperimentResult {
  eval::EvalReport report;
  std::string report_json;
  std::string report_markdown;
  std::vector<std::filesystem::path> artifacts;
};

/// Deterministic for a given config: the emitted report.json is byte-identical
/// across runs. On failure, files written so far are removed.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Git blob object id: SHA-1 of "blob <size>\0" followed by the content.
std::string git_blob_sha1(std::string_view content);
std::string git_blob_sha1_file(const std::filesystem::path& path);

struct DatasetStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t ratings = 0;
  data::RatingScale scale;
  double sparsity = 0.0;
  std::size_t duplicates_dropped = 0;
};

DatasetStats dataset_stats(const data::RatingsTable& table);

struct ExpectedStats {
  std::string name;
  std::size_t users, items, ratings;
  double sparsity_percent;
};

/// Known profiles: "movielens100k", "itmrec".
ExpectedStats expected_stats(const std::string& name);

struct ValidationResult {
  DatasetStats stats;
  std::optional<ExpectedStats> expected;
  /// Human-readable mismatch descriptions; empty when everything agrees.
  std::vector<std::string> mismatches;
};

/// Sparsity is compared at the precision it is quoted with: +/- 0.01 points.
ValidationResult validate_dataset(const data::RatingsTable& table, const std::optional<std::string>& expect);

data::RatingsTable load_ratings(const std::filesystem::path& path, DataFormat format, const data::CsvColumns& columns,
                                const data::RatingScale& scale);

}  // namespace dmtl::experiment
