#pragma once

// Top-K ranking metrics, weighted classification metrics for group profiling,
// and the comparison report.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmtl/dataio.hpp"
#include "dmtl/grouping.hpp"
#include "json.hpp"

namespace dmtl::eval {

using data::ItemIndex;

enum class PrecisionDenominator {
  /// |hits| / K, even when fewer than K candidates exist.
  k,
  /// |hits| / min(K, |ranked|).
  min_k_ranked,
};

enum class CandidateSet {
  /// The group's own test items.
  group_test_items,
  /// Every item no member rated in training.
  catalog,
};

struct RelevanceSpec {
  double threshold = 3.5;
  std::size_t k = 10;
  PrecisionDenominator denominator = PrecisionDenominator::k;
  CandidateSet candidates = CandidateSet::group_test_items;

  void validate(const data::RatingScale& scale) const;
};

std::string to_string(PrecisionDenominator d);
std::string to_string(CandidateSet c);
PrecisionDenominator precision_denominator_from_string(const std::string& s);
CandidateSet candidate_set_from_string(const std::string& s);

/// `relevant` holds distinct items in any order.
double precision_at_k(std::span<const ItemIndex> ranked, std::span<const ItemIndex> relevant, std::size_t k,
                      PrecisionDenominator denominator = PrecisionDenominator::k);
/// Empty when there is nothing relevant (the case is skipped when averaging).
std::optional<double> recall_at_k(std::span<const ItemIndex> ranked, std::span<const ItemIndex> relevant,
                                  std::size_t k);

/// Candidates ordered by score descending, ties by ascending item index.
std::vector<ItemIndex> rank_items(std::span<const ItemIndex> candidates, std::span<const double> scores);

struct ProfilingMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t samples = 0;
  /// confusion[truth][predicted].
  std::vector<std::vector<std::size_t>> confusion;
};

/// Per-class precision/recall/F1 averaged with weights proportional to class
/// support. A class never predicted has precision 0.
ProfilingMetrics profiling_metrics(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                                   std::size_t classes);

struct RankingMetrics {
  double precision = 0.0;
  double recall = 0.0;
  /// Groups with at least one relevant item (the averaging population).
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

using GroupScorer = std::function<double(grouping::GroupIndex, ItemIndex)>;

/// Ranks each group's candidates by `score`. With CandidateSet::catalog the
/// per-group candidate lists come from `catalog`.
RankingMetrics evaluate_method(const GroupScorer& score, const grouping::GroupRatingsTable& test,
                               const RelevanceSpec& spec,
                               const std::vector<std::vector<ItemIndex>>* catalog = nullptr);

/// Each user as a singleton group, for individual-level scoring.
grouping::GroupRatingsTable individual_table(const data::RatingsTable& test);

struct MethodResult {
  std::string tag;
  std::string name;
  RankingMetrics metrics;
};

struct EvalReport {
  std::string dataset;
  RelevanceSpec protocol;
  std::vector<MethodResult> methods;
  std::optional<ProfilingMetrics> profiling;
  /// Resolved configuration, data hash, and statistics.
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();

  const MethodResult* find(const std::string& tag) const;
};

nlohmann::ordered_json report_json(const EvalReport& report);
/// Methods as rows, P@K and R@K for the dataset as columns.
std::string report_markdown(const EvalReport& report);

}  // namespace dmtl::eval
