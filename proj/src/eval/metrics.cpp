#include <algorithm>
#include <numeric>

#include "dmtl/evalrank.hpp"

namespace dmtl::eval {

void RelevanceSpec::validate(const data::RatingScale& scale) const {
  if (k == 0) throw ConfigError("top-K cutoff must be at least 1");
  if (!scale.contains(threshold)) {
    throw ConfigError("relevance threshold " + std::to_string(threshold) + " lies outside the rating scale");
  }
}

std::string to_string(PrecisionDenominator d) { return d == PrecisionDenominator::k ? "k" : "min_k_ranked"; }

std::string to_string(CandidateSet c) {
  return c == CandidateSet::group_test_items ? "group_test_items" : "catalog";
}

PrecisionDenominator precision_denominator_from_string(const std::string& s) {
  if (s == "k") return PrecisionDenominator::k;
  if (s == "min_k_ranked") return PrecisionDenominator::min_k_ranked;
  throw ConfigError("unknown precision denominator '" + s + "' (expected k|min_k_ranked)");
}

CandidateSet candidate_set_from_string(const std::string& s) {
  if (s == "group_test_items") return CandidateSet::group_test_items;
  if (s == "catalog") return CandidateSet::catalog;
  throw ConfigError("unknown candidate set '" + s + "' (expected group_test_items|catalog)");
}

namespace {

std::size_t hits(std::span<const ItemIndex> ranked, std::span<const ItemIndex> relevant, std::size_t k) {
  const std::size_t top = std::min(k, ranked.size());
  std::size_t n = 0;
  for (std::size_t p = 0; p < top; ++p) {
    if (std::find(relevant.begin(), relevant.end(), ranked[p]) != relevant.end()) ++n;
  }
  return n;
}

}  // namespace

double precision_at_k(std::span<const ItemIndex> ranked, std::span<const ItemIndex> relevant, std::size_t k,
                      PrecisionDenominator denominator) {
  if (k == 0) throw DomainError("precision_at_k: K must be at least 1");
  const std::size_t denom = denominator == PrecisionDenominator::k ? k : std::min(k, ranked.size());
  if (denom == 0) return 0.0;
  return static_cast<double>(hits(ranked, relevant, k)) / static_cast<double>(denom);
}

std::optional<double> recall_at_k(std::span<const ItemIndex> ranked, std::span<const ItemIndex> relevant,
                                  std::size_t k) {
  if (k == 0) throw DomainError("recall_at_k: K must be at least 1");
  if (relevant.empty()) return std::nullopt;
  return static_cast<double>(hits(ranked, relevant, k)) / static_cast<double>(relevant.size());
}

std::vector<ItemIndex> rank_items(std::span<const ItemIndex> candidates, std::span<const double> scores) {
  if (candidates.size() != scores.size()) {
    throw ShapeError("rank_items: " + std::to_string(candidates.size()) + " candidates but " +
                     std::to_string(scores.size()) + " scores");
  }
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return candidates[a] < candidates[b];
  });
  std::vector<ItemIndex> out;
  out.reserve(order.size());
  for (std::size_t p : order) out.push_back(candidates[p]);
  return out;
}

ProfilingMetrics profiling_metrics(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                                   std::size_t classes) {
  if (truth.size() != predicted.size()) {
    throw ShapeError("profiling_metrics: " + std::to_string(truth.size()) + " labels but " +
                     std::to_string(predicted.size()) + " predictions");
  }
  ProfilingMetrics out;
  out.samples = truth.size();
  out.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  for (std::size_t s = 0; s < truth.size(); ++s) {
    if (truth[s] >= classes || predicted[s] >= classes) {
      throw IndexError("profiling_metrics: label out of range [0, " + std::to_string(classes) + ")");
    }
    ++out.confusion[truth[s]][predicted[s]];
  }
  if (truth.empty()) return out;

  const double n = static_cast<double>(truth.size());
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t support = 0, predicted_count = 0;
    for (std::size_t o = 0; o < classes; ++o) {
      support += out.confusion[c][o];
      predicted_count += out.confusion[o][c];
    }
    if (support == 0) continue;
    const double tp = static_cast<double>(out.confusion[c][c]);
    const double p = predicted_count == 0 ? 0.0 : tp / static_cast<double>(predicted_count);
    const double r = tp / static_cast<double>(support);
    const double f = p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    const double w = static_cast<double>(support) / n;
    out.precision += w * p;
    out.recall += w * r;
    out.f1 += w * f;
  }
  return out;
}

RankingMetrics evaluate_method(const GroupScorer& score, const grouping::GroupRatingsTable& test,
                               const RelevanceSpec& spec, const std::vector<std::vector<ItemIndex>>* catalog) {
  if (test.tuples.empty()) throw ProtocolError("evaluation needs at least one test tuple");
  if (spec.k == 0) throw ConfigError("top-K cutoff must be at least 1");
  if (spec.candidates == CandidateSet::catalog && (catalog == nullptr || catalog->size() < test.group_count)) {
    throw ConfigError("catalog candidate mode needs a candidate list per group");
  }

  RankingMetrics out;
  const auto groups = test.by_group();
  std::vector<ItemIndex> candidates, relevant;
  std::vector<double> scores;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    relevant.clear();
    candidates.clear();
    for (std::size_t pos : groups[g]) {
      const grouping::GroupRating& t = test.tuples[pos];
      if (t.rating >= spec.threshold) relevant.push_back(t.item);
      candidates.push_back(t.item);
    }
    if (relevant.empty()) {
      if (!groups[g].empty()) ++out.skipped;
      continue;
    }
    if (spec.candidates == CandidateSet::catalog) {
      candidates = (*catalog)[g];
      // Relevant items must be rankable even if a member saw them in training.
      for (ItemIndex i : relevant) {
        if (std::find(candidates.begin(), candidates.end(), i) == candidates.end()) candidates.push_back(i);
      }
    }
    scores.resize(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      scores[c] = score(static_cast<grouping::GroupIndex>(g), candidates[c]);
    }
    const std::vector<ItemIndex> ranked = rank_items(candidates, scores);
    out.precision += precision_at_k(ranked, relevant, spec.k, spec.denominator);
    out.recall += *recall_at_k(ranked, relevant, spec.k);
    ++out.evaluated;
  }
  if (out.evaluated == 0) {
    throw ProtocolError("no group has a test item rated at or above the relevance threshold " +
                        std::to_string(spec.threshold));
  }
  out.precision /= static_cast<double>(out.evaluated);
  out.recall /= static_cast<double>(out.evaluated);
  return out;
}

grouping::GroupRatingsTable individual_table(const data::RatingsTable& test) {
  grouping::GroupRatingsTable out;
  out.group_count = test.user_count();
  out.scale = test.scale();
  for (const data::Rating& r : test.ratings()) {
    out.tuples.push_back({static_cast<grouping::GroupIndex>(r.user), r.item, r.rating, {r.user}});
  }
  std::sort(out.tuples.begin(), out.tuples.end(), [](const auto& a, const auto& b) {
    return a.group != b.group ? a.group < b.group : a.item < b.item;
  });
  return out;
}

const MethodResult* EvalReport::find(const std::string& tag) const {
  for (const MethodResult& m : methods) {
    if (m.tag == tag) return &m;
  }
  return nullptr;
}

}  // namespace dmtl::eval
