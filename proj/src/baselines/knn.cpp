#include <algorithm>
#include <cmath>

#include "dmtl/baselines.hpp"
#include "dmtl/kernels.hpp"

namespace dmtl::baselines {

namespace {

// Cosine over co-rated entries for every pair of rows of the dense rating
// matrix `r` (0 = unrated):
//   sim(a, b) = sum r_a r_b / sqrt(sum_{co} r_a^2 * sum_{co} r_b^2).
Matrix cosine_similarities(const Matrix& r) {
  const std::size_t n = r.rows();
  const std::size_t m = r.cols();
  Matrix sq(n, m), mask(n, m);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t c = 0; c < m; ++c) {
      const double v = r(a, c);
      sq(a, c) = v * v;
      mask(a, c) = v != 0.0 ? 1.0 : 0.0;
    }
  }
  Matrix sim(n, n);
  const auto& k = kernels::active();
  for (std::size_t a = 0; a < n; ++a) {
    const bool rated = k.dot(mask.row(a).data(), mask.row(a).data(), m) > 0.0;
    sim(a, a) = rated ? 1.0 : 0.0;
    for (std::size_t b = a + 1; b < n; ++b) {
      const double num = k.dot(r.row(a).data(), r.row(b).data(), m);
      if (num == 0.0) continue;
      const double da = k.dot(sq.row(a).data(), mask.row(b).data(), m);
      const double db = k.dot(mask.row(a).data(), sq.row(b).data(), m);
      const double s = num / std::sqrt(da * db);
      sim(a, b) = s;
      sim(b, a) = s;
    }
  }
  return sim;
}

}  // namespace

KnnModel::KnnModel(const data::RatingsTable& train, const KnnOptions& options)
    : BaselineModel(train), options_(options) {
  if (options.k == 0) throw ConfigError("KNN: k_neighbors must be at least 1");
  const std::size_t n = options.user_based ? train.user_count() : train.item_count();
  const std::size_t m = options.user_based ? train.item_count() : train.user_count();
  Matrix dense(n, m);
  raters_.resize(m);
  for (const data::Rating& r : train.ratings()) {
    const std::uint32_t x = options.user_based ? r.user : r.item;
    const std::uint32_t y = options.user_based ? r.item : r.user;
    dense(x, y) = r.rating;
    raters_[y].emplace_back(x, r.rating);
  }
  sim_ = cosine_similarities(dense);
}

Variant KnnModel::variant() const {
  if (options_.user_based) return options_.with_means ? Variant::knn_means_user : Variant::knn_basic_user;
  return options_.with_means ? Variant::knn_means_item : Variant::knn_basic_item;
}

double KnnModel::estimate(UserIndex u, ItemIndex i) const {
  const std::uint32_t x = options_.user_based ? u : i;
  const std::uint32_t y = options_.user_based ? i : u;
  if (x >= sim_.rows() || y >= raters_.size()) return user_mean_or_global(u);

  struct Neighbour {
    double sim;
    std::uint32_t id;
    double rating;
  };
  std::vector<Neighbour> cands;
  cands.reserve(raters_[y].size());
  for (const auto& [other, rating] : raters_[y]) {
    if (other == x) continue;
    cands.push_back({sim_(x, other), other, rating});
  }
  const auto better = [](const Neighbour& a, const Neighbour& b) {
    return a.sim != b.sim ? a.sim > b.sim : a.id < b.id;
  };
  const std::size_t take = std::min(options_.k, cands.size());
  std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(take), cands.end(), better);

  const auto& means = options_.user_based ? user_mean_ : item_mean_;
  double sum_sim = 0.0, sum = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < take; ++k) {
    const Neighbour& nb = cands[k];
    if (nb.sim <= 0.0) continue;
    sum_sim += nb.sim;
    sum += nb.sim * (options_.with_means ? nb.rating - means[nb.id] : nb.rating);
    ++used;
  }
  if (used < options_.min_k || sum_sim == 0.0) return user_mean_or_global(u);
  return options_.with_means ? means[x] + sum / sum_sim : sum / sum_sim;
}

}  // namespace dmtl::baselines
