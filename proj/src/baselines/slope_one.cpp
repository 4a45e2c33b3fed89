#include <cmath>
#include <limits>

#include "dmtl/baselines.hpp"

namespace dmtl::baselines {

SlopeOneModel::SlopeOneModel(const data::RatingsTable& train)
    : BaselineModel(train),
      items_(train.item_count()),
      sums_(items_ * items_, 0.0),
      counts_(items_ * items_, 0),
      rated_(train.user_count()) {
  for (const data::Rating& r : train.ratings()) rated_[r.user].emplace_back(r.item, r.rating);
  for (const auto& list : rated_) {
    for (const auto& [i, ri] : list) {
      for (const auto& [j, rj] : list) {
        if (i == j) continue;
        sums_[i * items_ + j] += ri - rj;
        ++counts_[i * items_ + j];
      }
    }
  }
}

double SlopeOneModel::deviation(ItemIndex i, ItemIndex j) const {
  const std::uint32_t c = counts_[i * items_ + j];
  if (c == 0) return std::numeric_limits<double>::quiet_NaN();
  return sums_[i * items_ + j] / static_cast<double>(c);
}

double SlopeOneModel::estimate(UserIndex u, ItemIndex i) const {
  if (!known_user(u)) return global_mean_;
  if (i >= items_) return user_mean_[u];
  double acc = 0.0;
  std::size_t used = 0;
  for (const auto& [j, rj] : rated_[u]) {
    if (j == i || counts_[i * items_ + j] == 0) continue;
    acc += deviation(i, j) + rj;
    ++used;
  }
  if (used == 0) return user_mean_[u];
  return acc / static_cast<double>(used);
}

}  // namespace dmtl::baselines
