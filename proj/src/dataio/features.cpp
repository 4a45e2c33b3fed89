#include <cmath>

#include "dmtl/dataio.hpp"
#include "dmtl/kernels.hpp"

namespace dmtl::data {

numerics::Vector FeatureMatrix::row_vector(std::size_t k) const {
  const auto r = values.row(k);
  return numerics::Vector(std::vector<double>(r.begin(), r.end()));
}

namespace {

// groups[e] lists rating positions of entity e; column_of picks the other axis.
template <typename ColumnOf>
FeatureMatrix build(const RatingsTable& train, const std::vector<std::vector<std::size_t>>& groups, std::size_t dim,
                    ColumnOf column_of) {
  FeatureMatrix fm{numerics::Matrix(groups.size(), dim)};
  const auto& ratings = train.ratings();
  for (std::size_t e = 0; e < groups.size(); ++e) {
    const auto& positions = groups[e];
    if (positions.empty()) continue;
    double mean = 0.0;
    for (std::size_t p : positions) mean += ratings[p].rating;
    mean /= static_cast<double>(positions.size());
    auto row = fm.values.row(e);
    for (std::size_t p : positions) row[column_of(ratings[p])] = ratings[p].rating - mean;
    const double norm = std::sqrt(kernels::dot(row, row));
    if (norm < 1e-12) {
      std::fill(row.begin(), row.end(), 0.0);
    } else {
      kernels::scale(1.0 / norm, row);
    }
  }
  return fm;
}

}  // namespace

FeatureMatrix build_user_features(const RatingsTable& train) {
  return build(train, train.by_user(), train.item_count(), [](const Rating& r) { return r.item; });
}

FeatureMatrix build_item_features(const RatingsTable& train) {
  return build(train, train.by_item(), train.user_count(), [](const Rating& r) { return r.user; });
}

}  // namespace dmtl::data
