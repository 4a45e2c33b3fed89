#include "dmtl/baselines.hpp"

namespace dmtl::baselines {

BiasModel::BiasModel(const data::RatingsTable& train, const BiasOptions& options)
    : BaselineModel(train), bu_(train.user_count(), 0.0), bi_(train.item_count(), 0.0) {
  const auto& ratings = train.ratings();
  std::vector<double> acc;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    acc.assign(bu_.size(), 0.0);
    for (const data::Rating& r : ratings) acc[r.user] += r.rating - global_mean_ - bi_[r.item];
    for (std::size_t u = 0; u < bu_.size(); ++u) {
      bu_[u] = acc[u] / (options.reg_user + static_cast<double>(user_count_[u]));
    }
    acc.assign(bi_.size(), 0.0);
    for (const data::Rating& r : ratings) acc[r.item] += r.rating - global_mean_ - bu_[r.user];
    for (std::size_t i = 0; i < bi_.size(); ++i) {
      bi_[i] = acc[i] / (options.reg_item + static_cast<double>(item_count_[i]));
    }
  }
}

double BiasModel::estimate(UserIndex u, ItemIndex i) const {
  double est = global_mean_;
  if (known_user(u)) est += bu_[u];
  if (known_item(i)) est += bi_[i];
  return est;
}

}  // namespace dmtl::baselines
