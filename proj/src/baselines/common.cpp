#include "dmtl/baselines.hpp"

namespace dmtl::baselines {

BaselineModel::BaselineModel(const data::RatingsTable& train)
    : user_count_(train.user_count(), 0),
      item_count_(train.item_count(), 0),
      user_mean_(train.user_count(), 0.0),
      item_mean_(train.item_count(), 0.0),
      scale_(train.scale()),
      global_mean_(train.global_mean()) {
  for (const data::Rating& r : train.ratings()) {
    ++user_count_[r.user];
    ++item_count_[r.item];
    user_mean_[r.user] += r.rating;
    item_mean_[r.item] += r.rating;
  }
  for (std::size_t u = 0; u < user_mean_.size(); ++u) {
    if (user_count_[u] > 0) user_mean_[u] /= static_cast<double>(user_count_[u]);
  }
  for (std::size_t i = 0; i < item_mean_.size(); ++i) {
    if (item_count_[i] > 0) item_mean_[i] /= static_cast<double>(item_count_[i]);
  }
}

std::string tag(Variant v) {
  switch (v) {
    case Variant::bias: return "bias";
    case Variant::knn_basic_user: return "knn_basic_user";
    case Variant::knn_means_user: return "knn_means_user";
    case Variant::knn_basic_item: return "knn_basic_item";
    case Variant::knn_means_item: return "knn_means_item";
    case Variant::svd: return "svd";
    case Variant::svdpp: return "svdpp";
    case Variant::nmf: return "nmf";
    case Variant::slope_one: return "slope_one";
  }
  return "unknown";
}

std::string display_name(Variant v) {
  switch (v) {
    case Variant::bias: return "Baseline";
    case Variant::knn_basic_user: return "KNNBasic (User-Based)";
    case Variant::knn_means_user: return "KNNWithMeans (User-Based)";
    case Variant::knn_basic_item: return "KNNBasic (Item-Based)";
    case Variant::knn_means_item: return "KNNWithMeans (Item-Based)";
    case Variant::svd: return "SVD";
    case Variant::svdpp: return "SVD++";
    case Variant::nmf: return "NMF";
    case Variant::slope_one: return "Slope One";
  }
  return "unknown";
}

std::unique_ptr<BaselineModel> fit(Variant variant, const data::RatingsTable& train, const BaselineOptions& o) {
  if (train.empty()) throw DomainError("cannot fit " + tag(variant) + " on an empty table");
  auto knn = [&](bool user_based, bool with_means) {
    return std::make_unique<KnnModel>(train, KnnOptions{user_based, with_means, o.knn_k, o.knn_min_k});
  };
  switch (variant) {
    case Variant::bias: return std::make_unique<BiasModel>(train, o.bias);
    case Variant::knn_basic_user: return knn(true, false);
    case Variant::knn_means_user: return knn(true, true);
    case Variant::knn_basic_item: return knn(false, false);
    case Variant::knn_means_item: return knn(false, true);
    case Variant::svd: return std::make_unique<SvdModel>(train, o.svd);
    case Variant::svdpp: return std::make_unique<SvdppModel>(train, o.svdpp);
    case Variant::nmf: return std::make_unique<NmfModel>(train, o.nmf);
    case Variant::slope_one: return std::make_unique<SlopeOneModel>(train);
  }
  throw ConfigError("unknown baseline variant");
}

double predict_group(const BaselineModel& model, std::span<const UserIndex> members, ItemIndex item) {
  if (members.empty()) throw DomainError("predict_group: empty group");
  double acc = 0.0;
  for (UserIndex u : members) acc += model.predict(u, item);
  return model.scale().clip(acc / static_cast<double>(members.size()));
}

}  // namespace dmtl::baselines
