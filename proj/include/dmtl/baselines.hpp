#pragma once

// Individual-level collaborative-filtering recommenders used as comparison
// points: biases-only, user/item KNN (plain and mean-centred), biased SVD,
// SVD++, NMF and Slope One. Every model predicts for any (user, item) in the
// table's index maps and falls back to simpler statistics where it has no
// information. Groups are scored by averaging member predictions.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dmtl/dataio.hpp"
#include "dmtl/numerics.hpp"

namespace dmtl::baselines {

using data::ItemIndex;
using data::UserIndex;
using numerics::Matrix;

enum class Variant {
  bias,
  knn_basic_user,
  knn_means_user,
  knn_basic_item,
  knn_means_item,
  svd,
  svdpp,
  nmf,
  slope_one,
};

constexpr Variant kAllVariants[] = {Variant::bias,           Variant::knn_basic_user, Variant::knn_means_user,
                                    Variant::knn_basic_item, Variant::knn_means_item, Variant::svd,
                                    Variant::svdpp,          Variant::nmf,            Variant::slope_one};

std::string tag(Variant v);
/// Row label used in reports, e.g. "KNNBasic (User-Based)".
std::string display_name(Variant v);

class BaselineModel {
 public:
  virtual ~BaselineModel() = default;
  virtual Variant variant() const = 0;
  /// Unclipped estimate.
  virtual double estimate(UserIndex u, ItemIndex i) const = 0;
  /// Estimate clipped to the rating scale.
  double predict(UserIndex u, ItemIndex i) const { return scale_.clip(estimate(u, i)); }
  const data::RatingScale& scale() const noexcept { return scale_; }
  double global_mean() const noexcept { return global_mean_; }

 protected:
  explicit BaselineModel(const data::RatingsTable& train);

  /// Per-entity rating counts and means from the training table.
  std::vector<std::size_t> user_count_, item_count_;
  std::vector<double> user_mean_, item_mean_;
  data::RatingScale scale_;
  double global_mean_ = 0.0;

  bool known_user(UserIndex u) const noexcept { return u < user_count_.size() && user_count_[u] > 0; }
  bool known_item(ItemIndex i) const noexcept { return i < item_count_.size() && item_count_[i] > 0; }
  double user_mean_or_global(UserIndex u) const noexcept { return known_user(u) ? user_mean_[u] : global_mean_; }
};

// ---- biases ----------------------------------------------------------------

struct BiasOptions {
  std::size_t epochs = 10;
  double reg_user = 15.0;
  double reg_item = 10.0;
};

/// r = mu + b_u + b_i, fitted by alternating regularized least squares.
class BiasModel final : public BaselineModel {
 public:
  BiasModel(const data::RatingsTable& train, const BiasOptions& options);
  Variant variant() const override { return Variant::bias; }
  double estimate(UserIndex u, ItemIndex i) const override;
  const std::vector<double>& user_bias() const noexcept { return bu_; }
  const std::vector<double>& item_bias() const noexcept { return bi_; }

 private:
  std::vector<double> bu_, bi_;
};

// ---- neighbourhood ---------------------------------------------------------

struct KnnOptions {
  bool user_based = true;
  bool with_means = false;
  std::size_t k = 40;
  std::size_t min_k = 1;
};

/// Cosine similarity over co-rated entries. Prediction uses the k most similar
/// positively-correlated entities that rated the target.
class KnnModel final : public BaselineModel {
 public:
  KnnModel(const data::RatingsTable& train, const KnnOptions& options);
  Variant variant() const override;
  double estimate(UserIndex u, ItemIndex i) const override;
  double similarity(std::size_t a, std::size_t b) const { return sim_(a, b); }
  const Matrix& similarities() const noexcept { return sim_; }

 private:
  KnnOptions options_;
  Matrix sim_;
  /// For user-based: per item, (user, rating) pairs; item-based: per user, (item, rating).
  std::vector<std::vector<std::pair<std::uint32_t, double>>> raters_;
};

// ---- factorization ---------------------------------------------------------

struct SvdOptions {
  std::size_t factors = 100;
  std::size_t epochs = 20;
  double learning_rate = 0.005;
  double reg = 0.02;
  double init_std = 0.1;
  std::uint64_t seed = 42;
};

/// r = mu + b_u + b_i + p_u . q_i trained by SGD.
class SvdModel final : public BaselineModel {
 public:
  SvdModel(const data::RatingsTable& train, const SvdOptions& options);
  Variant variant() const override { return Variant::svd; }
  double estimate(UserIndex u, ItemIndex i) const override;
  double train_rmse() const noexcept { return train_rmse_; }

 private:
  std::vector<double> bu_, bi_;
  Matrix p_, q_;
  double train_rmse_ = 0.0;
};

struct SvdppOptions {
  std::size_t factors = 20;
  std::size_t epochs = 20;
  double learning_rate = 0.007;
  double reg = 0.02;
  double init_std = 0.1;
  std::uint64_t seed = 42;
};

/// r = mu + b_u + b_i + q_i . (p_u + |N(u)|^-1/2 sum_{j in N(u)} y_j),
/// N(u) = items u rated in training.
class SvdppModel final : public BaselineModel {
 public:
  SvdppModel(const data::RatingsTable& train, const SvdppOptions& options);
  Variant variant() const override { return Variant::svdpp; }
  double estimate(UserIndex u, ItemIndex i) const override;
  double train_rmse() const noexcept { return train_rmse_; }

  /// d (r - r_hat)^2 / d y_j for every j in N(u), rows in N(u) order.
  Matrix implicit_gradient(UserIndex u, ItemIndex i, double r) const;
  const std::vector<ItemIndex>& implicit_items(UserIndex u) const { return rated_[u]; }
  Matrix& implicit_factors() noexcept { return y_; }

 private:
  std::vector<double> implicit_sum(UserIndex u) const;

  std::vector<double> bu_, bi_;
  Matrix p_, q_, y_;
  std::vector<std::vector<ItemIndex>> rated_;
  double train_rmse_ = 0.0;
};

struct NmfOptions {
  std::size_t factors = 15;
  std::size_t epochs = 50;
  double reg_user = 0.06;
  double reg_item = 0.06;
  double init_low = 0.0;
  double init_high = 1.0;
  std::uint64_t seed = 42;
};

/// r = p_u . q_i with p, q >= 0 kept by multiplicative updates.
class NmfModel final : public BaselineModel {
 public:
  NmfModel(const data::RatingsTable& train, const NmfOptions& options);
  Variant variant() const override { return Variant::nmf; }
  double estimate(UserIndex u, ItemIndex i) const override;
  double train_rmse() const noexcept { return train_rmse_; }
  const Matrix& user_factors() const noexcept { return p_; }
  const Matrix& item_factors() const noexcept { return q_; }

 private:
  Matrix p_, q_;
  double train_rmse_ = 0.0;
};

// ---- slope one -------------------------------------------------------------

/// dev(i, j) = mean over users who rated both of (r_ui - r_uj);
/// r_hat(u, i) = mean over j rated by u and co-rated with i of (dev(i, j) + r_uj).
class SlopeOneModel final : public BaselineModel {
 public:
  explicit SlopeOneModel(const data::RatingsTable& train);
  Variant variant() const override { return Variant::slope_one; }
  double estimate(UserIndex u, ItemIndex i) const override;
  /// NaN where no user rated both items.
  double deviation(ItemIndex i, ItemIndex j) const;
  std::uint32_t support(ItemIndex i, ItemIndex j) const { return counts_[i * items_ + j]; }

 private:
  std::size_t items_ = 0;
  std::vector<double> sums_;
  std::vector<std::uint32_t> counts_;
  std::vector<std::vector<std::pair<ItemIndex, double>>> rated_;
};

// ---- factory ---------------------------------------------------------------

struct BaselineOptions {
  BiasOptions bias;
  std::size_t knn_k = 40;
  std::size_t knn_min_k = 1;
  SvdOptions svd;
  SvdppOptions svdpp;
  NmfOptions nmf;
};

std::unique_ptr<BaselineModel> fit(Variant variant, const data::RatingsTable& train, const BaselineOptions& options);

/// Mean of member predictions, clipped to the rating scale.
double predict_group(const BaselineModel& model, std::span<const UserIndex> members, ItemIndex item);

}  // namespace dmtl::baselines
