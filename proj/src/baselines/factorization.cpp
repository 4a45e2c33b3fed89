#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "dmtl/baselines.hpp"
#include "dmtl/kernels.hpp"

namespace dmtl::baselines {

namespace {

Matrix normal_matrix(std::size_t rows, std::size_t cols, double std_dev, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  std::normal_distribution<double> dist(0.0, std_dev);
  for (double& v : m.flat()) v = dist(rng);
  return m;
}

void check_finite(double rmse, const char* model, std::size_t epoch, double lr) {
  if (std::isfinite(rmse)) return;
  std::ostringstream msg;
  msg << model << " diverged at epoch " << epoch << " (non-finite training loss); lower the learning rate (lr="
      << lr << ")";
  throw DivergenceError(msg.str());
}

// Per-user positions into train.ratings(), in a seeded order that is
// reshuffled every epoch.
struct UserOrder {
  std::vector<std::vector<std::size_t>> rows;
  std::vector<std::size_t> users;

  explicit UserOrder(const data::RatingsTable& train) : rows(train.by_user()) {
    for (std::size_t u = 0; u < rows.size(); ++u) {
      if (!rows[u].empty()) users.push_back(u);
    }
  }
  void shuffle(std::mt19937_64& rng) {
    std::shuffle(users.begin(), users.end(), rng);
    for (auto& r : rows) std::shuffle(r.begin(), r.end(), rng);
  }
};

}  // namespace

// ---- SVD -------------------------------------------------------------------

SvdModel::SvdModel(const data::RatingsTable& train, const SvdOptions& o)
    : BaselineModel(train), bu_(train.user_count(), 0.0), bi_(train.item_count(), 0.0) {
  if (o.factors == 0) throw ConfigError("SVD: factors must be at least 1");
  std::mt19937_64 rng(o.seed);
  p_ = normal_matrix(train.user_count(), o.factors, o.init_std, rng);
  q_ = normal_matrix(train.item_count(), o.factors, o.init_std, rng);

  const auto& ratings = train.ratings();
  std::vector<std::size_t> order(ratings.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t f = o.factors;
  const double lr = o.learning_rate, reg = o.reg;
  for (std::size_t epoch = 0; epoch < o.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sq = 0.0;
    for (std::size_t idx : order) {
      const data::Rating& r = ratings[idx];
      double* pu = p_.row(r.user).data();
      double* qi = q_.row(r.item).data();
      const double err = r.rating - (global_mean_ + bu_[r.user] + bi_[r.item] + kernels::active().dot(pu, qi, f));
      sq += err * err;
      bu_[r.user] += lr * (err - reg * bu_[r.user]);
      bi_[r.item] += lr * (err - reg * bi_[r.item]);
      for (std::size_t k = 0; k < f; ++k) {
        const double puf = pu[k], qif = qi[k];
        pu[k] += lr * (err * qif - reg * puf);
        qi[k] += lr * (err * puf - reg * qif);
      }
    }
    check_finite(std::sqrt(sq / static_cast<double>(ratings.size())), "SVD", epoch + 1, lr);
  }

  double sq = 0.0;
  for (const data::Rating& r : ratings) {
    const double e = r.rating - estimate(r.user, r.item);
    sq += e * e;
  }
  train_rmse_ = std::sqrt(sq / static_cast<double>(ratings.size()));
}

double SvdModel::estimate(UserIndex u, ItemIndex i) const {
  double est = global_mean_;
  const bool ku = known_user(u), ki = known_item(i);
  if (ku) est += bu_[u];
  if (ki) est += bi_[i];
  if (ku && ki) est += kernels::dot(p_.row(u), q_.row(i));
  return est;
}

// ---- SVD++ -----------------------------------------------------------------

SvdppModel::SvdppModel(const data::RatingsTable& train, const SvdppOptions& o)
    : BaselineModel(train), bu_(train.user_count(), 0.0), bi_(train.item_count(), 0.0), rated_(train.user_count()) {
  if (o.factors == 0) throw ConfigError("SVD++: factors must be at least 1");
  std::mt19937_64 rng(o.seed);
  p_ = normal_matrix(train.user_count(), o.factors, o.init_std, rng);
  q_ = normal_matrix(train.item_count(), o.factors, o.init_std, rng);
  y_ = normal_matrix(train.item_count(), o.factors, o.init_std, rng);
  const auto& ratings = train.ratings();
  for (const data::Rating& r : ratings) rated_[r.user].push_back(r.item);
  for (auto& items : rated_) std::sort(items.begin(), items.end());

  const std::size_t f = o.factors;
  const double lr = o.learning_rate, reg = o.reg;
  const double shrink = 1.0 - lr * reg;
  const auto& k = kernels::active();
  UserOrder order(train);
  std::vector<double> sum(f), offset(f), implicit(f);

  for (std::size_t epoch = 0; epoch < o.epochs; ++epoch) {
    order.shuffle(rng);
    double sq = 0.0;
    for (std::size_t u : order.users) {
      const auto& nu = rated_[u];
      const double s = 1.0 / std::sqrt(static_cast<double>(nu.size()));
      // Every y_j with j in N(u) receives the same update
      //   y_j <- shrink * y_j + lr * err * s * q_i
      // for each of u's ratings, so y_j = scale * y_j(start) + offset holds
      // throughout the user's block and is written back once at the end.
      std::fill(sum.begin(), sum.end(), 0.0);
      for (ItemIndex j : nu) k.axpy(1.0, y_.row(j).data(), sum.data(), f);
      std::fill(offset.begin(), offset.end(), 0.0);
      double scale = 1.0;
      double* pu = p_.row(u).data();

      for (std::size_t idx : order.rows[u]) {
        const data::Rating& r = ratings[idx];
        double* qi = q_.row(r.item).data();
        for (std::size_t c = 0; c < f; ++c) implicit[c] = pu[c] + s * sum[c];
        const double err = r.rating - (global_mean_ + bu_[u] + bi_[r.item] + k.dot(qi, implicit.data(), f));
        sq += err * err;
        bu_[u] += lr * (err - reg * bu_[u]);
        bi_[r.item] += lr * (err - reg * bi_[r.item]);
        const double n = static_cast<double>(nu.size());
        for (std::size_t c = 0; c < f; ++c) {
          const double puf = pu[c], qif = qi[c];
          const double d = lr * err * s * qif;
          pu[c] += lr * (err * qif - reg * puf);
          qi[c] += lr * (err * implicit[c] - reg * qif);
          offset[c] = shrink * offset[c] + d;
          sum[c] = shrink * sum[c] + n * d;
        }
        scale *= shrink;
      }
      for (ItemIndex j : nu) {
        double* yj = y_.row(j).data();
        k.scale(scale, yj, f);
        k.axpy(1.0, offset.data(), yj, f);
      }
    }
    check_finite(std::sqrt(sq / static_cast<double>(ratings.size())), "SVD++", epoch + 1, lr);
  }

  double sq = 0.0;
  for (const data::Rating& r : ratings) {
    const double e = r.rating - estimate(r.user, r.item);
    sq += e * e;
  }
  train_rmse_ = std::sqrt(sq / static_cast<double>(ratings.size()));
}

std::vector<double> SvdppModel::implicit_sum(UserIndex u) const {
  std::vector<double> sum(y_.cols(), 0.0);
  for (ItemIndex j : rated_[u]) kernels::axpy(1.0, y_.row(j), sum);
  return sum;
}

double SvdppModel::estimate(UserIndex u, ItemIndex i) const {
  double est = global_mean_;
  const bool ku = known_user(u), ki = known_item(i);
  if (ku) est += bu_[u];
  if (ki) est += bi_[i];
  if (ku && ki) {
    std::vector<double> v = implicit_sum(u);
    const double s = rated_[u].empty() ? 0.0 : 1.0 / std::sqrt(static_cast<double>(rated_[u].size()));
    for (std::size_t c = 0; c < v.size(); ++c) v[c] = p_(u, c) + s * v[c];
    est += kernels::dot(q_.row(i), v);
  }
  return est;
}

Matrix SvdppModel::implicit_gradient(UserIndex u, ItemIndex i, double r) const {
  const auto& nu = rated_.at(u);
  Matrix g(nu.size(), y_.cols());
  if (nu.empty()) return g;
  const double s = 1.0 / std::sqrt(static_cast<double>(nu.size()));
  const double err = r - estimate(u, i);
  for (std::size_t row = 0; row < nu.size(); ++row) {
    for (std::size_t c = 0; c < y_.cols(); ++c) g(row, c) = -2.0 * err * s * q_(i, c);
  }
  return g;
}

// ---- NMF -------------------------------------------------------------------

NmfModel::NmfModel(const data::RatingsTable& train, const NmfOptions& o) : BaselineModel(train) {
  if (o.factors == 0) throw ConfigError("NMF: factors must be at least 1");
  if (o.init_low < 0.0 || o.init_high < o.init_low) throw ConfigError("NMF: init range must be non-negative");
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> dist(o.init_low, o.init_high);
  const std::size_t f = o.factors;
  p_ = Matrix(train.user_count(), f);
  q_ = Matrix(train.item_count(), f);
  for (double& v : p_.flat()) v = dist(rng);
  for (double& v : q_.flat()) v = dist(rng);

  const auto& ratings = train.ratings();
  Matrix user_num(p_.rows(), f), user_den(p_.rows(), f);
  Matrix item_num(q_.rows(), f), item_den(q_.rows(), f);
  for (std::size_t epoch = 0; epoch < o.epochs; ++epoch) {
    user_num.fill(0.0);
    user_den.fill(0.0);
    item_num.fill(0.0);
    item_den.fill(0.0);
    for (const data::Rating& r : ratings) {
      const double est = kernels::dot(p_.row(r.user), q_.row(r.item));
      kernels::axpy(r.rating, q_.row(r.item), user_num.row(r.user));
      kernels::axpy(est, q_.row(r.item), user_den.row(r.user));
      kernels::axpy(r.rating, p_.row(r.user), item_num.row(r.item));
      kernels::axpy(est, p_.row(r.user), item_den.row(r.item));
    }
    const auto apply = [](Matrix& m, const Matrix& num, Matrix& den, const std::vector<std::size_t>& counts,
                          double reg) {
      for (std::size_t e = 0; e < m.rows(); ++e) {
        const double n = static_cast<double>(counts[e]);
        for (std::size_t c = 0; c < m.cols(); ++c) {
          if (m(e, c) == 0.0) continue;
          den(e, c) += n * reg * m(e, c);
          if (den(e, c) > 0.0) m(e, c) *= num(e, c) / den(e, c);
        }
      }
    };
    apply(p_, user_num, user_den, user_count_, o.reg_user);
    apply(q_, item_num, item_den, item_count_, o.reg_item);
    for (double v : p_.flat()) {
      if (!(v >= 0.0)) throw InvariantError("NMF: negative or non-finite user factor at epoch " + std::to_string(epoch + 1));
    }
    for (double v : q_.flat()) {
      if (!(v >= 0.0)) throw InvariantError("NMF: negative or non-finite item factor at epoch " + std::to_string(epoch + 1));
    }
  }

  double sq = 0.0;
  for (const data::Rating& r : ratings) {
    const double e = r.rating - estimate(r.user, r.item);
    sq += e * e;
  }
  train_rmse_ = std::sqrt(sq / static_cast<double>(ratings.size()));
}

double NmfModel::estimate(UserIndex u, ItemIndex i) const {
  if (!known_user(u) || !known_item(i)) return global_mean_;
  return kernels::dot(p_.row(u), q_.row(i));
}

}  // namespace dmtl::baselines
