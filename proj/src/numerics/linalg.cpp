#include <algorithm>
#include <cmath>
#include <random>

#include "dmtl/kernels.hpp"
#include "dmtl/numerics.hpp"

namespace dmtl::numerics {

bool Vector::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) + " does not match " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t k = 0; k < n; ++k) m(k, k) = 1.0;
  return m;
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

std::string shape_string(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

std::string shape_string(const Vector& v) { return "(" + std::to_string(v.dim()) + ")"; }

namespace {

void check_affine(const Matrix& w, const Vector& x, const Vector& b) {
  if (w.cols() != x.dim() || b.dim() != w.rows()) {
    throw ShapeError("affine: W" + shape_string(w) + " x" + shape_string(x) + " b" + shape_string(b));
  }
}

void check_same(const Vector& a, const Vector& b, const char* what) {
  if (a.dim() != b.dim()) {
    throw ShapeError(std::string(what) + ": " + shape_string(a) + " vs " + shape_string(b));
  }
}

}  // namespace

Vector affine(const Matrix& w, const Vector& x, const Vector& b) {
  check_affine(w, x, b);
  Vector out(w.rows());
  kernels::active().gemv(w.flat().data(), w.rows(), w.cols(), x.span().data(), out.span().data());
  for (std::size_t r = 0; r < out.dim(); ++r) out[r] += b[r];
  return out;
}

Vector affine_sparse(const Matrix& w, const Vector& x, const Vector& b) {
  check_affine(w, x, b);
  std::vector<std::size_t> nz;
  for (std::size_t c = 0; c < x.dim(); ++c) {
    if (x[c] != 0.0) nz.push_back(c);
  }
  Vector out = b;
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const auto row = w.row(r);
    double acc = 0.0;
    for (std::size_t c : nz) acc += row[c] * x[c];
    out[r] += acc;
  }
  return out;
}

Vector relu(const Vector& x) {
  Vector out(x.dim());
  for (std::size_t k = 0; k < x.dim(); ++k) out[k] = x[k] > 0.0 ? x[k] : 0.0;
  return out;
}

Vector softmax(const Vector& x) {
  if (x.dim() == 0) throw DomainError("softmax of an empty vector");
  const double top = *std::max_element(x.values().begin(), x.values().end());
  Vector out(x.dim());
  double total = 0.0;
  for (std::size_t k = 0; k < x.dim(); ++k) {
    out[k] = std::exp(x[k] - top);
    total += out[k];
  }
  for (std::size_t k = 0; k < x.dim(); ++k) out[k] /= total;
  return out;
}

Vector hadamard(const Vector& a, const Vector& b) {
  check_same(a, b, "hadamard");
  Vector out(a.dim());
  for (std::size_t k = 0; k < a.dim(); ++k) out[k] = a[k] * b[k];
  return out;
}

Vector add(const Vector& a, const Vector& b) {
  check_same(a, b, "add");
  Vector out(a.dim());
  for (std::size_t k = 0; k < a.dim(); ++k) out[k] = a[k] + b[k];
  return out;
}

double mse_loss(const Vector& pred, const Vector& target) {
  check_same(pred, target, "mse_loss");
  if (pred.dim() == 0) throw DomainError("mse_loss of empty vectors");
  double acc = 0.0;
  for (std::size_t k = 0; k < pred.dim(); ++k) {
    const double d = target[k] - pred[k];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.dim());
}

double log_sum_exp(const Vector& x) {
  if (x.dim() == 0) throw DomainError("log_sum_exp of an empty vector");
  const double top = *std::max_element(x.values().begin(), x.values().end());
  double total = 0.0;
  for (double v : x.values()) total += std::exp(v - top);
  return top + std::log(total);
}

double cross_entropy_loss(const Vector& logits, std::size_t cls) {
  if (cls >= logits.dim()) {
    throw IndexError("class " + std::to_string(cls) + " out of range for " + std::to_string(logits.dim()) +
                     " logits");
  }
  return log_sum_exp(logits) - logits[cls];
}

Matrix init_weights(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("init_weights: zero dimension (" + std::to_string(rows) + "x" + std::to_string(cols) + ")");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(cols)));
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = dist(rng);
  return m;
}

Matrix init_bias(std::size_t rows) {
  if (rows == 0) throw ShapeError("init_bias: zero dimension");
  return Matrix(rows, 1);
}

}  // namespace dmtl::numerics
