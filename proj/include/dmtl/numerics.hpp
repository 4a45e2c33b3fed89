#pragma once

// Dense linear algebra, the layer primitives of the multi-task network, both
// losses, a small reverse-mode tape and the adaptive-moment optimizer. All
// arithmetic is 64-bit.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "dmtl/error.hpp"

namespace dmtl::numerics {

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim, double fill = 0.0) : data_(dim, fill) {}
  Vector(std::initializer_list<double> values) : data_(values) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t dim() const noexcept { return data_.size(); }
  double& operator[](std::size_t k) noexcept { return data_[k]; }
  double operator[](std::size_t k) const noexcept { return data_[k]; }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool all_finite() const noexcept;
  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> data_;
};

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }

  void fill(double value);
  bool all_finite() const noexcept;
  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::string shape_string(const Matrix& m);
std::string shape_string(const Vector& v);

// ---- layer primitives ------------------------------------------------------

/// W x + b.
Vector affine(const Matrix& w, const Vector& x, const Vector& b);
/// W x + b, touching only the non-zero entries of x.
Vector affine_sparse(const Matrix& w, const Vector& x, const Vector& b);
Vector relu(const Vector& x);
/// Max-shifted softmax; never overflows.
Vector softmax(const Vector& x);
Vector hadamard(const Vector& a, const Vector& b);
Vector add(const Vector& a, const Vector& b);

double mse_loss(const Vector& pred, const Vector& target);
/// -log softmax(logits)[cls], evaluated through log-sum-exp.
double cross_entropy_loss(const Vector& logits, std::size_t cls);
double log_sum_exp(const Vector& x);

// ---- parameters and initialization ----------------------------------------

/// A trainable tensor and its accumulated gradient. Bias vectors are n x 1.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}
  void zero_grad() { grad.fill(0.0); }
};

/// Zero-mean Gaussian weights with variance 2 / fan_in (fan_in = cols).
Matrix init_weights(std::size_t rows, std::size_t cols, std::uint64_t seed);
Matrix init_bias(std::size_t rows);

// ---- reverse-mode tape -----------------------------------------------------

class GradTape;

/// Handle to a value recorded on a tape. Carries the owning tape's id so a node
/// from another tape is rejected instead of silently mis-indexed.
struct NodeRef {
  std::uint64_t tape = 0;
  std::size_t index = 0;
};

/// Records the primitive applications of one forward pass. backward() walks the
/// record once in reverse and accumulates into each Parameter::grad; the
/// referenced parameters must outlive the tape.
class GradTape {
 public:
  GradTape();
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;

  /// Constant input (no gradient flows into it).
  NodeRef constant(Vector value);
  /// Trainable vector input; its gradient is readable after backward().
  NodeRef variable(Vector value);

  NodeRef affine(Parameter& w, NodeRef x, Parameter* b);
  NodeRef add(NodeRef a, NodeRef b);
  NodeRef add_bias(NodeRef a, Parameter& b);
  NodeRef relu(NodeRef x);
  NodeRef softmax(NodeRef x);
  NodeRef hadamard(NodeRef a, NodeRef b);
  NodeRef mean(std::span<const NodeRef> xs);
  NodeRef scale(NodeRef x, double factor);
  /// Mean squared error between scalar nodes and targets; scalar output.
  NodeRef mse(std::span<const NodeRef> preds, std::span<const double> targets);
  NodeRef cross_entropy(NodeRef logits, std::size_t cls);

  const Vector& value(NodeRef n) const;
  const Vector& grad(NodeRef n) const;
  double scalar(NodeRef n) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Seeds d loss / d loss = 1 and propagates. Throws TapeError for a node that
  /// is not a scalar on this tape, or when called twice.
  void backward(NodeRef loss);

 private:
  enum class Op : std::uint8_t { constant, variable, affine, add, add_bias, relu, softmax, hadamard, mean, scale, mse, cross_entropy };

  struct Node {
    Op op = Op::constant;
    bool needs_grad = false;
    bool sparse = false;
    Vector value;
    Vector grad;
    std::size_t a = 0;
    std::size_t b = 0;
    Parameter* pw = nullptr;
    Parameter* pb = nullptr;
    double scalar = 0.0;
    std::size_t cls = 0;
    std::vector<std::size_t> inputs;
    std::vector<double> targets;
    std::vector<std::size_t> nonzero;
  };

  std::size_t check(NodeRef n) const;
  NodeRef push(Node node);

  std::uint64_t id_;
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

// ---- optimizer -------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment accumulators for a fixed list of parameters.
class OptimizerState {
 public:
  OptimizerState(AdamConfig config, std::span<Parameter* const> params);

  /// One bias-corrected step from the gradients held in each Parameter.
  void step(std::span<Parameter* const> params);
  std::uint64_t step_count() const noexcept { return step_; }
  const AdamConfig& config() const noexcept { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
};

}  // namespace dmtl::numerics
