#include <algorithm>
#include <atomic>
#include <cmath>

#include "dmtl/kernels.hpp"
#include "dmtl/numerics.hpp"

namespace dmtl::numerics {

namespace {

std::atomic<std::uint64_t> next_tape_id{1};

// Inputs sparser than this go through the gather path.
constexpr double kSparseDensity = 0.25;

void add_into(Vector& dst, const Vector& src) { kernels::axpy(1.0, src.span(), dst.span()); }

}  // namespace

GradTape::GradTape() : id_(next_tape_id.fetch_add(1)) {}

std::size_t GradTape::check(NodeRef n) const {
  if (n.tape != id_ || n.index >= nodes_.size()) {
    throw TapeError("node " + std::to_string(n.index) + " does not belong to this tape");
  }
  return n.index;
}

NodeRef GradTape::push(Node node) {
  nodes_.push_back(std::move(node));
  return NodeRef{id_, nodes_.size() - 1};
}

NodeRef GradTape::constant(Vector value) {
  Node n;
  n.op = Op::constant;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeRef GradTape::variable(Vector value) {
  Node n;
  n.op = Op::variable;
  n.needs_grad = true;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeRef GradTape::affine(Parameter& w, NodeRef x, Parameter* b) {
  const std::size_t xi = check(x);
  const Vector& xv = nodes_[xi].value;
  if (w.value.cols() != xv.dim() || (b != nullptr && b->value.size() != w.value.rows())) {
    throw ShapeError("affine: W" + shape_string(w.value) + " x" + shape_string(xv) +
                     (b ? " b" + shape_string(b->value) : std::string()));
  }
  Node n;
  n.op = Op::affine;
  n.needs_grad = true;
  n.a = xi;
  n.pw = &w;
  n.pb = b;
  n.value = Vector(w.value.rows());

  if (!nodes_[xi].needs_grad) {
    for (std::size_t c = 0; c < xv.dim(); ++c) {
      if (xv[c] != 0.0) n.nonzero.push_back(c);
    }
    n.sparse = static_cast<double>(n.nonzero.size()) <= kSparseDensity * static_cast<double>(xv.dim());
    if (!n.sparse) n.nonzero = {};
  }
  if (n.sparse) {
    for (std::size_t r = 0; r < w.value.rows(); ++r) {
      const auto row = w.value.row(r);
      double acc = 0.0;
      for (std::size_t c : n.nonzero) acc += row[c] * xv[c];
      n.value[r] = acc;
    }
  } else {
    kernels::active().gemv(w.value.flat().data(), w.value.rows(), w.value.cols(), xv.span().data(),
                           n.value.span().data());
  }
  if (b != nullptr) {
    for (std::size_t r = 0; r < n.value.dim(); ++r) n.value[r] += b->value.flat()[r];
  }
  return push(std::move(n));
}

NodeRef GradTape::add(NodeRef a, NodeRef b) {
  const std::size_t ai = check(a);
  const std::size_t bi = check(b);
  Node n;
  n.op = Op::add;
  n.a = ai;
  n.b = bi;
  n.needs_grad = nodes_[ai].needs_grad || nodes_[bi].needs_grad;
  n.value = numerics::add(nodes_[ai].value, nodes_[bi].value);
  return push(std::move(n));
}

NodeRef GradTape::add_bias(NodeRef a, Parameter& b) {
  const std::size_t ai = check(a);
  if (b.value.size() != nodes_[ai].value.dim()) {
    throw ShapeError("add_bias: x" + shape_string(nodes_[ai].value) + " b" + shape_string(b.value));
  }
  Node n;
  n.op = Op::add_bias;
  n.a = ai;
  n.pb = &b;
  n.needs_grad = true;
  n.value = nodes_[ai].value;
  for (std::size_t k = 0; k < n.value.dim(); ++k) n.value[k] += b.value.flat()[k];
  return push(std::move(n));
}

NodeRef GradTape::relu(NodeRef x) {
  const std::size_t xi = check(x);
  Node n;
  n.op = Op::relu;
  n.a = xi;
  n.needs_grad = nodes_[xi].needs_grad;
  n.value = numerics::relu(nodes_[xi].value);
  return push(std::move(n));
}

NodeRef GradTape::softmax(NodeRef x) {
  const std::size_t xi = check(x);
  Node n;
  n.op = Op::softmax;
  n.a = xi;
  n.needs_grad = nodes_[xi].needs_grad;
  n.value = numerics::softmax(nodes_[xi].value);
  return push(std::move(n));
}

NodeRef GradTape::hadamard(NodeRef a, NodeRef b) {
  const std::size_t ai = check(a);
  const std::size_t bi = check(b);
  Node n;
  n.op = Op::hadamard;
  n.a = ai;
  n.b = bi;
  n.needs_grad = nodes_[ai].needs_grad || nodes_[bi].needs_grad;
  n.value = numerics::hadamard(nodes_[ai].value, nodes_[bi].value);
  return push(std::move(n));
}

NodeRef GradTape::mean(std::span<const NodeRef> xs) {
  if (xs.empty()) throw DomainError("mean of zero nodes");
  Node n;
  n.op = Op::mean;
  const std::size_t dim = nodes_[check(xs.front())].value.dim();
  n.value = Vector(dim);
  for (NodeRef x : xs) {
    const std::size_t xi = check(x);
    if (nodes_[xi].value.dim() != dim) throw ShapeError("mean: inputs of different dimension");
    n.inputs.push_back(xi);
    n.needs_grad = n.needs_grad || nodes_[xi].needs_grad;
    add_into(n.value, nodes_[xi].value);
  }
  kernels::scale(1.0 / static_cast<double>(xs.size()), n.value.span());
  return push(std::move(n));
}

NodeRef GradTape::scale(NodeRef x, double factor) {
  const std::size_t xi = check(x);
  Node n;
  n.op = Op::scale;
  n.a = xi;
  n.scalar = factor;
  n.needs_grad = nodes_[xi].needs_grad;
  n.value = nodes_[xi].value;
  kernels::scale(factor, n.value.span());
  return push(std::move(n));
}

NodeRef GradTape::mse(std::span<const NodeRef> preds, std::span<const double> targets) {
  if (preds.size() != targets.size()) throw ShapeError("mse: prediction/target count mismatch");
  if (preds.empty()) throw DomainError("mse over an empty batch");
  Node n;
  n.op = Op::mse;
  double acc = 0.0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const std::size_t pi = check(preds[k]);
    if (nodes_[pi].value.dim() != 1) throw ShapeError("mse: predictions must be scalar nodes");
    n.inputs.push_back(pi);
    n.needs_grad = n.needs_grad || nodes_[pi].needs_grad;
    const double d = targets[k] - nodes_[pi].value[0];
    acc += d * d;
  }
  n.targets.assign(targets.begin(), targets.end());
  n.value = Vector{acc / static_cast<double>(preds.size())};
  return push(std::move(n));
}

NodeRef GradTape::cross_entropy(NodeRef logits, std::size_t cls) {
  const std::size_t li = check(logits);
  Node n;
  n.op = Op::cross_entropy;
  n.a = li;
  n.cls = cls;
  n.needs_grad = nodes_[li].needs_grad;
  n.value = Vector{cross_entropy_loss(nodes_[li].value, cls)};
  return push(std::move(n));
}

const Vector& GradTape::value(NodeRef n) const { return nodes_[check(n)].value; }

const Vector& GradTape::grad(NodeRef n) const {
  const std::size_t i = check(n);
  if (!consumed_) throw TapeError("grad requested before backward");
  return nodes_[i].grad;
}

double GradTape::scalar(NodeRef n) const {
  const Vector& v = value(n);
  if (v.dim() != 1) throw TapeError("node is not a scalar");
  return v[0];
}

void GradTape::backward(NodeRef loss) {
  const std::size_t root = check(loss);
  if (nodes_[root].value.dim() != 1) throw TapeError("backward from a non-scalar node");
  if (consumed_) throw TapeError("tape already replayed");
  consumed_ = true;

  for (std::size_t i = 0; i <= root; ++i) {
    if (nodes_[i].needs_grad) nodes_[i].grad = Vector(nodes_[i].value.dim());
  }
  nodes_[root].grad[0] = 1.0;

  for (std::size_t idx = root + 1; idx-- > 0;) {
    Node& n = nodes_[idx];
    if (!n.needs_grad) continue;
    const Vector& g = n.grad;
    switch (n.op) {
      case Op::constant:
      case Op::variable:
        break;
      case Op::affine: {
        Node& x = nodes_[n.a];
        Matrix& wg = n.pw->grad;
        if (n.sparse) {
          for (std::size_t r = 0; r < g.dim(); ++r) {
            if (g[r] == 0.0) continue;
            auto row = wg.row(r);
            for (std::size_t c : n.nonzero) row[c] += g[r] * x.value[c];
          }
        } else {
          for (std::size_t r = 0; r < g.dim(); ++r) {
            if (g[r] != 0.0) kernels::axpy(g[r], x.value.span(), wg.row(r));
          }
        }
        if (n.pb != nullptr) kernels::axpy(1.0, g.span(), n.pb->grad.flat());
        if (x.needs_grad) {
          const Matrix& w = n.pw->value;
          for (std::size_t r = 0; r < g.dim(); ++r) {
            if (g[r] != 0.0) kernels::axpy(g[r], w.row(r), x.grad.span());
          }
        }
        break;
      }
      case Op::add:
        if (nodes_[n.a].needs_grad) add_into(nodes_[n.a].grad, g);
        if (nodes_[n.b].needs_grad) add_into(nodes_[n.b].grad, g);
        break;
      case Op::add_bias:
        kernels::axpy(1.0, g.span(), n.pb->grad.flat());
        if (nodes_[n.a].needs_grad) add_into(nodes_[n.a].grad, g);
        break;
      case Op::relu: {
        Node& x = nodes_[n.a];
        for (std::size_t k = 0; k < g.dim(); ++k) {
          if (x.value[k] > 0.0) x.grad[k] += g[k];
        }
        break;
      }
      case Op::softmax: {
        Node& x = nodes_[n.a];
        const double gs = kernels::dot(g.span(), n.value.span());
        for (std::size_t k = 0; k < g.dim(); ++k) x.grad[k] += n.value[k] * (g[k] - gs);
        break;
      }
      case Op::hadamard: {
        Node& a = nodes_[n.a];
        Node& b = nodes_[n.b];
        if (a.needs_grad) {
          for (std::size_t k = 0; k < g.dim(); ++k) a.grad[k] += g[k] * b.value[k];
        }
        if (b.needs_grad) {
          for (std::size_t k = 0; k < g.dim(); ++k) b.grad[k] += g[k] * a.value[k];
        }
        break;
      }
      case Op::mean: {
        const double w = 1.0 / static_cast<double>(n.inputs.size());
        for (std::size_t xi : n.inputs) {
          if (nodes_[xi].needs_grad) kernels::axpy(w, g.span(), nodes_[xi].grad.span());
        }
        break;
      }
      case Op::scale:
        if (nodes_[n.a].needs_grad) kernels::axpy(n.scalar, g.span(), nodes_[n.a].grad.span());
        break;
      case Op::mse: {
        const double w = 2.0 * g[0] / static_cast<double>(n.inputs.size());
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          Node& p = nodes_[n.inputs[k]];
          if (p.needs_grad) p.grad[0] += w * (p.value[0] - n.targets[k]);
        }
        break;
      }
      case Op::cross_entropy: {
        Node& l = nodes_[n.a];
        const Vector probs = numerics::softmax(l.value);
        for (std::size_t k = 0; k < probs.dim(); ++k) {
          l.grad[k] += g[0] * (probs[k] - (k == n.cls ? 1.0 : 0.0));
        }
        break;
      }
    }
  }
}

}  // namespace dmtl::numerics
