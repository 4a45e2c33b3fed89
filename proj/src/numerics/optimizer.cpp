#include <cmath>

#include "dmtl/kernels.hpp"
#include "dmtl/numerics.hpp"

namespace dmtl::numerics {

OptimizerState::OptimizerState(AdamConfig config, std::span<Parameter* const> params) : config_(config) {
  first_.reserve(params.size());
  second_.reserve(params.size());
  for (const Parameter* p : params) {
    first_.emplace_back(p->value.rows(), p->value.cols());
    second_.emplace_back(p->value.rows(), p->value.cols());
  }
}

void OptimizerState::step(std::span<Parameter* const> params) {
  if (params.size() != first_.size()) {
    throw ShapeError("optimizer_step: expected " + std::to_string(first_.size()) + " parameters, got " +
                     std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Parameter& p = *params[k];
    if (p.value.rows() != first_[k].rows() || p.value.cols() != first_[k].cols() ||
        p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
      throw ShapeError("optimizer_step: parameter '" + p.name + "' " + shape_string(p.value) +
                       " does not match state " + shape_string(first_[k]));
    }
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double bc1 = 1.0 - std::pow(config_.beta1, t);
  const double bc2 = 1.0 - std::pow(config_.beta2, t);
  const auto& kt = kernels::active();
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    kt.adam_update(p.value.flat().data(), p.grad.flat().data(), first_[k].flat().data(), second_[k].flat().data(),
                   p.value.size(), config_.learning_rate, config_.beta1, config_.beta2, config_.epsilon, bc1, bc2);
  }
}

}  // namespace dmtl::numerics
