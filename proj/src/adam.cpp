#include "thermocast/adam.hpp"

#include <cmath>

#include "thermocast/errors.hpp"

namespace thermocast::ndgrad {

Adam::Adam(std::vector<Parameter> params, AdamConfig config) : params_(std::move(params)) {
  if (!(config.lr > 0.0) || config.beta1 < 0.0 || config.beta1 >= 1.0 || config.beta2 < 0.0 ||
      config.beta2 >= 1.0 || !(config.eps > 0.0)) {
    throw ConfigError("Adam: invalid hyperparameters");
  }
  state_.config = config;
  for (const auto& p : params_) {
    state_.m.emplace_back(p.tensor.size(), 0.0);
    state_.v.emplace_back(p.tensor.size(), 0.0);
  }
}

void Adam::step() {
  for (const auto& p : params_) {
    if (!p.tensor.has_grad()) {
      throw UsageError("Adam::step: parameter '" + p.name + "' has no gradient");
    }
  }
  const auto& c = state_.config;
  ++state_.t;
  const double t = static_cast<double>(state_.t);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto values = params_[k].tensor.mutable_values();
    const auto grad = params_[k].tensor.grad();
    auto& m = state_.m[k];
    auto& v = state_.v[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      values[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

}  // namespace thermocast::ndgrad
