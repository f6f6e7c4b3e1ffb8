#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "thermocast/ndgrad.hpp"

namespace thermocast::ndgrad {

struct Parameter {
  std::string name;
  Tensor tensor;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;
};

// Bias-corrected Adam. Updates parameters in place; gradients are left for the
// caller to zero.
class Adam {
 public:
  explicit Adam(std::vector<Parameter> params, AdamConfig config = {});

  // Throws UsageError naming the first parameter without a gradient.
  void step();
  void zero_grad();

  const AdamState& state() const { return state_; }
  const std::vector<Parameter>& parameters() const { return params_; }

 private:
  std::vector<Parameter> params_;
  AdamState state_;
};

}  // namespace thermocast::ndgrad
