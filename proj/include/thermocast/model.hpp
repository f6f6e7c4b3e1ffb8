#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "thermocast/adam.hpp"
#include "thermocast/ndgrad.hpp"
#include "thermocast/windows.hpp"

namespace thermocast::model {

using ndgrad::Parameter;
using ndgrad::Tensor;

struct ModelDims {
  std::size_t dynamic_features = features::kDynamicFeatures;
  std::size_t context_features = features::kContextFeatures;
  std::size_t window = windows::kLookback;
  std::size_t horizon = windows::kHorizon;
  std::size_t hidden = 64;
  std::size_t ext_hidden = 32;
  std::size_t phy_hidden = 16;
  std::size_t disc_hidden = 32;

  bool operator==(const ModelDims&) const = default;
};

// Which components a run keeps. Disabled branches are bypassed: s_c = 1,
// s_h = 0 without F_phy, δ_ext = 0 without F_ext, no domain loss without the
// discriminator, no calibration term without calibration.
struct VariantFlags {
  bool adversarial = true;
  bool calibration = true;
  bool physical = true;
  bool external = true;
};

enum class Variant { full, no_adv, no_cal, no_phy, no_ext, lstm_only };

inline constexpr Variant kAllVariants[] = {Variant::full,   Variant::no_adv, Variant::no_cal,
                                           Variant::no_phy, Variant::no_ext, Variant::lstm_only};

VariantFlags flags_of(Variant v);
std::string_view name_of(Variant v);   // "full", "no_adv", ...
std::string_view label_of(Variant v);  // "AI-Temp (Full)", "AI-Temp (- Adv)", ...
Variant parse_variant(std::string_view name);

// Model inputs for B windows. diff_steps holds the W-1 first differences of
// the dynamic features, each [B x F].
struct Batch {
  std::vector<Tensor> diff_steps;
  Tensor last_step;  // [B x F]
  Tensor context;    // [B x C]
  Tensor t_last;     // [B x 1] °C
  Tensor target;     // [B x H] °C, undefined for unlabeled batches
  std::size_t size = 0;
};

Batch make_batch(const windows::WindowSet& ws, std::span<const std::size_t> indices, bool with_target = true);
Batch make_batch(const windows::WindowSet& ws, bool with_target = true);
// Row-wise concatenation; the target is kept only if every part has one.
Batch concat_batches(const std::vector<const Batch*>& parts);

struct BackboneOutput {
  Tensor y_base;  // [B x H]
  Tensor hidden;  // [B x hidden]
};

struct PhysicalOutput {
  Tensor s_c;  // [B x 1], in [0.9, 1.1]
  Tensor s_h;  // [B x 1] °C
};

struct BatchOutput {
  Tensor y_hat;
  Tensor y_base;
  Tensor s_c;
  Tensor s_h;
  Tensor delta_ext;
  Tensor domain_prob;  // [B x 1]
  Tensor hidden;
};

// One window's forward pass in plain values.
struct ForwardOutput {
  std::vector<double> y_hat;
  std::vector<double> y_base;
  double s_c = 1.0;
  double s_h = 0.0;
  double delta_ext = 0.0;
  double domain_prob = 0.5;
  std::vector<double> final_hidden;
};

struct ModelParams {
  Tensor lstm_w_input;   // [F x 4h], gate blocks i | f | g | o
  Tensor lstm_w_hidden;  // [h x 4h]
  Tensor lstm_bias;      // [4h]
  Tensor head_w;         // [h x H]
  Tensor head_b;         // [H]
  Tensor ext_w1, ext_b1, ext_w2, ext_b2;
  Tensor phy_w1, phy_b1, phy_w2, phy_b2;
  Tensor disc_w1, disc_b1, disc_w2, disc_b2;
};

// Copies share parameter storage (tensors are handles); use clone() for an
// independent model.
class Model {
 public:
  // Uniform(-k, k) init with k = 1/sqrt(fan_in); forget-gate bias 1.
  Model(ModelDims dims, std::uint64_t seed);
  static Model zeros(ModelDims dims);

  const ModelDims& dims() const { return dims_; }
  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }

  // Every parameter, or those a variant trains.
  std::vector<Parameter> parameters() const;
  std::vector<Parameter> parameters(const VariantFlags& flags) const;
  std::size_t parameter_count(const VariantFlags& flags) const;

  BackboneOutput lstm_backbone(const std::vector<Tensor>& diff_steps, const Tensor& t_last) const;
  Tensor f_ext(const Tensor& last_step) const;
  PhysicalOutput f_phy(const Tensor& context) const;
  Tensor discriminate(const Tensor& hidden, double lambda_adv) const;

  // y_hat = y_base * s_c + δ_ext + s_h
  BatchOutput forward(const Batch& batch, double lambda_adv, const VariantFlags& flags = {}) const;
  ForwardOutput forward_one(const windows::WindowSet& ws, std::size_t index, const VariantFlags& flags = {}) const;

  // Deep copy of all parameter values (fresh graph leaves).
  Model clone() const;

 private:
  explicit Model(ModelDims dims);
  ModelDims dims_;
  ModelParams params_;
};

// y_hat for every window, row-major [N x H], evaluated in chunks without a graph.
std::vector<double> predict(const Model& model, const windows::WindowSet& ws, const VariantFlags& flags = {},
                            std::size_t chunk = 256);

}  // namespace thermocast::model
