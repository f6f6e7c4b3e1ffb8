#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermocast/model.hpp"
#include "thermocast/scaler.hpp"
#include "thermocast/windows.hpp"

namespace thermocast::train {

using model::Model;
using model::VariantFlags;
using ndgrad::Tensor;

inline constexpr double kDomainLossWeight = 0.1;

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 64;
  std::size_t epochs = 15;
  double lambda_max = 0.01;
  std::size_t warmup_epochs = 3;
  double w_cal = 1.0;
  double huber_delta = 1.0;
  std::uint64_t seed = 42;
  // Last fraction of the (chronological) source windows, held out for the
  // per-epoch validation MAE.
  double validation_fraction = 0.1;
  // 0 runs full passes over the source windows.
  std::size_t max_steps_per_epoch = 0;

  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& j);
};

// GRL coefficient: 0 during warm-up, then lambda_max * (2 / (1 + exp(-10 p)) - 1)
// with p in [0, 1] the progress through the post-warm-up steps.
double lambda_schedule(std::size_t epoch, std::size_t step, std::size_t steps_per_epoch,
                       const TrainConfig& cfg);

struct LossInputs {
  const model::Batch* source = nullptr;       // labeled
  const model::Batch* calibration = nullptr;  // labeled, optional
  const model::Batch* domain = nullptr;       // mixed, optional
  std::vector<double> domain_labels;          // 0 source, 1 target
};

struct LossTerms {
  Tensor total;
  double source = 0.0;
  double calibration = 0.0;
  double domain_bce = 0.0;
  double total_value = 0.0;
};

// L = Huber(source) + w_cal * Huber(calibration) + 0.1 * BCE(domain), with the
// Huber terms on standardized temperatures. Terms whose batch is absent, or
// whose component the flags disable, contribute 0. The batches go through the
// model as one concatenated forward pass.
LossTerms total_loss(const Model& model, const LossInputs& inputs, double lambda_adv, const TrainConfig& cfg,
                     const VariantFlags& flags, const features::Scaler& target_scaler);

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double lambda = 0.0;
  double source = 0.0;
  double calibration = 0.0;
  double domain_bce = 0.0;
  double total = 0.0;
  double w_cal = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  double source_huber = 0.0;
  double calibration_huber = 0.0;
  double domain_bce = 0.0;
  double total = 0.0;
  double lambda = 0.0;
  double validation_mae = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  // One JSON object per line.
  std::string to_jsonl() const;
  bool operator==(const TrainHistory&) const = default;
};

struct TrainOptions {
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  Model model;
  TrainHistory history;
};

// Minibatch Adam over `epochs` passes of the source windows. Each step draws a
// source batch, a calibration batch (cycling through the calibration pool)
// and a domain batch of half source, half unlabeled target windows.
// Deterministic for a fixed cfg.seed. Throws DivergenceError on a non-finite
// loss.
TrainResult train(const Model& initial, const windows::WindowSet& source, const windows::DomainSplit& target,
                  const TrainConfig& cfg, const VariantFlags& flags, const features::Scaler& target_scaler,
                  const TrainOptions& options = {});

}  // namespace thermocast::train
