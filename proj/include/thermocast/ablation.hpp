#pragma once

#include <functional>
#include <string>
#include <vector>

#include "thermocast/metrics.hpp"
#include "thermocast/pipeline.hpp"
#include "thermocast/train.hpp"

namespace thermocast::eval {

struct AblationCell {
  model::Variant variant = model::Variant::full;
  std::string domain;
  bool failed = false;
  std::string error;  // set when failed
  MetricsReport metrics;

  bool operator==(const AblationCell&) const = default;
};

// Variants x target domains, variant-major.
struct AblationTable {
  std::vector<model::Variant> variants;
  std::vector<std::string> domains;
  std::vector<AblationCell> cells;

  const AblationCell& at(model::Variant v, const std::string& domain) const;

  // Aligned text: one row per variant, MAE/RMSE/MSE/Huber per domain.
  std::string render() const;
  std::string to_jsonl() const;
  std::string to_csv() const;
  bool operator==(const AblationTable&) const = default;
};

struct AblationOptions {
  // Concurrent training runs; each run is single-threaded.
  std::size_t workers = 1;
  std::function<void(const AblationCell&)> on_cell;
};

// Trains every variant once per target domain from the same initial weights
// and batch seed, then scores it on that domain's test windows. A run that
// throws is recorded as a failed cell and the harness moves on.
AblationTable run_ablation(const data::PreparedData& data, const train::TrainConfig& cfg,
                           const std::vector<model::Variant>& variants = {std::begin(model::kAllVariants),
                                                                          std::end(model::kAllVariants)},
                           const AblationOptions& options = {});

// One cell of the table: train `variant` against `target` and score its test set.
AblationCell run_variant(const data::PreparedData& data, const data::PreparedTarget& target,
                         const train::TrainConfig& cfg, model::Variant variant,
                         train::TrainHistory* history = nullptr);

}  // namespace thermocast::eval
