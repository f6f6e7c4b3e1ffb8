#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermocast/model.hpp"
#include "thermocast/scaler.hpp"
#include "thermocast/util.hpp"

namespace thermocast::eval {

struct MetricsReport {
  double mae = 0.0;           // °C
  double rmse = 0.0;          // °C
  double mse_scaled = 0.0;    // on standardized temperatures
  double huber_scaled = 0.0;  // on standardized temperatures
  std::size_t n_windows = 0;
  std::string variant;
  std::string domain;
  std::vector<double> mae_by_horizon;  // °C, one per lead hour

  nlohmann::json to_json() const;
  bool operator==(const MetricsReport&) const = default;
};

// Pooled over all N*H entries. pred and obs are row-major [N x H]; the scaled
// metrics standardize both with column 0 of target_scaler. Throws
// DimensionError on a size mismatch and UsageError on empty input.
MetricsReport compute_metrics(std::span<const double> pred, std::span<const double> obs, std::size_t horizon,
                              const features::Scaler& target_scaler, double huber_delta = 1.0);

struct ForecastRow {
  TimePoint timestamp;
  double predicted = 0.0;
  std::optional<double> observed;
  double y_base = 0.0;
  double delta_ext = 0.0;
  double s_c = 1.0;
  double s_h = 0.0;
};

// 24 hourly rows for the lead hours after the window's anchor. Non-finite
// entries of the window's y row are reported as unobserved.
std::vector<ForecastRow> forecast_report(const model::Model& model, const windows::WindowSet& ws, std::size_t index,
                                         const model::VariantFlags& flags = {});

// timestamp,predicted_c,observed_c,y_base_c,delta_ext_c,s_c,s_h_c
std::string forecast_csv(std::span<const ForecastRow> rows);

}  // namespace thermocast::eval
