#include "thermocast/metrics.hpp"

#include <cassert>
#include <cmath>
#include <sstream>

#include "thermocast/errors.hpp"

namespace thermocast::eval {

nlohmann::json MetricsReport::to_json() const {
  return {{"variant", variant},       {"domain", domain},     {"mae", mae},
          {"rmse", rmse},             {"mse_scaled", mse_scaled}, {"huber_scaled", huber_scaled},
          {"n_windows", n_windows},   {"mae_by_horizon", mae_by_horizon}};
}

MetricsReport compute_metrics(std::span<const double> pred, std::span<const double> obs, std::size_t horizon,
                              const features::Scaler& target_scaler, double huber_delta) {
  if (pred.size() != obs.size()) {
    throw DimensionError("compute_metrics: " + std::to_string(pred.size()) + " predictions vs " +
                         std::to_string(obs.size()) + " observations");
  }
  if (pred.empty()) throw UsageError("compute_metrics: empty input");
  if (horizon == 0 || pred.size() % horizon != 0) {
    throw DimensionError("compute_metrics: " + std::to_string(pred.size()) + " values do not form rows of " +
                         std::to_string(horizon));
  }
  if (!(huber_delta > 0.0)) throw ConfigError("compute_metrics: huber delta must be positive");

  const double mean = target_scaler.mean(0);
  const double inv_std = 1.0 / target_scaler.stddev(0);
  MetricsReport r;
  r.n_windows = pred.size() / horizon;
  r.mae_by_horizon.assign(horizon, 0.0);
  double abs_sum = 0.0, sq_sum = 0.0, sq_scaled = 0.0, huber = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - obs[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
    r.mae_by_horizon[i % horizon] += std::abs(e);
    const double es = (pred[i] - mean) * inv_std - (obs[i] - mean) * inv_std;
    sq_scaled += es * es;
    const double a = std::abs(es);
    huber += a <= huber_delta ? 0.5 * es * es : huber_delta * (a - 0.5 * huber_delta);
  }
  const double n = static_cast<double>(pred.size());
  r.mae = abs_sum / n;
  r.rmse = std::sqrt(sq_sum / n);
  r.mse_scaled = sq_scaled / n;
  r.huber_scaled = huber / n;
  for (auto& m : r.mae_by_horizon) m /= static_cast<double>(r.n_windows);
  if (r.rmse < r.mae * (1.0 - 1e-12)) throw std::logic_error("compute_metrics: RMSE below MAE");
  return r;
}

std::vector<ForecastRow> forecast_report(const model::Model& model, const windows::WindowSet& ws, std::size_t index,
                                         const model::VariantFlags& flags) {
  if (index >= ws.size()) throw UsageError("forecast_report: window index out of range");
  const model::ForwardOutput out = model.forward_one(ws, index, flags);
  const auto y = ws.y_row(index);
  std::vector<ForecastRow> rows(ws.horizon);
  for (std::size_t h = 0; h < ws.horizon; ++h) {
    ForecastRow& row = rows[h];
    row.timestamp = ws.anchors[index] + std::chrono::hours{static_cast<long>(h + 1)};
    row.predicted = out.y_hat[h];
    if (std::isfinite(y[h])) row.observed = y[h];
    row.y_base = out.y_base[h];
    row.delta_ext = out.delta_ext;
    row.s_c = out.s_c;
    row.s_h = out.s_h;
  }
  return rows;
}

std::string forecast_csv(std::span<const ForecastRow> rows) {
  std::ostringstream os;
  os << "timestamp,predicted_c,observed_c,y_base_c,delta_ext_c,s_c,s_h_c\n";
  for (const auto& r : rows) {
    os << format_timestamp(r.timestamp) << ',' << format_double(r.predicted) << ','
       << (r.observed ? format_double(*r.observed) : std::string()) << ',' << format_double(r.y_base) << ','
       << format_double(r.delta_ext) << ',' << format_double(r.s_c) << ',' << format_double(r.s_h) << '\n';
  }
  return os.str();
}

}  // namespace thermocast::eval
