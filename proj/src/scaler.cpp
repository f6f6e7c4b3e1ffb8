#include "thermocast/scaler.hpp"

#include <cmath>

#include "thermocast/errors.hpp"

namespace thermocast::features {

Scaler::Scaler(std::vector<std::string> names, std::vector<double> means, std::vector<double> stds)
    : names_(std::move(names)), means_(std::move(means)), stds_(std::move(stds)) {
  if (means_.size() != names_.size() || stds_.size() != names_.size()) {
    throw DimensionError("Scaler: names, means and stds differ in length");
  }
  for (std::size_t c = 0; c < stds_.size(); ++c) {
    if (!(stds_[c] >= 1e-12)) {
      throw ConfigError("Scaler: column '" + names_[c] + "' has zero variance");
    }
  }
}

Scaler Scaler::fit(std::vector<std::string> names, const std::vector<std::vector<double>>& columns) {
  if (columns.size() != names.size()) {
    throw DimensionError("Scaler::fit: " + std::to_string(columns.size()) + " columns for " +
                         std::to_string(names.size()) + " names");
  }
  std::vector<double> means, stds;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto& col = columns[c];
    if (col.empty()) throw ConfigError("Scaler::fit: column '" + names[c] + "' is empty");
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(col.size());
    double var = 0.0;
    for (double v : col) var += (v - mean) * (v - mean);
    var /= static_cast<double>(col.size());
    const double sd = std::sqrt(var);
    if (!(sd >= 1e-12)) {
      throw ConfigError("Scaler::fit: column '" + names[c] + "' has zero variance");
    }
    means.push_back(mean);
    stds.push_back(sd);
  }
  return Scaler(std::move(names), std::move(means), std::move(stds));
}

double Scaler::transform(std::size_t col, double value) const {
  return (value - means_.at(col)) / stds_.at(col);
}

double Scaler::inverse(std::size_t col, double value) const {
  return value * stds_.at(col) + means_.at(col);
}

void Scaler::transform_row(std::span<double> row) const {
  if (row.size() != columns()) throw DimensionError("Scaler::transform_row: width mismatch");
  for (std::size_t c = 0; c < row.size(); ++c) row[c] = transform(c, row[c]);
}

void Scaler::inverse_row(std::span<double> row) const {
  if (row.size() != columns()) throw DimensionError("Scaler::inverse_row: width mismatch");
  for (std::size_t c = 0; c < row.size(); ++c) row[c] = inverse(c, row[c]);
}

nlohmann::json Scaler::to_json() const {
  return {{"names", names_}, {"means", means_}, {"stds", stds_}};
}

Scaler Scaler::from_json(const nlohmann::json& j) {
  return Scaler(j.at("names").get<std::vector<std::string>>(), j.at("means").get<std::vector<double>>(),
                j.at("stds").get<std::vector<double>>());
}

}  // namespace thermocast::features
