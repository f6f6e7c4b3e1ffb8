#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace thermocast::features {

// Per-column standardization (population statistics), fit once on source
// training rows and applied unchanged everywhere else.
class Scaler {
 public:
  Scaler() = default;
  Scaler(std::vector<std::string> names, std::vector<double> means, std::vector<double> stds);

  // columns[c] holds every fitted value of column c. Columns whose standard
  // deviation is below 1e-12 are rejected with a ConfigError naming them.
  static Scaler fit(std::vector<std::string> names, const std::vector<std::vector<double>>& columns);

  std::size_t columns() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  double mean(std::size_t col) const { return means_.at(col); }
  double stddev(std::size_t col) const { return stds_.at(col); }

  double transform(std::size_t col, double value) const;
  double inverse(std::size_t col, double value) const;
  void transform_row(std::span<double> row) const;
  void inverse_row(std::span<double> row) const;

  nlohmann::json to_json() const;
  static Scaler from_json(const nlohmann::json& j);

  bool operator==(const Scaler&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<double> means_;
  std::vector<double> stds_;
};

}  // namespace thermocast::features
