#include "thermocast/ablation.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>
#include <sstream>
#include <thread>

#include "thermocast/errors.hpp"

namespace thermocast::eval {

const AblationCell& AblationTable::at(model::Variant v, const std::string& domain) const {
  for (const auto& c : cells)
    if (c.variant == v && c.domain == domain) return c;
  throw UsageError("ablation table has no cell for " + std::string(model::name_of(v)) + " / " + domain);
}

std::string AblationTable::render() const {
  constexpr int name_w = 20, num_w = 8;
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-*s", name_w, "");
  os << buf;
  for (const auto& d : domains) {
    const int width = 4 * num_w;
    std::string title = d.size() > static_cast<std::size_t>(width - 1) ? d.substr(0, width - 1) : d;
    const int pad = width - static_cast<int>(title.size());
    os << std::string(pad / 2 + pad % 2, ' ') << title << std::string(pad / 2, ' ');
  }
  os << '\n';
  std::snprintf(buf, sizeof buf, "%-*s", name_w, "Model");
  os << buf;
  for (std::size_t i = 0; i < domains.size(); ++i) {
    for (const char* m : {"MAE", "RMSE", "MSE", "Huber"}) {
      std::snprintf(buf, sizeof buf, "%*s", num_w, m);
      os << buf;
    }
  }
  os << '\n' << std::string(name_w + 4 * num_w * domains.size(), '-') << '\n';
  for (const auto v : variants) {
    std::snprintf(buf, sizeof buf, "%-*s", name_w, std::string(model::label_of(v)).c_str());
    os << buf;
    for (const auto& d : domains) {
      const AblationCell& c = at(v, d);
      if (c.failed) {
        for (int k = 0; k < 4; ++k) {
          std::snprintf(buf, sizeof buf, "%*s", num_w, "failed");
          os << buf;
        }
        continue;
      }
      for (double x : {c.metrics.mae, c.metrics.rmse, c.metrics.mse_scaled}) {
        std::snprintf(buf, sizeof buf, "%*.2f", num_w, x);
        os << buf;
      }
      std::snprintf(buf, sizeof buf, "%*.3f", num_w, c.metrics.huber_scaled);
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

std::string AblationTable::to_jsonl() const {
  std::ostringstream os;
  for (const auto& c : cells) {
    nlohmann::json j = c.metrics.to_json();
    j["variant"] = model::name_of(c.variant);
    j["label"] = model::label_of(c.variant);
    j["domain"] = c.domain;
    j["failed"] = c.failed;
    if (c.failed) j["error"] = c.error;
    os << j.dump() << '\n';
  }
  return os.str();
}

std::string AblationTable::to_csv() const {
  std::ostringstream os;
  os << "variant,domain,mae,rmse,mse_scaled,huber_scaled,n_windows,failed\n";
  for (const auto& c : cells) {
    os << model::name_of(c.variant) << ',' << c.domain << ',';
    if (c.failed) {
      os << ",,,,," << 1 << '\n';
    } else {
      os << format_double(c.metrics.mae) << ',' << format_double(c.metrics.rmse) << ','
         << format_double(c.metrics.mse_scaled) << ',' << format_double(c.metrics.huber_scaled) << ','
         << c.metrics.n_windows << ",0\n";
    }
  }
  return os.str();
}

AblationCell run_variant(const data::PreparedData& data, const data::PreparedTarget& target,
                         const train::TrainConfig& cfg, model::Variant variant, train::TrainHistory* history) {
  AblationCell cell;
  cell.variant = variant;
  cell.domain = target.name;
  try {
    const model::VariantFlags flags = model::flags_of(variant);
    train::TrainConfig run_cfg = cfg;
    if (!flags.calibration) run_cfg.w_cal = 0.0;
    const model::Model initial(model::ModelDims{}, derive_seed(cfg.seed, "model"));
    train::TrainResult result =
        train::train(initial, data.source, target.split, run_cfg, flags, data.scalers.target);
    if (target.split.test.empty()) throw UsageError(target.name + ": empty test split");
    const auto pred = model::predict(result.model, target.split.test, flags);
    cell.metrics = compute_metrics(pred, target.split.test.y, target.split.test.horizon, data.scalers.target,
                                   run_cfg.huber_delta);
    cell.metrics.variant = model::name_of(variant);
    cell.metrics.domain = target.name;
    if (history) *history = std::move(result.history);
  } catch (const std::exception& e) {
    cell.failed = true;
    cell.error = e.what();
  }
  return cell;
}

AblationTable run_ablation(const data::PreparedData& data, const train::TrainConfig& cfg,
                           const std::vector<model::Variant>& variants, const AblationOptions& options) {
  cfg.validate();
  if (data.targets.empty()) throw UsageError("run_ablation: no target domains");
  AblationTable table;
  table.variants = variants;
  for (const auto& t : data.targets) table.domains.push_back(t.name);
  table.cells.resize(variants.size() * data.targets.size());

  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < table.cells.size(); i = next++) {
      const auto& target = data.targets[i % data.targets.size()];
      table.cells[i] = run_variant(data, target, cfg, variants[i / data.targets.size()]);
      if (options.on_cell) {
        std::lock_guard lock(report_mutex);
        options.on_cell(table.cells[i]);
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, table.cells.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return table;
}

}  // namespace thermocast::eval
