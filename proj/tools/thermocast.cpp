// thermocast: synth, train, evaluate, ablate and forecast from one config file.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "thermocast/ablation.hpp"
#include "thermocast/checkpoint.hpp"
#include "thermocast/csv_io.hpp"
#include "thermocast/errors.hpp"
#include "thermocast/metrics.hpp"
#include "thermocast/pipeline.hpp"
#include "thermocast/run_config.hpp"
#include "thermocast/weather_client.hpp"

namespace fs = std::filesystem;
using namespace thermocast;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kDivergence = 3 };

// Flags that override the config file when given.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> days;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> max_steps;
  std::optional<std::size_t> workers;
  std::string data_dir;
  std::string out;
  std::string variant;
  std::vector<std::string> targets;
};

RunConfig resolve(const Overrides& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : RunConfig::load(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.days) cfg.synth.days = *o.days;
  if (o.epochs) {
    cfg.train.epochs = *o.epochs;
    cfg.train.warmup_epochs = std::min(cfg.train.warmup_epochs, *o.epochs - 1);
  }
  if (o.max_steps) cfg.train.max_steps_per_epoch = *o.max_steps;
  if (o.workers) cfg.workers = *o.workers;
  if (!o.data_dir.empty()) cfg.data_dir = o.data_dir;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (!o.variant.empty()) cfg.variant = o.variant;
  if (!o.targets.empty()) cfg.targets = o.targets;
  // The variant decides whether the calibration term is trained.
  if (!model::flags_of(model::parse_variant(cfg.variant)).calibration) cfg.train.w_cal = 0.0;
  cfg.resolve();
  return cfg;
}

fs::path prepare_output(const RunConfig& cfg) {
  const fs::path out = cfg.output_dir;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IngestionError("cannot create output directory " + out.string() + ": " + ec.message());
  write_json(out / "config.resolved.json", cfg.to_json());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << text;
}

int cmd_synth(const Overrides& o) {
  RunConfig cfg = resolve(o);
  const fs::path out = prepare_output(cfg);
  const data::DatasetBundle bundle = data::generate_synthetic(cfg.synth);
  data::write_bundle(out, bundle);
  std::cout << "wrote " << bundle.source.name;
  for (const auto& t : bundle.targets) std::cout << ", " << t.name;
  std::cout << " to " << out.string() << '\n';
  return kOk;
}

int cmd_train(const Overrides& o) {
  RunConfig cfg = resolve(o);
  if (cfg.targets.size() > 1) throw ConfigError("train takes one --target");
  const fs::path out = prepare_output(cfg);
  const data::DatasetBundle bundle = load_bundle(cfg);
  if (bundle.targets.empty()) throw IngestionError("bundle has no target domain");
  const data::PreparedData prepared = data::prepare(bundle, cfg.train.validation_fraction);
  const data::PreparedTarget& target = prepared.targets.front();
  const model::Variant variant = model::parse_variant(cfg.variant);
  const model::VariantFlags flags = model::flags_of(variant);

  std::cerr << "source " << prepared.source.size() << " windows; " << target.name << ": unsup "
            << target.split.unsup.size() << ", cal " << target.split.cal.size() << ", test "
            << target.split.test.size() << '\n';
  std::ofstream steps(out / "steps.jsonl", std::ios::trunc);
  train::TrainOptions options;
  options.on_step = [&](const train::StepRecord& s) {
    steps << json{{"epoch", s.epoch},           {"step", s.step},      {"lambda", s.lambda},
                  {"source", s.source},         {"calibration", s.calibration}, {"domain_bce", s.domain_bce},
                  {"total", s.total},           {"w_cal", s.w_cal}}
                 .dump()
          << '\n';
  };
  options.on_epoch = [](const train::EpochRecord& e) {
    std::cerr << "epoch " << e.epoch + 1 << ": total " << e.total << ", source " << e.source_huber << ", val MAE "
              << e.validation_mae << " C, lambda " << e.lambda << '\n';
  };

  const model::Model initial(model::ModelDims{}, derive_seed(cfg.seed, "model"));
  // On divergence the step log written so far stays on disk for diagnosis.
  const train::TrainResult result =
      train::train(initial, prepared.source, target.split, cfg.train, flags, prepared.scalers.target, options);
  write_text(out / "history.jsonl", result.history.to_jsonl());

  model::Checkpoint ckpt{result.model, variant,
                         json{{"target", target.name},
                              {"source", prepared.source_name},
                              {"scalers", prepared.scalers.to_json()},
                              {"w_cal", cfg.train.w_cal},
                              {"run_config", cfg.to_json()}}};
  model::save_checkpoint(out / "checkpoint.json", ckpt);

  const auto pred = model::predict(result.model, target.split.test, flags);
  eval::MetricsReport report = eval::compute_metrics(pred, target.split.test.y, target.split.test.horizon,
                                                     prepared.scalers.target, cfg.train.huber_delta);
  report.variant = cfg.variant;
  report.domain = target.name;
  write_json(out / "metrics.json", report.to_json());
  std::cout << target.name << " test MAE " << report.mae << " C, RMSE " << report.rmse << " C over "
            << report.n_windows << " windows; checkpoint " << (out / "checkpoint.json").string() << '\n';
  return kOk;
}

// Run config stored in a checkpoint, with --data taking precedence.
RunConfig config_from_checkpoint(const model::Checkpoint& ckpt, const std::string& data_dir) {
  if (!ckpt.metadata.contains("run_config")) throw IngestionError("checkpoint carries no run config");
  RunConfig cfg = RunConfig::from_json(ckpt.metadata.at("run_config"));
  if (!data_dir.empty()) cfg.data_dir = data_dir;
  cfg.targets.clear();
  return cfg;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& target_name, const Overrides& o) {
  const model::Checkpoint ckpt = model::load_checkpoint(checkpoint);
  const RunConfig cfg = config_from_checkpoint(ckpt, o.data_dir);
  const data::Scalers scalers = data::Scalers::from_json(ckpt.metadata.at("scalers"));
  const std::string name = target_name.empty() ? ckpt.metadata.value("target", std::string()) : target_name;
  const data::DatasetBundle bundle = load_bundle(cfg);
  const data::DomainData& domain = bundle.target(name);

  windows::DomainSplit split = windows::split_target(windows::make_windows(data::scaled_frame(domain, scalers)));
  windows::purge_label_overlap(split);
  const model::VariantFlags flags = model::flags_of(ckpt.variant);
  const auto pred = model::predict(ckpt.model, split.test, flags);
  eval::MetricsReport report =
      eval::compute_metrics(pred, split.test.y, split.test.horizon, scalers.target, cfg.train.huber_delta);
  report.variant = model::name_of(ckpt.variant);
  report.domain = name;

  const fs::path out = o.out.empty() ? fs::path(checkpoint).parent_path() / ("metrics_" + name + ".json") : fs::path(o.out);
  write_json(out, report.to_json());
  std::printf("%s on %s: MAE %.3f C  RMSE %.3f C  MSE %.4f  Huber %.4f  (%zu windows)\n",
              std::string(model::label_of(ckpt.variant)).c_str(), name.c_str(), report.mae, report.rmse,
              report.mse_scaled, report.huber_scaled, report.n_windows);
  return kOk;
}

int cmd_ablate(const Overrides& o) {
  RunConfig cfg = resolve(o);
  const fs::path out = prepare_output(cfg);
  const data::DatasetBundle bundle = load_bundle(cfg);
  const data::PreparedData prepared = data::prepare(bundle, cfg.train.validation_fraction);
  eval::AblationOptions options;
  options.workers = cfg.workers;
  const auto start = std::chrono::steady_clock::now();
  options.on_cell = [&](const eval::AblationCell& c) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cerr << "[" << static_cast<int>(secs) << " s] " << model::label_of(c.variant) << " / " << c.domain << ": "
              << (c.failed ? "failed: " + c.error : "MAE " + format_double(c.metrics.mae)) << '\n';
  };
  const eval::AblationTable table = eval::run_ablation(prepared, cfg.train, {std::begin(model::kAllVariants),
                                                                             std::end(model::kAllVariants)},
                                                       options);
  write_text(out / "ablation.txt", table.render());
  write_text(out / "ablation.jsonl", table.to_jsonl());
  write_text(out / "ablation.csv", table.to_csv());
  std::cout << table.render();
  return kOk;
}

int cmd_forecast(const std::string& checkpoint, const std::string& building, const std::string& timestamp,
                 const Overrides& o) {
  const model::Checkpoint ckpt = model::load_checkpoint(checkpoint);
  const RunConfig cfg = config_from_checkpoint(ckpt, o.data_dir);
  const data::Scalers scalers = data::Scalers::from_json(ckpt.metadata.at("scalers"));
  TimePoint anchor;
  try {
    anchor = parse_timestamp(timestamp);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("--timestamp: ") + e.what());
  }
  anchor = floor_hour(anchor);

  const data::DatasetBundle bundle = load_bundle(cfg);
  std::vector<const data::DomainData*> domains{&bundle.source};
  for (const auto& t : bundle.targets) domains.push_back(&t);
  const data::DomainData* domain = nullptr;
  for (const auto* d : domains)
    for (const auto& c : d->contexts)
      if (c.building_id == building) domain = d;
  if (!domain) throw ConfigError("unknown building '" + building + "'");

  const windows::WindowSet ws = windows::window_at(data::scaled_frame(*domain, scalers), building, anchor);
  const auto rows = eval::forecast_report(ckpt.model, ws, 0, model::flags_of(ckpt.variant));
  const std::string csv = eval::forecast_csv(rows);
  if (o.out.empty()) {
    std::cout << csv;
  } else {
    write_text(o.out, csv);
    std::cerr << "wrote " << rows.size() << " rows to " << o.out << '\n';
  }
  return kOk;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "Run config JSON")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Base seed for every random component");
  cmd->add_option("--data", o.data_dir, "Bundle directory (default: generate synthetic data)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Indoor temperature forecasting for naturally ventilated buildings"};
  app.require_subcommand(1);
  Overrides o;
  std::string checkpoint, target, building, timestamp;

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset bundle");
  add_common(synth, o);
  synth->add_option("--days", o.days, "Simulated days per domain")->check(CLI::PositiveNumber);
  synth->add_option("-o,--out", o.out, "Output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "Train one variant against one target domain");
  add_common(train_cmd, o);
  train_cmd->add_option("--variant", o.variant, "full, no_adv, no_cal, no_phy, no_ext or lstm_only");
  train_cmd->add_option("--target", o.targets, "Target domain")->expected(1);
  train_cmd->add_option("--days", o.days, "Simulated days (synthetic data only)")->check(CLI::PositiveNumber);
  train_cmd->add_option("--epochs", o.epochs)->check(CLI::PositiveNumber);
  train_cmd->add_option("--max-steps", o.max_steps, "Cap on steps per epoch (0: full passes)");
  train_cmd->add_option("-o,--out", o.out, "Output directory");

  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a target test split");
  evaluate->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--target", target, "Target domain (default: the training target)");
  evaluate->add_option("--data", o.data_dir, "Bundle directory (default: the checkpoint's data)");
  evaluate->add_option("-o,--out", o.out, "Metrics JSON path");

  auto* ablate = app.add_subcommand("ablate", "Train and score all six variants on every target");
  add_common(ablate, o);
  ablate->add_option("--target", o.targets, "Target domains (default: all)");
  ablate->add_option("--days", o.days, "Simulated days (synthetic data only)")->check(CLI::PositiveNumber);
  ablate->add_option("--epochs", o.epochs)->check(CLI::PositiveNumber);
  ablate->add_option("--max-steps", o.max_steps, "Cap on steps per epoch (0: full passes)");
  ablate->add_option("--workers", o.workers, "Concurrent training runs")->check(CLI::PositiveNumber);
  ablate->add_option("-o,--out", o.out, "Output directory");

  auto* forecast = app.add_subcommand("forecast", "24-hour forecast CSV for one building");
  forecast->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  forecast->add_option("--building", building)->required();
  forecast->add_option("--timestamp", timestamp, "Forecast anchor hour (RFC 3339)")->required();
  forecast->add_option("--data", o.data_dir, "Bundle directory (default: the checkpoint's data)");
  forecast->add_option("-o,--out", o.out, "CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) return cmd_synth(o);
    if (*train_cmd) return cmd_train(o);
    if (*evaluate) return cmd_evaluate(checkpoint, target, o);
    if (*ablate) return cmd_ablate(o);
    if (*forecast) return cmd_forecast(checkpoint, building, timestamp, o);
  } catch (const DivergenceError& e) {
    std::cerr << "error: training diverged: " << e.what() << '\n';
    return kDivergence;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const IngestionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const NetworkError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
