#include "thermocast/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "thermocast/errors.hpp"
#include "thermocast/util.hpp"

namespace thermocast::train {

namespace nd = ndgrad;

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("train: lr must be positive");
  if (batch_size < 2) throw ConfigError("train: batch_size must be at least 2");
  if (epochs == 0) throw ConfigError("train: epochs must be positive");
  if (warmup_epochs >= epochs) throw ConfigError("train: warmup_epochs must be smaller than epochs");
  if (!(lambda_max >= 0.0)) throw ConfigError("train: lambda_max must be non-negative");
  if (!(w_cal >= 0.0)) throw ConfigError("train: w_cal must be non-negative");
  if (!(huber_delta > 0.0)) throw ConfigError("train: huber_delta must be positive");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("train: validation_fraction must lie in [0, 1)");
  }
}

nlohmann::json TrainConfig::to_json() const {
  return {{"lr", lr},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"lambda_max", lambda_max},
          {"warmup_epochs", warmup_epochs},
          {"w_cal", w_cal},
          {"huber_delta", huber_delta},
          {"seed", seed},
          {"validation_fraction", validation_fraction},
          {"max_steps_per_epoch", max_steps_per_epoch}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{"lr",          "batch_size", "epochs", "lambda_max",
                                           "warmup_epochs", "w_cal",    "huber_delta", "seed",
                                           "validation_fraction", "max_steps_per_epoch"};
  if (!j.is_object()) throw ConfigError("train config must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown train config key '" + key + "'");
  }
  TrainConfig c;
  try {
    c.lr = j.value("lr", c.lr);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.lambda_max = j.value("lambda_max", c.lambda_max);
    c.warmup_epochs = j.value("warmup_epochs", c.warmup_epochs);
    c.w_cal = j.value("w_cal", c.w_cal);
    c.huber_delta = j.value("huber_delta", c.huber_delta);
    c.seed = j.value("seed", c.seed);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    c.max_steps_per_epoch = j.value("max_steps_per_epoch", c.max_steps_per_epoch);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

double lambda_schedule(std::size_t epoch, std::size_t step, std::size_t steps_per_epoch, const TrainConfig& cfg) {
  if (epoch < cfg.warmup_epochs) return 0.0;
  const std::size_t post_steps = (cfg.epochs - cfg.warmup_epochs) * steps_per_epoch;
  const std::size_t index = (epoch - cfg.warmup_epochs) * steps_per_epoch + step;
  const double progress =
      post_steps > 1 ? std::min(1.0, static_cast<double>(index) / static_cast<double>(post_steps - 1)) : 1.0;
  return cfg.lambda_max * (2.0 / (1.0 + std::exp(-10.0 * progress)) - 1.0);
}

namespace {

Tensor standardized(const Tensor& t, double mean, double inv_std) {
  return nd::scale(nd::shift(t, -mean), inv_std);
}

Tensor standardized_constant(const Tensor& t, double mean, double inv_std) {
  std::vector<double> v(t.values().begin(), t.values().end());
  for (auto& x : v) x = (x - mean) * inv_std;
  return Tensor(t.shape(), std::move(v));
}

}  // namespace

LossTerms total_loss(const Model& model, const LossInputs& in, double lambda_adv, const TrainConfig& cfg,
                     const VariantFlags& flags, const features::Scaler& target_scaler) {
  if (!in.source || in.source->size == 0) throw UsageError("total_loss: empty source batch");
  if (!in.source->target.defined()) throw UsageError("total_loss: source batch has no labels");
  const bool use_cal = flags.calibration && cfg.w_cal > 0.0 && in.calibration && in.calibration->size > 0;
  const bool use_dom = flags.adversarial && in.domain && in.domain->size > 0;
  if (use_cal && !in.calibration->target.defined()) throw UsageError("total_loss: calibration batch has no labels");
  if (use_dom && in.domain_labels.size() != in.domain->size) {
    throw DimensionError("total_loss: " + std::to_string(in.domain_labels.size()) + " domain labels for " +
                         std::to_string(in.domain->size) + " windows");
  }

  std::vector<const model::Batch*> parts{in.source};
  if (use_cal) parts.push_back(in.calibration);
  if (use_dom) parts.push_back(in.domain);
  const model::Batch combined = parts.size() == 1 ? *in.source : model::concat_batches(parts);
  const model::BatchOutput out = model.forward(combined, lambda_adv, flags);

  const double mean = target_scaler.mean(0);
  const double inv_std = 1.0 / target_scaler.stddev(0);
  const std::size_t ns = in.source->size;

  LossTerms terms;
  const Tensor src_loss =
      nd::huber_loss(standardized(nd::slice_rows(out.y_hat, 0, ns), mean, inv_std),
                     standardized_constant(in.source->target, mean, inv_std), cfg.huber_delta);
  terms.source = src_loss.item();
  Tensor total = src_loss;
  std::size_t offset = ns;
  if (use_cal) {
    const std::size_t nc = in.calibration->size;
    const Tensor cal_loss =
        nd::huber_loss(standardized(nd::slice_rows(out.y_hat, offset, offset + nc), mean, inv_std),
                       standardized_constant(in.calibration->target, mean, inv_std), cfg.huber_delta);
    terms.calibration = cal_loss.item();
    total = nd::add(total, nd::scale(cal_loss, cfg.w_cal));
    offset += nc;
  }
  if (use_dom) {
    const std::size_t nd_rows = in.domain->size;
    const Tensor bce = nd::bce_loss(nd::slice_rows(out.domain_prob, offset, offset + nd_rows),
                                    Tensor::column(in.domain_labels));
    terms.domain_bce = bce.item();
    total = nd::add(total, nd::scale(bce, kDomainLossWeight));
  }
  terms.total_value = total.item();
  terms.total = std::move(total);
  return terms;
}

std::string TrainHistory::to_jsonl() const {
  std::ostringstream os;
  for (const auto& e : epochs) {
    nlohmann::json j{{"epoch", e.epoch},
                     {"steps", e.steps},
                     {"source_huber", e.source_huber},
                     {"calibration_huber", e.calibration_huber},
                     {"domain_bce", e.domain_bce},
                     {"total", e.total},
                     {"lambda", e.lambda},
                     {"validation_mae", std::isfinite(e.validation_mae) ? nlohmann::json(e.validation_mae)
                                                                        : nlohmann::json(nullptr)}};
    os << j.dump() << '\n';
  }
  return os.str();
}

TrainResult train(const Model& initial, const windows::WindowSet& source, const windows::DomainSplit& target,
                  const TrainConfig& cfg, const VariantFlags& requested, const features::Scaler& target_scaler,
                  const TrainOptions& options) {
  cfg.validate();
  const std::size_t n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * source.size()));
  const windows::WindowSet train_src = source.slice(0, source.size() - n_val);
  const windows::WindowSet val_src = source.slice(source.size() - n_val, source.size());
  if (train_src.empty()) throw UsageError("train: no source training windows");

  VariantFlags flags = requested;
  if (target.unsup.empty()) flags.adversarial = false;
  const bool use_cal = flags.calibration && cfg.w_cal > 0.0 && !target.cal.empty();
  if (flags.calibration && cfg.w_cal > 0.0 && target.cal.empty()) {
    std::clog << "train: calibration split is empty; training without the calibration term\n";
  }

  Model model = initial.clone();
  nd::Adam adam(model.parameters(flags), {.lr = cfg.lr});
  std::mt19937_64 rng(derive_seed(cfg.seed, "batches"));

  const std::size_t b = cfg.batch_size;
  std::size_t steps_per_epoch = (train_src.size() + b - 1) / b;
  if (cfg.max_steps_per_epoch > 0) steps_per_epoch = std::min(steps_per_epoch, cfg.max_steps_per_epoch);

  std::vector<std::size_t> order(train_src.size());
  std::vector<std::size_t> cal_order(target.cal.size());
  std::iota(cal_order.begin(), cal_order.end(), std::size_t{0});
  std::shuffle(cal_order.begin(), cal_order.end(), rng);
  std::size_t cal_cursor = 0;

  std::uniform_int_distribution<std::size_t> pick_src(0, train_src.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_tgt(0, target.unsup.empty() ? 0 : target.unsup.size() - 1);
  std::vector<double> domain_labels(b / 2, 0.0);
  domain_labels.resize(b / 2 + b / 2, 1.0);

  TrainHistory history;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      const std::size_t begin = step * b;
      const std::size_t end = std::min(begin + b, train_src.size());
      const std::span<const std::size_t> src_idx(order.data() + begin, end - begin);
      const model::Batch src = model::make_batch(train_src, src_idx);

      model::Batch cal;
      if (use_cal) {
        std::vector<std::size_t> idx;
        const std::size_t want = std::min(b, cal_order.size());
        while (idx.size() < want) {
          if (cal_cursor == cal_order.size()) {
            std::shuffle(cal_order.begin(), cal_order.end(), rng);
            cal_cursor = 0;
          }
          idx.push_back(cal_order[cal_cursor++]);
        }
        cal = model::make_batch(target.cal, idx);
      }

      model::Batch dom;
      if (flags.adversarial) {
        std::vector<std::size_t> s_idx(b / 2), t_idx(b / 2);
        for (auto& i : s_idx) i = pick_src(rng);
        for (auto& i : t_idx) i = pick_tgt(rng);
        const model::Batch s_part = model::make_batch(train_src, s_idx, false);
        const model::Batch t_part = model::make_batch(target.unsup, t_idx, false);
        dom = model::concat_batches({&s_part, &t_part});
      }

      const double lambda = lambda_schedule(epoch, step, steps_per_epoch, cfg);
      LossInputs inputs{&src, use_cal ? &cal : nullptr, flags.adversarial ? &dom : nullptr, domain_labels};
      LossTerms terms = total_loss(model, inputs, lambda, cfg, flags, target_scaler);
      if (!std::isfinite(terms.total_value)) throw DivergenceError(epoch, step, terms.total_value);

      nd::backward(terms.total);
      adam.step();
      adam.zero_grad();

      rec.source_huber += terms.source;
      rec.calibration_huber += terms.calibration;
      rec.domain_bce += terms.domain_bce;
      rec.total += terms.total_value;
      rec.lambda = lambda;
      if (options.on_step) {
        options.on_step({epoch, step, lambda, terms.source, terms.calibration, terms.domain_bce,
                         terms.total_value, use_cal ? cfg.w_cal : 0.0});
      }
    }
    rec.steps = steps_per_epoch;
    const double inv = 1.0 / static_cast<double>(steps_per_epoch);
    rec.source_huber *= inv;
    rec.calibration_huber *= inv;
    rec.domain_bce *= inv;
    rec.total *= inv;
    rec.validation_mae = std::numeric_limits<double>::quiet_NaN();
    if (!val_src.empty()) {
      const auto pred = model::predict(model, val_src, flags);
      double err = 0.0;
      for (std::size_t i = 0; i < pred.size(); ++i) err += std::abs(pred[i] - val_src.y[i]);
      rec.validation_mae = err / static_cast<double>(pred.size());
    }
    if (options.on_epoch) options.on_epoch(rec);
    history.epochs.push_back(rec);
  }
  return {std::move(model), std::move(history)};
}

}  // namespace thermocast::train
