// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstring>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "support/gradcheck.hpp"
#include "support/series.hpp"
#include "thermocast/ablation.hpp"
#include "thermocast/errors.hpp"
#include "thermocast/metrics.hpp"
#include "thermocast/pipeline.hpp"
#include "thermocast/solar.hpp"
#include "thermocast/synthetic.hpp"
#include "thermocast/train.hpp"
#include "thermocast/weather_client.hpp"

using namespace thermocast;
namespace nd = thermocast::ndgrad;
namespace fs = std::filesystem;
using nd::Tensor;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Tensor random_tensor(std::mt19937_64& rng, nd::Shape shape, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return Tensor(std::move(shape), std::move(v), true);
}

// ---- gradients -----------------------------------------------------------------

struct OpCase {
  std::string name;
  std::vector<Tensor> inputs;
  std::function<Tensor()> loss;
};

std::vector<OpCase> op_cases(std::mt19937_64& rng) {
  std::vector<OpCase> cases;
  // Non-scalar ops are reduced against fixed random weights so every output
  // element reaches the loss with a different coefficient.
  auto weighted = [&rng](std::function<Tensor()> op, nd::Shape out_shape) {
    Tensor w = random_tensor(rng, out_shape);
    w.set_requires_grad(false);
    return [op, w] { return nd::sum(nd::mul(op(), w)); };
  };
  auto add_case = [&](std::string name, std::vector<Tensor> in, std::function<Tensor()> op, nd::Shape out) {
    cases.push_back({std::move(name), in, out.empty() ? op : weighted(op, out)});
  };

  Tensor a = random_tensor(rng, {3, 4}), b = random_tensor(rng, {4, 5});
  add_case("matmul", {a, b}, [a, b] { return nd::matmul(a, b); }, {3, 5});
  Tensor c = random_tensor(rng, {3, 4}), d = random_tensor(rng, {3, 4});
  add_case("add", {c, d}, [c, d] { return nd::add(c, d); }, {3, 4});
  add_case("sub", {c, d}, [c, d] { return nd::sub(c, d); }, {3, 4});
  add_case("mul", {c, d}, [c, d] { return nd::mul(c, d); }, {3, 4});
  add_case("scale", {c}, [c] { return nd::scale(c, -1.7); }, {3, 4});
  add_case("shift", {c}, [c] { return nd::shift(c, 0.4); }, {3, 4});
  Tensor x = random_tensor(rng, {3, 4}, -3.0, 3.0);
  add_case("sigmoid", {x}, [x] { return nd::sigmoid(x); }, {3, 4});
  add_case("tanh", {x}, [x] { return nd::tanh(x); }, {3, 4});
  Tensor bias = random_tensor(rng, {4});
  add_case("add_bias", {c, bias}, [c, bias] { return nd::add_bias(c, bias); }, {3, 4});
  Tensor col = random_tensor(rng, {3, 1});
  add_case("add_col", {c, col}, [c, col] { return nd::add_col(c, col); }, {3, 4});
  add_case("mul_col", {c, col}, [c, col] { return nd::mul_col(c, col); }, {3, 4});
  add_case("slice_cols", {c}, [c] { return nd::slice_cols(c, 1, 3); }, {3, 2});
  add_case("slice_rows", {c}, [c] { return nd::slice_rows(c, 1, 3); }, {2, 4});
  add_case("concat_rows", {c, d}, [c, d] { return nd::concat_rows({c, d}); }, {6, 4});
  add_case("cumsum_cols", {c}, [c] { return nd::cumsum_cols(c); }, {3, 4});
  add_case("sum", {c}, [c] { return nd::sum(nd::mul(c, c)); }, {});
  add_case("mean", {c}, [c] { return nd::mean(nd::mul(c, c)); }, {});

  // Huber: differences on both sides of the knee, none within 0.05 of it.
  Tensor target = random_tensor(rng, {4, 6}, -2.0, 2.0);
  target.set_requires_grad(false);
  std::vector<double> pv(24);
  std::uniform_real_distribution<double> off(0.05, 2.5);
  std::bernoulli_distribution sign(0.5);
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double o = off(rng);
    const double dd = std::abs(o - 1.0) < 0.05 ? o + 0.1 : o;
    pv[i] = target.values()[i] + (sign(rng) ? dd : -dd);
  }
  Tensor pred({4, 6}, pv, true);
  add_case("huber_loss", {pred}, [pred, target] { return nd::huber_loss(pred, target, 1.0); }, {});

  Tensor prob = random_tensor(rng, {6, 1}, 0.1, 0.9);
  const Tensor labels = Tensor::column({0, 1, 1, 0, 1, 0});
  add_case("bce_loss", {prob}, [prob, labels] { return nd::bce_loss(prob, labels); }, {});
  return cases;
}

Outcome check_gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  double worst = 0.0;
  std::string worst_at;
  std::size_t checked = 0;
  auto note = [&](const testing::GradCheck& g, const std::string& where) {
    ++checked;
    const double e = g.relative_error();
    if (!(e <= worst)) {
      worst = e;
      worst_at = where;
    }
  };

  const auto cases = op_cases(rng);
  for (const auto& c : cases) {
    for (std::size_t k = 0; k < c.inputs.size(); ++k) {
      Tensor in = c.inputs[k];
      for (std::size_t i = 0; i < in.size(); ++i) note(testing::check_element(in, i, c.loss), c.name);
    }
  }

  // End to end: 20 parameters of the full model on a 4-window batch with the
  // training loss. Parameters behind the gradient reversal are checked
  // against the loss without the domain term (with lambda = 0 the reversed
  // path contributes nothing to them); discriminator parameters against the
  // full loss.
  const auto ws = windows::make_windows(testing::smooth_frame(9, 2, 60));
  const std::size_t src_idx[] = {0, 5, 11, 17}, cal_idx[] = {2, 8, 14, 20}, dom_idx[] = {1, 7, 13, 19};
  const auto src = model::make_batch(ws, src_idx), cal = model::make_batch(ws, cal_idx);
  const auto dom = model::make_batch(ws, dom_idx, false);
  const features::Scaler target_scaler({"indoor_temp_c"}, {24.0}, {3.0});
  model::Model m(model::ModelDims{}, 77);
  train::TrainConfig cfg;
  cfg.huber_delta = 0.5;
  auto params = m.parameters();
  std::uniform_int_distribution<std::size_t> pick_param(0, params.size() - 1);
  for (int s = 0; s < 20; ++s) {
    auto& p = params[pick_param(rng)];
    std::uniform_int_distribution<std::size_t> pick_el(0, p.tensor.size() - 1);
    const std::size_t el = pick_el(rng);
    const bool disc = p.name.starts_with("disc.");
    train::LossInputs in{&src, &cal, disc ? &dom : nullptr, {0, 0, 1, 1}};
    if (!disc) in.domain_labels.clear();
    auto loss = [&] { return train::total_loss(m, in, 0.0, cfg, {}, target_scaler).total; };
    note(testing::check_element(p.tensor, el, loss), p.name + "[" + std::to_string(el) + "]");
  }

  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst <= 1e-3 && secs < 60.0;
  o.detail = std::to_string(checked) + " elements over " + std::to_string(cases.size()) +
             " ops + 20 model parameters, worst rel err " + fmt("%.2e", worst) + " (" + worst_at + "), " +
             fmt("%.1f s", secs);
  return o;
}

Outcome check_grl() {
  std::mt19937_64 rng(5);
  bool ok = true;
  for (const double lambda : {0.0, 0.005, 0.01}) {
    Tensor x = random_tensor(rng, {5, 7});
    Tensor w = random_tensor(rng, {5, 7});
    w.set_requires_grad(false);
    const Tensor y = nd::grad_reverse(x, lambda);
    for (std::size_t i = 0; i < x.size(); ++i) {
      // Bitwise identity forward.
      ok = ok && std::memcmp(&y.values()[i], &x.values()[i], sizeof(double)) == 0;
    }
    nd::backward(nd::sum(nd::mul(y, w)));
    for (std::size_t i = 0; i < x.size(); ++i) ok = ok && x.grad()[i] == -lambda * w.values()[i];
  }
  return {ok, "lambda in {0, 0.005, 0.01}: forward bitwise identity, backward exactly -lambda * upstream"};
}

// ---- model output composition ------------------------------------------------------

Outcome check_output_composition() {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  auto ws = windows::make_windows(testing::gap_frame(4, 2, 120, 0.0));
  for (auto& v : ws.x) v = n(rng);
  for (auto& v : ws.last_step) v = n(rng);
  for (auto& v : ws.context) v = n(rng);
  for (auto& v : ws.t_last) v = 15.0 + 20.0 * std::abs(n(rng));
  double worst = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed = 0; count < 1000; ++seed) {
    const model::Model m(model::ModelDims{}, 1000 + seed);
    const auto flags = model::flags_of(model::kAllVariants[seed % 6]);
    for (std::size_t i = 0; i < 100 && count < 1000; ++i, ++count) {
      const auto o = m.forward_one(ws, (seed * 37 + i * 13) % ws.size(), flags);
      for (std::size_t h = 0; h < o.y_hat.size(); ++h) {
        worst = std::max(worst, std::abs(o.y_hat[h] - (o.y_base[h] * o.s_c + o.delta_ext + o.s_h)));
      }
    }
  }
  return {worst <= 1e-12, "1000 forward outputs across all variants, max |residual| " + fmt("%.1e", worst)};
}

Outcome check_loss_decomposition() {
  auto sc = data::SynthConfig::defaults();
  sc.days = 21;
  sc.source.n_buildings = 3;
  for (auto& t : sc.targets) t.n_buildings = 3;
  const auto prepared = data::prepare(data::generate_synthetic(sc), 0.1);
  const auto& target = prepared.targets.front();
  train::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.warmup_epochs = 0;  // lambda > 0 from the first step
  cfg.max_steps_per_epoch = 10;
  std::size_t steps = 0, with_all_terms = 0;
  double worst = 0.0;
  train::TrainOptions opt;
  opt.on_step = [&](const train::StepRecord& r) {
    ++steps;
    const double recomposed = r.source + r.w_cal * r.calibration + train::kDomainLossWeight * r.domain_bce;
    worst = std::max(worst, std::abs(r.total - recomposed));
    if (r.calibration > 0 && r.domain_bce > 0) ++with_all_terms;
  };
  (void)train::train(model::Model(model::ModelDims{}, 3), prepared.source, target.split, cfg, {},
                     prepared.scalers.target, opt);
  return {steps == 20 && with_all_terms == steps && worst <= 1e-9,
          std::to_string(steps) + " steps (" + std::to_string(with_all_terms) +
              " with all three terms), max |total - recomposed| " + fmt("%.1e", worst)};
}

// ---- windows and splits --------------------------------------------------------------

Outcome check_windowing() {
  std::size_t total = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const double gap_rate = 0.002 + 0.001 * static_cast<double>(s);
    const auto frame = testing::gap_frame(100 + s, 1 + static_cast<int>(s % 4), 150 + 7 * static_cast<int>(s), gap_rate);
    std::string why;
    if (!testing::windows_match_brute_force(frame, &why)) return {false, "series " + std::to_string(s) + ": " + why};
    total += windows::make_windows(frame).size();
  }
  return {true, "50 gap-patterned series, " + std::to_string(total) + " windows identical to brute force"};
}

Outcome check_split() {
  std::string detail;
  bool ok = true;
  for (const std::size_t n : {100u, 1000u}) {
    const auto ws = windows::make_windows(testing::gap_frame(1, 1, static_cast<int>(n) + 35, 0.0));
    const auto s = windows::split_target(ws);
    const std::size_t test = n - n * 9 / 10, adapt = n * 9 / 10, unsup = adapt * 9 / 10;
    ok = ok && ws.size() == n && s.unsup.size() == unsup && s.cal.size() == adapt - unsup && s.test.size() == test;
    ok = ok && s.unsup.anchors.back() < s.cal.anchors.front() && s.cal.anchors.back() < s.test.anchors.front();
    for (const auto* part : {&s.unsup, &s.cal, &s.test}) {
      for (std::size_t i = 1; i < part->size(); ++i) ok = ok && part->anchors[i - 1] < part->anchors[i];
    }
    detail += (detail.empty() ? "" : ", ") + std::to_string(n) + " -> " + std::to_string(s.unsup.size()) + "/" +
              std::to_string(s.cal.size()) + "/" + std::to_string(s.test.size());
  }
  return {ok, detail + ", unsup < cal < test"};
}

// ---- metrics ------------------------------------------------------------------------

Outcome check_metrics() {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  bool rmse_ok = true;
  for (int f = 0; f < 25; ++f) {
    const std::size_t windows = 1 + rng() % 60, h = 24;
    const double mean = 20.0 + 5.0 * n(rng), sd = 1.0 + std::abs(n(rng)) * 3.0;
    const double delta = 0.5 + std::abs(n(rng));
    std::vector<double> pred(windows * h), obs(windows * h);
    const double spread = 0.1 + f * 0.3;  // small and large errors
    for (std::size_t i = 0; i < pred.size(); ++i) {
      obs[i] = mean + sd * n(rng);
      pred[i] = obs[i] + spread * n(rng);
    }
    const features::Scaler scaler({"indoor_temp_c"}, {mean}, {sd});
    const auto m = eval::compute_metrics(pred, obs, h, scaler, delta);

    double ae = 0, se = 0, sse = 0, hub = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double e = pred[i] - obs[i];
      ae += std::abs(e);
      se += e * e;
      const double z = (pred[i] - mean) / sd - (obs[i] - mean) / sd;
      sse += z * z;
      hub += std::abs(z) <= delta ? 0.5 * z * z : delta * (std::abs(z) - 0.5 * delta);
    }
    const double cnt = static_cast<double>(pred.size());
    for (const auto& [got, want] : {std::pair{m.mae, ae / cnt}, std::pair{m.rmse, std::sqrt(se / cnt)},
                                    std::pair{m.mse_scaled, sse / cnt}, std::pair{m.huber_scaled, hub / cnt}}) {
      worst = std::max(worst, std::abs(got - want) / std::max(1.0, std::abs(want)));
    }
    rmse_ok = rmse_ok && m.rmse >= m.mae;
  }
  return {worst <= 1e-12 && rmse_ok, "25 random fixtures, max deviation from naive reference " + fmt("%.1e", worst) +
                                         (rmse_ok ? ", RMSE >= MAE throughout" : ", RMSE < MAE seen")};
}

// ---- synthetic benchmark --------------------------------------------------------------

train::TrainConfig benchmark_train_config() {
  train::TrainConfig cfg;  // 15 epochs, 3 warm-up, batch 64, lr 1e-3
  cfg.max_steps_per_epoch = 60;
  return cfg;
}

Outcome check_benchmark() {
  const auto t0 = Clock::now();
  const auto bundle = data::generate_synthetic(data::SynthConfig::defaults());
  const auto prepared = data::prepare(bundle, 0.1);
  const auto table = eval::run_ablation(prepared, benchmark_train_config());
  const double secs = seconds_since(t0);
  std::cout << table.render();

  bool a = true, b = true, c = true, failed = false;
  std::string detail;
  for (const auto& d : table.domains) {
    for (const auto& cell : table.cells) failed = failed || cell.failed;
    if (failed) break;
    const double full = table.at(model::Variant::full, d).metrics.mae;
    const double no_cal = table.at(model::Variant::no_cal, d).metrics.mae;
    const double lstm = table.at(model::Variant::lstm_only, d).metrics.mae;
    a = a && full < 1.5;
    for (const auto v : model::kAllVariants) {
      if (v != model::Variant::no_cal) b = b && table.at(v, d).metrics.mae < no_cal;
    }
    c = c && full < lstm;
    detail += d + ": Full " + fmt("%.3f", full) + ", -Cal " + fmt("%.3f", no_cal) + ", LSTM " + fmt("%.3f", lstm) + "; ";
  }
  if (failed) return {false, "a variant failed to train"};
  detail += std::string("(a) ") + (a ? "ok" : "FAIL") + " (b) " + (b ? "ok" : "FAIL") + " (c) " + (c ? "ok" : "FAIL") +
            ", " + fmt("%.0f s", secs);
  return {a && b && c && secs < 600.0, detail};
}

// ---- solar position ---------------------------------------------------------------------

Outcome check_solar() {
  struct Point {
    const char* where;
    double lat, lon;
    const char* when;
    double azimuth, altitude;
  };
  // Reference positions from an independent NOAA-algorithm implementation.
  const Point points[] = {
      {"Dodoma", -6.17, 35.74, "2023-07-17T06:00:00Z", 61.6289, 28.8127},
      {"Dodoma", -6.17, 35.74, "2023-07-17T09:00:00Z", 20.8773, 60.6382},
      {"Dodoma", -6.17, 35.74, "2023-07-17T12:00:00Z", 310.1625, 46.7089},
      {"Abuja", 9.0765, 7.3986, "2023-11-15T09:00:00Z", 129.6809, 46.8082},
      {"Abuja", 9.0765, 7.3986, "2023-11-15T12:00:00Z", 201.9441, 60.2809},
      {"Abuja", 9.0765, 7.3986, "2023-11-15T15:00:00Z", 243.2936, 28.0317},
      {"field station", 13.5734, -14.9250, "2021-03-20T10:00:00Z", 102.4277, 41.7310},
      {"field station", 13.5734, -14.9250, "2021-03-20T13:00:00Z", 172.4512, 76.3679},
      {"field station", 13.5734, -14.9250, "2021-03-20T16:00:00Z", 256.1250, 45.1219},
  };
  double worst = 0.0;
  for (const auto& p : points) {
    const auto s = features::solar_position(parse_timestamp(p.when), p.lat, p.lon);
    double daz = std::abs(s.azimuth_deg - p.azimuth);
    daz = std::min(daz, 360.0 - daz);
    worst = std::max({worst, daz, std::abs(s.altitude_deg - p.altitude)});
  }
  return {worst <= 1.0, "9 points at 3 sites, max error " + fmt("%.3f deg", worst)};
}

// ---- determinism ---------------------------------------------------------------------------

Outcome check_determinism() {
  auto sc = data::SynthConfig::defaults();
  sc.days = 21;
  sc.source.n_buildings = 4;
  for (auto& t : sc.targets) t.n_buildings = 4;
  train::TrainConfig cfg;
  cfg.epochs = 3;
  cfg.warmup_epochs = 1;
  cfg.max_steps_per_epoch = 6;

  auto run_once = [&](std::size_t workers) {
    const auto prepared = data::prepare(data::generate_synthetic(sc), cfg.validation_fraction);
    train::TrainHistory history;
    const auto cell = eval::run_variant(prepared, prepared.targets.front(), cfg, model::Variant::full, &history);
    eval::AblationOptions opt;
    opt.workers = workers;
    auto table = eval::run_ablation(prepared, cfg, {std::begin(model::kAllVariants), std::end(model::kAllVariants)}, opt);
    return std::tuple{history, table, cell};
  };
  const auto [h1, t1, c1] = run_once(1);
  const auto [h2, t2, c2] = run_once(2);
  // Compare serialized forms too, so doubles are checked bit for bit.
  const bool ok = h1 == h2 && h1.to_jsonl() == h2.to_jsonl() && t1 == t2 && t1.to_jsonl() == t2.to_jsonl() &&
                  c1 == c2 && !h1.epochs.empty() && t1.cells.size() == 12;
  return {ok, "two runs (1 and 2 workers): TrainHistory " + std::string(h1 == h2 ? "identical" : "differs") +
                  ", 6x2 AblationTable " + (t1 == t2 ? "identical" : "differs")};
}

// ---- weather client ----------------------------------------------------------------------

class CountingTransport : public data::HttpTransport {
 public:
  explicit CountingTransport(std::string body) : body_(std::move(body)) {}
  data::HttpResponse get(const std::string&, const std::string&) override {
    ++calls;
    return {200, body_};
  }
  std::size_t calls = 0;

 private:
  std::string body_;
};

Outcome check_weather_fixture() {
  std::ifstream in(fs::path(THERMOCAST_FIXTURE_DIR) / "open_meteo_archive.json");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string body = ss.str();
  const auto doc = nlohmann::json::parse(body);
  const auto& hourly = doc["hourly"];

  const auto rows = data::parse_archive_payload(body);
  bool ok = rows.size() == 48 && hourly["time"].size() == 48;
  for (std::size_t i = 0; ok && i < rows.size(); ++i) {
    const std::optional<double>* got[] = {&rows[i].air_temp_c, &rows[i].rel_humidity, &rows[i].dew_point_c};
    const char* keys[] = {"temperature_2m", "relative_humidity_2m", "dew_point_2m"};
    for (int k = 0; k < 3; ++k) {
      const auto& want = hourly[keys[k]][i];
      ok = ok && (want.is_null() ? !got[k]->has_value() : (got[k]->has_value() && **got[k] == want.get<double>()));
    }
    ok = ok && format_timestamp(rows[i].timestamp) == hourly["time"][i].get<std::string>() + ":00Z";
  }

  const fs::path cache = fs::temp_directory_path() / "thermocast_acceptance_cache";
  fs::remove_all(cache);
  auto transport = std::make_shared<CountingTransport>(body);
  data::WeatherClient client(transport, cache, [](std::chrono::milliseconds) {});
  const data::ArchiveRequest req{-6.17, 35.74, "2023-07-17", "2023-07-18"};
  const auto first = client.fetch(req);
  const std::size_t after_first = transport->calls;
  const auto second = client.fetch(req);
  const std::size_t after_second = transport->calls;
  fs::remove_all(cache);
  ok = ok && first == rows && second == rows && after_first == 1 && after_second == 1;
  return {ok, std::to_string(rows.size()) + " records match the payload; repeat fetch made " +
                  std::to_string(after_second - after_first) + " network calls"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"gradient correctness", check_gradients},
      {"gradient reversal contract", check_grl},
      {"forecast composition", check_output_composition},
      {"loss decomposition", check_loss_decomposition},
      {"windowing oracle", check_windowing},
      {"split chronology", check_split},
      {"metric correctness", check_metrics},
      {"synthetic benchmark", check_benchmark},
      {"solar position", check_solar},
      {"determinism", check_determinism},
      {"weather fixture replay", check_weather_fixture},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.name << ": " << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
