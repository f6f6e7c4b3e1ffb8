#include "thermocast/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "thermocast/errors.hpp"

namespace thermocast::model {

namespace nd = ndgrad;

VariantFlags flags_of(Variant v) {
  switch (v) {
    case Variant::full: return {true, true, true, true};
    case Variant::no_adv: return {false, true, true, true};
    case Variant::no_cal: return {true, false, true, true};
    case Variant::no_phy: return {true, true, false, true};
    case Variant::no_ext: return {true, true, true, false};
    case Variant::lstm_only: return {false, true, false, false};
  }
  return {};
}

std::string_view name_of(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_adv: return "no_adv";
    case Variant::no_cal: return "no_cal";
    case Variant::no_phy: return "no_phy";
    case Variant::no_ext: return "no_ext";
    case Variant::lstm_only: return "lstm_only";
  }
  return "full";
}

std::string_view label_of(Variant v) {
  switch (v) {
    case Variant::full: return "AI-Temp (Full)";
    case Variant::no_adv: return "AI-Temp (- Adv)";
    case Variant::no_cal: return "AI-Temp (- Cal)";
    case Variant::no_phy: return "AI-Temp (- F_phy)";
    case Variant::no_ext: return "AI-Temp (- F_ext)";
    case Variant::lstm_only: return "AI-Temp (LSTM)";
  }
  return "";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : kAllVariants)
    if (name_of(v) == name) return v;
  throw ConfigError("unknown variant '" + std::string(name) +
                    "' (expected full, no_adv, no_cal, no_phy, no_ext or lstm_only)");
}

// ---- batches -------------------------------------------------------------------

Batch make_batch(const windows::WindowSet& ws, std::span<const std::size_t> indices, bool with_target) {
  const std::size_t b = indices.size();
  const std::size_t w = ws.window, f = ws.dynamic_features, c = ws.context_features, h = ws.horizon;
  if (w < 2) throw DimensionError("make_batch: window shorter than 2 steps");
  std::vector<std::vector<double>> steps(w - 1, std::vector<double>(b * f));
  std::vector<double> last(b * f), ctx(b * c), t_last(b), target;
  if (with_target) target.resize(b * h);
  for (std::size_t r = 0; r < b; ++r) {
    const std::size_t i = indices[r];
    if (i >= ws.size()) throw DimensionError("make_batch: window index out of range");
    const auto xw = ws.x_window(i);
    for (std::size_t s = 0; s + 1 < w; ++s)
      for (std::size_t k = 0; k < f; ++k) steps[s][r * f + k] = xw[(s + 1) * f + k] - xw[s * f + k];
    const auto ls = ws.last_step_row(i);
    std::copy(ls.begin(), ls.end(), last.begin() + static_cast<std::ptrdiff_t>(r * f));
    const auto cs = ws.context_row(i);
    std::copy(cs.begin(), cs.end(), ctx.begin() + static_cast<std::ptrdiff_t>(r * c));
    t_last[r] = ws.t_last[i];
    if (with_target) {
      const auto ys = ws.y_row(i);
      std::copy(ys.begin(), ys.end(), target.begin() + static_cast<std::ptrdiff_t>(r * h));
    }
  }
  Batch batch;
  batch.size = b;
  for (auto& s : steps) batch.diff_steps.emplace_back(nd::Shape{b, f}, std::move(s));
  batch.last_step = Tensor({b, f}, std::move(last));
  batch.context = Tensor({b, c}, std::move(ctx));
  batch.t_last = Tensor({b, 1}, std::move(t_last));
  if (with_target) batch.target = Tensor({b, h}, std::move(target));
  return batch;
}

Batch make_batch(const windows::WindowSet& ws, bool with_target) {
  std::vector<std::size_t> idx(ws.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return make_batch(ws, idx, with_target);
}

namespace {

Tensor stack_rows(const std::vector<Tensor>& parts) {
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  std::vector<double> values;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw DimensionError("concat_batches: column mismatch");
    rows += p.rows();
    values.insert(values.end(), p.values().begin(), p.values().end());
  }
  return Tensor({rows, cols}, std::move(values));
}

}  // namespace

Batch concat_batches(const std::vector<const Batch*>& parts) {
  if (parts.empty()) throw UsageError("concat_batches: no batches");
  const std::size_t steps = parts.front()->diff_steps.size();
  Batch out;
  bool all_targets = true;
  std::vector<Tensor> last, ctx, t_last, target;
  std::vector<std::vector<Tensor>> diff(steps);
  for (const Batch* p : parts) {
    if (p->diff_steps.size() != steps) throw DimensionError("concat_batches: window length mismatch");
    for (std::size_t s = 0; s < steps; ++s) diff[s].push_back(p->diff_steps[s]);
    last.push_back(p->last_step);
    ctx.push_back(p->context);
    t_last.push_back(p->t_last);
    if (p->target.defined()) target.push_back(p->target);
    else all_targets = false;
    out.size += p->size;
  }
  for (auto& d : diff) out.diff_steps.push_back(stack_rows(d));
  out.last_step = stack_rows(last);
  out.context = stack_rows(ctx);
  out.t_last = stack_rows(t_last);
  if (all_targets) out.target = stack_rows(target);
  return out;
}

// ---- model ---------------------------------------------------------------------

Model::Model(ModelDims dims) : dims_(dims) {
  const std::size_t f = dims.dynamic_features, c = dims.context_features, h = dims.hidden;
  auto param = [](nd::Shape s) { return Tensor::zeros(std::move(s), true); };
  params_.lstm_w_input = param({f, 4 * h});
  params_.lstm_w_hidden = param({h, 4 * h});
  params_.lstm_bias = param({4 * h});
  params_.head_w = param({h, dims.horizon});
  params_.head_b = param({dims.horizon});
  params_.ext_w1 = param({f, dims.ext_hidden});
  params_.ext_b1 = param({dims.ext_hidden});
  params_.ext_w2 = param({dims.ext_hidden, 1});
  params_.ext_b2 = param({1});
  params_.phy_w1 = param({c, dims.phy_hidden});
  params_.phy_b1 = param({dims.phy_hidden});
  params_.phy_w2 = param({dims.phy_hidden, 2});
  params_.phy_b2 = param({2});
  params_.disc_w1 = param({h, dims.disc_hidden});
  params_.disc_b1 = param({dims.disc_hidden});
  params_.disc_w2 = param({dims.disc_hidden, 1});
  params_.disc_b2 = param({1});
}

Model Model::zeros(ModelDims dims) { return Model(dims); }

Model::Model(ModelDims dims, std::uint64_t seed) : Model(dims) {
  std::mt19937_64 rng(seed);
  auto init = [&rng](Tensor& t, std::size_t fan_in) {
    const double k = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-k, k);
    for (auto& v : t.mutable_values()) v = dist(rng);
  };
  const std::size_t f = dims.dynamic_features, c = dims.context_features, h = dims.hidden;
  init(params_.lstm_w_input, f);
  init(params_.lstm_w_hidden, h);
  init(params_.lstm_bias, h);
  auto bias = params_.lstm_bias.mutable_values();
  for (std::size_t j = h; j < 2 * h; ++j) bias[j] = 1.0;
  init(params_.head_w, h);
  init(params_.head_b, h);
  init(params_.ext_w1, f);
  init(params_.ext_b1, f);
  init(params_.ext_w2, dims.ext_hidden);
  init(params_.ext_b2, dims.ext_hidden);
  init(params_.phy_w1, c);
  init(params_.phy_b1, c);
  init(params_.phy_w2, dims.phy_hidden);
  init(params_.phy_b2, dims.phy_hidden);
  init(params_.disc_w1, h);
  init(params_.disc_b1, h);
  init(params_.disc_w2, dims.disc_hidden);
  init(params_.disc_b2, dims.disc_hidden);
}

std::vector<Parameter> Model::parameters() const {
  const auto& p = params_;
  return {{"lstm.w_input", p.lstm_w_input}, {"lstm.w_hidden", p.lstm_w_hidden},
          {"lstm.bias", p.lstm_bias},       {"head.w", p.head_w},
          {"head.b", p.head_b},             {"ext.w1", p.ext_w1},
          {"ext.b1", p.ext_b1},             {"ext.w2", p.ext_w2},
          {"ext.b2", p.ext_b2},             {"phy.w1", p.phy_w1},
          {"phy.b1", p.phy_b1},             {"phy.w2", p.phy_w2},
          {"phy.b2", p.phy_b2},             {"disc.w1", p.disc_w1},
          {"disc.b1", p.disc_b1},           {"disc.w2", p.disc_w2},
          {"disc.b2", p.disc_b2}};
}

std::vector<Parameter> Model::parameters(const VariantFlags& flags) const {
  std::vector<Parameter> out;
  for (auto& p : parameters()) {
    const auto& n = p.name;
    if (n.starts_with("ext.") && !flags.external) continue;
    if (n.starts_with("phy.") && !flags.physical) continue;
    if (n.starts_with("disc.") && !flags.adversarial) continue;
    out.push_back(std::move(p));
  }
  return out;
}

std::size_t Model::parameter_count(const VariantFlags& flags) const {
  std::size_t n = 0;
  for (const auto& p : parameters(flags)) n += p.tensor.size();
  return n;
}

BackboneOutput Model::lstm_backbone(const std::vector<Tensor>& diff_steps, const Tensor& t_last) const {
  if (diff_steps.size() + 1 != dims_.window) {
    throw DimensionError("lstm_backbone: expected " + std::to_string(dims_.window - 1) +
                         " difference steps, got " + std::to_string(diff_steps.size()));
  }
  const std::size_t b = t_last.rows(), h = dims_.hidden;
  Tensor hidden, cell;
  for (std::size_t s = 0; s < diff_steps.size(); ++s) {
    Tensor z = nd::matmul(diff_steps[s], params_.lstm_w_input);
    if (hidden.defined()) z = nd::add(z, nd::matmul(hidden, params_.lstm_w_hidden));
    z = nd::add_bias(z, params_.lstm_bias);
    const Tensor in_gate = nd::sigmoid(nd::slice_cols(z, 0, h));
    const Tensor forget_gate = nd::sigmoid(nd::slice_cols(z, h, 2 * h));
    const Tensor candidate = nd::tanh(nd::slice_cols(z, 2 * h, 3 * h));
    const Tensor out_gate = nd::sigmoid(nd::slice_cols(z, 3 * h, 4 * h));
    cell = cell.defined() ? nd::add(nd::mul(forget_gate, cell), nd::mul(in_gate, candidate))
                          : nd::mul(in_gate, candidate);
    hidden = nd::mul(out_gate, nd::tanh(cell));
  }
  if (!hidden.defined()) hidden = Tensor::zeros({b, h});
  const Tensor deltas = nd::add_bias(nd::matmul(hidden, params_.head_w), params_.head_b);
  return {nd::add_col(nd::cumsum_cols(deltas), t_last), hidden};
}

Tensor Model::f_ext(const Tensor& last_step) const {
  const Tensor hidden = nd::tanh(nd::add_bias(nd::matmul(last_step, params_.ext_w1), params_.ext_b1));
  return nd::add_bias(nd::matmul(hidden, params_.ext_w2), params_.ext_b2);
}

PhysicalOutput Model::f_phy(const Tensor& context) const {
  const Tensor hidden = nd::tanh(nd::add_bias(nd::matmul(context, params_.phy_w1), params_.phy_b1));
  const Tensor u = nd::add_bias(nd::matmul(hidden, params_.phy_w2), params_.phy_b2);
  return {nd::shift(nd::scale(nd::tanh(nd::slice_cols(u, 0, 1)), 0.1), 1.0), nd::slice_cols(u, 1, 2)};
}

Tensor Model::discriminate(const Tensor& hidden, double lambda_adv) const {
  const Tensor reversed = nd::grad_reverse(hidden, lambda_adv);
  const Tensor mid = nd::tanh(nd::add_bias(nd::matmul(reversed, params_.disc_w1), params_.disc_b1));
  return nd::sigmoid(nd::add_bias(nd::matmul(mid, params_.disc_w2), params_.disc_b2));
}

BatchOutput Model::forward(const Batch& batch, double lambda_adv, const VariantFlags& flags) const {
  BatchOutput out;
  auto backbone = lstm_backbone(batch.diff_steps, batch.t_last);
  const std::size_t b = batch.size;
  out.y_base = std::move(backbone.y_base);
  out.hidden = std::move(backbone.hidden);
  if (flags.physical) {
    auto phy = f_phy(batch.context);
    out.s_c = std::move(phy.s_c);
    out.s_h = std::move(phy.s_h);
  } else {
    out.s_c = Tensor::full({b, 1}, 1.0);
    out.s_h = Tensor::zeros({b, 1});
  }
  out.delta_ext = flags.external ? f_ext(batch.last_step) : Tensor::zeros({b, 1});
  out.y_hat = nd::add_col(nd::add_col(nd::mul_col(out.y_base, out.s_c), out.delta_ext), out.s_h);
  out.domain_prob = discriminate(out.hidden, lambda_adv);
  return out;
}

ForwardOutput Model::forward_one(const windows::WindowSet& ws, std::size_t index,
                                 const VariantFlags& flags) const {
  nd::NoGradGuard guard;
  const std::size_t idx[] = {index};
  const Batch batch = make_batch(ws, idx, false);
  const BatchOutput o = forward(batch, 0.0, flags);
  ForwardOutput r;
  r.y_hat.assign(o.y_hat.values().begin(), o.y_hat.values().end());
  r.y_base.assign(o.y_base.values().begin(), o.y_base.values().end());
  r.s_c = o.s_c.item();
  r.s_h = o.s_h.item();
  r.delta_ext = o.delta_ext.item();
  r.domain_prob = o.domain_prob.item();
  r.final_hidden.assign(o.hidden.values().begin(), o.hidden.values().end());
  return r;
}

Model Model::clone() const {
  Model copy(dims_);
  auto src = parameters();
  auto dst = copy.parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto v = src[i].tensor.values();
    std::copy(v.begin(), v.end(), dst[i].tensor.mutable_values().begin());
  }
  return copy;
}

std::vector<double> predict(const Model& model, const windows::WindowSet& ws, const VariantFlags& flags,
                            std::size_t chunk) {
  nd::NoGradGuard guard;
  std::vector<double> out;
  out.reserve(ws.size() * ws.horizon);
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < ws.size(); begin += chunk) {
    const std::size_t end = std::min(ws.size(), begin + chunk);
    idx.resize(end - begin);
    for (std::size_t i = begin; i < end; ++i) idx[i - begin] = i;
    const auto o = model.forward(make_batch(ws, idx, false), 0.0, flags);
    out.insert(out.end(), o.y_hat.values().begin(), o.y_hat.values().end());
  }
  return out;
}

}  // namespace thermocast::model
