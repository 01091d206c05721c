#include "rfcast/rectflow.hpp"

#include <cmath>
#include <numbers>
#include <cstdio>
#include <sstream>

#include "rfcast/errors.hpp"

namespace rfcast::flow {

namespace fs = std::filesystem;

Grid interpolate(const Grid& x0, const Grid& x1, double t) {
  require_same_shape(x0, x1, "interpolate");
  if (!(t >= 0.0 && t <= 1.0)) throw ParameterError("interpolate: t must lie in [0, 1]");
  Grid out(x0.rows(), x0.cols());
  const auto v = interpolate(x0.values(), x1.values(), t);
  std::copy(v.begin(), v.end(), out.values().begin());
  return out;
}

Grid velocity_target(const Grid& x0, const Grid& x1) {
  require_same_shape(x0, x1, "velocity_target");
  Grid out(x0.rows(), x0.cols());
  const auto v = velocity_target(x0.values(), x1.values());
  std::copy(v.begin(), v.end(), out.values().begin());
  return out;
}

std::vector<double> interpolate(std::span<const double> x0, std::span<const double> x1, double t) {
  if (x0.size() != x1.size()) throw ShapeError("interpolate: size mismatch");
  std::vector<double> out(x0.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = t * x1[i] + (1.0 - t) * x0[i];
  return out;
}

std::vector<double> velocity_target(std::span<const double> x0, std::span<const double> x1) {
  if (x0.size() != x1.size()) throw ShapeError("velocity_target: size mismatch");
  std::vector<double> out(x0.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x1[i] - x0[i];
  return out;
}

std::vector<double> euler_integrate(std::vector<double> x, std::size_t steps, const VelocityFn& v) {
  if (steps < 1) throw ParameterError("euler_integrate: need at least one step");
  const double dt = 1.0 / static_cast<double>(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const auto vel = v(x, static_cast<double>(i) / static_cast<double>(steps));
    if (vel.size() != x.size()) throw ShapeError("euler_integrate: velocity has wrong size");
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] += dt * vel[k];
      if (!std::isfinite(x[k])) throw NumericError("sampler state became non-finite at step " + std::to_string(i));
    }
  }
  return x;
}

std::vector<double> normalized_context(const VelocityModel& m, const cond::ContextBundle& ctx) {
  const ModelArch& a = m.arch();
  if (ctx.context_latents.frames.size() != a.context_len) {
    throw ShapeError("context bundle has " + std::to_string(ctx.context_latents.frames.size()) + " frames, model expects " +
                     std::to_string(a.context_len));
  }
  std::vector<double> out;
  out.reserve(a.context_size());
  for (const Grid& g : ctx.context_latents.frames) {
    if (g.rows() != a.rows || g.cols() != a.cols) throw ShapeError("context latent has wrong shape");
    for (double v : g.values()) out.push_back((v - m.norm.mean) / m.norm.std);
  }
  return out;
}

std::vector<double> cfg_velocity(const VelocityModel& m, std::span<const double> x, std::span<const double> context,
                                 const cond::ConditionVector& c, double t, double s) {
  if (!(s >= 0.0)) throw ParameterError("cfg_velocity: guidance scale must be >= 0");
  std::vector<double> vc = model_forward(m, x, context, c, t);
  if (s == 0.0) return vc;
  const std::vector<double> vn = model_forward(m, x, context, cond::ConditionVector::null(), t);
  for (std::size_t i = 0; i < vc.size(); ++i) vc[i] = (1.0 + s) * vc[i] - s * vn[i];
  return vc;
}

LatentSequence sample(const VelocityModel& m, const cond::ContextBundle& ctx, std::size_t steps, double s, Rng& rng) {
  const ModelArch& a = m.arch();
  const std::vector<double> context = normalized_context(m, ctx);
  std::vector<double> x = gaussian_vector(rng, a.state_size());
  x = euler_integrate(std::move(x), steps, [&](std::span<const double> xs, double t) {
    return cfg_velocity(m, xs, context, ctx.condition, t, s);
  });
  LatentSequence out;
  out.scale = ctx.context_latents.scale;
  for (std::size_t f = 0; f < a.horizon; ++f) {
    Grid g(a.rows, a.cols);
    for (std::size_t p = 0; p < a.pixels(); ++p) g.values()[p] = x[f * a.pixels() + p] * m.norm.std + m.norm.mean;
    out.frames.push_back(std::move(g));
  }
  return out;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ParameterError("train: batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ParameterError("train: learning rate must be >= 0");
  if (!(p_drop >= 0.0 && p_drop <= 1.0)) throw ParameterError("train: p_drop must lie in [0, 1]");
  if (!(lr_final_scale >= 0.0 && lr_final_scale <= 1.0)) throw ParameterError("train: lr_final_scale must lie in [0, 1]");
  if (!(clip_norm >= 0.0)) throw ParameterError("train: clip_norm must be >= 0");
  if (horizon < 1 || scale < 1) throw ParameterError("train: horizon and scale must be positive");
}

TrainingSet encode_training_set(const dataset::Manifest& manifest, const synth::DegradationParams& degradation,
                                std::size_t horizon) {
  TrainingSet set;
  set.context_len = manifest.context_len;
  set.horizon = horizon;
  if (horizon > manifest.horizon) throw ParameterError("training horizon exceeds the dataset horizon");
  for (const auto* e : manifest.split(false)) {
    const RadarSequence seq = dataset::load_event(manifest, *e);
    const LatentSequence lat = codec::encode_sequence(seq.slice(0, set.context_len + horizon), degradation);
    LatentEvent ev;
    for (std::size_t f = 0; f < lat.frames.size(); ++f) {
      auto& dst = f < set.context_len ? ev.context : ev.target;
      const auto v = lat.frames[f].values();
      dst.insert(dst.end(), v.begin(), v.end());
    }
    set.rows = lat.frames[0].rows();
    set.cols = lat.frames[0].cols();
    ev.condition = e->condition;
    set.events.push_back(std::move(ev));
  }
  if (set.events.empty()) throw ParameterError("manifest has no training events");
  return set;
}

LatentNorm fit_latent_norm(const TrainingSet& data) {
  double s = 0.0, s2 = 0.0, n = 0.0;
  for (const auto& e : data.events) {
    for (const auto* v : {&e.context, &e.target}) {
      for (double x : *v) {
        s += x;
        s2 += x * x;
        n += 1.0;
      }
    }
  }
  if (n == 0.0) throw ParameterError("fit_latent_norm: empty training set");
  const double mean = s / n;
  const double var = std::max(0.0, s2 / n - mean * mean);
  return {mean, var > 0.0 ? std::sqrt(var) : 1.0};
}

TrainResult train(VelocityModel model, const TrainingSet& data, const TrainConfig& cfg,
                  const std::function<void(std::size_t, double)>& progress) {
  cfg.validate();
  const ModelArch& a = model.arch();
  if (data.events.empty()) throw ParameterError("train: empty training set");
  if (data.horizon != a.horizon || data.context_len != a.context_len || data.rows != a.rows || data.cols != a.cols) {
    throw ShapeError("train: training set does not match the model architecture");
  }
  const std::size_t n_state = a.state_size();
  const double inv_n = 1.0 / static_cast<double>(n_state);
  const double inv_b = 1.0 / static_cast<double>(cfg.batch_size);
  const LatentNorm norm = model.norm;
  const Rng root(cfg.seed);

  TrainResult result{std::move(model), {}};
  VelocityModel& m = result.model;
  result.loss.reserve(cfg.steps);
  std::vector<double> grad(m.parameters().size());
  std::vector<double> ctx(a.context_size()), x1(n_state), upstream(n_state);
  ForwardCache cache;

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const Rng step_rng = root.child(step);
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      Rng r = step_rng.child(b);
      const LatentEvent& ev = data.events[r.index(data.events.size())];
      for (std::size_t i = 0; i < ctx.size(); ++i) ctx[i] = (ev.context[i] - norm.mean) / norm.std;
      for (std::size_t i = 0; i < n_state; ++i) x1[i] = (ev.target[i] - norm.mean) / norm.std;
      const std::vector<double> x0 = gaussian_vector(r, n_state);
      const double t = r.uniform();
      const cond::ConditionVector c = cond::drop_condition(r, ev.condition, cfg.p_drop);

      const std::vector<double> xt = interpolate(x0, x1, t);
      const std::vector<double> u = model_forward(m, xt, ctx, c, t, &cache);
      double sq = 0.0;
      for (std::size_t i = 0; i < n_state; ++i) {
        const double r_i = u[i] - (x1[i] - x0[i]);
        sq += r_i * r_i;
        upstream[i] = 2.0 * r_i * inv_n * inv_b;
      }
      loss += sq * inv_n * inv_b;
      const std::vector<double> g = model_backward(m, cache, upstream);
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
    }

    double gnorm2 = 0.0;
    for (double g : grad) gnorm2 += g * g;
    if (!std::isfinite(loss) || !std::isfinite(gnorm2)) {
      double pn = 0.0;
      for (double p : m.parameters()) pn += p * p;
      char buf[160];
      std::snprintf(buf, sizeof buf, "training diverged at step %zu: loss=%g, parameter norm=%g", step, loss,
                    std::sqrt(pn));
      throw NumericError(buf);
    }
    const double progress_frac = cfg.steps > 1 ? static_cast<double>(step) / static_cast<double>(cfg.steps - 1) : 0.0;
    const double f = cfg.lr_final_scale;
    double factor = cfg.learning_rate * (f + (1.0 - f) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress_frac)));
    if (cfg.clip_norm > 0.0 && std::sqrt(gnorm2) > cfg.clip_norm) factor *= cfg.clip_norm / std::sqrt(gnorm2);
    auto params = m.parameters();
    for (std::size_t i = 0; i < grad.size(); ++i) params[i] -= factor * grad[i];
    result.loss.push_back(loss);
    if (progress) progress(step, loss);
  }
  return result;
}

std::string loss_csv(std::span<const double> loss) {
  std::string out = "step,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < loss.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, loss[i]);
    out += buf;
  }
  return out;
}

void ForecastConfig::validate() const {
  if (sampler_steps < 1) throw ParameterError("forecast: sampler_steps must be >= 1");
  if (!(cfg_scale >= 0.0)) throw ParameterError("forecast: cfg_scale must be >= 0");
  unfold.validate();
}

RadarSequence forecast(const VelocityModel& m, const RadarSequence& context,
                       const std::optional<std::string>& description, const ForecastConfig& cfg, Rng& rng) {
  if (context.size() != m.arch().context_len) {
    throw ShapeError("forecast: expected " + std::to_string(m.arch().context_len) + " context frames, got " +
                     std::to_string(context.size()));
  }
  const cond::ConditionVector c =
      description ? cond::condition_from_text(*description) : cond::infer_context_condition(context);
  return forecast_with_condition(m, context, c, cfg, rng);
}

RadarSequence forecast_with_condition(const VelocityModel& m, const RadarSequence& context,
                                      const cond::ConditionVector& condition, const ForecastConfig& cfg, Rng& rng) {
  cfg.validate();
  if (context.size() != m.arch().context_len) throw ShapeError("forecast: wrong number of context frames");
  cond::ContextBundle bundle{codec::encode_sequence(context, cfg.unfold.degradation), condition};
  const LatentSequence lat = sample(m, bundle, cfg.sampler_steps, cfg.cfg_scale, rng);
  RadarSequence out = codec::decode_sequence(lat.frames, cfg.unfold);
  if (out.height() != context.height() || out.width() != context.width()) {
    throw ShapeError("forecast: decoded shape differs from the context shape");
  }
  return RadarSequence(out.frames(), context.cadence_minutes());
}

void save_checkpoint(const fs::path& dir, const VelocityModel& m, const synth::DegradationParams& degradation) {
  TensorBundle b = to_bundle(m);
  Tensor taps;
  taps.shape = {degradation.taps.size()};
  taps.values.assign(degradation.taps.begin(), degradation.taps.end());
  b["codec.taps"] = std::move(taps);
  b["codec.scale"] = Tensor{{1}, {static_cast<float>(degradation.scale)}};
  b["latent_norm"] = Tensor{{2}, {static_cast<float>(m.norm.mean), static_cast<float>(m.norm.std)}};
  write_bundle(dir, b);
}

Checkpoint load_checkpoint(const fs::path& dir) {
  const TensorBundle b = read_bundle(dir);
  Checkpoint ck{from_bundle(b), {}};
  const auto taps = b.find("codec.taps");
  const auto scale = b.find("codec.scale");
  if (taps == b.end() || scale == b.end() || scale->second.values.size() != 1) {
    throw FormatError("checkpoint is missing the codec settings");
  }
  ck.degradation.taps.assign(taps->second.values.begin(), taps->second.values.end());
  // Stored taps are single precision; restore the exact unit sum.
  double sum = 0.0;
  for (double t : ck.degradation.taps) sum += t;
  if (!(sum > 0.0)) throw FormatError("checkpoint blur taps do not sum to a positive value");
  for (double& t : ck.degradation.taps) t /= sum;
  ck.degradation.scale = static_cast<std::size_t>(scale->second.values[0]);
  ck.degradation.validate();
  return ck;
}

}  // namespace rfcast::flow
