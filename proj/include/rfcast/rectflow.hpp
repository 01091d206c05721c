#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfcast/codec.hpp"
#include "rfcast/conditioning.hpp"
#include "rfcast/dataset.hpp"
#include "rfcast/fields.hpp"
#include "rfcast/grid.hpp"
#include "rfcast/rng.hpp"
#include "rfcast/velocity_model.hpp"

namespace rfcast::flow {

Grid interpolate(const Grid& x0, const Grid& x1, double t);
Grid velocity_target(const Grid& x0, const Grid& x1);
std::vector<double> interpolate(std::span<const double> x0, std::span<const double> x1, double t);
std::vector<double> velocity_target(std::span<const double> x0, std::span<const double> x1);

/// v(x, t) for the sampler.
using VelocityFn = std::function<std::vector<double>(std::span<const double> x, double t)>;

/// Fixed-step Euler from t = 0 to 1: x <- x + v(x, i/N) / N.
/// Throws NumericError naming the step when the state stops being finite.
std::vector<double> euler_integrate(std::vector<double> x, std::size_t steps, const VelocityFn& v);

/// Context latents stacked frame by frame and mapped through the model's
/// latent normalisation.
std::vector<double> normalized_context(const VelocityModel& m, const cond::ContextBundle& ctx);

/// (1+s) u(x, ctx, c) - s u(x, ctx, null). For s == 0 the conditional
/// prediction is returned as is.
std::vector<double> cfg_velocity(const VelocityModel& m, std::span<const double> x, std::span<const double> context,
                                 const cond::ConditionVector& c, double t, double s);

/// Draws the horizon-frame latent stack from N(0, I) with the given number
/// of Euler steps; output in physical latent units.
LatentSequence sample(const VelocityModel& m, const cond::ContextBundle& ctx, std::size_t steps, double s, Rng& rng);

struct TrainConfig {
  std::size_t steps = 20000;
  std::size_t batch_size = 8;
  double learning_rate = 0.05;
  /// Cosine schedule from learning_rate down to learning_rate * lr_final_scale
  /// at the last step; 1 keeps the rate constant.
  double lr_final_scale = 1.0;
  double p_drop = 0.1;
  double clip_norm = 1.0;  ///< global gradient-norm clip; 0 disables
  std::uint64_t seed = 0;
  std::size_t horizon = kHorizon;
  std::size_t scale = 4;

  void validate() const;
};

/// One training pair in physical latent units.
struct LatentEvent {
  std::vector<double> context;  ///< context_len frames, row-major, stacked
  std::vector<double> target;   ///< horizon frames
  cond::ConditionVector condition;
};

struct TrainingSet {
  std::size_t context_len = kContextLen;
  std::size_t horizon = kHorizon;
  std::size_t rows = 0, cols = 0;
  std::vector<LatentEvent> events;
};

/// Encodes the train split of a manifest: frames [0, context_len) become the
/// context, the next `horizon` frames the target.
TrainingSet encode_training_set(const dataset::Manifest& manifest, const synth::DegradationParams& degradation,
                                std::size_t horizon);

/// Mean and standard deviation over all context and target latents.
LatentNorm fit_latent_norm(const TrainingSet& data);

struct TrainResult {
  VelocityModel model;
  std::vector<double> loss;  ///< one batch-mean loss per step
};

/// Plain SGD on the per-sample mean squared velocity error. Step k uses
/// child stream k of the seed, sample b of that step child stream b; the
/// batch gradient is summed in sample order. The model's norm must already
/// be set. Throws NumericError on a non-finite loss or parameter.
TrainResult train(VelocityModel model, const TrainingSet& data, const TrainConfig& cfg,
                  const std::function<void(std::size_t, double)>& progress = {});

std::string loss_csv(std::span<const double> loss);

struct ForecastConfig {
  std::size_t sampler_steps = 16;
  double cfg_scale = 1.0;
  codec::UnfoldConfig unfold;

  void validate() const;
};

/// Condition from `description` when given, otherwise inferred from the
/// context frames alone.
RadarSequence forecast(const VelocityModel& m, const RadarSequence& context,
                       const std::optional<std::string>& description, const ForecastConfig& cfg, Rng& rng);
RadarSequence forecast_with_condition(const VelocityModel& m, const RadarSequence& context,
                                      const cond::ConditionVector& condition, const ForecastConfig& cfg, Rng& rng);

struct Checkpoint {
  VelocityModel model;
  synth::DegradationParams degradation;
};

void save_checkpoint(const std::filesystem::path& dir, const VelocityModel& m,
                     const synth::DegradationParams& degradation);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace rfcast::flow
