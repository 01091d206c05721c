#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rfcast/fields.hpp"
#include "rfcast/grid.hpp"
#include "rfcast/rng.hpp"
#include "rfcast/synth.hpp"

namespace rfcast::codec {

// --- Haar wavelet -------------------------------------------------------------

struct DetailBands {
  Grid lh;  ///< vertical difference (top - bottom)
  Grid hl;  ///< horizontal difference (left - right)
  Grid hh;  ///< diagonal difference
};

/// Orthonormal, critically sampled 2D Haar decomposition.
/// details[0] is the finest level.
struct WaveletCoeffs {
  std::size_t levels = 0;
  Grid approx;
  std::vector<DetailBands> details;

  std::size_t coefficient_count() const;
  double energy() const;
};

/// Throws ShapeError for non-dyadic input or levels > log2(min side).
WaveletCoeffs dwt2(const Grid& x, std::size_t levels);
Grid idwt2(const WaveletCoeffs& c);

/// Detail coefficients w -> sign(w) max(|w| - lambda, 0); approx untouched.
WaveletCoeffs soft_shrink(WaveletCoeffs c, double lambda);

// --- encoder --------------------------------------------------------------------

/// Analytic latent encoder: the noiseless degradation map D_s(x * k).
Grid encode(const Grid& x, const synth::DegradationParams& p);
Grid encode(const RadarField& x, const synth::DegradationParams& p);
LatentSequence encode_sequence(const RadarSequence& seq, const synth::DegradationParams& p);

/// Largest eigenvalue of A^T A for A = D_s(. * k) on a rows x cols field,
/// by power iteration from a seeded random start.
double operator_norm_sq(const synth::DegradationParams& p, std::size_t rows, std::size_t cols,
                        int iters = 200, std::uint64_t seed = 1);

// --- unfolding decoder -----------------------------------------------------------

struct StageParams {
  double eta = 0.0;
  double lambda = 0.0;
};

struct UnfoldConfig {
  std::size_t stages = 8;
  double eta = 8.0;
  double lambda = 1.0;
  std::size_t wavelet_levels = 1;
  /// Shrink in every circular shift of the Haar grid and average (cycle
  /// spinning); false gives the single decimated transform.
  bool shift_invariant = true;
  double fusion_weight = 0.9;  ///< weight of the unfolding path in the output
  synth::DegradationParams degradation = synth::DegradationParams::gaussian(1.0, 4);
  /// Optional per-stage (eta, lambda); when non-empty its size must equal `stages`.
  std::vector<StageParams> per_stage;

  StageParams stage(std::size_t t) const;
  void validate() const;
};

/// x + 2 eta D^T (y - D x).
Grid dc_step(const Grid& x, const Grid& y, const synth::DegradationParams& p, double eta);
Grid dc_step(const Grid& x, const Grid& y, const UnfoldConfig& cfg);

/// Soft shrinkage of Haar details, averaged over grid shifts when
/// shift_invariant. Identity for lambda == 0.
Grid wavelet_prior(const Grid& z, std::size_t levels, double lambda, bool shift_invariant);

/// wavelet_prior(dc_step(x, y)).
Grid wcub_stage(const Grid& x, const Grid& y, const UnfoldConfig& cfg, StageParams params);
Grid wcub_stage(const Grid& x, const Grid& y, const UnfoldConfig& cfg);

/// Periodic bilinear upsampling; latent sample (i, j) sits on full-resolution
/// pixel (s i, s j), matching the decimation phase.
Grid bilinear_upsample(const Grid& y, std::size_t scale);

/// Unfolding path alone: x^0 = U_s(y), x^{t+1} = wcub_stage(x^t, y). No clamping.
Grid wcub_refine(const Grid& y, const UnfoldConfig& cfg);

/// Dual-path decode: w * refine(y) + (1 - w) * U_s(y), clamped to >= 0.
RadarField wcub_decode(const Grid& y, const UnfoldConfig& cfg);
RadarSequence decode_sequence(std::span<const Grid> latents, const UnfoldConfig& cfg);

/// Exhaustive search over (eta, lambda, stages) maximising mean PSNR of
/// wcub_decode against `truth` (peak = per-field maximum).
struct GridSearchResult {
  UnfoldConfig best;
  double best_psnr = 0.0;
};
GridSearchResult grid_search_unfold(std::span<const Grid> truth, std::span<const Grid> latents,
                                    const UnfoldConfig& base, std::span<const double> etas,
                                    std::span<const double> lambdas, std::span<const std::size_t> stages);

// --- temporal shift --------------------------------------------------------------

/// Per-frame multi-channel feature map; all channels share one shape.
struct FeatureFrame {
  std::vector<Grid> channels;
};

/// First floor(f C) channels move one frame forward in time, the next
/// floor(f C) one frame backward, the rest stay. Vacated slots are zero.
std::vector<FeatureFrame> time_shift(const std::vector<FeatureFrame>& seq, double fraction);

}  // namespace rfcast::codec
