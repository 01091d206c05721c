#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rfcast/fields.hpp"
#include "rfcast/grid.hpp"
#include "rfcast/rng.hpp"

namespace rfcast::synth {

/// Structured motion description. Angles are in image convention:
/// 0 deg = rightward (+x), 90 deg = downward (+y).
struct MotionSpec {
  double direction_deg = 0.0;
  double speed = 0.0;  ///< px per frame
  double rotation_deg_per_frame = 0.0;
  double growth_rate = 1.0;  ///< multiplicative intensity factor per frame
  double coherence = 1.0;    ///< fraction of cells following direction_deg

  /// Throws ParameterError when a field is out of range.
  void validate() const;
};

enum class DescriptionSource { full_sequence, context_only };

const char* to_string(DescriptionSource s);
DescriptionSource description_source_from_string(const std::string& s);

struct EventRecord {
  RadarSequence sequence;
  MotionSpec spec;
  std::string description;
  DescriptionSource description_source = DescriptionSource::full_sequence;
};

/// Rain-cell population parameters (full-resolution pixels, mm/h).
struct CellParams {
  double sigma_min = 2.0;
  double sigma_max = 5.0;
  double aspect_max = 1.6;  ///< major/minor axis ratio upper bound
  double peak_min = 2.0;
  double peak_max = 14.0;
};

struct EventShape {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t n_cells = 6;
  std::size_t context_len = kContextLen;
  std::size_t horizon = kHorizon;
  CellParams cells;
};

/// Generates one event of `context_len + horizon` frames: frame 0 holds
/// `n_cells` anisotropic Gaussian cells; each later frame advects the
/// coherent cells along the spec direction (the rest along per-cell random
/// directions at the same speed), rotates each cell and scales intensity by
/// growth_rate. Periodic boundaries.
EventRecord synth_event(Rng& rng, const MotionSpec& spec, const EventShape& shape,
                        DescriptionSource source = DescriptionSource::full_sequence);

/// Blur kernel (separable, symmetric, odd length, unit sum) plus decimation
/// factor and observation noise level.
struct DegradationParams {
  std::vector<double> taps{1.0};  ///< 1D taps; the 2D kernel is taps (x) taps
  std::size_t scale = 4;
  double noise_sigma = 0.0;

  std::size_t radius() const noexcept { return taps.size() / 2; }
  double kernel(long dr, long dc) const noexcept {
    return taps[static_cast<std::size_t>(dr + static_cast<long>(radius()))] *
           taps[static_cast<std::size_t>(dc + static_cast<long>(radius()))];
  }
  void validate() const;

  static DegradationParams gaussian(double sigma, std::size_t scale, double noise_sigma = 0.0);
  static DegradationParams delta(std::size_t scale);
};

/// y = D_s(x * k) + n with circular convolution, top-left decimation phase.
Grid degrade(const Grid& x, const DegradationParams& p, Rng& rng);
/// Noise-free forward map D_s(x * k).
Grid degrade_noiseless(const Grid& x, const DegradationParams& p);
/// Exact adjoint of degrade_noiseless: zero-insertion then correlation with k.
Grid degrade_adjoint(const Grid& y, const DegradationParams& p);

}  // namespace rfcast::synth
