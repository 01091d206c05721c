#pragma once

#include <cstddef>
#include <vector>

#include "rfcast/grid.hpp"

namespace rfcast {

inline constexpr std::size_t kContextLen = 4;
inline constexpr std::size_t kHorizon = 16;
inline constexpr double kCadenceMinutes = 5.0;

/// One radar frame: nonnegative, finite rain rates in mm/h on a dyadic grid
/// (both sides powers of two, at least 8).
class RadarField {
 public:
  /// Throws ParameterError if the grid violates the field invariants.
  explicit RadarField(Grid values);

  /// Clamps negatives to zero before validating; used on decoder output.
  static RadarField clamped(Grid values);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t height() const noexcept { return grid_.rows(); }
  std::size_t width() const noexcept { return grid_.cols(); }

  friend bool operator==(const RadarField&, const RadarField&) = default;

 private:
  Grid grid_;
};

bool is_valid_field_shape(std::size_t height, std::size_t width) noexcept;

/// Fixed-cadence stack of frames sharing one shape.
class RadarSequence {
 public:
  RadarSequence() = default;
  explicit RadarSequence(std::vector<RadarField> frames, double cadence_minutes = kCadenceMinutes);

  const std::vector<RadarField>& frames() const noexcept { return frames_; }
  std::size_t size() const noexcept { return frames_.size(); }
  const RadarField& operator[](std::size_t i) const { return frames_[i]; }
  double cadence_minutes() const noexcept { return cadence_; }
  std::size_t height() const noexcept { return frames_.empty() ? 0 : frames_[0].height(); }
  std::size_t width() const noexcept { return frames_.empty() ? 0 : frames_[0].width(); }

  /// Frames [begin, begin + count).
  RadarSequence slice(std::size_t begin, std::size_t count) const;

 private:
  std::vector<RadarField> frames_;
  double cadence_ = kCadenceMinutes;
};

/// Per-frame latent grids at downsampling factor `scale`.
struct LatentSequence {
  std::vector<Grid> frames;
  std::size_t scale = 4;
};

}  // namespace rfcast
