#pragma once

#include <cstddef>
#include <optional>

#include "rfcast/fields.hpp"
#include "rfcast/grid.hpp"
#include "rfcast/synth.hpp"

namespace rfcast::motion {

/// Dense displacement field in px/frame; u is +x (rightward), v is +y (downward).
struct FlowField {
  Grid u;
  Grid v;
};

struct FlowParams {
  double alpha = 1.0;  ///< Horn-Schunck smoothness weight
  int iters = 200;
  /// Pixels with magnitude below this fraction of the field maximum are ignored
  /// by the dominant-direction statistic.
  double floor_fraction = 0.01;
};

/// Horn-Schunck with central-difference gradients of the mean frame, the
/// classic 1/6-1/12 neighbourhood average and periodic boundaries. Jacobi
/// updates for a fixed iteration count, so the result is deterministic.
FlowField optical_flow(const Grid& f0, const Grid& f1, double alpha = 1.0, int iters = 200);

/// Magnitude-weighted resultant of flow orientations, kept as raw sums so it
/// can be accumulated over several frame pairs before taking one atan2.
struct DirectionSums {
  double cos_sum = 0.0;  ///< sum of m cos(theta) = sum of u
  double sin_sum = 0.0;  ///< sum of m sin(theta) = sum of v
  double weight = 0.0;   ///< sum of m
  double weight_sq = 0.0;  ///< sum of m^2
  std::size_t count = 0;

  DirectionSums& operator+=(const DirectionSums& o) noexcept;
};

struct DominantDirection {
  bool moving = false;        ///< false is the "no-motion" result
  double angle_deg = 0.0;     ///< [0, 360), 0 = rightward, 90 = downward
  double mean_magnitude = 0.0;  ///< magnitude-weighted mean magnitude
  double resultant_length = 0.0;  ///< |resultant| / sum of m, in [0, 1]
};

/// Sums over pixels with magnitude >= floor and magnitude > 0.
DirectionSums direction_sums(const FlowField& flow, double magnitude_floor);
DominantDirection summarize(const DirectionSums& sums);

DominantDirection dominant_direction(const FlowField& flow, double magnitude_floor);
/// Floor = fraction * max magnitude of this flow field.
double relative_floor(const FlowField& flow, double fraction);

/// Sums over all consecutive-pair flows of one sequence; throws
/// ParameterError for fewer than two frames.
DirectionSums sequence_direction_sums(const std::vector<Grid>& frames, const FlowParams& params = {});

/// One circular mean over all consecutive-pair flows.
DominantDirection sequence_dominant_direction(const RadarSequence& seq, const FlowParams& params = {});
DominantDirection sequence_dominant_direction(const std::vector<Grid>& frames,
                                              const FlowParams& params = {});

/// Pools the flow of every member of a forecast ensemble into one circular
/// mean: the ensemble's dominant direction.
DominantDirection ensemble_dominant_direction(const std::vector<std::vector<Grid>>& members,
                                              const FlowParams& params = {});

/// Motion statistics of a short sequence as a MotionSpec: dominant direction,
/// weighted mean flow magnitude as speed, resultant length as coherence,
/// total-intensity ratio as growth and mean vorticity as rotation.
/// std::nullopt when every frame is rain-free.
std::optional<synth::MotionSpec> estimate_motion_spec(const RadarSequence& seq,
                                                      const FlowParams& params = {});

}  // namespace rfcast::motion
