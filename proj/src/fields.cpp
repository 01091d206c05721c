#include "rfcast/fields.hpp"

#include <cmath>
#include <string>

#include "rfcast/errors.hpp"

namespace rfcast {

bool is_valid_field_shape(std::size_t height, std::size_t width) noexcept {
  return height >= 8 && width >= 8 && is_power_of_two(height) && is_power_of_two(width);
}

RadarField::RadarField(Grid values) : grid_(std::move(values)) {
  if (!is_valid_field_shape(grid_.rows(), grid_.cols())) {
    throw ParameterError("radar field shape " + std::to_string(grid_.rows()) + "x" +
                         std::to_string(grid_.cols()) + " is not dyadic with sides >= 8");
  }
  for (double v : grid_.values()) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ParameterError("radar field values must be finite and nonnegative");
    }
  }
}

RadarField RadarField::clamped(Grid values) {
  for (double& v : values.values()) {
    if (v < 0.0) v = 0.0;
  }
  return RadarField(std::move(values));
}

RadarSequence::RadarSequence(std::vector<RadarField> frames, double cadence_minutes)
    : frames_(std::move(frames)), cadence_(cadence_minutes) {
  if (!(cadence_minutes > 0.0)) throw ParameterError("cadence must be positive");
  for (const auto& f : frames_) {
    if (!f.grid().same_shape(frames_.front().grid())) {
      throw ShapeError("radar sequence frames must share one shape");
    }
  }
}

RadarSequence RadarSequence::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > frames_.size()) throw ParameterError("sequence slice out of range");
  return RadarSequence(std::vector<RadarField>(frames_.begin() + static_cast<long>(begin),
                                               frames_.begin() + static_cast<long>(begin + count)),
                       cadence_);
}

}  // namespace rfcast
