#pragma once

#include <array>
#include <string>
#include <string_view>

#include "rfcast/synth.hpp"

namespace rfcast::synth {

// Template grammar for motion descriptions:
//
//   description := "echoes move " DIR ", " SPEED ", " COHERENCE ", " GROWTH [", " ROTATION]
//                | "echoes stay stationary, " COHERENCE ", " GROWTH [", " ROTATION]
//   DIR        := one of the 8 compass phrases below (bins of 45 deg centered on k*45)
//   SPEED      := "slow" | "moderate" | "fast"
//   COHERENCE  := "coherent" | "mixed" | "scattered"
//   GROWTH     := "intensifying" | "steady" | "decaying"
//   ROTATION   := "rotating clockwise" | "rotating counterclockwise"

inline constexpr std::array<std::string_view, 8> kCompassPhrases = {
    "rightward",           "rightward and downward", "downward", "leftward and downward",
    "leftward",            "leftward and upward",    "upward",   "rightward and upward"};

enum class SpeedClass { stationary, slow, moderate, fast };
enum class CoherenceClass { coherent, mixed, scattered };
enum class GrowthClass { intensifying, steady, decaying };
enum class RotationClass { none, clockwise, counterclockwise };

/// Quantized view of a MotionSpec; the text is a function of this alone.
struct QuantizedSpec {
  int compass_bin = 0;  ///< 0..7, bin k centered on k * 45 deg
  SpeedClass speed = SpeedClass::stationary;
  CoherenceClass coherence = CoherenceClass::coherent;
  GrowthClass growth = GrowthClass::steady;
  RotationClass rotation = RotationClass::none;

  friend bool operator==(const QuantizedSpec&, const QuantizedSpec&) = default;
};

int compass_bin(double direction_deg) noexcept;
QuantizedSpec quantize(const MotionSpec& spec) noexcept;
/// Representative spec of a class tuple: bin center, class midpoints.
MotionSpec representative(const QuantizedSpec& q) noexcept;

std::string_view speed_word(SpeedClass c) noexcept;
std::string_view coherence_word(CoherenceClass c) noexcept;
std::string_view growth_word(GrowthClass c) noexcept;
std::string_view rotation_phrase(RotationClass c) noexcept;

std::string render_quantized(const QuantizedSpec& q);
std::string render_description(const MotionSpec& spec);

}  // namespace rfcast::synth
