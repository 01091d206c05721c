#include "rfcast/description.hpp"

#include <cmath>

namespace rfcast::synth {

namespace {

// Class boundaries. Each representative value lies strictly inside its class
// so render(parse(render(s))) == render(s).
constexpr double kSlowMin = 0.25;
constexpr double kModerateMin = 1.0;
constexpr double kFastMin = 2.0;
constexpr double kCoherentMin = 0.8;
constexpr double kMixedMin = 0.5;
constexpr double kIntensifyingMin = 1.02;
constexpr double kDecayingMax = 0.98;
constexpr double kRotationMin = 1.0;

}  // namespace

int compass_bin(double direction_deg) noexcept {
  double d = std::fmod(direction_deg, 360.0);
  if (d < 0.0) d += 360.0;
  return static_cast<int>(std::floor(d / 45.0 + 0.5)) % 8;
}

QuantizedSpec quantize(const MotionSpec& spec) noexcept {
  QuantizedSpec q;
  q.compass_bin = compass_bin(spec.direction_deg);
  if (spec.speed < kSlowMin) {
    q.speed = SpeedClass::stationary;
    q.compass_bin = 0;
  } else if (spec.speed < kModerateMin) {
    q.speed = SpeedClass::slow;
  } else if (spec.speed < kFastMin) {
    q.speed = SpeedClass::moderate;
  } else {
    q.speed = SpeedClass::fast;
  }
  q.coherence = spec.coherence >= kCoherentMin ? CoherenceClass::coherent
                : spec.coherence >= kMixedMin  ? CoherenceClass::mixed
                                               : CoherenceClass::scattered;
  q.growth = spec.growth_rate > kIntensifyingMin ? GrowthClass::intensifying
             : spec.growth_rate < kDecayingMax   ? GrowthClass::decaying
                                                 : GrowthClass::steady;
  q.rotation = spec.rotation_deg_per_frame >= kRotationMin    ? RotationClass::clockwise
               : spec.rotation_deg_per_frame <= -kRotationMin ? RotationClass::counterclockwise
                                                              : RotationClass::none;
  return q;
}

MotionSpec representative(const QuantizedSpec& q) noexcept {
  MotionSpec s;
  s.direction_deg = 45.0 * q.compass_bin;
  switch (q.speed) {
    case SpeedClass::stationary: s.speed = 0.0; break;
    case SpeedClass::slow: s.speed = 0.5 * (kSlowMin + kModerateMin); break;
    case SpeedClass::moderate: s.speed = 0.5 * (kModerateMin + kFastMin); break;
    case SpeedClass::fast: s.speed = 2.5; break;  // fast class nominally spans [2, 3]
  }
  switch (q.coherence) {
    case CoherenceClass::coherent: s.coherence = 0.5 * (kCoherentMin + 1.0); break;
    case CoherenceClass::mixed: s.coherence = 0.5 * (kMixedMin + kCoherentMin); break;
    case CoherenceClass::scattered: s.coherence = 0.5 * kMixedMin; break;
  }
  switch (q.growth) {
    case GrowthClass::intensifying: s.growth_rate = 1.05; break;
    case GrowthClass::steady: s.growth_rate = 1.0; break;
    case GrowthClass::decaying: s.growth_rate = 0.95; break;
  }
  switch (q.rotation) {
    case RotationClass::none: s.rotation_deg_per_frame = 0.0; break;
    case RotationClass::clockwise: s.rotation_deg_per_frame = 3.0; break;
    case RotationClass::counterclockwise: s.rotation_deg_per_frame = -3.0; break;
  }
  return s;
}

std::string_view speed_word(SpeedClass c) noexcept {
  switch (c) {
    case SpeedClass::stationary: return "stationary";
    case SpeedClass::slow: return "slow";
    case SpeedClass::moderate: return "moderate";
    case SpeedClass::fast: return "fast";
  }
  return "";
}

std::string_view coherence_word(CoherenceClass c) noexcept {
  switch (c) {
    case CoherenceClass::coherent: return "coherent";
    case CoherenceClass::mixed: return "mixed";
    case CoherenceClass::scattered: return "scattered";
  }
  return "";
}

std::string_view growth_word(GrowthClass c) noexcept {
  switch (c) {
    case GrowthClass::intensifying: return "intensifying";
    case GrowthClass::steady: return "steady";
    case GrowthClass::decaying: return "decaying";
  }
  return "";
}

std::string_view rotation_phrase(RotationClass c) noexcept {
  switch (c) {
    case RotationClass::none: return "";
    case RotationClass::clockwise: return "rotating clockwise";
    case RotationClass::counterclockwise: return "rotating counterclockwise";
  }
  return "";
}

std::string render_quantized(const QuantizedSpec& q) {
  std::string out = "echoes ";
  if (q.speed == SpeedClass::stationary) {
    out += "stay stationary";
  } else {
    out += "move ";
    out += kCompassPhrases[static_cast<std::size_t>(q.compass_bin)];
    out += ", ";
    out += speed_word(q.speed);
  }
  out += ", ";
  out += coherence_word(q.coherence);
  out += ", ";
  out += growth_word(q.growth);
  if (q.rotation != RotationClass::none) {
    out += ", ";
    out += rotation_phrase(q.rotation);
  }
  return out;
}

std::string render_description(const MotionSpec& spec) { return render_quantized(quantize(spec)); }

}  // namespace rfcast::synth
