#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include "rfcast/fields.hpp"
#include "rfcast/grid.hpp"
#include "rfcast/rng.hpp"
#include "rfcast/synth.hpp"

namespace rfcast::cond {

inline constexpr std::size_t kConditionDim = 16;

/// Layout: [cos dir, sin dir, speed/10, rotation/10, log growth, coherence,
/// one-hot compass bin (8), 1 (reserved, marks a real condition), 0].
struct ConditionVector {
  std::array<double, kConditionDim> values{};
  bool is_null = false;

  static ConditionVector null() noexcept { return ConditionVector{{}, true}; }
  friend bool operator==(const ConditionVector&, const ConditionVector&) = default;
};

/// Condition vector plus the encoded context frames, i.e. {X_0:4, m}.
struct ContextBundle {
  LatentSequence context_latents;
  ConditionVector condition;
};

ConditionVector encode_condition(const synth::MotionSpec& spec);

/// Inverse of the description template up to quantization. Throws
/// ParseError naming the first unrecognised token.
synth::MotionSpec parse_description(std::string_view text);

/// The text path used everywhere a description feeds the model:
/// encode_condition(parse_description(text)).
ConditionVector condition_from_text(std::string_view text);

/// Null vector with probability p_drop, otherwise c. Consumes one uniform.
ConditionVector drop_condition(Rng& rng, const ConditionVector& c, double p_drop);

/// Causal condition from observed frames only: motion statistics of the
/// context, rendered through the description template, then encoded. Rain-free
/// context yields the null vector.
ConditionVector infer_context_condition(const RadarSequence& context);

std::string format_condition(const ConditionVector& c);
ConditionVector parse_condition(std::string_view csv);

}  // namespace rfcast::cond
