#include "rfcast/conditioning.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

#include "rfcast/description.hpp"
#include "rfcast/errors.hpp"
#include "rfcast/motion.hpp"

namespace rfcast::cond {

using synth::CoherenceClass;
using synth::GrowthClass;
using synth::QuantizedSpec;
using synth::RotationClass;
using synth::SpeedClass;

ConditionVector encode_condition(const synth::MotionSpec& spec) {
  spec.validate();
  const double th = spec.direction_deg * std::numbers::pi / 180.0;
  ConditionVector c;
  c.values[0] = std::cos(th);
  c.values[1] = std::sin(th);
  c.values[2] = spec.speed / 10.0;
  c.values[3] = spec.rotation_deg_per_frame / 10.0;
  c.values[4] = std::log(spec.growth_rate);
  c.values[5] = spec.coherence;
  c.values[6 + static_cast<std::size_t>(synth::compass_bin(spec.direction_deg))] = 1.0;
  c.values[14] = 1.0;
  c.values[15] = 0.0;
  return c;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(',', start);
    std::string_view part = s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    parts.push_back(part);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string_view first_word(std::string_view s) {
  const auto sp = s.find(' ');
  return sp == std::string_view::npos ? s : s.substr(0, sp);
}

[[noreturn]] void unrecognised(std::string_view token) {
  throw ParseError("unrecognized token '" + std::string(token) + "' in motion description");
}

}  // namespace

synth::MotionSpec parse_description(std::string_view text) {
  auto parts = split_commas(text);
  std::string_view head = parts.front();
  if (first_word(head) != "echoes") unrecognised(first_word(head));
  head.remove_prefix(std::min<std::size_t>(head.size(), 7));  // "echoes "

  QuantizedSpec q;
  std::size_t next = 1;
  if (head == "stay stationary") {
    q.speed = SpeedClass::stationary;
  } else if (head.substr(0, 5) == "move ") {
    const std::string_view dir = head.substr(5);
    bool found = false;
    for (std::size_t k = 0; k < synth::kCompassPhrases.size(); ++k) {
      if (dir == synth::kCompassPhrases[k]) {
        q.compass_bin = static_cast<int>(k);
        found = true;
      }
    }
    if (!found) unrecognised(dir.empty() ? head : dir);
    if (parts.size() < 2) throw ParseError("motion description is missing the speed class");
    const std::string_view sp = parts[1];
    if (sp == "slow") q.speed = SpeedClass::slow;
    else if (sp == "moderate") q.speed = SpeedClass::moderate;
    else if (sp == "fast") q.speed = SpeedClass::fast;
    else unrecognised(sp);
    next = 2;
  } else {
    unrecognised(head.empty() ? std::string_view("<empty>") : first_word(head));
  }

  if (parts.size() < next + 2) throw ParseError("motion description is missing coherence or growth class");
  const std::string_view coh = parts[next];
  if (coh == "coherent") q.coherence = CoherenceClass::coherent;
  else if (coh == "mixed") q.coherence = CoherenceClass::mixed;
  else if (coh == "scattered") q.coherence = CoherenceClass::scattered;
  else unrecognised(coh);

  const std::string_view gr = parts[next + 1];
  if (gr == "intensifying") q.growth = GrowthClass::intensifying;
  else if (gr == "steady") q.growth = GrowthClass::steady;
  else if (gr == "decaying") q.growth = GrowthClass::decaying;
  else unrecognised(gr);

  if (parts.size() == next + 3) {
    const std::string_view rot = parts[next + 2];
    if (rot == "rotating clockwise") q.rotation = RotationClass::clockwise;
    else if (rot == "rotating counterclockwise") q.rotation = RotationClass::counterclockwise;
    else unrecognised(rot);
  } else if (parts.size() > next + 3) {
    unrecognised(parts[next + 3]);
  }
  return synth::representative(q);
}

ConditionVector condition_from_text(std::string_view text) { return encode_condition(parse_description(text)); }

ConditionVector drop_condition(Rng& rng, const ConditionVector& c, double p_drop) {
  if (!(p_drop >= 0.0 && p_drop <= 1.0)) throw ParameterError("drop_condition: p_drop must lie in [0, 1]");
  return rng.uniform() < p_drop ? ConditionVector::null() : c;
}

ConditionVector infer_context_condition(const RadarSequence& context) {
  if (context.size() < 2) throw ParameterError("infer_context_condition: need at least two context frames");
  const auto est = motion::estimate_motion_spec(context);
  if (!est) return ConditionVector::null();
  return condition_from_text(synth::render_description(*est));
}

std::string format_condition(const ConditionVector& c) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < kConditionDim; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", c.values[i]);
    if (i) out += ',';
    out += buf;
  }
  return out;
}

ConditionVector parse_condition(std::string_view csv) {
  auto parts = split_commas(csv);
  if (parts.size() != kConditionDim) throw FormatError("condition vector must have 16 entries");
  ConditionVector c;
  bool all_zero = true;
  for (std::size_t i = 0; i < kConditionDim; ++i) {
    const std::string field(parts[i]);
    char* end = nullptr;
    c.values[i] = std::strtod(field.c_str(), &end);
    if (field.empty() || *end != '\0' || !std::isfinite(c.values[i])) {
      throw FormatError("condition vector entry '" + field + "' is not a finite number");
    }
    all_zero = all_zero && c.values[i] == 0.0;
  }
  c.is_null = all_zero;
  return c;
}

}  // namespace rfcast::cond
