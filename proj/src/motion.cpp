#include "rfcast/motion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rfcast/errors.hpp"

namespace rfcast::motion {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

// Horn-Schunck neighbourhood average: 1/6 edge neighbours, 1/12 diagonals.
void local_average(const Grid& g, Grid& out) {
  const std::size_t h = g.rows(), w = g.cols();
  const double* in = g.values().data();
  double* o = out.values().data();
  for (std::size_t r = 0; r < h; ++r) {
    const double* up = in + ((r + h - 1) % h) * w;
    const double* mid = in + r * w;
    const double* dn = in + ((r + 1) % h) * w;
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t l = (c == 0) ? w - 1 : c - 1, rt = (c + 1 == w) ? 0 : c + 1;
      const double edge = up[c] + dn[c] + mid[l] + mid[rt];
      const double diag = up[l] + up[rt] + dn[l] + dn[rt];
      o[r * w + c] = edge / 6.0 + diag / 12.0;
    }
  }
}

}  // namespace

FlowField optical_flow(const Grid& f0, const Grid& f1, double alpha, int iters) {
  require_same_shape(f0, f1, "optical_flow");
  if (!(alpha > 0.0)) throw ParameterError("optical_flow: alpha must be positive");
  if (iters < 1) throw ParameterError("optical_flow: iters must be >= 1");

  const std::size_t h = f0.rows(), w = f0.cols();
  Grid ix(h, w), iy(h, w), it(h, w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const long rr = static_cast<long>(r), cc = static_cast<long>(c);
      const double gx0 = 0.5 * (f0.wrapped(rr, cc + 1) - f0.wrapped(rr, cc - 1));
      const double gx1 = 0.5 * (f1.wrapped(rr, cc + 1) - f1.wrapped(rr, cc - 1));
      const double gy0 = 0.5 * (f0.wrapped(rr + 1, cc) - f0.wrapped(rr - 1, cc));
      const double gy1 = 0.5 * (f1.wrapped(rr + 1, cc) - f1.wrapped(rr - 1, cc));
      ix(r, c) = 0.5 * (gx0 + gx1);
      iy(r, c) = 0.5 * (gy0 + gy1);
      it(r, c) = f1(r, c) - f0(r, c);
    }
  }

  const double a2 = alpha * alpha;
  FlowField flow{Grid(h, w), Grid(h, w)};
  Grid ubar(h, w), vbar(h, w);
  for (int k = 0; k < iters; ++k) {
    local_average(flow.u, ubar);
    local_average(flow.v, vbar);
    for (std::size_t i = 0; i < flow.u.size(); ++i) {
      const double gx = ix.values()[i], gy = iy.values()[i];
      const double ub = ubar.values()[i], vb = vbar.values()[i];
      const double t = (gx * ub + gy * vb + it.values()[i]) / (a2 + gx * gx + gy * gy);
      flow.u.values()[i] = ub - gx * t;
      flow.v.values()[i] = vb - gy * t;
    }
  }
  return flow;
}

DirectionSums& DirectionSums::operator+=(const DirectionSums& o) noexcept {
  cos_sum += o.cos_sum;
  sin_sum += o.sin_sum;
  weight += o.weight;
  weight_sq += o.weight_sq;
  count += o.count;
  return *this;
}

DirectionSums direction_sums(const FlowField& flow, double magnitude_floor) {
  require_same_shape(flow.u, flow.v, "direction_sums");
  DirectionSums s;
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    const double u = flow.u.values()[i], v = flow.v.values()[i];
    const double m = std::hypot(u, v);
    if (m <= 0.0 || m < magnitude_floor) continue;
    // m * cos(theta) = u and m * sin(theta) = v.
    s.cos_sum += u;
    s.sin_sum += v;
    s.weight += m;
    s.weight_sq += m * m;
    ++s.count;
  }
  return s;
}

DominantDirection summarize(const DirectionSums& s) {
  DominantDirection d;
  if (s.count == 0 || s.weight <= 0.0) return d;
  d.moving = true;
  double a = std::atan2(s.sin_sum, s.cos_sum) * kRadToDeg;
  if (a < 0.0) a += 360.0;
  if (a >= 360.0) a -= 360.0;
  d.angle_deg = a;
  d.mean_magnitude = s.weight_sq / s.weight;
  d.resultant_length = std::hypot(s.sin_sum, s.cos_sum) / s.weight;
  return d;
}

DominantDirection dominant_direction(const FlowField& flow, double magnitude_floor) {
  return summarize(direction_sums(flow, magnitude_floor));
}

double relative_floor(const FlowField& flow, double fraction) {
  double m = 0.0;
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    m = std::max(m, std::hypot(flow.u.values()[i], flow.v.values()[i]));
  }
  return fraction * m;
}

DirectionSums sequence_direction_sums(const std::vector<Grid>& frames, const FlowParams& params) {
  if (frames.size() < 2) throw ParameterError("dominant direction needs at least two frames");
  DirectionSums total;
  for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
    const FlowField f = optical_flow(frames[k], frames[k + 1], params.alpha, params.iters);
    total += direction_sums(f, relative_floor(f, params.floor_fraction));
  }
  return total;
}

DominantDirection sequence_dominant_direction(const std::vector<Grid>& frames, const FlowParams& params) {
  return summarize(sequence_direction_sums(frames, params));
}

DominantDirection ensemble_dominant_direction(const std::vector<std::vector<Grid>>& members, const FlowParams& params) {
  if (members.empty()) throw ParameterError("ensemble dominant direction needs at least one member");
  DirectionSums total;
  for (const auto& m : members) total += sequence_direction_sums(m, params);
  return summarize(total);
}

DominantDirection sequence_dominant_direction(const RadarSequence& seq, const FlowParams& params) {
  std::vector<Grid> frames;
  frames.reserve(seq.size());
  for (const auto& f : seq.frames()) frames.push_back(f.grid());
  return sequence_dominant_direction(frames, params);
}

std::optional<synth::MotionSpec> estimate_motion_spec(const RadarSequence& seq, const FlowParams& params) {
  if (seq.size() < 2) throw ParameterError("motion estimate needs at least two frames");
  bool any_rain = false;
  for (const auto& f : seq.frames()) any_rain = any_rain || sum(f.grid()) > 0.0;
  if (!any_rain) return std::nullopt;

  DirectionSums total;
  double vort_sum = 0.0, vort_weight = 0.0;
  for (std::size_t k = 0; k + 1 < seq.size(); ++k) {
    const Grid& a = seq[k].grid();
    const Grid& b = seq[k + 1].grid();
    const FlowField f = optical_flow(a, b, params.alpha, params.iters);
    total += direction_sums(f, relative_floor(f, params.floor_fraction));
    // Intensity-weighted mean vorticity; a rigid rotation at rate w has curl 2w.
    for (std::size_t r = 0; r < a.rows(); ++r) {
      for (std::size_t c = 0; c < a.cols(); ++c) {
        const long rr = static_cast<long>(r), cc = static_cast<long>(c);
        const double dvdx = 0.5 * (f.v.wrapped(rr, cc + 1) - f.v.wrapped(rr, cc - 1));
        const double dudy = 0.5 * (f.u.wrapped(rr + 1, cc) - f.u.wrapped(rr - 1, cc));
        const double wgt = 0.5 * (a(r, c) + b(r, c));
        vort_sum += wgt * (dvdx - dudy);
        vort_weight += wgt;
      }
    }
  }

  const DominantDirection dom = summarize(total);
  synth::MotionSpec spec;
  if (dom.moving) {
    spec.direction_deg = dom.angle_deg;
    spec.speed = dom.mean_magnitude;
    spec.coherence = std::clamp(dom.resultant_length, 0.0, 1.0);
  }
  const double first = sum(seq.frames().front().grid());
  const double last = sum(seq.frames().back().grid());
  if (first > 0.0 && last > 0.0) {
    spec.growth_rate = std::pow(last / first, 1.0 / static_cast<double>(seq.size() - 1));
  }
  if (vort_weight > 0.0) spec.rotation_deg_per_frame = 0.5 * vort_sum / vort_weight * kRadToDeg;
  return spec;
}

}  // namespace rfcast::motion
