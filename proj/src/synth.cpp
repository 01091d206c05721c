#include "rfcast/synth.hpp"

#include <cmath>
#include <numbers>

#include "rfcast/description.hpp"
#include "rfcast/errors.hpp"
#include "rfcast/motion.hpp"

namespace rfcast::synth {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Cell {
  double x0, y0;        // frame-0 center (col, row)
  double dir_rad;       // advection direction
  double sigma_major, sigma_minor;
  double orient0_rad;
  double peak;
};

// Minimum-image displacement on a ring of length n.
double ring_delta(double d, double n) {
  d = std::fmod(d, n);
  if (d >= 0.5 * n) d -= n;
  if (d < -0.5 * n) d += n;
  return d;
}

void add_cell(Grid& frame, const Cell& c, double cx, double cy, double orient, double peak) {
  const double h = static_cast<double>(frame.rows());
  const double w = static_cast<double>(frame.cols());
  const double co = std::cos(orient), so = std::sin(orient);
  const double inv_a = 1.0 / (c.sigma_major * c.sigma_major);
  const double inv_b = 1.0 / (c.sigma_minor * c.sigma_minor);
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    const double dy = ring_delta(static_cast<double>(r) - cy, h);
    for (std::size_t col = 0; col < frame.cols(); ++col) {
      const double dx = ring_delta(static_cast<double>(col) - cx, w);
      const double along = dx * co + dy * so;
      const double across = -dx * so + dy * co;
      frame(r, col) += peak * std::exp(-0.5 * (along * along * inv_a + across * across * inv_b));
    }
  }
}

}  // namespace

void MotionSpec::validate() const {
  if (!(direction_deg >= 0.0 && direction_deg < 360.0)) {
    throw ParameterError("direction_deg must lie in [0, 360)");
  }
  if (!(speed >= 0.0) || !std::isfinite(speed)) throw ParameterError("speed must be >= 0");
  if (!std::isfinite(rotation_deg_per_frame)) throw ParameterError("rotation must be finite");
  if (!(growth_rate > 0.0) || !std::isfinite(growth_rate)) {
    throw ParameterError("growth_rate must be positive");
  }
  if (!(coherence >= 0.0 && coherence <= 1.0)) throw ParameterError("coherence must lie in [0, 1]");
}

const char* to_string(DescriptionSource s) {
  return s == DescriptionSource::full_sequence ? "full_sequence" : "context_only";
}

DescriptionSource description_source_from_string(const std::string& s) {
  if (s == "full_sequence") return DescriptionSource::full_sequence;
  if (s == "context_only") return DescriptionSource::context_only;
  throw ParameterError("unknown description source '" + s + "'");
}

EventRecord synth_event(Rng& rng, const MotionSpec& spec, const EventShape& shape,
                        DescriptionSource source) {
  spec.validate();
  if (!is_valid_field_shape(shape.height, shape.width)) {
    throw ParameterError("event shape must be dyadic with sides >= 8");
  }
  if (shape.n_cells < 1) throw ParameterError("n_cells must be >= 1");
  const CellParams& cp = shape.cells;
  if (!(cp.sigma_min > 0.0 && cp.sigma_max >= cp.sigma_min && cp.aspect_max >= 1.0 &&
        cp.peak_min > 0.0 && cp.peak_max >= cp.peak_min)) {
    throw ParameterError("invalid cell parameters");
  }
  const double half_extent = 0.5 * static_cast<double>(std::min(shape.height, shape.width));
  if (3.0 * cp.sigma_max * cp.aspect_max > half_extent) {
    throw ParameterError("rain cells (3 sigma major axis) wider than half the grid");
  }
  if (shape.context_len < 1 || shape.horizon < 1) throw ParameterError("empty event length");

  const auto n_obey = static_cast<std::size_t>(std::lround(spec.coherence * static_cast<double>(shape.n_cells)));
  std::vector<Cell> cells;
  cells.reserve(shape.n_cells);
  for (std::size_t i = 0; i < shape.n_cells; ++i) {
    Cell c{};
    c.x0 = rng.uniform(0.0, static_cast<double>(shape.width));
    c.y0 = rng.uniform(0.0, static_cast<double>(shape.height));
    c.sigma_minor = rng.uniform(cp.sigma_min, cp.sigma_max);
    c.sigma_major = c.sigma_minor * rng.uniform(1.0, cp.aspect_max);
    c.orient0_rad = rng.uniform(0.0, std::numbers::pi);
    c.peak = rng.uniform(cp.peak_min, cp.peak_max);
    const double jitter_dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
    c.dir_rad = i < n_obey ? spec.direction_deg * kDegToRad : jitter_dir;
    cells.push_back(c);
  }

  const std::size_t n_frames = shape.context_len + shape.horizon;
  std::vector<RadarField> frames;
  frames.reserve(n_frames);
  for (std::size_t k = 0; k < n_frames; ++k) {
    const double kk = static_cast<double>(k);
    Grid g(shape.height, shape.width);
    for (const Cell& c : cells) {
      const double cx = c.x0 + kk * spec.speed * std::cos(c.dir_rad);
      const double cy = c.y0 + kk * spec.speed * std::sin(c.dir_rad);
      const double orient = c.orient0_rad + kk * spec.rotation_deg_per_frame * kDegToRad;
      add_cell(g, c, cx, cy, orient, c.peak * std::pow(spec.growth_rate, kk));
    }
    frames.emplace_back(std::move(g));
  }

  EventRecord rec;
  rec.sequence = RadarSequence(std::move(frames));
  rec.spec = spec;
  rec.description_source = source;
  if (source == DescriptionSource::full_sequence) {
    rec.description = render_description(spec);
  } else {
    const auto est = motion::estimate_motion_spec(rec.sequence.slice(0, shape.context_len));
    rec.description = render_description(est.value_or(MotionSpec{}));
  }
  return rec;
}

// --- degradation operator ---------------------------------------------------

void DegradationParams::validate() const {
  if (taps.empty() || taps.size() % 2 == 0) throw ParameterError("kernel length must be odd");
  double s = 0.0;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    if (!(taps[i] >= 0.0)) throw ParameterError("kernel taps must be nonnegative");
    if (taps[i] != taps[taps.size() - 1 - i]) throw ParameterError("kernel must be symmetric");
    s += taps[i];
  }
  if (std::abs(s * s - 1.0) > 1e-12) throw ParameterError("kernel must sum to 1");
  if (scale < 1) throw ParameterError("scale must be >= 1");
  if (!(noise_sigma >= 0.0)) throw ParameterError("noise_sigma must be >= 0");
}

DegradationParams DegradationParams::gaussian(double sigma, std::size_t scale, double noise_sigma) {
  if (!(sigma > 0.0)) throw ParameterError("kernel sigma must be positive");
  const auto radius = static_cast<std::size_t>(std::ceil(3.0 * sigma));
  DegradationParams p;
  p.taps.assign(2 * radius + 1, 0.0);
  double s = 0.0;
  for (std::size_t i = 0; i < p.taps.size(); ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(radius);
    p.taps[i] = std::exp(-0.5 * d * d / (sigma * sigma));
    s += p.taps[i];
  }
  for (double& t : p.taps) t /= s;
  // Enforce exact symmetry after the division.
  for (std::size_t i = 0; i < radius; ++i) p.taps[p.taps.size() - 1 - i] = p.taps[i];
  p.scale = scale;
  p.noise_sigma = noise_sigma;
  return p;
}

DegradationParams DegradationParams::delta(std::size_t scale) {
  DegradationParams p;
  p.taps = {1.0};
  p.scale = scale;
  return p;
}

namespace {

void check_field_shape(const Grid& x, const DegradationParams& p, const char* what) {
  if (x.rows() == 0 || x.rows() % p.scale != 0 || x.cols() % p.scale != 0) {
    throw ShapeError(std::string(what) + ": shape " + std::to_string(x.rows()) + "x" +
                     std::to_string(x.cols()) + " not divisible by scale " + std::to_string(p.scale));
  }
}

}  // namespace

Grid degrade_noiseless(const Grid& x, const DegradationParams& p) {
  p.validate();
  check_field_shape(x, p, "degrade");
  const long s = static_cast<long>(p.scale);
  const long r = static_cast<long>(p.radius());
  const long n = static_cast<long>(p.taps.size());
  Grid y(x.rows() / p.scale, x.cols() / p.scale);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = 0; j < y.cols(); ++j) {
      const long ci = s * static_cast<long>(i), cj = s * static_cast<long>(j);
      double acc = 0.0;
      for (long a = 0; a < n; ++a) {
        double row_acc = 0.0;
        for (long b = 0; b < n; ++b) row_acc += p.taps[static_cast<std::size_t>(b)] * x.wrapped(ci - (a - r), cj - (b - r));
        acc += p.taps[static_cast<std::size_t>(a)] * row_acc;
      }
      y(i, j) = acc;
    }
  }
  return y;
}

Grid degrade(const Grid& x, const DegradationParams& p, Rng& rng) {
  Grid y = degrade_noiseless(x, p);
  if (p.noise_sigma > 0.0) {
    for (double& v : y.values()) v += p.noise_sigma * rng.normal();
  }
  return y;
}

Grid degrade_adjoint(const Grid& y, const DegradationParams& p) {
  p.validate();
  const std::size_t rows = y.rows() * p.scale, cols = y.cols() * p.scale;
  if (y.empty()) throw ShapeError("degrade_adjoint: empty latent");
  const long s = static_cast<long>(p.scale);
  const long r = static_cast<long>(p.radius());
  Grid x(rows, cols);
  // Scatter form of "zero-insert, then correlate with k": latent sample (i, j)
  // lands on (s*i, s*j) and spreads as k around it.
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = 0; j < y.cols(); ++j) {
      const double v = y(i, j);
      if (v == 0.0) continue;
      for (long a = -r; a <= r; ++a) {
        const auto rr = static_cast<std::size_t>(wrap_index(s * static_cast<long>(i) - a, static_cast<long>(rows)));
        for (long b = -r; b <= r; ++b) {
          const auto cc = static_cast<std::size_t>(wrap_index(s * static_cast<long>(j) - b, static_cast<long>(cols)));
          x(rr, cc) += p.kernel(a, b) * v;
        }
      }
    }
  }
  return x;
}

}  // namespace rfcast::synth
