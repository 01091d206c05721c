#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "rfcast/dataset.hpp"
#include "rfcast/description.hpp"
#include "rfcast/errors.hpp"
#include "rfcast/motion.hpp"
#include "rfcast/synth.hpp"

using namespace rfcast;
using synth::MotionSpec;

namespace {

// Position of the field along one periodic axis from the phase of its first
// Fourier coefficient; exact for rigid translation, insensitive to wrap.
double phase_centroid(const Grid& g, bool along_cols) {
  const double n = static_cast<double>(along_cols ? g.cols() : g.rows());
  double c = 0, s = 0;
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t k = 0; k < g.cols(); ++k) {
      const double pos = static_cast<double>(along_cols ? k : r);
      c += g(r, k) * std::cos(2 * std::numbers::pi * pos / n);
      s += g(r, k) * std::sin(2 * std::numbers::pi * pos / n);
    }
  }
  return std::atan2(s, c) * n / (2 * std::numbers::pi);
}

double ring_step(double a, double b, double n) {
  double d = std::fmod(b - a, n);
  if (d > n / 2) d -= n;
  if (d < -n / 2) d += n;
  return d;
}

synth::EventRecord make_event(std::uint64_t seed, MotionSpec spec, std::size_t cells = 4) {
  Rng rng(seed);
  synth::EventShape shape;
  shape.n_cells = cells;
  return synth::synth_event(rng, spec, shape);
}

MotionSpec spec_of(double dir, double speed, double coherence = 1.0) {
  MotionSpec s;
  s.direction_deg = dir;
  s.speed = speed;
  s.coherence = coherence;
  return s;
}

}  // namespace

TEST_CASE("rightward advection moves the centroid two pixels per frame") {
  const auto ev = make_event(3, spec_of(0, 2));
  REQUIRE(ev.sequence.size() == 20);
  for (std::size_t k = 0; k + 1 < 6; ++k) {
    const Grid& a = ev.sequence[k].grid();
    const Grid& b = ev.sequence[k + 1].grid();
    CHECK(ring_step(phase_centroid(a, true), phase_centroid(b, true), 64) == doctest::Approx(2.0).epsilon(0.05));
  }
}

TEST_CASE("downward advection at one pixel per frame") {
  const auto ev = make_event(4, spec_of(90, 1));
  for (std::size_t k = 0; k + 1 < 6; ++k) {
    const Grid& a = ev.sequence[k].grid();
    const Grid& b = ev.sequence[k + 1].grid();
    CHECK(std::abs(ring_step(phase_centroid(a, false), phase_centroid(b, false), 64) - 1.0) < 0.1);
    CHECK(std::abs(ring_step(phase_centroid(a, true), phase_centroid(b, true), 64)) < 0.1);
  }
}

TEST_CASE("stationary steady event repeats frame zero") {
  const auto ev = make_event(5, spec_of(30, 0));
  for (std::size_t k = 1; k < ev.sequence.size(); ++k) CHECK(ev.sequence[k] == ev.sequence[0]);
}

TEST_CASE("advection fidelity across directions and speeds") {
  Rng pick(77);
  for (int trial = 0; trial < 12; ++trial) {
    const double dir = pick.uniform(0, 360), speed = pick.uniform(0.5, 3.0);
    const auto ev = make_event(100 + static_cast<std::uint64_t>(trial), spec_of(dir, speed));
    for (std::size_t k = 0; k + 1 < 4; ++k) {
      const Grid& a = ev.sequence[k].grid();
      const Grid& b = ev.sequence[k + 1].grid();
      const double dx = ring_step(phase_centroid(a, true), phase_centroid(b, true), 64);
      const double dy = ring_step(phase_centroid(a, false), phase_centroid(b, false), 64);
      double err = std::abs(std::atan2(dy, dx) * 180 / std::numbers::pi - dir);
      err = std::min(err, 360 - err);
      CHECK(err < 3.0);
      CHECK(std::hypot(dx, dy) == doctest::Approx(speed).epsilon(0.05));
    }
  }
}

TEST_CASE("growth scales total intensity geometrically") {
  MotionSpec s = spec_of(0, 0);
  s.growth_rate = 1.05;
  const auto ev = make_event(8, s);
  CHECK(sum(ev.sequence[3].grid()) / sum(ev.sequence[2].grid()) == doctest::Approx(1.05).epsilon(1e-9));
}

TEST_CASE("event generation is deterministic and validates its inputs") {
  const auto a = make_event(9, spec_of(45, 1.5, 0.5));
  const auto b = make_event(9, spec_of(45, 1.5, 0.5));
  CHECK(a.sequence.frames() == b.sequence.frames());
  CHECK(a.description == b.description);

  Rng rng(1);
  synth::EventShape wide;
  wide.cells.sigma_max = 12.0;
  wide.cells.sigma_min = 10.0;
  CHECK_THROWS_AS(synth::synth_event(rng, spec_of(0, 1), wide), ParameterError);
  synth::EventShape odd;
  odd.height = 48;
  CHECK_THROWS_AS(synth::synth_event(rng, spec_of(0, 1), odd), ParameterError);
  CHECK_THROWS_AS(spec_of(0, -1).validate(), ParameterError);
  CHECK_THROWS_AS(spec_of(360, 1).validate(), ParameterError);
  CHECK_THROWS_AS(spec_of(0, 1, 1.5).validate(), ParameterError);
}

TEST_CASE("context-only descriptions ignore the future frames") {
  Rng r1(21), r2(21);
  synth::EventShape full, short_;
  short_.horizon = 1;
  const auto s = spec_of(120, 2.0, 0.8);
  const auto a = synth::synth_event(r1, s, full, synth::DescriptionSource::context_only);
  const auto b = synth::synth_event(r2, s, short_, synth::DescriptionSource::context_only);
  CHECK(a.description == b.description);
  const auto est = motion::estimate_motion_spec(a.sequence.slice(0, 4));
  REQUIRE(est.has_value());
  CHECK(a.description == synth::render_description(*est));
}

TEST_CASE("description template tokens") {
  MotionSpec s = spec_of(0, 3, 0.95);
  s.growth_rate = 1.1;
  const auto d = synth::render_description(s);
  CHECK(d.find("rightward") != std::string::npos);
  CHECK(d.find("coherent") != std::string::npos);
  CHECK(d.find("intensifying") != std::string::npos);
  CHECK(d == "echoes move rightward, fast, coherent, intensifying");

  // Image convention: +y is down, so 225 deg points left and up, 135 deg left and down.
  const auto d225 = synth::render_description(spec_of(225, 2));
  CHECK(d225.find("leftward") != std::string::npos);
  CHECK(d225.find("upward") != std::string::npos);
  const auto d135 = synth::render_description(spec_of(135, 2));
  CHECK(d135.find("leftward") != std::string::npos);
  CHECK(d135.find("downward") != std::string::npos);

  CHECK(synth::render_description(spec_of(200, 0)).find("stationary") != std::string::npos);

  MotionSpec r = spec_of(90, 0.7, 0.3);
  r.rotation_deg_per_frame = -2;
  r.growth_rate = 0.9;
  CHECK(synth::render_description(r) == "echoes move downward, slow, scattered, decaying, rotating counterclockwise");
}

TEST_CASE("compass bins are centered on multiples of 45 degrees") {
  CHECK(synth::compass_bin(0) == 0);
  CHECK(synth::compass_bin(22.4) == 0);
  CHECK(synth::compass_bin(22.6) == 1);
  CHECK(synth::compass_bin(337.6) == 0);
  CHECK(synth::compass_bin(225) == 5);
}

TEST_CASE("degrade of a constant field is the constant") {
  Grid x(16, 16, 3.25);
  const auto p = synth::DegradationParams::gaussian(1.3, 4);
  const Grid y = synth::degrade_noiseless(x, p);
  for (double v : y.values()) CHECK(v == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("delta kernel decimates from the top-left sample") {
  Grid x(2, 2, std::vector<double>{1, 2, 3, 4});
  const Grid y = synth::degrade_noiseless(x, synth::DegradationParams::delta(2));
  REQUIRE(y.rows() == 1);
  CHECK(y(0, 0) == 1.0);

  const Grid back = synth::degrade_adjoint(Grid(1, 1, 1.0), synth::DegradationParams::delta(2));
  CHECK(back == Grid(2, 2, std::vector<double>{1, 0, 0, 0}));
  CHECK(sum(synth::degrade_adjoint(Grid(4, 4), synth::DegradationParams::gaussian(1.0, 4))) == 0.0);
}

TEST_CASE("degrade matches brute-force convolution and decimation") {
  Rng rng(31);
  for (double sigma : {0.5, 1.0, 2.0}) {
    const auto p = synth::DegradationParams::gaussian(sigma, 4);
    const Grid x = oracle::random_grid(rng, 16, 16);
    CHECK(max_abs_diff(synth::degrade_noiseless(x, p), oracle::blur_decimate(x, p.taps, 4)) < 1e-9);
  }
}

TEST_CASE("degrade is linear and its adjoint satisfies the inner-product identity") {
  Rng rng(32);
  for (std::size_t scale : {1u, 2u, 4u}) {
    for (double sigma : {0.6, 1.0, 1.7}) {
      const auto p = synth::DegradationParams::gaussian(sigma, scale);
      const Grid x = oracle::random_grid(rng, 32, 32, -1, 1), z = oracle::random_grid(rng, 32, 32, -1, 1);
      const Grid y = oracle::random_grid(rng, 32 / scale, 32 / scale, -1, 1);
      CHECK(std::abs(dot(synth::degrade_noiseless(x, p), y) - dot(x, synth::degrade_adjoint(y, p))) < 1e-9);
      Grid comb(32, 32);
      for (std::size_t i = 0; i < comb.size(); ++i) comb.values()[i] = 2.0 * x.values()[i] - 0.5 * z.values()[i];
      Grid lin = synth::degrade_noiseless(x, p);
      const Grid dz = synth::degrade_noiseless(z, p);
      for (std::size_t i = 0; i < lin.size(); ++i) lin.values()[i] = 2.0 * lin.values()[i] - 0.5 * dz.values()[i];
      CHECK(max_abs_diff(synth::degrade_noiseless(comb, p), lin) < 1e-9);
    }
  }
}

TEST_CASE("noisy degradation adds seeded noise of the right size") {
  auto p = synth::DegradationParams::gaussian(1.0, 2);
  p.noise_sigma = 0.5;
  Grid x(64, 64, 1.0);
  Rng a(4), b(4);
  const Grid ya = synth::degrade(x, p, a), yb = synth::degrade(x, p, b);
  CHECK(ya == yb);
  double v = 0;
  for (double y : ya.values()) v += (y - 1.0) * (y - 1.0);
  CHECK(std::sqrt(v / static_cast<double>(ya.size())) == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("kernel validation") {
  synth::DegradationParams p;
  p.taps = {0.25, 0.5};
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p.taps = {0.2, 0.5, 0.3};
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p.taps = {0.25, 0.25, 0.25};
  CHECK_THROWS_AS(p.validate(), ParameterError);
  CHECK_THROWS_AS(synth::degrade_noiseless(Grid(10, 10), synth::DegradationParams::delta(4)), ShapeError);
}

namespace {

std::string read_text(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("dataset manifest, split and reproducibility") {
  const auto root = std::filesystem::temp_directory_path() / "rfcast_test_dataset";
  std::filesystem::remove_all(root);
  dataset::DatasetConfig cfg;
  cfg.n_events = 10;
  const auto m = dataset::synth_dataset(Rng(5), cfg, root / "a");
  dataset::synth_dataset(Rng(5), cfg, root / "b");

  CHECK(m.entries.size() == 10);
  CHECK(m.split(false).size() == 9);
  CHECK(m.split(true).size() == 1);
  const auto text = read_text(root / "a" / "manifest.tsv");
  std::size_t records = 0;
  std::istringstream ls(text);
  for (std::string line; std::getline(ls, line);) records += !line.empty() && line[0] != '#';
  CHECK(records == 10);
  CHECK(text == read_text(root / "b" / "manifest.tsv"));
  CHECK(read_text(root / "a" / m.entries[3].path) == read_text(root / "b" / m.entries[3].path));

  const auto back = dataset::read_manifest(root / "a" / "manifest.tsv");
  REQUIRE(back.entries.size() == 10);
  CHECK(back.entries[7].description == m.entries[7].description);
  CHECK(back.entries[7].condition == m.entries[7].condition);
  CHECK(back.entries[7].spec.speed == m.entries[7].spec.speed);
  const auto seq = dataset::load_event(back, back.entries[2]);
  CHECK(seq.size() == 20);
}

TEST_CASE("restricting directions to zero yields rightward descriptions") {
  const auto root = std::filesystem::temp_directory_path() / "rfcast_test_dataset_right";
  std::filesystem::remove_all(root);
  dataset::DatasetConfig cfg;
  cfg.n_events = 12;
  cfg.ranges.dir_min = cfg.ranges.dir_max = 0.0;
  cfg.ranges.coherence_min = cfg.ranges.coherence_max = 1.0;
  const auto m = dataset::synth_dataset(Rng(6), cfg, root);
  for (const auto& e : m.entries) CHECK(e.description.find("rightward") != std::string::npos);
}

TEST_CASE("test split arithmetic") {
  const auto t = dataset::test_split(1000, 0.1);
  CHECK(std::count(t.begin(), t.end(), true) == 100);
  CHECK(dataset::test_split(1000, 0.1) == t);
  CHECK_THROWS_AS(dataset::test_split(10, 1.5), ParameterError);
}
