// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only when
// all criteria pass.
//
//   acceptance --config configs/reference.cfg --cli build/rfcast_cli --work DIR [--reuse] [--only 1,2,...]

#include <CLI11.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rfcast/codec.hpp"
#include "rfcast/config.hpp"
#include "rfcast/description.hpp"
#include "rfcast/errors.hpp"
#include "rfcast/motion.hpp"
#include "rfcast/pipeline.hpp"
#include "rfcast/rectflow.hpp"
#include "rfcast/tensor_io.hpp"
#include "rfcast/verify.hpp"

using namespace rfcast;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// --- helpers ---------------------------------------------------------------------------

std::string read_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw IoError("cannot read " + p.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Relative path -> contents hash for every regular file below `dir`.
std::map<std::string, std::uint64_t> tree_hashes(const fs::path& dir) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = fnv1a(read_bytes(e.path()));
  }
  return out;
}

struct Cli {
  fs::path exe;

  // Runs the tool and returns the run directory it reports.
  fs::path run(const std::string& args) const {
    const std::string cmd = "\"" + exe.string() + "\" " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) throw IoError("cannot start " + exe.string());
    std::string out;
    char buf[4096];
    while (std::fgets(buf, sizeof buf, p)) out += buf;
    const int status = pclose(p);
    if (status != 0) throw IoError("command failed: " + cmd);
    const auto at = out.rfind("run_dir=");
    if (at == std::string::npos) throw IoError("no run_dir line from: " + cmd);
    std::string dir = out.substr(at + 8);
    while (!dir.empty() && (dir.back() == '\n' || dir.back() == '\r')) dir.pop_back();
    return dir;
  }
};

double angle_diff(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

// --- criterion 1 ----------------------------------------------------------------------

Outcome metric_oracles() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const Grid p = oracle::random_grid(rng, 8, 8, 0, 10), o = oracle::random_grid(rng, 8, 8, 0, 10);
    const std::vector<Grid> ens{p, oracle::random_grid(rng, 8, 8, 0, 10), oracle::random_grid(rng, 8, 8, 0, 10)};
    const double thr = rng.uniform(1, 9);
    const long n = 1 + 2 * static_cast<long>(rng.index(3));
    worst = std::max(worst, std::abs(verify::csi(p, o, thr) - oracle::csi(p, o, thr)));
    worst = std::max(worst, std::abs(verify::fss(p, o, thr, static_cast<std::size_t>(n)) - oracle::fss(p, o, thr, n)));
    worst = std::max(worst, std::abs(verify::crps(ens, o) - oracle::crps(ens, o)));
    worst = std::max(worst, std::abs(verify::ssim(p, o) - oracle::ssim(p, o)));
    worst = std::max(worst, std::abs(verify::psnr(p, o, 10) - oracle::psnr(p, o, 10)));
  }
  const std::vector<Grid> two{Grid(1, 1, 0.0), Grid(1, 1, 1.0)};
  const double closed = verify::crps(two, Grid(1, 1, 0.5));
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && closed == 0.25 && secs < 10.0,
          fmt("max |impl - oracle| = %.3g, CRPS({0,1}, 0.5) = %.17g, %.2f s", worst, closed, secs)};
}

// --- criterion 2 ----------------------------------------------------------------------

double fidelity(const Grid& x, const Grid& y, const synth::DegradationParams& p) {
  const Grid r = synth::degrade_noiseless(x, p);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += std::pow(y.values()[i] - r.values()[i], 2);
  return s;
}

Outcome wavelet_unfolding() {
  const auto t0 = Clock::now();
  double round_trip = 0.0, parseval = 0.0, adjoint = 0.0;
  Rng rng(2024);
  for (std::size_t n = 8; n <= 128; n *= 2) {
    for (std::size_t levels = 1; levels <= 3 && (n >> levels) > 0; ++levels) {
      const Grid x = oracle::random_grid(rng, n, n, -3, 3);
      const auto c = codec::dwt2(x, levels);
      round_trip = std::max(round_trip, max_abs_diff(codec::idwt2(c), x));
      parseval = std::max(parseval, std::abs(c.energy() - dot(x, x)) / std::max(1.0, dot(x, x)));
    }
  }
  const auto deg = synth::DegradationParams::gaussian(1.0, 4);
  for (int trial = 0; trial < 20; ++trial) {
    const Grid x = oracle::random_grid(rng, 64, 64, -1, 1), y = oracle::random_grid(rng, 16, 16, -1, 1);
    const double lhs = dot(synth::degrade_noiseless(x, deg), y), rhs = dot(x, synth::degrade_adjoint(y, deg));
    adjoint = std::max(adjoint, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }

  const double bound = 1.0 / codec::operator_norm_sq(deg, 32, 32);
  codec::UnfoldConfig cfg;
  cfg.lambda = 0.0;
  cfg.eta = 0.9 * bound;
  std::size_t monotone = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng r(seed);
    const Grid y = oracle::random_grid(r, 8, 8);
    Grid x = codec::bilinear_upsample(y, 4);
    double prev = fidelity(x, y, deg);
    bool ok = true;
    for (int t = 0; t < 10; ++t) {
      x = codec::wcub_stage(x, y, cfg);
      const double f = fidelity(x, y, deg);
      ok = ok && f <= prev + 1e-15;
      prev = f;
    }
    monotone += ok;
  }
  const double secs = seconds_since(t0);
  return {round_trip <= 1e-10 && parseval <= 1e-9 && adjoint <= 1e-9 && monotone == 100 && secs < 30.0,
          fmt("round trip %.2g, Parseval %.2g, adjoint %.2g, monotone %zu/100, %.2f s", round_trip, parseval, adjoint,
              monotone, secs)};
}

// --- criterion 3 ----------------------------------------------------------------------

Outcome wcub_reconstruction(const config::RunConfig& ref) {
  const auto t0 = Clock::now();
  config::RunConfig cfg = ref;
  cfg.wcub_fields = 200;
  cfg.noise_sigma = 0.0;
  if (cfg.dataset.shape.height != 64 || cfg.dataset.shape.width != 64 || cfg.unfold.degradation.scale != 4 ||
      cfg.blur_sigma != 1.0) {
    return {false, "reference config is not 64x64 / s = 4 / sigma = 1"};
  }
  cfg.unfold = codec::UnfoldConfig{};
  cfg.unfold.degradation = cfg.degradation();
  const auto rows = pipeline::wcub_benchmark(cfg);
  const auto& bil = rows[0];
  const auto& off = rows[1];
  const auto& on = rows[2];
  const double dpsnr = on.mean_psnr - bil.mean_psnr, dssim = on.mean_ssim - bil.mean_ssim;
  const double secs = seconds_since(t0);
  const bool pass = dpsnr >= 2.0 && dssim >= 0.02 && on.mean_psnr > off.mean_psnr && on.mean_ssim > off.mean_ssim &&
                    secs < 300.0;
  return {pass, fmt("PSNR %.2f vs bilinear %.2f (+%.2f dB), SSIM %.4f vs %.4f (+%.4f), off %.2f/%.4f, %.1f s",
                    on.mean_psnr, bil.mean_psnr, dpsnr, on.mean_ssim, bil.mean_ssim, dssim, off.mean_psnr,
                    off.mean_ssim, secs)};
}

// --- criterion 4 ----------------------------------------------------------------------

Outcome flow_correctness(const fs::path& work) {
  const auto t0 = Clock::now();
  using namespace flow;

  ModelArch a;
  a.horizon = 2;
  a.context_len = 2;
  a.spatial_context = 1;
  a.rows = 6;
  a.cols = 5;
  a.hidden1 = 4;
  a.hidden2 = 3;
  a.time_dim = 4;
  a.dilations = {1, 2, 3};
  Rng rng(4);
  VelocityModel m(a);
  for (double& p : m.parameters()) p = rng.uniform(-0.4, 0.4);
  const auto x = gaussian_vector(rng, a.state_size()), ctx = gaussian_vector(rng, a.context_size());
  const auto up = gaussian_vector(rng, a.state_size());
  synth::MotionSpec s;
  s.direction_deg = 30.0;
  s.speed = 1.5;
  s.coherence = 0.7;
  const auto c = cond::encode_condition(s);
  auto dotv = [](std::span<const double> p, std::span<const double> q) {
    double acc = 0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += p[i] * q[i];
    return acc;
  };
  ForwardCache cache;
  model_forward(m, x, ctx, c, 0.37, &cache);
  const auto g = model_backward(m, cache, up);
  double worst_rel = 0.0;
  const double h = 1e-4;
  for (const auto& info : m.layout()) {
    double num2 = 0, ana2 = 0, diff2 = 0;
    for (std::size_t k = 0; k < info.size; ++k) {
      double& p = m.parameters()[info.offset + k];
      const double keep = p;
      p = keep + h;
      const double fp = dotv(up, model_forward(m, x, ctx, c, 0.37));
      p = keep - h;
      const double fm = dotv(up, model_forward(m, x, ctx, c, 0.37));
      p = keep;
      const double num = (fp - fm) / (2 * h), ana = g[info.offset + k];
      num2 += num * num;
      ana2 += ana * ana;
      diff2 += (num - ana) * (num - ana);
    }
    worst_rel = std::max(worst_rel, std::sqrt(diff2) / std::max({std::sqrt(num2), std::sqrt(ana2), 1e-12}));
  }

  Rng er(7);
  const auto x0 = gaussian_vector(er, 256), x1 = gaussian_vector(er, 256);
  const auto v = velocity_target(x0, x1);
  double euler = 0.0;
  for (std::size_t n : {1u, 4u, 16u}) {
    const auto out = euler_integrate(x0, n, [&](std::span<const double>, double) { return v; });
    for (std::size_t i = 0; i < out.size(); ++i) euler = std::max(euler, std::abs(out[i] - x1[i]));
  }

  dataset::DatasetConfig dc;
  dc.n_events = 24;
  dc.shape.height = dc.shape.width = 32;
  dc.shape.n_cells = 3;
  dc.shape.cells.sigma_min = 1.0;
  dc.shape.cells.sigma_max = 2.5;
  const auto man = dataset::synth_dataset(Rng(11), dc, work / "micro_dataset");
  const TrainingSet data = encode_training_set(man, synth::DegradationParams::gaussian(1.0, 4), 4);
  ModelArch ma;
  ma.horizon = 4;
  ma.rows = ma.cols = 8;
  Rng ir(12);
  VelocityModel mm = VelocityModel::initialized(ma, ir);
  mm.norm = fit_latent_norm(data);
  TrainConfig tc;
  tc.steps = 500;
  tc.learning_rate = 0.3;
  tc.seed = 13;
  const auto r = train(mm, data, tc);
  double first = 0, last = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    first += r.loss[i] / 50;
    last += r.loss[r.loss.size() - 50 + i] / 50;
  }
  const double secs = seconds_since(t0);
  return {worst_rel <= 1e-4 && euler <= 1e-12 && last < 0.5 * first && secs < 180.0,
          fmt("gradient rel err %.2g, Euler |x - x1| %.2g, micro loss %.4f -> %.4f (ratio %.3f), %.1f s", worst_rel,
              euler, first, last, last / first, secs)};
}

// --- reference run --------------------------------------------------------------------

struct Reference {
  fs::path dataset;     ///< directory containing manifest.tsv
  fs::path checkpoint;  ///< checkpoint directory
  double train_seconds = 0.0;
};

Reference reference_run(const Cli& cli, const fs::path& config_file, const fs::path& work, bool reuse) {
  const fs::path root = work / "reference";
  Reference ref;
  const auto t0 = Clock::now();
  // A reused run still charges its recorded synth + train time to criterion 5.
  if (reuse && fs::exists(root / "dataset_path") && fs::exists(root / "checkpoint_path") &&
      fs::exists(root / "train_seconds")) {
    ref.dataset = read_bytes(root / "dataset_path");
    ref.checkpoint = read_bytes(root / "checkpoint_path");
    ref.train_seconds = std::stod(read_bytes(root / "train_seconds"));
    if (fs::exists(ref.dataset / "manifest.tsv") && fs::exists(ref.checkpoint)) return ref;
  }
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string cfg = "--config \"" + config_file.string() + "\" ";
  ref.dataset = cli.run(cfg + "--out \"" + (root / "synth").string() + "\" synth") / "dataset";
  ref.checkpoint =
      cli.run(cfg + "--out \"" + (root / "train").string() + "\" train --dataset \"" + ref.dataset.string() + "\"") /
      "checkpoint";
  ref.train_seconds = seconds_since(t0);
  std::ofstream(root / "dataset_path") << ref.dataset.string();
  std::ofstream(root / "checkpoint_path") << ref.checkpoint.string();
  std::ofstream(root / "train_seconds") << fmt("%.3f", ref.train_seconds);
  return ref;
}

// --- criterion 5 ----------------------------------------------------------------------

Outcome motion_control(const config::RunConfig& cfg, const Reference& ref, const fs::path& work) {
  const auto t0 = Clock::now();
  if (cfg.arch.rows != 16 || cfg.arch.cols != 16 || cfg.arch.horizon != 16 || cfg.train.steps < 20000) {
    return {false, "reference config is not latent 16x16 / horizon 16 / >= 20k steps"};
  }
  const flow::Checkpoint ck = flow::load_checkpoint(ref.checkpoint);
  const auto man = dataset::read_manifest(ref.dataset / "manifest.tsv");

  synth::MotionSpec right;
  right.direction_deg = 0.0;
  right.speed = 2.5;
  right.coherence = 1.0;
  synth::MotionSpec upleft = right;
  upleft.direction_deg = 225.0;
  const std::array<std::pair<std::string, double>, 2> prompts{
      std::pair{synth::render_description(right), 0.0}, std::pair{synth::render_description(upleft), 225.0}};

  // The direction of a prompted forecast is read from the flow pooled over all
  // ensemble members; member 0 alone is reported for reference.
  const std::size_t members = cfg.verify.ensemble_size;
  std::array<std::vector<motion::DominantDirection>, 2> dirs, single;
  std::vector<std::size_t> ids;
  for (int k = 0; k < 2; ++k) {
    pipeline::ForecastRequest req;
    req.source = pipeline::ConditionSource::prompt;
    req.prompt = prompts[k].first;
    req.cfg_scale = cfg.forecast.cfg_scale;
    req.ensemble_size = members;
    req.max_events = 50;
    req.seed = cfg.seed;
    const fs::path out = work / "control" / (k == 0 ? "dir000" : "dir225");
    fs::remove_all(out);
    ids = pipeline::forecast_dataset(ck, man, cfg.unfold, cfg.forecast.sampler_steps, req, out);
    for (std::size_t id : ids) {
      std::vector<std::vector<Grid>> seqs;
      for (std::size_t m = 0; m < members; ++m) {
        seqs.push_back(read_grid_stack(out / std::to_string(id) / ("member_" + std::to_string(m) + ".rft")));
      }
      dirs[k].push_back(motion::ensemble_dominant_direction(seqs, cfg.motion));
      single[k].push_back(motion::sequence_dominant_direction(seqs[0], cfg.motion));
    }
  }
  struct Score {
    std::size_t separated = 0;
    double err0 = 0.0, err1 = 0.0;
  };
  auto score = [&](const std::array<std::vector<motion::DominantDirection>, 2>& d) {
    Score sc;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto& a = d[0][i];
      const auto& b = d[1][i];
      // A no-motion forecast has no direction: it cannot count as separated, and
      // its angular error is the worst case.
      sc.separated += a.moving && b.moving && angle_diff(a.angle_deg, b.angle_deg) > 90.0;
      sc.err0 += a.moving ? angle_diff(a.angle_deg, 0.0) : 180.0;
      sc.err1 += b.moving ? angle_diff(b.angle_deg, 225.0) : 180.0;
    }
    sc.err0 /= static_cast<double>(ids.size());
    sc.err1 /= static_cast<double>(ids.size());
    return sc;
  };
  const Score ens = score(dirs), one = score(single);
  const double secs = seconds_since(t0) + ref.train_seconds;
  const bool pass = ids.size() == 50 && ens.separated >= 45 && ens.err0 <= 15.0 && ens.err1 <= 15.0 && secs < 1800.0;
  return {pass, fmt("%zu members: %zu/%zu pairs separated > 90 deg, mean error %.1f deg (0) and %.1f deg (225); "
                    "member 0 alone: %zu/%zu, %.1f and %.1f deg; %.0f s incl. training",
                    members, ens.separated, ids.size(), ens.err0, ens.err1, one.separated, ids.size(), one.err0,
                    one.err1, secs)};
}

// --- criterion 6 ----------------------------------------------------------------------

Outcome cfg_ablation(const Cli& cli, const fs::path& config_file, const config::RunConfig& cfg, const Reference& ref,
                     const fs::path& work) {
  const auto t0 = Clock::now();
  const fs::path root = work / "cfg";
  fs::remove_all(root);
  fs::create_directories(root);
  auto common_in = [&](const char* sub) {
    return "--config \"" + config_file.string() + "\" --out \"" + (root / sub).string() + "\" ";
  };
  const std::string data = " --dataset \"" + ref.dataset.string() + "\"";
  const std::string ck = " --checkpoint \"" + ref.checkpoint.string() + "\"";

  const fs::path sweep = cli.run(common_in("sweep") + "cfg-sweep --condition manifest" + ck + data);
  const std::string csv = read_bytes(sweep / "cfg_sweep.csv");
  std::map<std::string, std::vector<double>> rows;
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string label, cell;
    std::getline(ls, label, ',');
    while (std::getline(ls, cell, ',')) rows[label].push_back(std::stod(cell));
  }
  if (!rows.count("1") || !rows.count("null") || !rows.count("0")) return {false, "sweep lacks the 0, 1 or null row"};
  const auto& text = rows["1"];
  const auto& null = rows["null"];
  const bool csi_up = text[1] > null[1], fss_up = text[2] > null[2];

  // The s = 0 row against a plain forecast + evaluate with guidance off.
  const fs::path fc = cli.run(common_in("plain") + "forecast --condition manifest --cfg-scale 0" + ck + data);
  const auto plain = verify::evaluate_run(fc / "forecasts", ref.dataset / "manifest.tsv", cfg.verify);
  const auto swept = verify::evaluate_run(sweep / "sweep" / "0", ref.dataset / "manifest.tsv", cfg.verify);
  double zero_gap = 0.0;
  for (std::size_t i = 0; i < plain.aggregate.values.size(); ++i) {
    zero_gap = std::max(zero_gap, std::abs(plain.aggregate.values[i] - swept.aggregate.values[i]));
    zero_gap = std::max(zero_gap, std::abs(plain.aggregate.values[i] - rows["0"][i]));
  }
  const double secs = seconds_since(t0);
  return {csi_up && fss_up && zero_gap <= 1e-9,
          fmt("text s=1 csi_high %.4f vs null %.4f, fss %.4f vs %.4f, |s=0 row - plain| = %.2g, %.0f s", text[1], null[1],
              text[2], null[2], zero_gap, secs)};
}

// --- criterion 7 ----------------------------------------------------------------------

Outcome causality(const config::RunConfig& cfg, const Reference& ref, const fs::path& work) {
  const auto t0 = Clock::now();
  const fs::path root = work / "causality";
  fs::remove_all(root);
  const fs::path corrupt = root / "corrupt_dataset";
  fs::create_directories(corrupt);
  fs::copy(ref.dataset, corrupt, fs::copy_options::recursive);

  const auto man = dataset::read_manifest(ref.dataset / "manifest.tsv");
  auto tests = man.split(true);
  const std::size_t n_events = std::min<std::size_t>(tests.size(), 20);
  Rng noise(77);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < n_events; ++i) {
    const fs::path file = corrupt / tests[i]->path;
    auto frames = read_grid_stack(file);
    for (std::size_t f = 4; f < frames.size(); ++f) {
      for (double& v : frames[f].values()) v = noise.uniform(0.0, 60.0);
    }
    write_grid_stack(file, frames);
    changed += fnv1a(read_bytes(file)) != fnv1a(read_bytes(ref.dataset / tests[i]->path));
  }
  const auto bad = dataset::read_manifest(corrupt / "manifest.tsv");

  std::uint64_t cond_a = 1469598103934665603ull, cond_b = cond_a;
  for (std::size_t i = 0; i < n_events; ++i) {
    const auto ctx_a = dataset::load_event(man, *man.split(true)[i]).slice(0, man.context_len);
    const auto ctx_b = dataset::load_event(bad, *bad.split(true)[i]).slice(0, bad.context_len);
    cond_a = fnv1a(cond::format_condition(cond::infer_context_condition(ctx_a)), cond_a);
    cond_b = fnv1a(cond::format_condition(cond::infer_context_condition(ctx_b)), cond_b);
  }

  const flow::Checkpoint ck = flow::load_checkpoint(ref.checkpoint);
  pipeline::ForecastRequest req;
  req.cfg_scale = cfg.forecast.cfg_scale;
  req.ensemble_size = 2;
  req.max_events = n_events;
  req.seed = cfg.seed;
  pipeline::forecast_dataset(ck, man, cfg.unfold, cfg.forecast.sampler_steps, req, root / "clean");
  pipeline::forecast_dataset(ck, bad, cfg.unfold, cfg.forecast.sampler_steps, req, root / "corrupt");
  const auto ha = tree_hashes(root / "clean"), hb = tree_hashes(root / "corrupt");
  const double secs = seconds_since(t0);
  return {changed == n_events && cond_a == cond_b && ha == hb && !ha.empty(),
          fmt("%zu/%zu events corrupted, condition hash %s, %zu forecast files %s, %.1f s", changed, n_events,
              cond_a == cond_b ? "equal" : "differs", ha.size(), ha == hb ? "identical" : "differ", secs)};
}

// --- criterion 8 ----------------------------------------------------------------------

// Every command on a small configuration, twice, in separate output trees.
Outcome determinism(const Cli& cli, const fs::path& work) {
  const auto t0 = Clock::now();
  const fs::path root = work / "determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path cfg_file = root / "small.cfg";
  std::ofstream(cfg_file) << "seed = 42\n"
                             "synth.n_events = 12\n"
                             "synth.test_fraction = 0.25\n"
                             "codec.bench_fields = 6\n"
                             "flow.steps = 60\n"
                             "flow.forecast_events = 2\n"
                             "verify.ensemble_size = 2\n"
                             "verify.cfg_scales = 0, 1\n";

  std::array<std::map<std::string, std::uint64_t>, 2> trees;
  for (int k = 0; k < 2; ++k) {
    const fs::path out = root / (k == 0 ? "a" : "b");
    std::map<std::string, fs::path> runs;
    auto common_in = [&](const std::string& sub) {
      return "--config \"" + cfg_file.string() + "\" --out \"" + (out / sub).string() + "\" ";
    };
    runs["synth"] = cli.run(common_in("synth") + "synth");
    const std::string data = " --dataset \"" + (runs["synth"] / "dataset").string() + "\"";
    runs["train"] = cli.run(common_in("train") + "train" + data);
    const std::string ck = " --checkpoint \"" + (runs["train"] / "checkpoint").string() + "\"";
    runs["forecast"] = cli.run(common_in("forecast") + "forecast --images" + ck + data);
    runs["forecast_prompt"] =
        cli.run(common_in("forecast_prompt") + "forecast --event 0 --prompt \"echoes move downward, slow, mixed, decaying\"" + ck + data);
    runs["evaluate"] = cli.run(common_in("evaluate") + "evaluate --forecasts \"" + (runs["forecast"] / "forecasts").string() + "\"" + data);
    runs["wcub"] = cli.run(common_in("wcub") + "wcub");
    runs["motion"] = cli.run(common_in("motion") + "motion \"" + (runs["synth"] / "dataset" / "events" / "event_00000.rft").string() +
                             "\" \"" + (runs["synth"] / "dataset" / "events" / "event_00001.rft").string() + "\"");
    runs["cfg-sweep"] = cli.run(common_in("cfg-sweep") + "cfg-sweep" + ck + data);
    for (const auto& [name, dir] : runs) {
      for (const auto& [file, h] : tree_hashes(dir)) trees[k][name + "/" + file] = h;
    }
  }
  std::size_t differing = 0;
  for (const auto& [file, h] : trees[0]) differing += !trees[1].count(file) || trees[1].at(file) != h;
  const bool pass = trees[0].size() == trees[1].size() && differing == 0 && trees[0].size() > 20;
  return {pass, fmt("%zu output files over 8 command runs, %zu differ, %.1f s", trees[0].size(), differing,
                    seconds_since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string config_file, cli_exe, work = "acceptance_work";
  bool reuse = false;
  std::vector<int> only;
  app.add_option("--config", config_file, "reference configuration")->required();
  app.add_option("--cli", cli_exe, "rfcast_cli executable")->required();
  app.add_option("--work", work, "scratch directory");
  app.add_flag("--reuse", reuse, "reuse a finished reference run under the scratch directory");
  app.add_option("--only", only, "run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::set<int> selected(only.begin(), only.end());
  auto wanted = [&](int k) { return selected.empty() || selected.count(k) > 0; };
  const fs::path wdir = fs::absolute(work);
  fs::create_directories(wdir);
  const Cli cli{fs::absolute(cli_exe)};

  std::map<int, Outcome> results;
  auto run = [&](int k, const std::string& name, const std::function<Outcome()>& f) {
    if (!wanted(k)) return;
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    results[k] = o;
    std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", k, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  };

  config::RunConfig cfg;
  try {
    cfg = config::load(config_file);
  } catch (const std::exception& e) {
    std::printf("[FAIL] cannot load %s: %s\n", config_file.c_str(), e.what());
    return 1;
  }

  run(1, "metric oracles", metric_oracles);
  run(2, "wavelet and unfolding", wavelet_unfolding);
  run(3, "WCUB reconstruction", [&] { return wcub_reconstruction(cfg); });
  run(4, "rectified flow", [&] { return flow_correctness(wdir); });

  if (wanted(5) || wanted(6) || wanted(7)) {
    Reference ref;
    std::string failure;
    try {
      ref = reference_run(cli, config_file, wdir, reuse);
    } catch (const std::exception& e) {
      failure = e.what();
    }
    auto with_ref = [&](std::function<Outcome()> f) {
      return [f, &failure]() { return failure.empty() ? f() : Outcome{false, "reference run failed: " + failure}; };
    };
    run(5, "prompted motion control", with_ref([&] { return motion_control(cfg, ref, wdir); }));
    run(6, "guidance ablation", with_ref([&] { return cfg_ablation(cli, config_file, cfg, ref, wdir); }));
    run(7, "causality", with_ref([&] { return causality(cfg, ref, wdir); }));
  }
  run(8, "CLI determinism", [&] { return determinism(cli, wdir); });

  std::size_t passed = 0;
  for (const auto& [k, o] : results) passed += o.pass;
  std::printf("%zu/%zu criteria passed\n", passed, results.size());
  return passed == results.size() ? 0 : 1;
}
