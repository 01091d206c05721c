#include "rfcast/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "rfcast/errors.hpp"

namespace rfcast::config {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(d)) {
    throw ParseError("config key '" + key + "': '" + v + "' is not a finite number");
  }
  return d;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  if (v.empty() || v[0] == '-') throw ParseError("config key '" + key + "': '" + v + "' is not a non-negative integer");
  const unsigned long long n = std::strtoull(v.c_str(), &end, 10);
  if (*end != '\0' || errno == ERANGE) {
    throw ParseError("config key '" + key + "': '" + v + "' is not a non-negative integer");
  }
  return n;
}

std::size_t to_size(const std::string& key, const std::string& v) { return static_cast<std::size_t>(to_u64(key, v)); }

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ParseError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(to_double(key, s));
  if (out.empty()) throw ParseError("config key '" + key + "': empty list");
  return out;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      out += fmt(xs[i]);
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

struct Entry {
  KeyInfo info;
  std::function<void(RunConfig&, const std::string&, const std::filesystem::path&)> set;
  std::function<std::string(const RunConfig&)> get;
};

constexpr unsigned kData = kSynth | kTrain | kForecast | kEvaluate | kCfgSweep;
constexpr unsigned kCodec = kTrain | kForecast | kWcub | kCfgSweep;
constexpr unsigned kModel = kTrain | kForecast | kCfgSweep;
constexpr unsigned kSample = kForecast | kCfgSweep;
constexpr unsigned kVerify = kEvaluate | kCfgSweep;

#define RF_DOUBLE(key, field, cmds, help)                                                                   \
  Entry {                                                                                                   \
    {key, help, cmds}, [](RunConfig& c, const std::string& v, const std::filesystem::path&) {               \
      c.field = to_double(key, v);                                                                          \
    },                                                                                                      \
        [](const RunConfig& c) { return fmt(c.field); }                                                     \
  }
#define RF_SIZE(key, field, cmds, help)                                                                     \
  Entry {                                                                                                   \
    {key, help, cmds}, [](RunConfig& c, const std::string& v, const std::filesystem::path&) {               \
      c.field = to_size(key, v);                                                                            \
    },                                                                                                      \
        [](const RunConfig& c) { return std::to_string(c.field); }                                          \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      Entry{{"seed", "root seed; every command derives its streams from it", kSynth | kTrain | kForecast | kWcub | kCfgSweep},
            [](RunConfig& c, const std::string& v, const std::filesystem::path&) { c.seed = to_u64("seed", v); },
            [](const RunConfig& c) { return std::to_string(c.seed); }},

      RF_SIZE("synth.n_events", dataset.n_events, kSynth, "number of events to generate"),
      RF_DOUBLE("synth.test_fraction", dataset.test_fraction, kSynth, "fraction of events held out (hash split)"),
      RF_SIZE("synth.height", dataset.shape.height, kSynth | kWcub, "field height in pixels"),
      RF_SIZE("synth.width", dataset.shape.width, kSynth | kWcub, "field width in pixels"),
      RF_SIZE("synth.n_cells", dataset.shape.n_cells, kSynth | kWcub, "rain cells per event"),
      RF_DOUBLE("synth.sigma_min", dataset.shape.cells.sigma_min, kSynth | kWcub, "smallest cell minor-axis sigma (px)"),
      RF_DOUBLE("synth.sigma_max", dataset.shape.cells.sigma_max, kSynth | kWcub, "largest cell minor-axis sigma (px)"),
      RF_DOUBLE("synth.aspect_max", dataset.shape.cells.aspect_max, kSynth | kWcub, "largest major/minor axis ratio"),
      RF_DOUBLE("synth.peak_min", dataset.shape.cells.peak_min, kSynth | kWcub, "smallest cell peak rain rate (mm/h)"),
      RF_DOUBLE("synth.peak_max", dataset.shape.cells.peak_max, kSynth | kWcub, "largest cell peak rain rate (mm/h)"),
      RF_DOUBLE("synth.dir_min", dataset.ranges.dir_min, kSynth, "direction range start (deg, 0 = rightward, 90 = downward)"),
      RF_DOUBLE("synth.dir_max", dataset.ranges.dir_max, kSynth, "direction range end (deg)"),
      RF_DOUBLE("synth.speed_min", dataset.ranges.speed_min, kSynth, "slowest speed (px/frame)"),
      RF_DOUBLE("synth.speed_max", dataset.ranges.speed_max, kSynth, "fastest speed (px/frame)"),
      RF_DOUBLE("synth.rotation_min", dataset.ranges.rotation_min, kSynth, "rotation range start (deg/frame)"),
      RF_DOUBLE("synth.rotation_max", dataset.ranges.rotation_max, kSynth, "rotation range end (deg/frame)"),
      RF_DOUBLE("synth.growth_min", dataset.ranges.growth_min, kSynth, "smallest growth factor per frame"),
      RF_DOUBLE("synth.growth_max", dataset.ranges.growth_max, kSynth, "largest growth factor per frame"),
      RF_DOUBLE("synth.coherence_min", dataset.ranges.coherence_min, kSynth, "smallest coherent-cell fraction"),
      RF_DOUBLE("synth.coherence_max", dataset.ranges.coherence_max, kSynth, "largest coherent-cell fraction"),
      Entry{{"synth.description_source", "full_sequence or context_only", kSynth},
            [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
              try {
                c.dataset.source = synth::description_source_from_string(v);
              } catch (const ParameterError&) {
                throw ParseError("config key 'synth.description_source': unknown value '" + v + "'");
              }
            },
            [](const RunConfig& c) { return std::string(synth::to_string(c.dataset.source)); }},
      Entry{{"synth.dataset_dir", "dataset directory (relative to the config file)", kData},
            [](RunConfig& c, const std::string& v, const std::filesystem::path& base) {
              const std::filesystem::path p(v);
              c.dataset_dir = p.is_absolute() || base.empty() ? p : base / p;
            },
            [](const RunConfig& c) { return c.dataset_dir.string(); }},

      Entry{{"codec.scale", "decimation factor s of the degradation operator", kCodec},
            [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
              c.unfold.degradation.scale = to_size("codec.scale", v);
            },
            [](const RunConfig& c) { return std::to_string(c.unfold.degradation.scale); }},
      RF_DOUBLE("codec.blur_sigma", blur_sigma, kCodec, "Gaussian blur kernel sigma (px)"),
      RF_DOUBLE("codec.noise_sigma", noise_sigma, kWcub, "observation noise sigma added in the benchmark"),
      RF_SIZE("codec.wcub.stages", unfold.stages, kForecast | kWcub | kCfgSweep, "unfolding stages T (0 = bilinear only)"),
      RF_DOUBLE("codec.wcub.eta", unfold.eta, kForecast | kWcub | kCfgSweep, "data-consistency step size"),
      RF_DOUBLE("codec.wcub.lambda", unfold.lambda, kForecast | kWcub | kCfgSweep, "wavelet soft-threshold"),
      RF_SIZE("codec.wcub.levels", unfold.wavelet_levels, kForecast | kWcub | kCfgSweep, "Haar decomposition levels"),
      RF_DOUBLE("codec.wcub.fusion_weight", unfold.fusion_weight, kForecast | kWcub | kCfgSweep,
                "weight of the unfolding path against bilinear"),
      Entry{{"codec.wcub.shift_invariant", "average the shrinkage over circular shifts (true/false)",
             kForecast | kWcub | kCfgSweep},
            [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
              c.unfold.shift_invariant = to_bool("codec.wcub.shift_invariant", v);
            },
            [](const RunConfig& c) { return std::string(c.unfold.shift_invariant ? "true" : "false"); }},
      RF_SIZE("codec.bench_fields", wcub_fields, kWcub, "fields in the reconstruction benchmark"),

      RF_SIZE("flow.horizon", arch.horizon, kModel | kEvaluate, "forecast frames"),
      RF_SIZE("flow.hidden1", arch.hidden1, kTrain, "first hidden layer channels"),
      RF_SIZE("flow.hidden2", arch.hidden2, kTrain, "second hidden layer channels"),
      RF_SIZE("flow.time_dim", arch.time_dim, kTrain, "sinusoidal time embedding width (even)"),
      RF_SIZE("flow.spatial_context", arch.spatial_context, kTrain, "most recent context frames fed as input channels"),
      Entry{{"flow.dilations", "per-layer dilation of the three convolutions", kTrain},
            [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
              const auto items = split_list(v);
              if (items.size() != 3) throw ParseError("config key 'flow.dilations': expected three integers");
              for (std::size_t i = 0; i < 3; ++i) c.arch.dilations[i] = to_size("flow.dilations", items[i]);
            },
            [](const RunConfig& c) {
              return join(std::vector<std::size_t>(c.arch.dilations.begin(), c.arch.dilations.end()));
            }},
      RF_SIZE("flow.steps", train.steps, kTrain, "SGD steps"),
      RF_SIZE("flow.batch_size", train.batch_size, kTrain, "samples per step"),
      RF_DOUBLE("flow.lr", train.learning_rate, kTrain, "SGD learning rate"),
      RF_DOUBLE("flow.lr_final_scale", train.lr_final_scale, kTrain, "final learning rate as a fraction of flow.lr (cosine schedule)"),
      RF_DOUBLE("flow.p_drop", train.p_drop, kTrain, "condition dropout probability"),
      RF_DOUBLE("flow.clip_norm", train.clip_norm, kTrain, "global gradient-norm clip (0 disables)"),
      RF_SIZE("flow.sampler_steps", forecast.sampler_steps, kSample, "Euler steps N"),
      RF_DOUBLE("flow.cfg_scale", forecast.cfg_scale, kForecast, "guidance scale s"),
      RF_SIZE("flow.forecast_events", forecast_events, kSample, "test events to forecast (0 = all)"),

      Entry{{"verify.thresholds", "low, high CSI thresholds (mm/h)", kVerify},
            [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
              const auto xs = to_doubles("verify.thresholds", v);
              if (xs.size() != 2) throw ParseError("config key 'verify.thresholds': expected two numbers");
              c.verify.threshold_low = xs[0];
              c.verify.threshold_high = xs[1];
            },
            [](const RunConfig& c) { return join(std::vector<double>{c.verify.threshold_low, c.verify.threshold_high}); }},
      RF_DOUBLE("verify.fss_threshold", verify.fss_threshold, kVerify, "FSS exceedance threshold (mm/h)"),
      RF_SIZE("verify.neighborhood", verify.neighborhood, kVerify, "FSS window side (odd)"),
      RF_SIZE("verify.ensemble_size", verify.ensemble_size, kSample | kEvaluate, "members per event"),
      RF_DOUBLE("verify.psnr_peak", verify.psnr_peak, kVerify, "PSNR peak value (mm/h)"),
      Entry{{"verify.cfg_scales", "guidance scales of the sweep", kCfgSweep},
            [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
              c.sweep_scales = to_doubles("verify.cfg_scales", v);
            },
            [](const RunConfig& c) { return join(c.sweep_scales); }},

      RF_DOUBLE("motion.alpha", motion.alpha, kMotion, "Horn-Schunck smoothness weight"),
      Entry{{"motion.iters", "Horn-Schunck iterations", kMotion},
            [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
              c.motion.iters = static_cast<int>(to_size("motion.iters", v));
            },
            [](const RunConfig& c) { return std::to_string(c.motion.iters); }},
      RF_DOUBLE("motion.floor_fraction", motion.floor_fraction, kMotion,
                "ignore flow below this fraction of the maximum magnitude"),

      RF_DOUBLE("image.cap", image_cap, kForecast, "rain rate mapped to white in PGM dumps (mm/h)"),
  };
  return table;
}

#undef RF_DOUBLE
#undef RF_SIZE

void finalize(RunConfig& c) {
  const std::size_t s = c.unfold.degradation.scale;
  c.unfold.degradation = synth::DegradationParams::gaussian(c.blur_sigma, s == 0 ? 1 : s);
  c.unfold.degradation.scale = s;
  c.arch.context_len = c.dataset.shape.context_len;
  if (s > 0) {
    c.arch.rows = c.dataset.shape.height / s;
    c.arch.cols = c.dataset.shape.width / s;
  }
  c.train.horizon = c.arch.horizon;
  c.train.scale = s;
  c.train.seed = c.seed;
}

}  // namespace

KeyValueFile parse_key_values(std::string_view text, const std::filesystem::path& base_dir) {
  KeyValueFile kv;
  kv.base_dir = base_dir;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(line_no) + ": expected 'key = value', got '" + body + "'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ParseError("config line " + std::to_string(line_no) + ": empty key");
    if (kv.values.count(key)) {
      throw ParseError("config line " + std::to_string(line_no) + ": key '" + key + "' repeated (first on line " +
                       std::to_string(kv.line_of[key]) + ")");
    }
    kv.values[key] = value;
    kv.line_of[key] = line_no;
  }
  return kv;
}

KeyValueFile read_key_values(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw IoError("cannot open config file " + file.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_key_values(ss.str(), file.parent_path());
}

synth::DegradationParams RunConfig::degradation() const { return unfold.degradation; }

void RunConfig::validate() const {
  dataset.ranges.validate();
  unfold.validate();
  arch.validate();
  train.validate();
  forecast.validate();
  verify.validate();
  const std::size_t s = unfold.degradation.scale;
  if (dataset.shape.height % s != 0 || dataset.shape.width % s != 0) {
    throw ParameterError("config: synth.height and synth.width must be multiples of codec.scale");
  }
  if (arch.horizon > dataset.shape.horizon) throw ParameterError("config: flow.horizon exceeds the event horizon");
  if (!(dataset.test_fraction >= 0.0 && dataset.test_fraction < 1.0)) {
    throw ParameterError("config: synth.test_fraction must lie in [0, 1)");
  }
  if (!(blur_sigma > 0.0)) throw ParameterError("config: codec.blur_sigma must be positive");
  if (!(noise_sigma >= 0.0)) throw ParameterError("config: codec.noise_sigma must be >= 0");
  if (!(image_cap > 0.0)) throw ParameterError("config: image.cap must be positive");
  if (!(motion.alpha > 0.0) || motion.iters < 1) throw ParameterError("config: motion.alpha and motion.iters must be positive");
  for (double s2 : sweep_scales) {
    if (!(s2 >= 0.0)) throw ParameterError("config: verify.cfg_scales must be >= 0");
  }
}

const std::vector<KeyInfo>& known_keys() {
  static const std::vector<KeyInfo> keys = [] {
    std::vector<KeyInfo> out;
    for (const auto& e : entries()) out.push_back(e.info);
    return out;
  }();
  return keys;
}

RunConfig from_key_values(const KeyValueFile& kv) {
  RunConfig c;
  c.dataset_dir = kv.base_dir.empty() ? c.dataset_dir : kv.base_dir / c.dataset_dir;
  for (const auto& [key, value] : kv.values) {
    const Entry* hit = nullptr;
    for (const auto& e : entries()) {
      if (e.info.name == key) hit = &e;
    }
    const auto line = kv.line_of.count(key) ? kv.line_of.at(key) : 0;
    if (!hit) throw ParseError("config line " + std::to_string(line) + ": unknown key '" + key + "'");
    try {
      hit->set(c, value, kv.base_dir);
    } catch (const ParseError& e) {
      throw ParseError("config line " + std::to_string(line) + ": " + e.what());
    }
  }
  finalize(c);
  c.validate();
  return c;
}

RunConfig load(const std::filesystem::path& file) { return from_key_values(read_key_values(file)); }

std::string to_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& e : entries()) out += e.info.name + " = " + e.get(cfg) + "\n";
  return out;
}

}  // namespace rfcast::config
