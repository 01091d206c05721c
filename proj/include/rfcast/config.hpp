#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rfcast/codec.hpp"
#include "rfcast/dataset.hpp"
#include "rfcast/motion.hpp"
#include "rfcast/rectflow.hpp"
#include "rfcast/velocity_model.hpp"
#include "rfcast/verify.hpp"

namespace rfcast::config {

/// Parsed "section.key = value" lines. Later duplicates are an error.
struct KeyValueFile {
  std::filesystem::path base_dir;  ///< directory of the file; relative paths resolve against it
  std::map<std::string, std::string> values;
  std::map<std::string, std::size_t> line_of;
};

/// Blank lines and '#' comments (whole-line or trailing) are ignored.
KeyValueFile parse_key_values(std::string_view text, const std::filesystem::path& base_dir = {});
KeyValueFile read_key_values(const std::filesystem::path& file);

/// Which commands read a key; used for per-command --help listings.
enum Command : unsigned {
  kSynth = 1u << 0,
  kTrain = 1u << 1,
  kForecast = 1u << 2,
  kEvaluate = 1u << 3,
  kWcub = 1u << 4,
  kMotion = 1u << 5,
  kCfgSweep = 1u << 6,
};

struct RunConfig {
  std::uint64_t seed = 0;

  // synth.*
  dataset::DatasetConfig dataset;
  std::filesystem::path dataset_dir = "data";

  // codec.*
  double blur_sigma = 1.0;
  double noise_sigma = 0.0;
  codec::UnfoldConfig unfold;
  std::size_t wcub_fields = 200;

  // flow.*
  flow::ModelArch arch;
  flow::TrainConfig train;
  flow::ForecastConfig forecast;
  std::size_t forecast_events = 0;  ///< 0 = the whole test split

  // verify.*
  verify::VerifyConfig verify;
  std::vector<double> sweep_scales{0.0, 1.0, 2.0, 4.0};

  // motion.*
  motion::FlowParams motion;

  // image.*
  double image_cap = 50.0;  ///< mm/h mapped to 255

  synth::DegradationParams degradation() const;
  /// Cross-section consistency (latent shape vs synth shape and scale, etc.).
  void validate() const;
};

struct KeyInfo {
  std::string name;
  std::string help;
  unsigned commands = 0;
};

/// Every recognised key, in documentation order.
const std::vector<KeyInfo>& known_keys();

/// Applies a parsed file on top of the defaults. Unknown keys and malformed
/// values throw ParseError naming the key and line.
RunConfig from_key_values(const KeyValueFile& kv);
RunConfig load(const std::filesystem::path& file);

/// Canonical text of every key (round-trips through from_key_values).
std::string to_text(const RunConfig& cfg);

}  // namespace rfcast::config
