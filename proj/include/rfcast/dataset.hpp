#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rfcast/conditioning.hpp"
#include "rfcast/fields.hpp"
#include "rfcast/rng.hpp"
#include "rfcast/synth.hpp"

namespace rfcast::dataset {

/// Uniform sampling ranges for MotionSpec fields. A degenerate range
/// (min == max) pins the value.
struct SpecRanges {
  double dir_min = 0.0, dir_max = 360.0;
  double speed_min = 0.5, speed_max = 3.0;
  double rotation_min = -3.0, rotation_max = 3.0;
  double growth_min = 0.96, growth_max = 1.04;
  double coherence_min = 0.6, coherence_max = 1.0;

  void validate() const;
  synth::MotionSpec sample(Rng& rng) const;
};

struct DatasetConfig {
  std::size_t n_events = 2000;
  SpecRanges ranges;
  synth::EventShape shape;
  double test_fraction = 0.1;
  synth::DescriptionSource source = synth::DescriptionSource::full_sequence;
};

struct ManifestEntry {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  synth::MotionSpec spec;
  std::string description;
  std::string path;  ///< relative to the manifest directory
  bool test = false;
  cond::ConditionVector condition;
};

/// Tab-separated manifest, one event per line:
/// index, seed, direction_deg, speed, rotation, growth, coherence,
/// description, path, split (train|test), condition (16 comma-separated).
/// Lines starting with '#' carry dataset-level key=value metadata.
struct Manifest {
  std::filesystem::path root;
  std::size_t context_len = kContextLen;
  std::size_t horizon = kHorizon;
  double cadence_minutes = kCadenceMinutes;
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> split(bool test) const;
};

/// test[i] for i < n: the round(fraction * n) indices with the smallest
/// mix64 hash are held out.
std::vector<bool> test_split(std::size_t n, double fraction);

/// Writes `out_dir/events/event_NNNNN.rft` ([frames, H, W]) and
/// `out_dir/manifest.tsv`. Event i uses child seed (rng.seed(), i).
Manifest synth_dataset(const Rng& rng, const DatasetConfig& cfg, const std::filesystem::path& out_dir);

std::string manifest_text(const Manifest& m);
Manifest read_manifest(const std::filesystem::path& manifest_file);
RadarSequence load_event(const Manifest& m, const ManifestEntry& e);

}  // namespace rfcast::dataset
