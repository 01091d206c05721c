#include "rfcast/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rfcast/errors.hpp"
#include "rfcast/tensor_io.hpp"

namespace rfcast::dataset {

namespace fs = std::filesystem;

void SpecRanges::validate() const {
  auto check = [](double lo, double hi, const char* name) {
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw ParameterError(std::string("invalid range for ") + name);
    }
  };
  check(dir_min, dir_max, "direction");
  check(speed_min, speed_max, "speed");
  check(rotation_min, rotation_max, "rotation");
  check(growth_min, growth_max, "growth");
  check(coherence_min, coherence_max, "coherence");
  if (dir_min < 0.0 || dir_max > 360.0) throw ParameterError("direction range must lie in [0, 360]");
  if (speed_min < 0.0) throw ParameterError("speed range must be nonnegative");
  if (growth_min <= 0.0) throw ParameterError("growth range must be positive");
  if (coherence_min < 0.0 || coherence_max > 1.0) throw ParameterError("coherence range must lie in [0, 1]");
}

synth::MotionSpec SpecRanges::sample(Rng& rng) const {
  synth::MotionSpec s;
  s.direction_deg = std::fmod(rng.uniform(dir_min, dir_max), 360.0);
  s.speed = rng.uniform(speed_min, speed_max);
  s.rotation_deg_per_frame = rng.uniform(rotation_min, rotation_max);
  s.growth_rate = rng.uniform(growth_min, growth_max);
  s.coherence = rng.uniform(coherence_min, coherence_max);
  return s;
}

std::vector<const ManifestEntry*> Manifest::split(bool test) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries) {
    if (e.test == test) out.push_back(&e);
  }
  return out;
}

std::vector<bool> test_split(std::size_t n, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ParameterError("test fraction must lie in [0, 1]");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto key = [](std::size_t i) { return Rng::mix64(static_cast<std::uint64_t>(i) ^ 0xA5A5A5A5DEADBEEFULL); };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  const auto n_test = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
  std::vector<bool> test(n, false);
  for (std::size_t k = 0; k < n_test; ++k) test[order[k]] = true;
  return test;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string manifest_text(const Manifest& m) {
  std::ostringstream os;
  os << "# context_len=" << m.context_len << '\n'
     << "# horizon=" << m.horizon << '\n'
     << "# cadence_minutes=" << num(m.cadence_minutes) << '\n';
  for (const auto& e : m.entries) {
    os << e.index << '\t' << e.seed << '\t' << num(e.spec.direction_deg) << '\t' << num(e.spec.speed) << '\t'
       << num(e.spec.rotation_deg_per_frame) << '\t' << num(e.spec.growth_rate) << '\t' << num(e.spec.coherence)
       << '\t' << e.description << '\t' << e.path << '\t' << (e.test ? "test" : "train") << '\t'
       << cond::format_condition(e.condition) << '\n';
  }
  return os.str();
}

Manifest synth_dataset(const Rng& rng, const DatasetConfig& cfg, const fs::path& out_dir) {
  if (cfg.n_events < 1) throw ParameterError("synth_dataset: n_events must be >= 1");
  cfg.ranges.validate();
  fs::create_directories(out_dir / "events");

  Manifest m;
  m.root = out_dir;
  m.context_len = cfg.shape.context_len;
  m.horizon = cfg.shape.horizon;
  const std::vector<bool> test = test_split(cfg.n_events, cfg.test_fraction);
  for (std::size_t i = 0; i < cfg.n_events; ++i) {
    Rng ev_rng = rng.child(i);
    const synth::MotionSpec spec = cfg.ranges.sample(ev_rng);
    const synth::EventRecord rec = synth::synth_event(ev_rng, spec, cfg.shape, cfg.source);

    char name[32];
    std::snprintf(name, sizeof name, "event_%05zu.rft", i);
    const std::string rel = std::string("events/") + name;
    std::vector<Grid> frames;
    for (const auto& f : rec.sequence.frames()) frames.push_back(f.grid());
    write_grid_stack(out_dir / rel, frames);

    ManifestEntry e;
    e.index = i;
    e.seed = ev_rng.seed();
    e.spec = spec;
    e.description = rec.description;
    e.path = rel;
    e.test = test[i];
    e.condition = cond::condition_from_text(rec.description);
    m.entries.push_back(std::move(e));
  }

  std::ofstream os(out_dir / "manifest.tsv", std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write manifest in " + out_dir.string());
  os << manifest_text(m);
  if (!os) throw IoError("manifest write failed in " + out_dir.string());
  return m;
}

Manifest read_manifest(const fs::path& manifest_file) {
  std::ifstream is(manifest_file);
  if (!is) throw IoError("cannot open manifest " + manifest_file.string());
  Manifest m;
  m.root = manifest_file.parent_path();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      const std::string value = line.substr(eq + 1);
      if (key == "context_len") m.context_len = std::stoul(value);
      else if (key == "horizon") m.horizon = std::stoul(value);
      else if (key == "cadence_minutes") m.cadence_minutes = std::stod(value);
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() != 11) {
      throw FormatError(manifest_file.string() + ":" + std::to_string(line_no) + ": expected 11 columns, got " +
                        std::to_string(cols.size()));
    }
    try {
      ManifestEntry e;
      e.index = std::stoul(cols[0]);
      e.seed = std::stoull(cols[1]);
      e.spec.direction_deg = std::stod(cols[2]);
      e.spec.speed = std::stod(cols[3]);
      e.spec.rotation_deg_per_frame = std::stod(cols[4]);
      e.spec.growth_rate = std::stod(cols[5]);
      e.spec.coherence = std::stod(cols[6]);
      e.description = cols[7];
      e.path = cols[8];
      if (cols[9] != "train" && cols[9] != "test") throw FormatError("bad split '" + cols[9] + "'");
      e.test = cols[9] == "test";
      e.condition = cond::parse_condition(cols[10]);
      m.entries.push_back(std::move(e));
    } catch (const std::logic_error&) {
      throw FormatError(manifest_file.string() + ":" + std::to_string(line_no) + ": malformed number");
    }
  }
  return m;
}

RadarSequence load_event(const Manifest& m, const ManifestEntry& e) {
  std::vector<RadarField> frames;
  for (auto& g : read_grid_stack(m.root / e.path)) frames.emplace_back(std::move(g));
  if (frames.size() != m.context_len + m.horizon) {
    throw FormatError("event " + std::to_string(e.index) + " has " + std::to_string(frames.size()) + " frames");
  }
  return RadarSequence(std::move(frames), m.cadence_minutes);
}

}  // namespace rfcast::dataset
