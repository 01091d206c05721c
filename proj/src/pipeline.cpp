#include "rfcast/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rfcast/errors.hpp"
#include "rfcast/synth.hpp"
#include "rfcast/tensor_io.hpp"

namespace rfcast::pipeline {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + p.string());
  os << text;
  if (!os) throw IoError("write failed for " + p.string());
}

double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

cond::ConditionVector condition_for(const ForecastRequest& req, const RadarSequence& context,
                                    const std::string& manifest_text) {
  switch (req.source) {
    case ConditionSource::context: return cond::infer_context_condition(context);
    case ConditionSource::manifest: return cond::condition_from_text(manifest_text);
    case ConditionSource::prompt: return cond::condition_from_text(req.prompt);
    case ConditionSource::null: return cond::ConditionVector::null();
  }
  return cond::ConditionVector::null();
}

void write_members(const flow::Checkpoint& ck, const RadarSequence& context, const cond::ConditionVector& c,
                   const codec::UnfoldConfig& unfold, std::size_t sampler_steps, const ForecastRequest& req,
                   const Rng& event_rng, const fs::path& dir) {
  fs::create_directories(dir);
  flow::ForecastConfig fc;
  fc.sampler_steps = sampler_steps;
  fc.cfg_scale = req.cfg_scale;
  fc.unfold = unfold;
  fc.unfold.degradation = ck.degradation;
  for (std::size_t k = 0; k < req.ensemble_size; ++k) {
    Rng rng = event_rng.child(k);
    const RadarSequence out = flow::forecast_with_condition(ck.model, context, c, fc, rng);
    std::vector<Grid> frames;
    for (const auto& f : out.frames()) frames.push_back(f.grid());
    write_grid_stack(dir / ("member_" + std::to_string(k) + ".rft"), frames);
    if (req.image_cap > 0.0) {
      for (std::size_t l = 0; l < frames.size(); ++l) {
        char name[64];
        std::snprintf(name, sizeof name, "member_%zu_lead_%02zu.pgm", k, l);
        write_text(dir / name, pgm_bytes(frames[l], req.image_cap));
      }
    }
  }
  write_text(dir / "condition.txt", cond::format_condition(c) + "\n");
}

}  // namespace

std::vector<BenchRow> wcub_benchmark(const config::RunConfig& cfg) {
  if (cfg.wcub_fields == 0) throw ParameterError("wcub benchmark: codec.bench_fields must be positive");
  codec::UnfoldConfig on = cfg.unfold;
  codec::UnfoldConfig off = on;
  off.stages = 0;
  off.per_stage.clear();
  synth::DegradationParams deg = cfg.degradation();
  deg.noise_sigma = cfg.noise_sigma;

  BenchRow bil{"bilinear", {}, {}}, t0{"wcub_off", {}, {}}, full{"wcub", {}, {}};
  const Rng root(cfg.seed);
  synth::EventShape shape = cfg.dataset.shape;
  for (std::size_t i = 0; i < cfg.wcub_fields; ++i) {
    Rng r = root.child(i);
    const synth::MotionSpec spec = cfg.dataset.ranges.sample(r);
    const Grid x = synth::synth_event(r, spec, shape).sequence[0].grid();
    const Grid y = synth::degrade(x, deg, r);
    const Grid b = RadarField::clamped(codec::bilinear_upsample(y, deg.scale)).grid();
    const Grid o = codec::wcub_decode(y, off).grid();
    const Grid w = codec::wcub_decode(y, on).grid();
    for (auto [row, g] : {std::pair{&bil, &b}, std::pair{&t0, &o}, std::pair{&full, &w}}) {
      row->psnr.push_back(verify::psnr(*g, x, cfg.verify.psnr_peak));
      row->ssim.push_back(verify::ssim(*g, x));
    }
  }
  std::vector<BenchRow> rows{bil, t0, full};
  for (auto& r : rows) {
    r.mean_psnr = mean(r.psnr);
    r.mean_ssim = mean(r.ssim);
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "method,mean_psnr,mean_ssim,fields\n";
  for (const auto& r : rows) {
    os << r.method << ',' << verify::format_number(r.mean_psnr) << ',' << verify::format_number(r.mean_ssim) << ','
       << r.psnr.size() << '\n';
  }
  return os.str();
}

std::vector<std::size_t> forecast_dataset(const flow::Checkpoint& ck, const dataset::Manifest& manifest,
                                          const codec::UnfoldConfig& unfold, std::size_t sampler_steps,
                                          const ForecastRequest& req, const fs::path& out_dir) {
  std::vector<const dataset::ManifestEntry*> chosen;
  if (req.event) {
    for (const auto& e : manifest.entries) {
      if (e.index == *req.event) chosen.push_back(&e);
    }
    if (chosen.empty()) throw ParameterError("event " + std::to_string(*req.event) + " is not in the dataset");
  } else {
    chosen = manifest.split(true);
    if (req.max_events > 0 && chosen.size() > req.max_events) chosen.resize(req.max_events);
  }
  if (chosen.empty()) throw ParameterError("forecast: the dataset has no test events");

  const Rng root(req.seed);
  std::vector<std::size_t> ids;
  for (const auto* e : chosen) {
    const RadarSequence seq = dataset::load_event(manifest, *e);
    const RadarSequence context = seq.slice(0, manifest.context_len);
    const cond::ConditionVector c = condition_for(req, context, e->description);
    write_members(ck, context, c, unfold, sampler_steps, req, root.child(e->index), out_dir / std::to_string(e->index));
    ids.push_back(e->index);
  }
  return ids;
}

void forecast_context(const flow::Checkpoint& ck, const RadarSequence& context, const codec::UnfoldConfig& unfold,
                      std::size_t sampler_steps, const ForecastRequest& req, const fs::path& out_dir) {
  if (req.source == ConditionSource::manifest) throw ParameterError("forecast: no manifest description for raw context");
  const cond::ConditionVector c = condition_for(req, context, {});
  write_members(ck, context, c, unfold, sampler_steps, req, Rng(req.seed).child(0), out_dir);
}

std::string pgm_bytes(const Grid& g, double cap) {
  if (!(cap > 0.0)) throw ParameterError("image cap must be positive");
  std::string out = "P5\n" + std::to_string(g.cols()) + " " + std::to_string(g.rows()) + "\n255\n";
  const double denom = std::log1p(cap);
  for (double v : g.values()) {
    const double c = std::clamp(v, 0.0, cap);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * std::log1p(c) / denom))));
  }
  return out;
}

std::vector<SweepRow> cfg_sweep(const flow::Checkpoint& ck, const dataset::Manifest& manifest,
                                const fs::path& manifest_file, const config::RunConfig& cfg, ConditionSource source,
                                const fs::path& work_dir) {
  std::vector<SweepRow> rows;
  auto run = [&](const std::string& label, ConditionSource src, double scale) {
    ForecastRequest req;
    req.source = src;
    req.cfg_scale = scale;
    req.ensemble_size = cfg.verify.ensemble_size;
    req.max_events = cfg.forecast_events;
    req.seed = cfg.seed;
    const fs::path dir = work_dir / label;
    forecast_dataset(ck, manifest, cfg.unfold, cfg.forecast.sampler_steps, req, dir);
    rows.push_back({label, verify::evaluate_run(dir, manifest_file, cfg.verify)});
  };
  for (double s : cfg.sweep_scales) run(verify::format_number(s), source, s);
  run("null", ConditionSource::null, 0.0);
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "cfg_scale";
  for (const char* m : verify::kMetricNames) os << ',' << m;
  os << '\n';
  for (const auto& r : rows) {
    os << r.label;
    for (double v : r.report.aggregate.values) os << ',' << verify::format_number(v);
    os << '\n';
  }
  return os.str();
}

}  // namespace rfcast::pipeline
