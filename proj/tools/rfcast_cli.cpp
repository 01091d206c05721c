// rfcast_cli: synthetic data, training, forecasting and verification from the
// command line. Every command writes into a fresh run directory
// <out>/<UTC timestamp>_seed<seed> and prints "run_dir=<path>" when done.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "rfcast/config.hpp"
#include "rfcast/errors.hpp"
#include "rfcast/motion.hpp"
#include "rfcast/pipeline.hpp"
#include "rfcast/tensor_io.hpp"

using namespace rfcast;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::string out = "runs";
};

config::RunConfig load_config(const Globals& g) {
  config::RunConfig cfg = g.config_file.empty() ? config::from_key_values({}) : config::load(g.config_file);
  if (g.seed) {
    cfg.seed = *g.seed;
    cfg.train.seed = *g.seed;
  }
  return cfg;
}

fs::path make_run_dir(const Globals& g, std::uint64_t seed) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  const fs::path dir = fs::path(g.out) / (std::string(stamp) + "_seed" + std::to_string(seed));
  if (fs::exists(dir)) throw IoError("run directory " + dir.string() + " already exists; refusing to overwrite");
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + p.string());
  os << text;
}

std::string keys_footer(unsigned command) {
  std::string out = "\nConfig keys read:\n";
  for (const auto& k : config::known_keys()) {
    if (k.commands & command) out += "  " + k.name + "  " + k.help + "\n";
  }
  return out;
}

fs::path manifest_path(const std::string& dataset, const config::RunConfig& cfg) {
  const fs::path dir = dataset.empty() ? cfg.dataset_dir : fs::path(dataset);
  const fs::path m = dir / "manifest.tsv";
  if (!fs::exists(m)) throw IoError("no manifest.tsv under " + dir.string());
  return m;
}

pipeline::ConditionSource parse_source(const std::string& s) {
  if (s == "context") return pipeline::ConditionSource::context;
  if (s == "manifest") return pipeline::ConditionSource::manifest;
  if (s == "null") return pipeline::ConditionSource::null;
  throw ParameterError("unknown condition source '" + s + "' (context, manifest or null)");
}

void finish(const fs::path& run_dir) { std::cout << "run_dir=" << run_dir.string() << std::endl; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Precipitation nowcasting with rectified flow on synthetic radar events"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_file, "run configuration file (section.key = value)");
  app.add_option("--seed", g.seed, "override the configured seed");
  app.add_option("--out", g.out, "parent directory of run directories")->capture_default_str();

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic event dataset");
  synth_cmd->footer(keys_footer(config::kSynth));

  std::string dataset, checkpoint, forecasts, prompt, condition = "context", context_file;
  std::optional<std::size_t> event;
  std::optional<double> cfg_scale;
  bool images = false;

  auto* train_cmd = app.add_subcommand("train", "train the velocity network");
  train_cmd->add_option("--dataset", dataset, "dataset directory (default synth.dataset_dir)");
  train_cmd->footer(keys_footer(config::kTrain));

  auto* fc_cmd = app.add_subcommand("forecast", "sample forecast ensembles");
  fc_cmd->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  fc_cmd->add_option("--dataset", dataset, "dataset directory (default synth.dataset_dir)");
  fc_cmd->add_option("--event", event, "forecast this event index only");
  fc_cmd->add_option("--context", context_file, "forecast from a [4, H, W] context stack instead of the dataset");
  fc_cmd->add_option("--prompt", prompt, "motion description used for every event");
  fc_cmd->add_option("--condition", condition, "context, manifest or null (ignored with --prompt)")
      ->capture_default_str();
  fc_cmd->add_option("--cfg-scale", cfg_scale, "override flow.cfg_scale");
  fc_cmd->add_flag("--images", images, "also write 8-bit PGM frames");
  fc_cmd->footer(keys_footer(config::kForecast));

  auto* eval_cmd = app.add_subcommand("evaluate", "verify forecasts against the dataset truth");
  eval_cmd->add_option("--forecasts", forecasts, "directory of <event>/member_<k>.rft files")->required();
  eval_cmd->add_option("--dataset", dataset, "dataset directory (default synth.dataset_dir)");
  eval_cmd->footer(keys_footer(config::kEvaluate));

  auto* wcub_cmd = app.add_subcommand("wcub", "reconstruction benchmark: bilinear vs unfolding decoder");
  wcub_cmd->footer(keys_footer(config::kWcub));

  std::vector<std::string> sequences;
  auto* motion_cmd = app.add_subcommand("motion", "dominant motion direction of radar sequences");
  bool pool = false;
  motion_cmd->add_option("sequences", sequences, "RFT1 stacks [frames, H, W]")->required();
  motion_cmd->add_flag("--ensemble", pool, "also print one pooled direction over all files (forecast members)");
  motion_cmd->footer(keys_footer(config::kMotion));

  auto* sweep_cmd = app.add_subcommand("cfg-sweep", "evaluate forecasts over guidance scales plus a null row");
  sweep_cmd->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  sweep_cmd->add_option("--dataset", dataset, "dataset directory (default synth.dataset_dir)");
  sweep_cmd->add_option("--condition", condition, "context or manifest")->capture_default_str();
  sweep_cmd->footer(keys_footer(config::kCfgSweep));

  CLI11_PARSE(app, argc, argv);

  try {
    const config::RunConfig cfg = load_config(g);

    if (*synth_cmd) {
      const fs::path run = make_run_dir(g, cfg.seed);
      write_text(run / "config.txt", config::to_text(cfg));
      const auto man = dataset::synth_dataset(Rng(cfg.seed), cfg.dataset, run / "dataset");
      std::cerr << "wrote " << man.entries.size() << " events\n";
      finish(run);
    } else if (*train_cmd) {
      const fs::path mfile = manifest_path(dataset, cfg);
      const auto man = dataset::read_manifest(mfile);
      const fs::path run = make_run_dir(g, cfg.seed);
      write_text(run / "config.txt", config::to_text(cfg));
      const auto deg = cfg.degradation();
      const auto data = flow::encode_training_set(man, deg, cfg.arch.horizon);
      Rng init = Rng(cfg.seed).child(0);
      flow::VelocityModel model = flow::VelocityModel::initialized(cfg.arch, init);
      model.norm = flow::fit_latent_norm(data);
      double acc = 0.0;
      const auto result = flow::train(model, data, cfg.train, [&](std::size_t step, double loss) {
        acc += loss;
        if ((step + 1) % 1000 == 0) {
          std::fprintf(stderr, "step %zu mean loss %.4f\n", step + 1, acc / 1000.0);
          acc = 0.0;
        }
      });
      flow::save_checkpoint(run / "checkpoint", result.model, deg);
      write_text(run / "loss.csv", flow::loss_csv(result.loss));
      finish(run);
    } else if (*fc_cmd) {
      const flow::Checkpoint ck = flow::load_checkpoint(checkpoint);
      pipeline::ForecastRequest req;
      req.source = prompt.empty() ? parse_source(condition) : pipeline::ConditionSource::prompt;
      req.prompt = prompt;
      req.cfg_scale = cfg_scale.value_or(cfg.forecast.cfg_scale);
      req.ensemble_size = cfg.verify.ensemble_size;
      req.max_events = cfg.forecast_events;
      req.event = event;
      req.seed = cfg.seed;
      req.image_cap = images ? cfg.image_cap : 0.0;
      if (!prompt.empty()) cond::parse_description(prompt);  // reject bad prompts before creating the run
      if (!context_file.empty()) {
        std::vector<RadarField> frames;
        for (const auto& gr : read_grid_stack(context_file)) frames.push_back(RadarField(gr));
        const fs::path run = make_run_dir(g, cfg.seed);
        pipeline::forecast_context(ck, RadarSequence(frames), cfg.unfold, cfg.forecast.sampler_steps, req,
                                   run / "forecasts" / "context");
        finish(run);
      } else {
        const auto man = dataset::read_manifest(manifest_path(dataset, cfg));
        const fs::path run = make_run_dir(g, cfg.seed);
        write_text(run / "config.txt", config::to_text(cfg));
        const auto ids = pipeline::forecast_dataset(ck, man, cfg.unfold, cfg.forecast.sampler_steps, req, run / "forecasts");
        std::cerr << "forecast " << ids.size() << " events\n";
        finish(run);
      }
    } else if (*eval_cmd) {
      const fs::path mfile = manifest_path(dataset, cfg);
      const auto rep = verify::evaluate_run(forecasts, mfile, cfg.verify);
      const fs::path run = make_run_dir(g, cfg.seed);
      write_text(run / "report.csv", verify::report_csv(rep));
      write_text(run / "curves.csv", verify::curves_csv(rep));
      write_text(run / "report_meta.txt", verify::report_metadata(rep));
      finish(run);
    } else if (*wcub_cmd) {
      const auto rows = pipeline::wcub_benchmark(cfg);
      const fs::path run = make_run_dir(g, cfg.seed);
      write_text(run / "wcub.csv", pipeline::bench_csv(rows));
      std::cout << pipeline::bench_csv(rows);
      finish(run);
    } else if (*motion_cmd) {
      std::string lines;
      auto line = [&](const std::string& name, const motion::DominantDirection& d) {
        char buf[256];
        if (d.moving) {
          std::snprintf(buf, sizeof buf, "%s %.1f %.4f\n", name.c_str(), d.angle_deg, d.mean_magnitude);
        } else {
          std::snprintf(buf, sizeof buf, "%s no-motion 0\n", name.c_str());
        }
        lines += buf;
      };
      motion::DirectionSums total;
      for (const auto& f : sequences) {
        const auto sums = motion::sequence_direction_sums(read_grid_stack(f), cfg.motion);
        total += sums;
        line(fs::path(f).stem().string(), motion::summarize(sums));
      }
      if (pool) line("ensemble", motion::summarize(total));
      const fs::path run = make_run_dir(g, cfg.seed);
      write_text(run / "motion.txt", lines);
      std::cout << lines;
      finish(run);
    } else if (*sweep_cmd) {
      const fs::path mfile = manifest_path(dataset, cfg);
      const auto man = dataset::read_manifest(mfile);
      const flow::Checkpoint ck = flow::load_checkpoint(checkpoint);
      const auto source = parse_source(condition);
      if (source == pipeline::ConditionSource::null) throw ParameterError("cfg-sweep: the null row is always included");
      const fs::path run = make_run_dir(g, cfg.seed);
      write_text(run / "config.txt", config::to_text(cfg));
      const auto rows = pipeline::cfg_sweep(ck, man, mfile, cfg, source, run / "sweep");
      write_text(run / "cfg_sweep.csv", pipeline::sweep_csv(rows));
      std::cout << pipeline::sweep_csv(rows);
      finish(run);
    }
  } catch (const std::exception& e) {
    std::cerr << "rfcast_cli: error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
