#pragma once

// Multi-module workflows shared by the command-line tool and the acceptance
// checks.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rfcast/config.hpp"
#include "rfcast/rectflow.hpp"
#include "rfcast/verify.hpp"

namespace rfcast::pipeline {

// --- reconstruction benchmark ---------------------------------------------------

struct BenchRow {
  std::string method;
  std::vector<double> psnr, ssim;  ///< per field
  double mean_psnr = 0.0, mean_ssim = 0.0;
};

/// Frame 0 of `cfg.wcub_fields` synthetic events (child stream i of the seed),
/// degraded with the configured operator plus noise, then reconstructed by
/// bilinear upsampling, the unfolding decoder with T = 0 and the configured
/// decoder. PSNR uses verify.psnr_peak.
std::vector<BenchRow> wcub_benchmark(const config::RunConfig& cfg);
std::string bench_csv(const std::vector<BenchRow>& rows);

// --- forecasting -------------------------------------------------------------------

enum class ConditionSource {
  context,   ///< inferred from the four observed frames (causal default)
  manifest,  ///< the dataset description text
  prompt,    ///< one description for every event
  null,      ///< the unconditional token
};

struct ForecastRequest {
  ConditionSource source = ConditionSource::context;
  std::string prompt;
  double cfg_scale = 1.0;
  std::size_t ensemble_size = 4;
  std::size_t max_events = 0;  ///< 0 = every test event
  std::optional<std::size_t> event;  ///< a single event index
  std::uint64_t seed = 0;
  double image_cap = 0.0;  ///< > 0 writes PGM dumps
};

/// Member k of event i is sampled from Rng(seed).child(i).child(k) and written
/// to `out_dir/<i>/member_<k>.rft` ([horizon, H, W]). Returns the event ids.
std::vector<std::size_t> forecast_dataset(const flow::Checkpoint& ck, const dataset::Manifest& manifest,
                                          const codec::UnfoldConfig& unfold, std::size_t sampler_steps,
                                          const ForecastRequest& req, const std::filesystem::path& out_dir);

/// Same streams as forecast_dataset, for an explicit context stack.
void forecast_context(const flow::Checkpoint& ck, const RadarSequence& context, const codec::UnfoldConfig& unfold,
                      std::size_t sampler_steps, const ForecastRequest& req, const std::filesystem::path& out_dir);

/// 8-bit binary PGM; value = round(255 log(1 + min(x, cap)) / log(1 + cap)).
std::string pgm_bytes(const Grid& g, double cap);

// --- guidance sweep ---------------------------------------------------------------

struct SweepRow {
  std::string label;  ///< the scale as text, or "null"
  verify::VerificationReport report;
};

/// One evaluation per scale plus a final null-condition row. Forecasts are
/// kept under `work_dir/<label>/`.
std::vector<SweepRow> cfg_sweep(const flow::Checkpoint& ck, const dataset::Manifest& manifest,
                                const std::filesystem::path& manifest_file, const config::RunConfig& cfg,
                                ConditionSource source, const std::filesystem::path& work_dir);
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace rfcast::pipeline
