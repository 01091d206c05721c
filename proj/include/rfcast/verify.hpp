#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rfcast/grid.hpp"

namespace rfcast::verify {

/// Exceedance is value >= threshold.
struct ContingencyTable {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t total() const noexcept { return tp + fp + fn + tn; }
};

/// A score plus whether a zero-denominator convention produced it.
struct Score {
  double value = 0.0;
  bool degenerate = false;
};

ContingencyTable contingency(const Grid& pred, const Grid& obs, double threshold);

/// tp / (tp + fp + fn); 1 when nothing is forecast or observed.
Score csi_score(const Grid& pred, const Grid& obs, double threshold);
double csi(const Grid& pred, const Grid& obs, double threshold);

/// Fractions skill score with an n x n periodic box neighbourhood (n odd).
Score fss_score(const Grid& pred, const Grid& obs, double threshold, std::size_t neighborhood);
double fss(const Grid& pred, const Grid& obs, double threshold, std::size_t neighborhood);

/// Empirical-ensemble CRPS, pixel mean:
/// (1/m) sum |x_i - y| - (1/(2 m^2)) sum_i sum_j |x_i - x_j|.
double crps(std::span<const Grid> ensemble, const Grid& obs);

/// Mean local SSIM, 11x11 Gaussian window (sigma 1.5) with periodic wrap,
/// C1 = (0.01 L)^2, C2 = (0.03 L)^2, L = max over both fields (1 if <= 0).
double ssim(const Grid& pred, const Grid& obs);

/// 10 log10(peak^2 / MSE); +infinity when MSE is zero.
double psnr(const Grid& pred, const Grid& obs, double peak);

Grid ensemble_mean(std::span<const Grid> members);

struct VerifyConfig {
  double threshold_low = 1.0;
  double threshold_high = 8.0;
  double fss_threshold = 1.0;
  std::size_t neighborhood = 9;
  std::size_t ensemble_size = 4;
  double psnr_peak = 20.0;
  std::string dataset_id = "synthetic";

  void validate() const;
};

inline constexpr std::array<const char*, 6> kMetricNames = {"csi_low", "csi_high", "fss", "crps", "ssim", "psnr"};

struct MetricRow {
  std::array<double, 6> values{};  ///< order of kMetricNames
};

struct VerificationReport {
  std::vector<double> lead_minutes;
  std::vector<MetricRow> per_lead_time;
  MetricRow aggregate;  ///< arithmetic mean over lead times
  std::size_t n_events = 0;
  std::size_t degenerate_csi = 0;
  std::size_t degenerate_fss = 0;
  VerifyConfig config;
};

/// One event's forecast: members[k][lead] and truth[lead].
struct EventForecast {
  std::vector<std::vector<Grid>> members;
  std::vector<Grid> truth;
};

/// CRPS over the ensemble; CSI, FSS, SSIM and PSNR on the ensemble mean.
/// Per-lead values are event means; the aggregate is the mean over leads.
VerificationReport evaluate(std::span<const EventForecast> events, const VerifyConfig& cfg,
                            double cadence_minutes = 5.0);

/// Reads `forecast_dir/<event index>/member_<k>.rft` ([horizon, H, W]) for
/// every event directory present and grades against the dataset truth.
VerificationReport evaluate_run(const std::filesystem::path& forecast_dir,
                                const std::filesystem::path& manifest_file, const VerifyConfig& cfg);

/// Header, one row per lead time, final "aggregate" row.
std::string report_csv(const VerificationReport& r);
std::string report_metadata(const VerificationReport& r);
/// Long-format curve data: metric,lead_minutes,value.
std::string curves_csv(const VerificationReport& r);

/// Deterministic number formatting used in every CSV ("inf" for +infinity).
std::string format_number(double v);

}  // namespace rfcast::verify
