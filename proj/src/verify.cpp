#include "rfcast/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "rfcast/dataset.hpp"
#include "rfcast/errors.hpp"
#include "rfcast/tensor_io.hpp"

namespace rfcast::verify {

ContingencyTable contingency(const Grid& pred, const Grid& obs, double threshold) {
  require_same_shape(pred, obs, "contingency");
  ContingencyTable t;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.values()[i] >= threshold;
    const bool o = obs.values()[i] >= threshold;
    if (p && o) ++t.tp;
    else if (p) ++t.fp;
    else if (o) ++t.fn;
    else ++t.tn;
  }
  return t;
}

Score csi_score(const Grid& pred, const Grid& obs, double threshold) {
  if (!(threshold > 0.0)) throw ParameterError("csi: threshold must be positive");
  const ContingencyTable t = contingency(pred, obs, threshold);
  const std::size_t denom = t.tp + t.fp + t.fn;
  if (denom == 0) return {1.0, true};
  return {static_cast<double>(t.tp) / static_cast<double>(denom), false};
}

double csi(const Grid& pred, const Grid& obs, double threshold) { return csi_score(pred, obs, threshold).value; }

namespace {

// n x n periodic box mean of a binary exceedance mask, via a summed-area
// pass along rows then columns.
Grid box_fraction(const Grid& g, double threshold, std::size_t n) {
  const long h = static_cast<long>(g.rows()), w = static_cast<long>(g.cols());
  const long r = static_cast<long>(n / 2);
  Grid rows(g.rows(), g.cols());
  for (long i = 0; i < h; ++i) {
    for (long j = 0; j < w; ++j) {
      double acc = 0.0;
      for (long d = -r; d <= r; ++d) acc += g.wrapped(i, j + d) >= threshold ? 1.0 : 0.0;
      rows(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = acc;
    }
  }
  Grid out(g.rows(), g.cols());
  const double inv = 1.0 / static_cast<double>(n * n);
  for (long i = 0; i < h; ++i) {
    for (long j = 0; j < w; ++j) {
      double acc = 0.0;
      for (long d = -r; d <= r; ++d) acc += rows.wrapped(i + d, j);
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = acc * inv;
    }
  }
  return out;
}

std::vector<double> gaussian_window_1d() {
  std::vector<double> w(11);
  double s = 0.0;
  for (int i = 0; i < 11; ++i) {
    const double d = i - 5;
    w[static_cast<std::size_t>(i)] = std::exp(-0.5 * d * d / (1.5 * 1.5));
    s += w[static_cast<std::size_t>(i)];
  }
  for (double& v : w) v /= s;
  return w;
}

// Separable periodic filtering with the normalised 11-tap window.
Grid gaussian_filter(const Grid& g, const std::vector<double>& w) {
  const long h = static_cast<long>(g.rows()), wd = static_cast<long>(g.cols());
  Grid tmp(g.rows(), g.cols()), out(g.rows(), g.cols());
  for (long i = 0; i < h; ++i) {
    for (long j = 0; j < wd; ++j) {
      double acc = 0.0;
      for (long d = -5; d <= 5; ++d) acc += w[static_cast<std::size_t>(d + 5)] * g.wrapped(i, j + d);
      tmp(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = acc;
    }
  }
  for (long i = 0; i < h; ++i) {
    for (long j = 0; j < wd; ++j) {
      double acc = 0.0;
      for (long d = -5; d <= 5; ++d) acc += w[static_cast<std::size_t>(d + 5)] * tmp.wrapped(i + d, j);
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = acc;
    }
  }
  return out;
}

}  // namespace

Score fss_score(const Grid& pred, const Grid& obs, double threshold, std::size_t neighborhood) {
  require_same_shape(pred, obs, "fss");
  if (neighborhood < 1 || neighborhood % 2 == 0) throw ParameterError("fss: neighborhood must be odd and >= 1");
  const Grid p = box_fraction(pred, threshold, neighborhood);
  const Grid o = box_fraction(obs, threshold, neighborhood);
  double mse = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = p.values()[i], b = o.values()[i];
    mse += (a - b) * (a - b);
    ref += a * a + b * b;
  }
  if (ref == 0.0) return {1.0, true};
  return {1.0 - mse / ref, false};
}

double fss(const Grid& pred, const Grid& obs, double threshold, std::size_t neighborhood) {
  return fss_score(pred, obs, threshold, neighborhood).value;
}

double crps(std::span<const Grid> ensemble, const Grid& obs) {
  if (ensemble.empty()) throw ParameterError("crps: empty ensemble");
  for (const auto& m : ensemble) require_same_shape(m, obs, "crps");
  const double M = static_cast<double>(ensemble.size());
  double total = 0.0;
  std::vector<double> x(ensemble.size());
  for (std::size_t p = 0; p < obs.size(); ++p) {
    for (std::size_t k = 0; k < ensemble.size(); ++k) x[k] = ensemble[k].values()[p];
    const double y = obs.values()[p];
    double skill = 0.0;
    for (double xi : x) skill += std::abs(xi - y);
    // Pairwise spread via the sorted form: sum_{i,j}|x_i - x_j| = 2 sum_k (2k - m + 1) x_(k).
    std::sort(x.begin(), x.end());
    double spread = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) spread += (2.0 * static_cast<double>(k) - M + 1.0) * x[k];
    spread *= 2.0;
    total += skill / M - spread / (2.0 * M * M);
  }
  return total / static_cast<double>(obs.size());
}

double ssim(const Grid& pred, const Grid& obs) {
  require_same_shape(pred, obs, "ssim");
  double L = std::max(max_value(pred), max_value(obs));
  if (!(L > 0.0)) L = 1.0;
  const double c1 = (0.01 * L) * (0.01 * L);
  const double c2 = (0.03 * L) * (0.03 * L);

  const auto w = gaussian_window_1d();
  Grid xx(pred.rows(), pred.cols()), yy(pred.rows(), pred.cols()), xy(pred.rows(), pred.cols());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double a = pred.values()[i], b = obs.values()[i];
    xx.values()[i] = a * a;
    yy.values()[i] = b * b;
    xy.values()[i] = a * b;
  }
  const Grid mx = gaussian_filter(pred, w), my = gaussian_filter(obs, w);
  const Grid sxx = gaussian_filter(xx, w), syy = gaussian_filter(yy, w), sxy = gaussian_filter(xy, w);

  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double ux = mx.values()[i], uy = my.values()[i];
    const double vx = sxx.values()[i] - ux * ux;
    const double vy = syy.values()[i] - uy * uy;
    const double cxy = sxy.values()[i] - ux * uy;
    acc += ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
  }
  return acc / static_cast<double>(pred.size());
}

double psnr(const Grid& pred, const Grid& obs, double peak) {
  require_same_shape(pred, obs, "psnr");
  if (!(peak > 0.0)) throw ParameterError("psnr: peak must be positive");
  double mse = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.values()[i] - obs.values()[i];
    mse += d * d;
  }
  mse /= static_cast<double>(pred.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

Grid ensemble_mean(std::span<const Grid> members) {
  if (members.empty()) throw ParameterError("ensemble_mean: empty ensemble");
  Grid out(members[0].rows(), members[0].cols());
  for (const auto& m : members) {
    require_same_shape(m, out, "ensemble_mean");
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += m.values()[i];
  }
  const double inv = 1.0 / static_cast<double>(members.size());
  for (double& v : out.values()) v *= inv;
  return out;
}

void VerifyConfig::validate() const {
  if (!(threshold_low > 0.0) || !(threshold_high > 0.0) || !(fss_threshold > 0.0)) {
    throw ParameterError("verify: thresholds must be positive");
  }
  if (neighborhood < 1 || neighborhood % 2 == 0) throw ParameterError("verify: neighborhood must be odd");
  if (ensemble_size < 1) throw ParameterError("verify: ensemble size must be >= 1");
  if (!(psnr_peak > 0.0)) throw ParameterError("verify: psnr peak must be positive");
}

VerificationReport evaluate(std::span<const EventForecast> events, const VerifyConfig& cfg, double cadence_minutes) {
  cfg.validate();
  if (events.empty()) throw ParameterError("evaluate: no events");
  const std::size_t horizon = events[0].truth.size();
  VerificationReport rep;
  rep.config = cfg;
  rep.n_events = events.size();
  rep.per_lead_time.assign(horizon, MetricRow{});
  for (std::size_t l = 0; l < horizon; ++l) rep.lead_minutes.push_back(cadence_minutes * static_cast<double>(l + 1));

  for (const auto& ev : events) {
    if (ev.truth.size() != horizon) throw ShapeError("evaluate: lead-time count differs between events");
    if (ev.members.size() < cfg.ensemble_size) throw ParameterError("evaluate: event has fewer members than ensemble size");
    for (std::size_t l = 0; l < horizon; ++l) {
      std::vector<Grid> members;
      for (std::size_t k = 0; k < cfg.ensemble_size; ++k) {
        if (ev.members[k].size() != horizon) throw ShapeError("evaluate: member lead-time count mismatch");
        members.push_back(ev.members[k][l]);
      }
      const Grid& obs = ev.truth[l];
      const Grid mean = ensemble_mean(members);
      const Score lo = csi_score(mean, obs, cfg.threshold_low);
      const Score hi = csi_score(mean, obs, cfg.threshold_high);
      const Score f = fss_score(mean, obs, cfg.fss_threshold, cfg.neighborhood);
      rep.degenerate_csi += static_cast<std::size_t>(lo.degenerate) + static_cast<std::size_t>(hi.degenerate);
      rep.degenerate_fss += static_cast<std::size_t>(f.degenerate);
      auto& row = rep.per_lead_time[l].values;
      row[0] += lo.value;
      row[1] += hi.value;
      row[2] += f.value;
      row[3] += crps(members, obs);
      row[4] += ssim(mean, obs);
      row[5] += psnr(mean, obs, cfg.psnr_peak);
    }
  }
  const double inv_events = 1.0 / static_cast<double>(events.size());
  for (auto& row : rep.per_lead_time) {
    for (double& v : row.values) v *= inv_events;
  }
  for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
    double acc = 0.0;
    for (const auto& row : rep.per_lead_time) acc += row.values[m];
    rep.aggregate.values[m] = acc / static_cast<double>(horizon);
  }
  return rep;
}

VerificationReport evaluate_run(const std::filesystem::path& forecast_dir,
                                const std::filesystem::path& manifest_file, const VerifyConfig& cfg) {
  namespace fs = std::filesystem;
  const dataset::Manifest manifest = dataset::read_manifest(manifest_file);
  std::map<std::size_t, const dataset::ManifestEntry*> by_index;
  for (const auto& e : manifest.entries) by_index[e.index] = &e;

  if (!fs::is_directory(forecast_dir)) throw IoError("forecast directory not found: " + forecast_dir.string());
  std::vector<std::size_t> ids;
  for (const auto& entry : fs::directory_iterator(forecast_dir)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (name.empty() || name.find_first_not_of("0123456789") != std::string::npos) continue;
    ids.push_back(std::stoul(name));
  }
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) throw FormatError("no event forecasts under " + forecast_dir.string());

  std::vector<EventForecast> events;
  for (std::size_t id : ids) {
    auto it = by_index.find(id);
    if (it == by_index.end()) throw FormatError("forecast event " + std::to_string(id) + " missing from dataset");
    const RadarSequence seq = dataset::load_event(manifest, *it->second);
    EventForecast ev;
    const std::size_t horizon = seq.size() - manifest.context_len;
    for (std::size_t l = 0; l < horizon; ++l) ev.truth.push_back(seq[manifest.context_len + l].grid());
    const fs::path dir = forecast_dir / std::to_string(id);
    for (std::size_t k = 0; k < cfg.ensemble_size; ++k) {
      const fs::path f = dir / ("member_" + std::to_string(k) + ".rft");
      if (!fs::exists(f)) throw FormatError("missing ensemble member " + f.string());
      auto frames = read_grid_stack(f);
      if (frames.size() != horizon) throw ShapeError("forecast " + f.string() + " has wrong lead-time count");
      for (const auto& g : frames) require_same_shape(g, ev.truth[0], "evaluate_run");
      ev.members.push_back(std::move(frames));
    }
    events.push_back(std::move(ev));
  }
  VerifyConfig c = cfg;
  if (c.dataset_id == "synthetic") c.dataset_id = manifest_file.parent_path().filename().string();
  return evaluate(events, c, manifest.cadence_minutes);
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string report_csv(const VerificationReport& r) {
  std::ostringstream os;
  os << "lead_minutes";
  for (const char* m : kMetricNames) os << ',' << m;
  os << '\n';
  for (std::size_t l = 0; l < r.per_lead_time.size(); ++l) {
    os << format_number(r.lead_minutes[l]);
    for (double v : r.per_lead_time[l].values) os << ',' << format_number(v);
    os << '\n';
  }
  os << "aggregate";
  for (double v : r.aggregate.values) os << ',' << format_number(v);
  os << '\n';
  return os.str();
}

std::string report_metadata(const VerificationReport& r) {
  std::ostringstream os;
  os << "dataset = " << r.config.dataset_id << '\n'
     << "events = " << r.n_events << '\n'
     << "threshold_low = " << format_number(r.config.threshold_low) << '\n'
     << "threshold_high = " << format_number(r.config.threshold_high) << '\n'
     << "fss_threshold = " << format_number(r.config.fss_threshold) << '\n'
     << "neighborhood = " << r.config.neighborhood << '\n'
     << "ensemble_size = " << r.config.ensemble_size << '\n'
     << "psnr_peak = " << format_number(r.config.psnr_peak) << '\n'
     << "threshold_metrics_graded_on = ensemble_mean\n"
     << "csi = tp/(tp+fp+fn), 1 when tp+fp+fn = 0\n"
     << "fss = 1 - mean((P-O)^2)/(mean(P^2)+mean(O^2)), periodic box, 1 when denominator = 0\n"
     << "crps = empirical ensemble estimator with 1/(2m^2) pairwise term\n"
     << "ssim = single-scale, 11x11 gaussian window sigma 1.5, periodic, L = max of both fields\n"
     << "degenerate_csi_cases = " << r.degenerate_csi << '\n'
     << "degenerate_fss_cases = " << r.degenerate_fss << '\n';
  return os.str();
}

std::string curves_csv(const VerificationReport& r) {
  std::ostringstream os;
  os << "metric,lead_minutes,value\n";
  for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
    for (std::size_t l = 0; l < r.per_lead_time.size(); ++l) {
      os << kMetricNames[m] << ',' << format_number(r.lead_minutes[l]) << ','
         << format_number(r.per_lead_time[l].values[m]) << '\n';
    }
  }
  return os.str();
}

}  // namespace rfcast::verify
