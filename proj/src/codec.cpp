#include "rfcast/codec.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "rfcast/errors.hpp"
#include "rfcast/verify.hpp"

namespace rfcast::codec {

using synth::DegradationParams;

// --- Haar wavelet -------------------------------------------------------------

std::size_t WaveletCoeffs::coefficient_count() const {
  std::size_t n = approx.size();
  for (const auto& d : details) n += d.lh.size() + d.hl.size() + d.hh.size();
  return n;
}

double WaveletCoeffs::energy() const {
  double e = 0.0;
  auto acc = [&e](const Grid& g) {
    for (double v : g.values()) e += v * v;
  };
  acc(approx);
  for (const auto& d : details) {
    acc(d.lh);
    acc(d.hl);
    acc(d.hh);
  }
  return e;
}

WaveletCoeffs dwt2(const Grid& x, std::size_t levels) {
  if (!is_power_of_two(x.rows()) || !is_power_of_two(x.cols())) {
    throw ShapeError("dwt2: non-dyadic input " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  }
  if (levels < 1 || (std::min(x.rows(), x.cols()) >> levels) == 0) {
    throw ShapeError("dwt2: " + std::to_string(levels) + " levels exceed log2 of the smaller side");
  }
  WaveletCoeffs out;
  out.levels = levels;
  Grid cur = x;
  for (std::size_t l = 0; l < levels; ++l) {
    const std::size_t h = cur.rows() / 2, w = cur.cols() / 2;
    Grid ll(h, w);
    DetailBands d{Grid(h, w), Grid(h, w), Grid(h, w)};
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const double a = cur(2 * i, 2 * j), b = cur(2 * i, 2 * j + 1);
        const double c = cur(2 * i + 1, 2 * j), e = cur(2 * i + 1, 2 * j + 1);
        ll(i, j) = 0.5 * (a + b + c + e);
        d.hl(i, j) = 0.5 * (a - b + c - e);
        d.lh(i, j) = 0.5 * (a + b - c - e);
        d.hh(i, j) = 0.5 * (a - b - c + e);
      }
    }
    out.details.push_back(std::move(d));
    cur = std::move(ll);
  }
  out.approx = std::move(cur);
  return out;
}

Grid idwt2(const WaveletCoeffs& c) {
  if (c.details.size() != c.levels) throw ShapeError("idwt2: detail level count mismatch");
  Grid cur = c.approx;
  for (std::size_t l = c.levels; l-- > 0;) {
    const DetailBands& d = c.details[l];
    require_same_shape(cur, d.lh, "idwt2");
    require_same_shape(cur, d.hl, "idwt2");
    require_same_shape(cur, d.hh, "idwt2");
    Grid up(cur.rows() * 2, cur.cols() * 2);
    for (std::size_t i = 0; i < cur.rows(); ++i) {
      for (std::size_t j = 0; j < cur.cols(); ++j) {
        const double ll = cur(i, j), hl = d.hl(i, j), lh = d.lh(i, j), hh = d.hh(i, j);
        up(2 * i, 2 * j) = 0.5 * (ll + hl + lh + hh);
        up(2 * i, 2 * j + 1) = 0.5 * (ll - hl + lh - hh);
        up(2 * i + 1, 2 * j) = 0.5 * (ll + hl - lh - hh);
        up(2 * i + 1, 2 * j + 1) = 0.5 * (ll - hl - lh + hh);
      }
    }
    cur = std::move(up);
  }
  return cur;
}

WaveletCoeffs soft_shrink(WaveletCoeffs c, double lambda) {
  if (!(lambda >= 0.0)) throw ParameterError("soft_shrink: lambda must be >= 0");
  if (lambda == 0.0) return c;
  auto shrink = [lambda](Grid& g) {
    for (double& w : g.values()) {
      const double m = std::abs(w) - lambda;
      w = m > 0.0 ? std::copysign(m, w) : 0.0;
    }
  };
  for (auto& d : c.details) {
    shrink(d.lh);
    shrink(d.hl);
    shrink(d.hh);
  }
  return c;
}

// --- encoder --------------------------------------------------------------------

Grid encode(const Grid& x, const DegradationParams& p) { return synth::degrade_noiseless(x, p); }

Grid encode(const RadarField& x, const DegradationParams& p) { return encode(x.grid(), p); }

LatentSequence encode_sequence(const RadarSequence& seq, const DegradationParams& p) {
  LatentSequence out;
  out.scale = p.scale;
  out.frames.reserve(seq.size());
  for (const auto& f : seq.frames()) out.frames.push_back(encode(f, p));
  return out;
}

double operator_norm_sq(const DegradationParams& p, std::size_t rows, std::size_t cols, int iters,
                        std::uint64_t seed) {
  Rng rng(seed);
  Grid v = gaussian_sample(rng, rows, cols);
  double lambda = 0.0;
  for (int k = 0; k < iters; ++k) {
    const double n = std::sqrt(dot(v, v));
    if (n == 0.0) return 0.0;
    for (double& e : v.values()) e /= n;
    Grid w = synth::degrade_adjoint(synth::degrade_noiseless(v, p), p);
    lambda = dot(v, w);  // Rayleigh quotient with unit v
    v = std::move(w);
  }
  return lambda;
}

// --- unfolding decoder -----------------------------------------------------------

StageParams UnfoldConfig::stage(std::size_t t) const {
  if (!per_stage.empty()) return per_stage.at(t);
  return {eta, lambda};
}

void UnfoldConfig::validate() const {
  degradation.validate();
  if (!(eta >= 0.0) || !(lambda >= 0.0)) throw ParameterError("wcub: eta and lambda must be >= 0");
  if (!(fusion_weight >= 0.0 && fusion_weight <= 1.0)) throw ParameterError("wcub: fusion_weight must lie in [0, 1]");
  if (wavelet_levels < 1) throw ParameterError("wcub: wavelet levels must be >= 1");
  if (!per_stage.empty() && per_stage.size() != stages) {
    throw ParameterError("wcub: per-stage override count must equal stage count");
  }
  for (const auto& s : per_stage) {
    if (!(s.eta >= 0.0) || !(s.lambda >= 0.0)) throw ParameterError("wcub: stage parameters must be >= 0");
  }
}

Grid dc_step(const Grid& x, const Grid& y, const DegradationParams& p, double eta) {
  Grid residual = synth::degrade_noiseless(x, p);
  require_same_shape(residual, y, "dc_step");
  for (std::size_t i = 0; i < residual.size(); ++i) residual.values()[i] = y.values()[i] - residual.values()[i];
  const Grid back = synth::degrade_adjoint(residual, p);
  Grid out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += 2.0 * eta * back.values()[i];
  return out;
}

Grid dc_step(const Grid& x, const Grid& y, const UnfoldConfig& cfg) {
  return dc_step(x, y, cfg.degradation, cfg.eta);
}

Grid wavelet_prior(const Grid& z, std::size_t levels, double lambda, bool shift_invariant) {
  if (lambda == 0.0) return z;
  if (!shift_invariant) return idwt2(soft_shrink(dwt2(z, levels), lambda));
  // Average over the 2^L x 2^L circular shifts of the Haar grid.
  const long n = 1L << levels;
  Grid acc(z.rows(), z.cols());
  for (long a = 0; a < n; ++a) {
    for (long b = 0; b < n; ++b) {
      const Grid r = shift_periodic(idwt2(soft_shrink(dwt2(shift_periodic(z, -a, -b), levels), lambda)), a, b);
      for (std::size_t i = 0; i < acc.size(); ++i) acc.values()[i] += r.values()[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(n * n);
  for (double& v : acc.values()) v *= inv;
  return acc;
}

Grid wcub_stage(const Grid& x, const Grid& y, const UnfoldConfig& cfg, StageParams params) {
  return wavelet_prior(dc_step(x, y, cfg.degradation, params.eta), cfg.wavelet_levels, params.lambda,
                       cfg.shift_invariant);
}

Grid wcub_stage(const Grid& x, const Grid& y, const UnfoldConfig& cfg) {
  return wcub_stage(x, y, cfg, StageParams{cfg.eta, cfg.lambda});
}

Grid bilinear_upsample(const Grid& y, std::size_t scale) {
  if (y.empty()) throw ShapeError("bilinear_upsample: empty latent");
  if (scale < 1) throw ParameterError("bilinear_upsample: scale must be >= 1");
  const std::size_t rows = y.rows() * scale, cols = y.cols() * scale;
  const double s = static_cast<double>(scale);
  Grid x(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const long i0 = static_cast<long>(r / scale);
    const double fr = static_cast<double>(r % scale) / s;
    for (std::size_t c = 0; c < cols; ++c) {
      const long j0 = static_cast<long>(c / scale);
      const double fc = static_cast<double>(c % scale) / s;
      x(r, c) = (1 - fr) * ((1 - fc) * y.wrapped(i0, j0) + fc * y.wrapped(i0, j0 + 1)) +
                fr * ((1 - fc) * y.wrapped(i0 + 1, j0) + fc * y.wrapped(i0 + 1, j0 + 1));
    }
  }
  return x;
}

Grid wcub_refine(const Grid& y, const UnfoldConfig& cfg) {
  cfg.validate();
  Grid x = bilinear_upsample(y, cfg.degradation.scale);
  for (std::size_t t = 0; t < cfg.stages; ++t) x = wcub_stage(x, y, cfg, cfg.stage(t));
  return x;
}

RadarField wcub_decode(const Grid& y, const UnfoldConfig& cfg) {
  cfg.validate();
  const Grid base = bilinear_upsample(y, cfg.degradation.scale);
  if (cfg.fusion_weight == 0.0) return RadarField::clamped(base);
  const Grid refined = wcub_refine(y, cfg);
  Grid out(base.rows(), base.cols());
  const double w = cfg.fusion_weight;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values()[i] = w * refined.values()[i] + (1.0 - w) * base.values()[i];
  }
  return RadarField::clamped(std::move(out));
}

RadarSequence decode_sequence(std::span<const Grid> latents, const UnfoldConfig& cfg) {
  std::vector<RadarField> frames;
  frames.reserve(latents.size());
  for (const auto& y : latents) frames.push_back(wcub_decode(y, cfg));
  return RadarSequence(std::move(frames));
}

GridSearchResult grid_search_unfold(std::span<const Grid> truth, std::span<const Grid> latents,
                                    const UnfoldConfig& base, std::span<const double> etas,
                                    std::span<const double> lambdas, std::span<const std::size_t> stages) {
  if (truth.size() != latents.size() || truth.empty()) throw ParameterError("grid search: need matching nonempty sets");
  GridSearchResult result;
  result.best = base;
  result.best_psnr = -std::numeric_limits<double>::infinity();
  for (std::size_t T : stages) {
    for (double eta : etas) {
      for (double lambda : lambdas) {
        UnfoldConfig cfg = base;
        cfg.stages = T;
        cfg.eta = eta;
        cfg.lambda = lambda;
        cfg.per_stage.clear();
        double acc = 0.0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
          const RadarField out = wcub_decode(latents[i], cfg);
          acc += verify::psnr(out.grid(), truth[i], std::max(max_value(truth[i]), 1e-12));
        }
        acc /= static_cast<double>(truth.size());
        if (acc > result.best_psnr) {
          result.best_psnr = acc;
          result.best = cfg;
        }
      }
    }
  }
  return result;
}

// --- temporal shift --------------------------------------------------------------

std::vector<FeatureFrame> time_shift(const std::vector<FeatureFrame>& seq, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 0.5)) throw ParameterError("time_shift: fraction must lie in [0, 0.5]");
  if (seq.empty()) return {};
  const std::size_t channels = seq.front().channels.size();
  for (const auto& f : seq) {
    if (f.channels.size() != channels) throw ShapeError("time_shift: channel count differs between frames");
  }
  const auto n = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(channels)));
  std::vector<FeatureFrame> out = seq;
  const std::size_t T = seq.size();
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < n; ++c) {
      const Grid& src = seq[t].channels[c];
      out[t].channels[c] = t > 0 ? seq[t - 1].channels[c] : Grid(src.rows(), src.cols());
    }
    for (std::size_t c = n; c < 2 * n; ++c) {
      const Grid& src = seq[t].channels[c];
      out[t].channels[c] = t + 1 < T ? seq[t + 1].channels[c] : Grid(src.rows(), src.cols());
    }
  }
  return out;
}

}  // namespace rfcast::codec
