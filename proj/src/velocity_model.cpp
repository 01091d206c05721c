#include "rfcast/velocity_model.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "rfcast/errors.hpp"

namespace rfcast::flow {

namespace {

constexpr std::uint64_t kArchEntries = 12;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using CMapVec = Eigen::Map<const Eigen::VectorXd>;
using MapVec = Eigen::Map<Eigen::VectorXd>;

// col[(ci * 9 + k) * P + p] = in[ci][wrap(y + d dy)][wrap(x + d dx)], k = (dy+1)*3 + (dx+1).
void im2col(std::span<const double> in, std::size_t channels, std::size_t rows, std::size_t cols, long d,
            std::vector<double>& col) {
  const std::size_t P = rows * cols;
  col.resize(channels * 9 * P);
  for (std::size_t ci = 0; ci < channels; ++ci) {
    const double* src = in.data() + ci * P;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        double* dst = col.data() + (ci * 9 + static_cast<std::size_t>((dy + 1) * 3 + dx + 1)) * P;
        for (std::size_t y = 0; y < rows; ++y) {
          const std::size_t sy = static_cast<std::size_t>(wrap_index(static_cast<long>(y) + d * dy, static_cast<long>(rows)));
          const double* srow = src + sy * cols;
          double* drow = dst + y * cols;
          for (std::size_t x = 0; x < cols; ++x) {
            drow[x] = srow[static_cast<std::size_t>(wrap_index(static_cast<long>(x) + d * dx, static_cast<long>(cols)))];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add columns back onto the channel grid.
void col2im(const std::vector<double>& col, std::size_t channels, std::size_t rows, std::size_t cols, long d,
            std::vector<double>& out) {
  const std::size_t P = rows * cols;
  out.assign(channels * P, 0.0);
  for (std::size_t ci = 0; ci < channels; ++ci) {
    double* dst = out.data() + ci * P;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const double* src = col.data() + (ci * 9 + static_cast<std::size_t>((dy + 1) * 3 + dx + 1)) * P;
        for (std::size_t y = 0; y < rows; ++y) {
          const std::size_t sy = static_cast<std::size_t>(wrap_index(static_cast<long>(y) + d * dy, static_cast<long>(rows)));
          for (std::size_t x = 0; x < cols; ++x) {
            dst[sy * cols + static_cast<std::size_t>(wrap_index(static_cast<long>(x) + d * dx, static_cast<long>(cols)))] +=
                src[y * cols + x];
          }
        }
      }
    }
  }
}

double sigmoid(double h) { return 1.0 / (1.0 + std::exp(-h)); }

struct HiddenParams {
  std::span<const double> weight, bias, time, scale_w, scale_b, shift_w, shift_b;
};

HiddenParams hidden_params(const VelocityModel& m, int layer) {
  const std::string p = std::to_string(layer);
  return {m.parameter("conv" + p + ".weight"),       m.parameter("conv" + p + ".bias"),
          m.parameter("time" + p + ".weight"),       m.parameter("film" + p + ".scale.weight"),
          m.parameter("film" + p + ".scale.bias"),   m.parameter("film" + p + ".shift.weight"),
          m.parameter("film" + p + ".shift.bias")};
}

// pre = W col + b + Wt temb;  h = pre * gamma + beta;  returns SiLU(h).
std::vector<double> hidden_forward(const HiddenParams& hp, std::size_t c_out, std::size_t c_in, std::size_t P,
                                   const std::vector<double>& col, std::span<const double> temb,
                                   std::span<const double> cond, std::vector<double>& pre, std::vector<double>& h,
                                   std::vector<double>& gamma) {
  pre.resize(c_out * P);
  MapMat(pre.data(), static_cast<long>(c_out), static_cast<long>(P)).noalias() =
      CMapMat(hp.weight.data(), static_cast<long>(c_out), static_cast<long>(c_in * 9)) *
      CMapMat(col.data(), static_cast<long>(c_in * 9), static_cast<long>(P));
  const Eigen::VectorXd bias =
      CMapVec(hp.bias.data(), static_cast<long>(c_out)) +
      CMapMat(hp.time.data(), static_cast<long>(c_out), static_cast<long>(temb.size())) *
          CMapVec(temb.data(), static_cast<long>(temb.size()));
  const long cd = static_cast<long>(cond.size());
  const Eigen::VectorXd g = Eigen::VectorXd::Ones(static_cast<long>(c_out)) +
                            CMapMat(hp.scale_w.data(), static_cast<long>(c_out), cd) * CMapVec(cond.data(), cd) +
                            CMapVec(hp.scale_b.data(), static_cast<long>(c_out));
  const Eigen::VectorXd beta = CMapMat(hp.shift_w.data(), static_cast<long>(c_out), cd) * CMapVec(cond.data(), cd) +
                               CMapVec(hp.shift_b.data(), static_cast<long>(c_out));
  gamma.assign(g.data(), g.data() + c_out);
  h.resize(c_out * P);
  std::vector<double> a(c_out * P);
  for (std::size_t c = 0; c < c_out; ++c) {
    for (std::size_t p = 0; p < P; ++p) {
      const std::size_t i = c * P + p;
      pre[i] += bias[static_cast<long>(c)];
      h[i] = pre[i] * gamma[c] + beta[static_cast<long>(c)];
      a[i] = h[i] * sigmoid(h[i]);
    }
  }
  return a;
}

}  // namespace

void ModelArch::validate() const {
  if (horizon < 1 || rows < 1 || cols < 1 || hidden1 < 1 || hidden2 < 1 || time_dim < 2 || time_dim % 2 != 0) {
    throw ParameterError("model architecture: sizes must be positive and time_dim even");
  }
  if (cond_dim != cond::kConditionDim) throw ParameterError("model architecture: cond_dim must be 16");
  if (spatial_context > context_len) throw ParameterError("model architecture: spatial_context exceeds context_len");
  for (std::size_t d : dilations) {
    if (d < 1 || (d > 1 && d >= std::min(rows, cols))) throw ParameterError("model architecture: dilation out of range");
  }
}

VelocityModel::VelocityModel(ModelArch arch) : arch_(arch) {
  arch_.validate();
  auto add = [this](std::string name, std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    layout_.push_back(ParamInfo{std::move(name), std::move(shape), params_.size(), n});
    params_.resize(params_.size() + n, 0.0);
  };
  const std::size_t ins[2] = {arch_.in_channels(), arch_.hidden1};
  const std::size_t outs[2] = {arch_.hidden1, arch_.hidden2};
  for (int l = 0; l < 2; ++l) {
    const std::string p = std::to_string(l + 1);
    add("conv" + p + ".weight", {outs[l], ins[l], 3, 3});
    add("conv" + p + ".bias", {outs[l]});
    add("time" + p + ".weight", {outs[l], arch_.time_dim});
    add("film" + p + ".scale.weight", {outs[l], arch_.cond_dim});
    add("film" + p + ".scale.bias", {outs[l]});
    add("film" + p + ".shift.weight", {outs[l], arch_.cond_dim});
    add("film" + p + ".shift.bias", {outs[l]});
  }
  add("conv3.weight", {arch_.horizon, arch_.hidden2, 3, 3});
  add("conv3.bias", {arch_.horizon});
}

VelocityModel VelocityModel::initialized(ModelArch arch, Rng& rng) {
  VelocityModel m(arch);
  auto fill = [&](const std::string& name, double bound) {
    for (double& v : m.parameter(name)) v = rng.uniform(-bound, bound);
  };
  fill("conv1.weight", 1.0 / std::sqrt(9.0 * static_cast<double>(arch.in_channels())));
  fill("conv2.weight", 1.0 / std::sqrt(9.0 * static_cast<double>(arch.hidden1)));
  fill("time1.weight", 1.0 / std::sqrt(static_cast<double>(arch.time_dim)));
  fill("time2.weight", 1.0 / std::sqrt(static_cast<double>(arch.time_dim)));
  return m;
}

const ParamInfo& VelocityModel::param(const std::string& name) const {
  for (const auto& p : layout_) {
    if (p.name == name) return p;
  }
  throw ParameterError("unknown parameter '" + name + "'");
}

std::span<double> VelocityModel::parameter(const std::string& name) {
  const ParamInfo& p = param(name);
  return std::span<double>(params_).subspan(p.offset, p.size);
}

std::span<const double> VelocityModel::parameter(const std::string& name) const {
  const ParamInfo& p = param(name);
  return std::span<const double>(params_).subspan(p.offset, p.size);
}

std::vector<double> time_embedding(double t, std::size_t dim) {
  std::vector<double> e(dim);
  for (std::size_t k = 0; k < dim / 2; ++k) {
    const double w = std::numbers::pi * static_cast<double>(1u << k);
    e[2 * k] = std::sin(w * t);
    e[2 * k + 1] = std::cos(w * t);
  }
  return e;
}

std::vector<double> model_forward(const VelocityModel& m, std::span<const double> x, std::span<const double> context,
                                  const cond::ConditionVector& c, double t, ForwardCache* cache) {
  const ModelArch& a = m.arch();
  if (x.size() != a.state_size()) throw ShapeError("model_forward: state has wrong size");
  if (context.size() != a.context_size()) throw ShapeError("model_forward: context has wrong size");
  for (double p : m.parameters()) {
    if (!std::isfinite(p)) throw NumericError("model_forward: non-finite parameter");
  }
  const std::size_t P = a.pixels();

  ForwardCache local;
  ForwardCache& fc = cache ? *cache : local;
  fc.cond = c.values;
  fc.temb = time_embedding(t, a.time_dim);

  std::vector<double> input(a.in_channels() * P);
  std::copy(x.begin(), x.end(), input.begin());
  // Only the most recent spatial_context frames enter as channels.
  const std::size_t skip = (a.context_len - a.spatial_context) * P;
  std::copy(context.begin() + static_cast<long>(skip), context.end(), input.begin() + static_cast<long>(x.size()));

  im2col(input, a.in_channels(), a.rows, a.cols, a.dilation(1), fc.col1);
  const auto a1 = hidden_forward(hidden_params(m, 1), a.hidden1, a.in_channels(), P, fc.col1, fc.temb, fc.cond,
                                 fc.pre1, fc.h1, fc.gamma1);
  im2col(a1, a.hidden1, a.rows, a.cols, a.dilation(2), fc.col2);
  const auto a2 = hidden_forward(hidden_params(m, 2), a.hidden2, a.hidden1, P, fc.col2, fc.temb, fc.cond, fc.pre2,
                                 fc.h2, fc.gamma2);
  im2col(a2, a.hidden2, a.rows, a.cols, a.dilation(3), fc.col3);

  std::vector<double> out(a.horizon * P);
  MapMat(out.data(), static_cast<long>(a.horizon), static_cast<long>(P)).noalias() =
      CMapMat(m.parameter("conv3.weight").data(), static_cast<long>(a.horizon), static_cast<long>(a.hidden2 * 9)) *
      CMapMat(fc.col3.data(), static_cast<long>(a.hidden2 * 9), static_cast<long>(P));
  const auto b3 = m.parameter("conv3.bias");
  for (std::size_t ch = 0; ch < a.horizon; ++ch) {
    for (std::size_t p = 0; p < P; ++p) out[ch * P + p] += b3[ch];
  }
  return out;
}

std::vector<double> model_backward(const VelocityModel& m, const ForwardCache& fc, std::span<const double> upstream) {
  const ModelArch& a = m.arch();
  if (upstream.size() != a.state_size()) throw ShapeError("model_backward: upstream gradient has wrong size");
  const std::size_t P = a.pixels();
  const long lP = static_cast<long>(P);
  std::vector<double> grad(m.parameters().size(), 0.0);
  auto gslice = [&](const std::string& name) {
    const ParamInfo& p = m.param(name);
    return std::span<double>(grad).subspan(p.offset, p.size);
  };

  // Output layer.
  const CMapMat G(upstream.data(), static_cast<long>(a.horizon), lP);
  MapMat(gslice("conv3.weight").data(), static_cast<long>(a.horizon), static_cast<long>(a.hidden2 * 9)).noalias() =
      G * CMapMat(fc.col3.data(), static_cast<long>(a.hidden2 * 9), lP).transpose();
  MapVec(gslice("conv3.bias").data(), static_cast<long>(a.horizon)) = G.rowwise().sum();
  std::vector<double> dcol =
      std::vector<double>(a.hidden2 * 9 * P);
  MapMat(dcol.data(), static_cast<long>(a.hidden2 * 9), lP).noalias() =
      CMapMat(m.parameter("conv3.weight").data(), static_cast<long>(a.horizon), static_cast<long>(a.hidden2 * 9))
          .transpose() *
      G;
  std::vector<double> da;
  col2im(dcol, a.hidden2, a.rows, a.cols, a.dilation(3), da);

  // Hidden layers, top-down.
  const std::size_t c_outs[2] = {a.hidden1, a.hidden2};
  const std::size_t c_ins[2] = {a.in_channels(), a.hidden1};
  const std::vector<double>* pres[2] = {&fc.pre1, &fc.pre2};
  const std::vector<double>* hs[2] = {&fc.h1, &fc.h2};
  const std::vector<double>* gammas[2] = {&fc.gamma1, &fc.gamma2};
  const std::vector<double>* cols[2] = {&fc.col1, &fc.col2};
  const long cd = static_cast<long>(a.cond_dim);
  const long td = static_cast<long>(a.time_dim);
  const CMapVec cvec(fc.cond.data(), cd);
  const CMapVec tvec(fc.temb.data(), td);

  for (int l = 1; l >= 0; --l) {
    const std::string p = std::to_string(l + 1);
    const std::size_t c_out = c_outs[l], c_in = c_ins[l];
    const auto& pre = *pres[l];
    const auto& h = *hs[l];
    const auto& gamma = *gammas[l];

    std::vector<double> dpre(c_out * P);
    Eigen::VectorXd dbeta = Eigen::VectorXd::Zero(static_cast<long>(c_out));
    Eigen::VectorXd dgamma = Eigen::VectorXd::Zero(static_cast<long>(c_out));
    for (std::size_t c = 0; c < c_out; ++c) {
      for (std::size_t q = 0; q < P; ++q) {
        const std::size_t i = c * P + q;
        const double s = sigmoid(h[i]);
        const double dh = da[i] * s * (1.0 + h[i] * (1.0 - s));
        dbeta[static_cast<long>(c)] += dh;
        dgamma[static_cast<long>(c)] += dh * pre[i];
        dpre[i] = dh * gamma[c];
      }
    }
    const long lc = static_cast<long>(c_out);
    MapMat(gslice("film" + p + ".scale.weight").data(), lc, cd) = dgamma * cvec.transpose();
    MapVec(gslice("film" + p + ".scale.bias").data(), lc) = dgamma;
    MapMat(gslice("film" + p + ".shift.weight").data(), lc, cd) = dbeta * cvec.transpose();
    MapVec(gslice("film" + p + ".shift.bias").data(), lc) = dbeta;

    const CMapMat DP(dpre.data(), lc, lP);
    const Eigen::VectorXd dsum = DP.rowwise().sum();
    MapVec(gslice("conv" + p + ".bias").data(), lc) = dsum;
    MapMat(gslice("time" + p + ".weight").data(), lc, td) = dsum * tvec.transpose();
    MapMat(gslice("conv" + p + ".weight").data(), lc, static_cast<long>(c_in * 9)).noalias() =
        DP * CMapMat(cols[l]->data(), static_cast<long>(c_in * 9), lP).transpose();

    if (l == 0) break;
    dcol.assign(c_in * 9 * P, 0.0);
    MapMat(dcol.data(), static_cast<long>(c_in * 9), lP).noalias() =
        CMapMat(m.parameter("conv" + p + ".weight").data(), lc, static_cast<long>(c_in * 9)).transpose() * DP;
    col2im(dcol, c_in, a.rows, a.cols, a.dilation(l + 1), da);
  }
  return grad;
}

TensorBundle to_bundle(const VelocityModel& m) {
  TensorBundle b;
  for (const auto& p : m.layout()) {
    Tensor t;
    t.shape.assign(p.shape.begin(), p.shape.end());
    const auto v = m.parameter(p.name);
    t.values.assign(v.begin(), v.end());
    b[p.name] = std::move(t);
  }
  const ModelArch& a = m.arch();
  b["arch"] = Tensor{{kArchEntries},
                     {static_cast<float>(a.horizon), static_cast<float>(a.context_len), static_cast<float>(a.rows),
                      static_cast<float>(a.cols), static_cast<float>(a.hidden1), static_cast<float>(a.hidden2),
                      static_cast<float>(a.time_dim), static_cast<float>(a.cond_dim),
                      static_cast<float>(a.spatial_context), static_cast<float>(a.dilations[0]),
                      static_cast<float>(a.dilations[1]), static_cast<float>(a.dilations[2])}};
  b["latent_norm"] = Tensor{{2}, {static_cast<float>(m.norm.mean), static_cast<float>(m.norm.std)}};
  return b;
}

VelocityModel from_bundle(const TensorBundle& b) {
  auto get = [&b](const std::string& name) -> const Tensor& {
    auto it = b.find(name);
    if (it == b.end()) throw FormatError("checkpoint is missing tensor '" + name + "'");
    return it->second;
  };
  const Tensor& at = get("arch");
  if (at.values.size() != kArchEntries) throw FormatError("checkpoint arch tensor must have 12 entries");
  ModelArch a;
  auto dim = [&at](std::size_t i) { return static_cast<std::size_t>(at.values[i]); };
  a.horizon = dim(0);
  a.context_len = dim(1);
  a.rows = dim(2);
  a.cols = dim(3);
  a.hidden1 = dim(4);
  a.hidden2 = dim(5);
  a.time_dim = dim(6);
  a.cond_dim = dim(7);
  a.spatial_context = dim(8);
  a.dilations = {dim(9), dim(10), dim(11)};
  VelocityModel m(a);
  for (const auto& p : m.layout()) {
    const Tensor& t = get(p.name);
    if (t.values.size() != p.size) throw FormatError("checkpoint tensor '" + p.name + "' has wrong size");
    auto dst = m.parameter(p.name);
    std::copy(t.values.begin(), t.values.end(), dst.begin());
  }
  const Tensor& nt = get("latent_norm");
  if (nt.values.size() != 2) throw FormatError("checkpoint latent_norm must have 2 entries");
  m.norm = {nt.values[0], nt.values[1]};
  return m;
}

}  // namespace rfcast::flow
