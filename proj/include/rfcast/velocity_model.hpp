#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rfcast/conditioning.hpp"
#include "rfcast/rng.hpp"
#include "rfcast/tensor_io.hpp"

namespace rfcast::flow {

/// Architecture descriptor of the velocity network u(x_t, c_ctx, t).
///
/// Input channels are the horizon noisy latent frames followed by the last
/// `spatial_context` context frames. Three periodic 3x3 convolutions with
/// per-layer dilation:
///   in -> hidden1 -> hidden2 -> horizon,
/// the two hidden layers with SiLU activations, a sinusoidal time embedding
/// added as a per-channel bias, and feature-wise scale/shift computed from the
/// condition vector. The output layer is zero-initialised.
struct ModelArch {
  std::size_t horizon = 16;
  std::size_t context_len = 4;
  std::size_t rows = 16;
  std::size_t cols = 16;
  std::size_t hidden1 = 32;
  std::size_t hidden2 = 16;
  std::size_t time_dim = 8;
  std::size_t cond_dim = cond::kConditionDim;
  std::size_t spatial_context = 1;
  std::array<std::size_t, 3> dilations{1, 2, 4};

  std::size_t in_channels() const noexcept { return horizon + spatial_context; }
  long dilation(int layer) const noexcept { return static_cast<long>(dilations[static_cast<std::size_t>(layer - 1)]); }
  std::size_t pixels() const noexcept { return rows * cols; }
  std::size_t state_size() const noexcept { return horizon * pixels(); }
  std::size_t context_size() const noexcept { return context_len * pixels(); }
  void validate() const;

  friend bool operator==(const ModelArch&, const ModelArch&) = default;
};

struct ParamInfo {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// Affine map between physical latent units and the unit-scale space the
/// network works in: z = (latent - mean) / std.
struct LatentNorm {
  double mean = 0.0;
  double std = 1.0;
};

class VelocityModel {
 public:
  /// All parameters zero.
  explicit VelocityModel(ModelArch arch = {});

  /// Hidden layers uniform in +-1/sqrt(fan_in) (fan_in = 9 * input channels
  /// for convolutions, embedding/condition width for projections); FiLM
  /// projections start at zero; the output layer is zero.
  static VelocityModel initialized(ModelArch arch, Rng& rng);

  const ModelArch& arch() const noexcept { return arch_; }
  const std::vector<ParamInfo>& layout() const noexcept { return layout_; }
  const ParamInfo& param(const std::string& name) const;

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameter(const std::string& name);
  std::span<const double> parameter(const std::string& name) const;

  LatentNorm norm;

 private:
  ModelArch arch_;
  std::vector<ParamInfo> layout_;
  std::vector<double> params_;
};

/// Activations kept by a forward pass for the backward pass.
struct ForwardCache {
  std::vector<double> col1, col2, col3;  // im2col buffers per layer
  std::vector<double> pre1, pre2;        // conv + bias + time, before FiLM
  std::vector<double> h1, h2;            // after FiLM, before SiLU
  std::vector<double> gamma1, gamma2;
  std::vector<double> temb;
  std::array<double, cond::kConditionDim> cond{};
};

std::vector<double> time_embedding(double t, std::size_t dim);

/// u(x, ctx, t): x has state_size() entries (horizon frames, row-major),
/// context has context_size(). Output has state_size() entries.
std::vector<double> model_forward(const VelocityModel& m, std::span<const double> x,
                                  std::span<const double> context, const cond::ConditionVector& c, double t,
                                  ForwardCache* cache = nullptr);

/// Exact parameter gradient of <upstream, u(x, ctx, t)>, laid out like
/// VelocityModel::parameters(). Requires the cache of the matching forward.
std::vector<double> model_backward(const VelocityModel& m, const ForwardCache& cache,
                                   std::span<const double> upstream);

/// Checkpoint as a named tensor bundle (one RFT1 file per parameter plus
/// "arch" (12 entries) and "latent_norm").
TensorBundle to_bundle(const VelocityModel& m);
VelocityModel from_bundle(const TensorBundle& b);

}  // namespace rfcast::flow
