#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "voxray/rng.hpp"
#include "voxray/tensor.hpp"

namespace voxray {

using Ints3 = std::array<int, 3>;
using Ints2 = std::array<int, 2>;

// ---------------------------------------------------------------------------
// Convolutions. Weight layouts:
//   conv3d            [Cout, Cin, kd, kh, kw]   input [B, Cin, D, H, W]
//   conv_transpose3d  [Cin, Cout, kd, kh, kw]
//   conv2d            [Cout, Cin, kh, kw]       input [B, Cin, H, W]
// Output extents: conv  (in + 2p - k) / s + 1 (floor),
//                 convT (in - 1) * s - 2p + k + output_padding.
// ---------------------------------------------------------------------------
template <typename T>
Tensor<T> conv3d(const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, Ints3 stride = {1, 1, 1},
                 Ints3 padding = {1, 1, 1});

template <typename T>
Tensor<T> conv_transpose3d(const Tensor<T>& input, const Tensor<T>& weight,
                           const Tensor<T>& bias, Ints3 stride,
                           Ints3 padding = {0, 0, 0},
                           Ints3 output_padding = {0, 0, 0});

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, Ints2 stride = {1, 1},
                 Ints2 padding = {1, 1});

// 2x2x2 max pooling with stride 2; spatial extents must be even. Gradient
// routes to the first (lowest linear index) maximum of each window.
template <typename T>
Tensor<T> maxpool3d(const Tensor<T>& input);

// ---------------------------------------------------------------------------
// Elementwise and stochastic ops.
// ---------------------------------------------------------------------------
template <typename T>
Tensor<T> relu(const Tensor<T>& x);

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);

// Inverted dropout: when active, zero with probability p and scale survivors
// by 1/(1-p); identity when inactive. Requires 0 <= p < 1.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, RngState& rng, bool active);

// DropBlock: zero contiguous block_size^3 cubes seeded on the region where a
// block fits entirely, independently per (batch, channel) slice; survivors
// are rescaled by numel/kept so the expected activation sum is preserved.
template <typename T>
Tensor<T> dropblock3d(const Tensor<T>& x, int block_size, double drop_rate,
                      RngState& rng, bool active);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T c);

// ---------------------------------------------------------------------------
// Structural ops.
// ---------------------------------------------------------------------------
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, const Shape& shape);

// Replicate a [B,C,H,W] map along a new depth axis -> [B,C,depth,H,W].
// norm_preserving scales by 1/sqrt(depth) so the L2 norm is unchanged;
// otherwise plain tiling.
template <typename T>
Tensor<T> lift_depth(const Tensor<T>& x, int depth, bool norm_preserving = true);

// Mean over the depth axis: [B,C,D,H,W] -> [B,C,H,W].
template <typename T>
Tensor<T> collapse_depth_mean(const Tensor<T>& x);

// Fixed-weight reduction to a scalar (sum_i w_i * x_i).
template <typename T>
Tensor<T> reduce_weighted(const Tensor<T>& x, const std::vector<T>& w);

// ---------------------------------------------------------------------------
// Losses and sampling.
// ---------------------------------------------------------------------------

// Mean binary cross-entropy on logits, computed as
// max(z,0) - z*y + log1p(exp(-|z|)); finite for any finite logit.
template <typename T>
Tensor<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& target);

template <typename T>
Tensor<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target);

// KL(q || p) for diagonal Gaussians given as (mu, logvar) pairs; summed over
// all non-batch dimensions, averaged over axis 0.
template <typename T>
Tensor<T> kl_diag_gauss(const Tensor<T>& mu_q, const Tensor<T>& logvar_q,
                        const Tensor<T>& mu_p, const Tensor<T>& logvar_p);

// mu + exp(logvar/2) * eps with eps ~ N(0,1); gradients flow to mu and logvar.
template <typename T>
Tensor<T> reparam_sample(const Tensor<T>& mu, const Tensor<T>& logvar,
                         RngState& rng);

// ---------------------------------------------------------------------------
// Optimizer.
// ---------------------------------------------------------------------------
template <typename T>
struct AdamState {
  std::vector<std::vector<T>> m, v;
  std::int64_t step = 0;
};

// Standard Adam with bias correction. Parameters without an allocated grad
// buffer are left untouched. Grads are consumed (zeroed) by the update.
template <typename T>
void adam_step(std::vector<Tensor<T>>& params, AdamState<T>& state, T lr,
               T beta1 = T(0.9), T beta2 = T(0.999), T eps = T(1e-8));

// ---------------------------------------------------------------------------
// Gradient checking (double precision, central differences).
// ---------------------------------------------------------------------------
struct GradCheckReport {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  int worst_input = -1;
  std::int64_t worst_element = -1;
  bool pass(double tol) const { return max_rel_err <= tol; }
};

// `fn` must build a fresh graph from `inputs` and return a scalar. Analytic
// gradients from one backward pass are compared against central differences
// with step = step_scale * max(1, |x|) per element.
GradCheckReport grad_check(
    const std::function<TensorD(const std::vector<TensorD>&)>& fn,
    std::vector<TensorD> inputs, double step_scale = 1e-4);

}  // namespace voxray
