#include <algorithm>
#include <cstring>

#include "voxray/ops.hpp"
#include "voxray/parallel.hpp"

namespace voxray {

namespace {

// acc[i] += w0*r[i-1] + w1*r[i] + w2*r[i+1] with clamped edges; the hot
// inner op for every 3x3 in-plane kernel at stride 1 / padding 1.
template <typename T>
inline void fused_row3(T* __restrict acc, const T* __restrict r, T w0, T w1,
                       T w2, int w) {
  if (w == 1) {
    acc[0] += w1 * r[0];
    return;
  }
  acc[0] += w1 * r[0] + w2 * r[1];
  for (int i = 1; i < w - 1; ++i)
    acc[i] += w0 * r[i - 1] + w1 * r[i] + w2 * r[i + 1];
  acc[w - 1] += w0 * r[w - 2] + w1 * r[w - 1];
}

struct Conv3dDims {
  int b, ci, d, h, w;       // input
  int co, kd, kh, kw;       // weight
  int sd, sh, sw, pd, ph, pw;
  int od, oh, ow;           // output
};

template <typename T>
void conv3d_forward(const T* in, const T* wt, const T* bias, T* out,
                    const Conv3dDims& m) {
  const bool fast = m.sd == 1 && m.sh == 1 && m.sw == 1 && m.kh == 3 &&
                    m.kw == 3 && m.ph == 1 && m.pw == 1;
  const std::int64_t in_c = std::int64_t(m.d) * m.h * m.w;
  const std::int64_t out_c = std::int64_t(m.od) * m.oh * m.ow;
  const std::int64_t wt_c = std::int64_t(m.kd) * m.kh * m.kw;
  parallel_for(std::int64_t(m.b) * m.co, [&](std::int64_t t) {
    const int b = int(t / m.co), co = int(t % m.co);
    T* os = out + (std::int64_t(b) * m.co + co) * out_c;
    if (fast) {
      std::vector<T> acc(std::size_t(m.ow));
      for (int od = 0; od < m.od; ++od)
        for (int oh = 0; oh < m.oh; ++oh) {
          T* a = acc.data();
          for (int i = 0; i < m.ow; ++i) a[i] = bias[co];
          for (int ci = 0; ci < m.ci; ++ci) {
            const T* is = in + (std::int64_t(b) * m.ci + ci) * in_c;
            const T* ws = wt + (std::int64_t(co) * m.ci + ci) * wt_c;
            for (int kd = 0; kd < m.kd; ++kd) {
              const int id = od + kd - m.pd;
              if (id < 0 || id >= m.d) continue;
              for (int kh = 0; kh < 3; ++kh) {
                const int ih = oh + kh - 1;
                if (ih < 0 || ih >= m.h) continue;
                const T* r = is + (std::int64_t(id) * m.h + ih) * m.w;
                const T* wk = ws + (kd * 3 + kh) * 3;
                fused_row3(a, r, wk[0], wk[1], wk[2], m.w);
              }
            }
          }
          std::memcpy(os + (std::int64_t(od) * m.oh + oh) * m.ow, acc.data(),
                      std::size_t(m.ow) * sizeof(T));
        }
      return;
    }
    for (std::int64_t i = 0; i < out_c; ++i) os[i] = bias[co];
    for (int ci = 0; ci < m.ci; ++ci) {
      const T* is = in + (std::int64_t(b) * m.ci + ci) * in_c;
      const T* ws = wt + (std::int64_t(co) * m.ci + ci) * wt_c;
      for (int od = 0; od < m.od; ++od)
        for (int kd = 0; kd < m.kd; ++kd) {
          const int id = od * m.sd + kd - m.pd;
          if (id < 0 || id >= m.d) continue;
          for (int oh = 0; oh < m.oh; ++oh)
            for (int kh = 0; kh < m.kh; ++kh) {
              const int ih = oh * m.sh + kh - m.ph;
              if (ih < 0 || ih >= m.h) continue;
              const T* irow = is + (std::int64_t(id) * m.h + ih) * m.w;
              T* orow = os + (std::int64_t(od) * m.oh + oh) * m.ow;
              for (int kw = 0; kw < m.kw; ++kw) {
                const T wv = ws[(kd * m.kh + kh) * m.kw + kw];
                for (int ow = 0; ow < m.ow; ++ow) {
                  const int iw = ow * m.sw + kw - m.pw;
                  if (iw < 0 || iw >= m.w) continue;
                  orow[ow] += wv * irow[iw];
                }
              }
            }
        }
    }
  });
}

template <typename T>
void conv3d_grad_input(const T* go, const T* wt, T* gin, const Conv3dDims& m) {
  const bool fast = m.sd == 1 && m.sh == 1 && m.sw == 1 && m.kh == 3 &&
                    m.kw == 3 && m.ph == 1 && m.pw == 1;
  const std::int64_t in_c = std::int64_t(m.d) * m.h * m.w;
  const std::int64_t out_c = std::int64_t(m.od) * m.oh * m.ow;
  const std::int64_t wt_c = std::int64_t(m.kd) * m.kh * m.kw;
  parallel_for(std::int64_t(m.b) * m.ci, [&](std::int64_t t) {
    const int b = int(t / m.ci), ci = int(t % m.ci);
    T* gs = gin + (std::int64_t(b) * m.ci + ci) * in_c;
    if (fast) {
      // Full correlation with the flipped kernel, same fused row op.
      std::vector<T> acc(std::size_t(m.w));
      for (int id = 0; id < m.d; ++id)
        for (int ih = 0; ih < m.h; ++ih) {
          T* a = acc.data();
          std::memset(a, 0, std::size_t(m.w) * sizeof(T));
          for (int co = 0; co < m.co; ++co) {
            const T* os = go + (std::int64_t(b) * m.co + co) * out_c;
            const T* ws = wt + (std::int64_t(co) * m.ci + ci) * wt_c;
            for (int kd = 0; kd < m.kd; ++kd) {
              const int od = id - kd + m.pd;
              if (od < 0 || od >= m.od) continue;
              for (int kh = 0; kh < 3; ++kh) {
                const int oh = ih - kh + 1;
                if (oh < 0 || oh >= m.oh) continue;
                const T* r = os + (std::int64_t(od) * m.oh + oh) * m.ow;
                const T* wk = ws + (kd * 3 + kh) * 3;
                // gin[iw] += sum_kw w[kw] * go[iw - kw + 1]
                fused_row3(a, r, wk[2], wk[1], wk[0], m.w);
              }
            }
          }
          T* grow = gs + (std::int64_t(id) * m.h + ih) * m.w;
          for (int i = 0; i < m.w; ++i) grow[i] += a[i];
        }
      return;
    }
    for (int co = 0; co < m.co; ++co) {
      const T* os = go + (std::int64_t(b) * m.co + co) * out_c;
      const T* ws = wt + (std::int64_t(co) * m.ci + ci) * wt_c;
      for (int od = 0; od < m.od; ++od)
        for (int kd = 0; kd < m.kd; ++kd) {
          const int id = od * m.sd + kd - m.pd;
          if (id < 0 || id >= m.d) continue;
          for (int oh = 0; oh < m.oh; ++oh)
            for (int kh = 0; kh < m.kh; ++kh) {
              const int ih = oh * m.sh + kh - m.ph;
              if (ih < 0 || ih >= m.h) continue;
              const T* orow = os + (std::int64_t(od) * m.oh + oh) * m.ow;
              T* grow = gs + (std::int64_t(id) * m.h + ih) * m.w;
              for (int kw = 0; kw < m.kw; ++kw) {
                const T wv = ws[(kd * m.kh + kh) * m.kw + kw];
                for (int ow = 0; ow < m.ow; ++ow) {
                  const int iw = ow * m.sw + kw - m.pw;
                  if (iw < 0 || iw >= m.w) continue;
                  grow[iw] += wv * orow[ow];
                }
              }
            }
        }
    }
  });
}

template <typename T>
void conv3d_grad_weight(const T* go, const T* in, T* gw, const Conv3dDims& m) {
  const std::int64_t in_c = std::int64_t(m.d) * m.h * m.w;
  const std::int64_t out_c = std::int64_t(m.od) * m.oh * m.ow;
  const std::int64_t wt_c = std::int64_t(m.kd) * m.kh * m.kw;
  parallel_for(std::int64_t(m.co) * m.ci, [&](std::int64_t t) {
    const int co = int(t / m.ci), ci = int(t % m.ci);
    T* gws = gw + (std::int64_t(co) * m.ci + ci) * wt_c;
    for (int b = 0; b < m.b; ++b) {
      const T* is = in + (std::int64_t(b) * m.ci + ci) * in_c;
      const T* os = go + (std::int64_t(b) * m.co + co) * out_c;
      for (int od = 0; od < m.od; ++od)
        for (int kd = 0; kd < m.kd; ++kd) {
          const int id = od * m.sd + kd - m.pd;
          if (id < 0 || id >= m.d) continue;
          for (int oh = 0; oh < m.oh; ++oh)
            for (int kh = 0; kh < m.kh; ++kh) {
              const int ih = oh * m.sh + kh - m.ph;
              if (ih < 0 || ih >= m.h) continue;
              const T* irow = is + (std::int64_t(id) * m.h + ih) * m.w;
              const T* orow = os + (std::int64_t(od) * m.oh + oh) * m.ow;
              for (int kw = 0; kw < m.kw; ++kw) {
                int lo = 0, hi = m.ow;
                if (m.sw == 1) {
                  lo = std::max(0, m.pw - kw);
                  hi = std::min(m.ow, m.w + m.pw - kw);
                  const T* ir = irow + lo + kw - m.pw;
                  const T* gr = orow + lo;
                  const int n = hi - lo;
                  T a0 = 0, a1 = 0, a2 = 0, a3 = 0;
                  int i = 0;
                  for (; i + 4 <= n; i += 4) {
                    a0 += gr[i] * ir[i];
                    a1 += gr[i + 1] * ir[i + 1];
                    a2 += gr[i + 2] * ir[i + 2];
                    a3 += gr[i + 3] * ir[i + 3];
                  }
                  for (; i < n; ++i) a0 += gr[i] * ir[i];
                  gws[(kd * m.kh + kh) * m.kw + kw] += (a0 + a1) + (a2 + a3);
                } else {
                  T a = 0;
                  for (int ow = lo; ow < hi; ++ow) {
                    const int iw = ow * m.sw + kw - m.pw;
                    if (iw < 0 || iw >= m.w) continue;
                    a += orow[ow] * irow[iw];
                  }
                  gws[(kd * m.kh + kh) * m.kw + kw] += a;
                }
              }
            }
        }
    }
  });
}

template <typename T>
void conv3d_grad_bias(const T* go, T* gb, int b, int co, std::int64_t out_c) {
  parallel_for(co, [&](std::int64_t c) {
    T acc = 0;
    for (int i = 0; i < b; ++i) {
      const T* os = go + (std::int64_t(i) * co + c) * out_c;
      for (std::int64_t j = 0; j < out_c; ++j) acc += os[j];
    }
    gb[c] += acc;
  });
}

int conv_out_extent(int in, int pad, int k, int stride, const char* axis) {
  if (in + 2 * pad < k)
    throw TensorError(std::string("conv: extent ") + std::to_string(in) +
                      " smaller than kernel " + std::to_string(k) +
                      " after padding on axis " + axis);
  return (in + 2 * pad - k) / stride + 1;
}

}  // namespace

template <typename T>
Tensor<T> conv3d(const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, Ints3 stride, Ints3 padding) {
  if (input.shape().size() != 5)
    throw TensorError("conv3d: input must be rank 5, got " +
                      shape_str(input.shape()));
  if (weight.shape().size() != 5)
    throw TensorError("conv3d: weight must be rank 5, got " +
                      shape_str(weight.shape()));
  Conv3dDims m;
  m.b = input.dim(0);
  m.ci = input.dim(1);
  m.d = input.dim(2);
  m.h = input.dim(3);
  m.w = input.dim(4);
  m.co = weight.dim(0);
  m.kd = weight.dim(2);
  m.kh = weight.dim(3);
  m.kw = weight.dim(4);
  if (weight.dim(1) != m.ci)
    throw TensorError("conv3d: weight expects " + std::to_string(weight.dim(1)) +
                      " input channels, input has " + std::to_string(m.ci));
  if (bias.shape() != Shape{m.co})
    throw TensorError("conv3d: bias shape " + shape_str(bias.shape()) +
                      " does not match " + std::to_string(m.co) + " filters");
  for (int s : stride)
    if (s < 1) throw TensorError("conv3d: stride must be >= 1");
  m.sd = stride[0];
  m.sh = stride[1];
  m.sw = stride[2];
  m.pd = padding[0];
  m.ph = padding[1];
  m.pw = padding[2];
  m.od = conv_out_extent(m.d, m.pd, m.kd, m.sd, "depth");
  m.oh = conv_out_extent(m.h, m.ph, m.kh, m.sh, "height");
  m.ow = conv_out_extent(m.w, m.pw, m.kw, m.sw, "width");

  std::vector<T> out(std::size_t(std::int64_t(m.b) * m.co * m.od * m.oh * m.ow));
  conv3d_forward(input.values().data(), weight.values().data(),
                 bias.values().data(), out.data(), m);

  auto backward = [input, weight, bias, m](const Tensor<T>& self) mutable {
    const std::vector<T>& go = self.grad();
    if (input.requires_grad())
      conv3d_grad_input(go.data(), weight.values().data(), input.grad().data(), m);
    if (weight.requires_grad())
      conv3d_grad_weight(go.data(), input.values().data(), weight.grad().data(), m);
    if (bias.requires_grad())
      conv3d_grad_bias(go.data(), bias.grad().data(), m.b, m.co,
                       std::int64_t(m.od) * m.oh * m.ow);
  };
  return Tensor<T>::from_op({m.b, m.co, m.od, m.oh, m.ow}, std::move(out),
                            {input, weight, bias}, std::move(backward));
}

// conv2d rides the 3D kernels on a depth-1 view.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, Ints2 stride, Ints2 padding) {
  if (input.shape().size() != 4)
    throw TensorError("conv2d: input must be rank 4, got " +
                      shape_str(input.shape()));
  if (weight.shape().size() != 4)
    throw TensorError("conv2d: weight must be rank 4, got " +
                      shape_str(weight.shape()));
  Conv3dDims m;
  m.b = input.dim(0);
  m.ci = input.dim(1);
  m.d = 1;
  m.h = input.dim(2);
  m.w = input.dim(3);
  m.co = weight.dim(0);
  m.kd = 1;
  m.kh = weight.dim(2);
  m.kw = weight.dim(3);
  if (weight.dim(1) != m.ci)
    throw TensorError("conv2d: weight expects " + std::to_string(weight.dim(1)) +
                      " input channels, input has " + std::to_string(m.ci));
  if (bias.shape() != Shape{m.co})
    throw TensorError("conv2d: bias shape " + shape_str(bias.shape()) +
                      " does not match " + std::to_string(m.co) + " filters");
  for (int s : stride)
    if (s < 1) throw TensorError("conv2d: stride must be >= 1");
  m.sd = 1;
  m.sh = stride[0];
  m.sw = stride[1];
  m.pd = 0;
  m.ph = padding[0];
  m.pw = padding[1];
  m.od = 1;
  m.oh = conv_out_extent(m.h, m.ph, m.kh, m.sh, "height");
  m.ow = conv_out_extent(m.w, m.pw, m.kw, m.sw, "width");

  std::vector<T> out(std::size_t(std::int64_t(m.b) * m.co * m.oh * m.ow));
  conv3d_forward(input.values().data(), weight.values().data(),
                 bias.values().data(), out.data(), m);

  auto backward = [input, weight, bias, m](const Tensor<T>& self) mutable {
    const std::vector<T>& go = self.grad();
    if (input.requires_grad())
      conv3d_grad_input(go.data(), weight.values().data(), input.grad().data(), m);
    if (weight.requires_grad())
      conv3d_grad_weight(go.data(), input.values().data(), weight.grad().data(), m);
    if (bias.requires_grad())
      conv3d_grad_bias(go.data(), bias.grad().data(), m.b, m.co,
                       std::int64_t(m.oh) * m.ow);
  };
  return Tensor<T>::from_op({m.b, m.co, m.oh, m.ow}, std::move(out),
                            {input, weight, bias}, std::move(backward));
}

template Tensor<float> conv3d(const Tensor<float>&, const Tensor<float>&,
                              const Tensor<float>&, Ints3, Ints3);
template Tensor<double> conv3d(const Tensor<double>&, const Tensor<double>&,
                               const Tensor<double>&, Ints3, Ints3);
template Tensor<float> conv2d(const Tensor<float>&, const Tensor<float>&,
                              const Tensor<float>&, Ints2, Ints2);
template Tensor<double> conv2d(const Tensor<double>&, const Tensor<double>&,
                               const Tensor<double>&, Ints2, Ints2);

}  // namespace voxray
