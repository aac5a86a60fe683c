#include <algorithm>
#include <cstring>

#include "voxray/ops.hpp"
#include "voxray/parallel.hpp"

namespace voxray {

namespace {

struct ConvT3dDims {
  int b, ci, d, h, w;  // input
  int co, kd, kh, kw;  // weight [Ci, Co, kd, kh, kw]
  int sd, sh, sw, pd, ph, pw, opd, oph, opw;
  int od, oh, ow;      // output
};

// Forward scatters each input element through the kernel into the owned
// (b, co) output slice; backward gathers.
template <typename T>
void convt3d_forward(const T* in, const T* wt, const T* bias, T* out,
                     const ConvT3dDims& m) {
  const std::int64_t in_c = std::int64_t(m.d) * m.h * m.w;
  const std::int64_t out_c = std::int64_t(m.od) * m.oh * m.ow;
  const std::int64_t wt_c = std::int64_t(m.kd) * m.kh * m.kw;
  parallel_for(std::int64_t(m.b) * m.co, [&](std::int64_t t) {
    const int b = int(t / m.co), co = int(t % m.co);
    T* os = out + (std::int64_t(b) * m.co + co) * out_c;
    for (std::int64_t i = 0; i < out_c; ++i) os[i] = bias[co];
    for (int ci = 0; ci < m.ci; ++ci) {
      const T* is = in + (std::int64_t(b) * m.ci + ci) * in_c;
      const T* ws = wt + (std::int64_t(ci) * m.co + co) * wt_c;
      for (int zi = 0; zi < m.d; ++zi)
        for (int kd = 0; kd < m.kd; ++kd) {
          const int zo = zi * m.sd - m.pd + kd;
          if (zo < 0 || zo >= m.od) continue;
          for (int yi = 0; yi < m.h; ++yi)
            for (int kh = 0; kh < m.kh; ++kh) {
              const int yo = yi * m.sh - m.ph + kh;
              if (yo < 0 || yo >= m.oh) continue;
              const T* irow = is + (std::int64_t(zi) * m.h + yi) * m.w;
              T* orow = os + (std::int64_t(zo) * m.oh + yo) * m.ow;
              for (int kw = 0; kw < m.kw; ++kw) {
                const T wv = ws[(kd * m.kh + kh) * m.kw + kw];
                const int base = kw - m.pw;
                if (m.sw == 1) {
                  const int lo = std::max(0, -base);
                  const int hi = std::min(m.w, m.ow - base);
                  T* op = orow + base;
                  for (int xi = lo; xi < hi; ++xi) op[xi] += wv * irow[xi];
                } else {
                  for (int xi = 0; xi < m.w; ++xi) {
                    const int xo = xi * m.sw + base;
                    if (xo < 0 || xo >= m.ow) continue;
                    orow[xo] += wv * irow[xi];
                  }
                }
              }
            }
        }
    }
  });
}

template <typename T>
void convt3d_grad_input(const T* go, const T* wt, T* gin, const ConvT3dDims& m) {
  const std::int64_t in_c = std::int64_t(m.d) * m.h * m.w;
  const std::int64_t out_c = std::int64_t(m.od) * m.oh * m.ow;
  const std::int64_t wt_c = std::int64_t(m.kd) * m.kh * m.kw;
  parallel_for(std::int64_t(m.b) * m.ci, [&](std::int64_t t) {
    const int b = int(t / m.ci), ci = int(t % m.ci);
    T* gs = gin + (std::int64_t(b) * m.ci + ci) * in_c;
    for (int co = 0; co < m.co; ++co) {
      const T* os = go + (std::int64_t(b) * m.co + co) * out_c;
      const T* ws = wt + (std::int64_t(ci) * m.co + co) * wt_c;
      for (int zi = 0; zi < m.d; ++zi)
        for (int kd = 0; kd < m.kd; ++kd) {
          const int zo = zi * m.sd - m.pd + kd;
          if (zo < 0 || zo >= m.od) continue;
          for (int yi = 0; yi < m.h; ++yi)
            for (int kh = 0; kh < m.kh; ++kh) {
              const int yo = yi * m.sh - m.ph + kh;
              if (yo < 0 || yo >= m.oh) continue;
              const T* orow = os + (std::int64_t(zo) * m.oh + yo) * m.ow;
              T* grow = gs + (std::int64_t(zi) * m.h + yi) * m.w;
              for (int kw = 0; kw < m.kw; ++kw) {
                const T wv = ws[(kd * m.kh + kh) * m.kw + kw];
                const int base = kw - m.pw;
                if (m.sw == 1) {
                  const int lo = std::max(0, -base);
                  const int hi = std::min(m.w, m.ow - base);
                  const T* op = orow + base;
                  for (int xi = lo; xi < hi; ++xi) grow[xi] += wv * op[xi];
                } else {
                  for (int xi = 0; xi < m.w; ++xi) {
                    const int xo = xi * m.sw + base;
                    if (xo < 0 || xo >= m.ow) continue;
                    grow[xi] += wv * orow[xo];
                  }
                }
              }
            }
        }
    }
  });
}

template <typename T>
void convt3d_grad_weight(const T* go, const T* in, T* gw, const ConvT3dDims& m) {
  const std::int64_t in_c = std::int64_t(m.d) * m.h * m.w;
  const std::int64_t out_c = std::int64_t(m.od) * m.oh * m.ow;
  const std::int64_t wt_c = std::int64_t(m.kd) * m.kh * m.kw;
  parallel_for(std::int64_t(m.ci) * m.co, [&](std::int64_t t) {
    const int ci = int(t / m.co), co = int(t % m.co);
    T* gws = gw + (std::int64_t(ci) * m.co + co) * wt_c;
    for (int b = 0; b < m.b; ++b) {
      const T* is = in + (std::int64_t(b) * m.ci + ci) * in_c;
      const T* os = go + (std::int64_t(b) * m.co + co) * out_c;
      for (int zi = 0; zi < m.d; ++zi)
        for (int kd = 0; kd < m.kd; ++kd) {
          const int zo = zi * m.sd - m.pd + kd;
          if (zo < 0 || zo >= m.od) continue;
          for (int yi = 0; yi < m.h; ++yi)
            for (int kh = 0; kh < m.kh; ++kh) {
              const int yo = yi * m.sh - m.ph + kh;
              if (yo < 0 || yo >= m.oh) continue;
              const T* irow = is + (std::int64_t(zi) * m.h + yi) * m.w;
              const T* orow = os + (std::int64_t(zo) * m.oh + yo) * m.ow;
              for (int kw = 0; kw < m.kw; ++kw) {
                const int base = kw - m.pw;
                T acc = 0;
                if (m.sw == 1) {
                  const int lo = std::max(0, -base);
                  const int hi = std::min(m.w, m.ow - base);
                  const T* op = orow + base;
                  for (int xi = lo; xi < hi; ++xi) acc += irow[xi] * op[xi];
                } else {
                  for (int xi = 0; xi < m.w; ++xi) {
                    const int xo = xi * m.sw + base;
                    if (xo < 0 || xo >= m.ow) continue;
                    acc += irow[xi] * orow[xo];
                  }
                }
                gws[(kd * m.kh + kh) * m.kw + kw] += acc;
              }
            }
        }
    }
  });
}

template <typename T>
void convt3d_grad_bias(const T* go, T* gb, int b, int co, std::int64_t out_c) {
  parallel_for(co, [&](std::int64_t c) {
    T acc = 0;
    for (int i = 0; i < b; ++i) {
      const T* os = go + (std::int64_t(i) * co + c) * out_c;
      for (std::int64_t j = 0; j < out_c; ++j) acc += os[j];
    }
    gb[c] += acc;
  });
}

}  // namespace

template <typename T>
Tensor<T> conv_transpose3d(const Tensor<T>& input, const Tensor<T>& weight,
                           const Tensor<T>& bias, Ints3 stride, Ints3 padding,
                           Ints3 output_padding) {
  if (input.shape().size() != 5)
    throw TensorError("conv_transpose3d: input must be rank 5, got " +
                      shape_str(input.shape()));
  if (weight.shape().size() != 5)
    throw TensorError("conv_transpose3d: weight must be rank 5, got " +
                      shape_str(weight.shape()));
  ConvT3dDims m;
  m.b = input.dim(0);
  m.ci = input.dim(1);
  m.d = input.dim(2);
  m.h = input.dim(3);
  m.w = input.dim(4);
  if (weight.dim(0) != m.ci)
    throw TensorError("conv_transpose3d: weight expects " +
                      std::to_string(weight.dim(0)) + " input channels, input has " +
                      std::to_string(m.ci));
  m.co = weight.dim(1);
  m.kd = weight.dim(2);
  m.kh = weight.dim(3);
  m.kw = weight.dim(4);
  if (bias.shape() != Shape{m.co})
    throw TensorError("conv_transpose3d: bias shape " + shape_str(bias.shape()) +
                      " does not match " + std::to_string(m.co) + " filters");
  m.sd = stride[0];
  m.sh = stride[1];
  m.sw = stride[2];
  for (int s : stride)
    if (s < 1) throw TensorError("conv_transpose3d: stride must be >= 1");
  m.pd = padding[0];
  m.ph = padding[1];
  m.pw = padding[2];
  m.opd = output_padding[0];
  m.oph = output_padding[1];
  m.opw = output_padding[2];
  const Ints3 st{m.sd, m.sh, m.sw}, op{m.opd, m.oph, m.opw};
  for (int a = 0; a < 3; ++a)
    if (op[a] < 0 || op[a] >= st[a])
      throw TensorError(
          "conv_transpose3d: output_padding must satisfy 0 <= op < stride, got op=" +
          std::to_string(op[a]) + " stride=" + std::to_string(st[a]));
  m.od = (m.d - 1) * m.sd - 2 * m.pd + m.kd + m.opd;
  m.oh = (m.h - 1) * m.sh - 2 * m.ph + m.kh + m.oph;
  m.ow = (m.w - 1) * m.sw - 2 * m.pw + m.kw + m.opw;
  if (m.od < 1 || m.oh < 1 || m.ow < 1)
    throw TensorError("conv_transpose3d: non-positive output extent " +
                      shape_str({m.od, m.oh, m.ow}));

  std::vector<T> out(std::size_t(std::int64_t(m.b) * m.co * m.od * m.oh * m.ow));
  convt3d_forward(input.values().data(), weight.values().data(),
                  bias.values().data(), out.data(), m);

  auto backward = [input, weight, bias, m](const Tensor<T>& self) mutable {
    const std::vector<T>& go = self.grad();
    if (input.requires_grad())
      convt3d_grad_input(go.data(), weight.values().data(), input.grad().data(), m);
    if (weight.requires_grad())
      convt3d_grad_weight(go.data(), input.values().data(), weight.grad().data(), m);
    if (bias.requires_grad())
      convt3d_grad_bias(go.data(), bias.grad().data(), m.b, m.co,
                        std::int64_t(m.od) * m.oh * m.ow);
  };
  return Tensor<T>::from_op({m.b, m.co, m.od, m.oh, m.ow}, std::move(out),
                            {input, weight, bias}, std::move(backward));
}

template Tensor<float> conv_transpose3d(const Tensor<float>&, const Tensor<float>&,
                                        const Tensor<float>&, Ints3, Ints3, Ints3);
template Tensor<double> conv_transpose3d(const Tensor<double>&,
                                         const Tensor<double>&,
                                         const Tensor<double>&, Ints3, Ints3,
                                         Ints3);

}  // namespace voxray
