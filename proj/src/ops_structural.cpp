#include <cmath>
#include <cstring>
#include <limits>

#include "voxray/ops.hpp"
#include "voxray/parallel.hpp"

namespace voxray {

template <typename T>
Tensor<T> maxpool3d(const Tensor<T>& x) {
  if (x.shape().size() != 5)
    throw TensorError("maxpool3d: input must be rank 5, got " +
                      shape_str(x.shape()));
  const int b = x.dim(0), c = x.dim(1), d = x.dim(2), h = x.dim(3), w = x.dim(4);
  if (d % 2 || h % 2 || w % 2)
    throw TensorError("maxpool3d: spatial extents must be even, got " +
                      shape_str(x.shape()));
  const int od = d / 2, oh = h / 2, ow = w / 2;
  const std::int64_t in_c = std::int64_t(d) * h * w;
  const std::int64_t out_c = std::int64_t(od) * oh * ow;
  const std::int64_t n_out = std::int64_t(b) * c * out_c;

  const auto& xs = x.values();
  std::vector<T> out(std::size_t(n_out));
  // Ties go to the first (lowest linear index) maximum.
  auto argmax = std::make_shared<std::vector<std::int64_t>>(std::size_t(n_out));
  parallel_for(std::int64_t(b) * c, [&](std::int64_t s) {
    const T* is = xs.data() + s * in_c;
    T* os = out.data() + s * out_c;
    std::int64_t* as = argmax->data() + s * out_c;
    for (int z = 0; z < od; ++z)
      for (int y = 0; y < oh; ++y)
        for (int xw = 0; xw < ow; ++xw) {
          T best = -std::numeric_limits<T>::infinity();
          std::int64_t best_idx = -1;
          for (int dz = 0; dz < 2; ++dz)
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx) {
                const std::int64_t idx =
                    (std::int64_t(2 * z + dz) * h + (2 * y + dy)) * w + 2 * xw + dx;
                if (is[idx] > best) {
                  best = is[idx];
                  best_idx = idx;
                }
              }
          const std::int64_t o = (std::int64_t(z) * oh + y) * ow + xw;
          os[o] = best;
          as[o] = s * in_c + best_idx;
        }
  });
  auto backward = [x, argmax](const Tensor<T>& self) mutable {
    const auto& go = self.grad();
    auto& gx = x.grad();
    for (std::size_t i = 0; i < go.size(); ++i)
      gx[std::size_t((*argmax)[i])] += go[i];
  };
  return Tensor<T>::from_op({b, c, od, oh, ow}, std::move(out), {x},
                            std::move(backward));
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa.size() != sb.size() || sa.size() < 2)
    throw TensorError("concat_channels: rank mismatch " + shape_str(sa) + " vs " +
                      shape_str(sb));
  for (std::size_t i = 0; i < sa.size(); ++i)
    if (i != 1 && sa[i] != sb[i])
      throw TensorError("concat_channels: incompatible shapes " + shape_str(sa) +
                        " vs " + shape_str(sb));
  const int batch = sa[0], ca = sa[1], cb = sb[1];
  std::int64_t spatial = 1;
  for (std::size_t i = 2; i < sa.size(); ++i) spatial *= sa[i];
  Shape out_shape = sa;
  out_shape[1] = ca + cb;

  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<T> out(std::size_t(shape_numel(out_shape)));
  const std::int64_t as = std::int64_t(ca) * spatial, bs = std::int64_t(cb) * spatial;
  for (int i = 0; i < batch; ++i) {
    std::memcpy(out.data() + i * (as + bs), av.data() + i * as,
                std::size_t(as) * sizeof(T));
    std::memcpy(out.data() + i * (as + bs) + as, bv.data() + i * bs,
                std::size_t(bs) * sizeof(T));
  }
  auto backward = [a, b, batch, as, bs](const Tensor<T>& self) mutable {
    const auto& go = self.grad();
    if (a.requires_grad()) {
      auto& ga = a.grad();
      for (int i = 0; i < batch; ++i)
        for (std::int64_t j = 0; j < as; ++j)
          ga[std::size_t(i * as + j)] += go[std::size_t(i * (as + bs) + j)];
    }
    if (b.requires_grad()) {
      auto& gb = b.grad();
      for (int i = 0; i < batch; ++i)
        for (std::int64_t j = 0; j < bs; ++j)
          gb[std::size_t(i * bs + j)] += go[std::size_t(i * (as + bs) + as + j)];
    }
  };
  return Tensor<T>::from_op(out_shape, std::move(out), {a, b}, std::move(backward));
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, const Shape& shape) {
  if (shape_numel(shape) != x.numel())
    throw TensorError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                      shape_str(shape));
  std::vector<T> out = x.values();
  auto backward = [x](const Tensor<T>& self) mutable {
    const auto& go = self.grad();
    auto& gx = x.grad();
    for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
  };
  return Tensor<T>::from_op(shape, std::move(out), {x}, std::move(backward));
}

template <typename T>
Tensor<T> lift_depth(const Tensor<T>& x, int depth, bool norm_preserving) {
  if (x.shape().size() != 4)
    throw TensorError("lift_depth: input must be rank 4 [B,C,H,W], got " +
                      shape_str(x.shape()));
  if (depth < 1) throw TensorError("lift_depth: depth must be >= 1");
  const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const T s = norm_preserving ? T(1.0 / std::sqrt(double(depth))) : T(1);
  const std::int64_t plane = std::int64_t(h) * w;
  const auto& xs = x.values();
  std::vector<T> out(std::size_t(std::int64_t(b) * c * depth * plane));
  for (std::int64_t bc = 0; bc < std::int64_t(b) * c; ++bc) {
    const T* in = xs.data() + bc * plane;
    for (int z = 0; z < depth; ++z) {
      T* os = out.data() + (bc * depth + z) * plane;
      for (std::int64_t i = 0; i < plane; ++i) os[i] = in[i] * s;
    }
  }
  auto backward = [x, depth, s, plane, b, c](const Tensor<T>& self) mutable {
    const auto& go = self.grad();
    auto& gx = x.grad();
    for (std::int64_t bc = 0; bc < std::int64_t(b) * c; ++bc)
      for (int z = 0; z < depth; ++z) {
        const T* gs = go.data() + (bc * depth + z) * plane;
        T* g = gx.data() + bc * plane;
        for (std::int64_t i = 0; i < plane; ++i) g[i] += gs[i] * s;
      }
  };
  return Tensor<T>::from_op({b, c, depth, h, w}, std::move(out), {x},
                            std::move(backward));
}

template <typename T>
Tensor<T> collapse_depth_mean(const Tensor<T>& x) {
  if (x.shape().size() != 5)
    throw TensorError("collapse_depth_mean: input must be rank 5, got " +
                      shape_str(x.shape()));
  const int b = x.dim(0), c = x.dim(1), d = x.dim(2), h = x.dim(3), w = x.dim(4);
  const std::int64_t plane = std::int64_t(h) * w;
  const T inv = T(1) / T(d);
  const auto& xs = x.values();
  std::vector<T> out(std::size_t(std::int64_t(b) * c * plane), T(0));
  for (std::int64_t bc = 0; bc < std::int64_t(b) * c; ++bc) {
    T* os = out.data() + bc * plane;
    for (int z = 0; z < d; ++z) {
      const T* in = xs.data() + (bc * d + z) * plane;
      for (std::int64_t i = 0; i < plane; ++i) os[i] += in[i];
    }
    for (std::int64_t i = 0; i < plane; ++i) os[i] *= inv;
  }
  auto backward = [x, b, c, d, plane, inv](const Tensor<T>& self) mutable {
    const auto& go = self.grad();
    auto& gx = x.grad();
    for (std::int64_t bc = 0; bc < std::int64_t(b) * c; ++bc)
      for (int z = 0; z < d; ++z) {
        T* g = gx.data() + (bc * d + z) * plane;
        const T* gs = go.data() + bc * plane;
        for (std::int64_t i = 0; i < plane; ++i) g[i] += gs[i] * inv;
      }
  };
  return Tensor<T>::from_op({b, c, h, w}, std::move(out), {x}, std::move(backward));
}

template <typename T>
Tensor<T> reduce_weighted(const Tensor<T>& x, const std::vector<T>& w) {
  if (std::int64_t(w.size()) != x.numel())
    throw TensorError("reduce_weighted: weight count " + std::to_string(w.size()) +
                      " does not match " + shape_str(x.shape()));
  const auto& xs = x.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) acc += double(w[i]) * double(xs[i]);
  auto wc = std::make_shared<std::vector<T>>(w);
  auto backward = [x, wc](const Tensor<T>& self) mutable {
    const T g = self.grad()[0];
    auto& gx = x.grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g * (*wc)[i];
  };
  return Tensor<T>::from_op({1}, {T(acc)}, {x}, std::move(backward));
}

#define VOXRAY_INSTANTIATE(T)                                               \
  template Tensor<T> maxpool3d(const Tensor<T>&);                           \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);   \
  template Tensor<T> reshape(const Tensor<T>&, const Shape&);               \
  template Tensor<T> lift_depth(const Tensor<T>&, int, bool);               \
  template Tensor<T> collapse_depth_mean(const Tensor<T>&);                 \
  template Tensor<T> reduce_weighted(const Tensor<T>&, const std::vector<T>&);

VOXRAY_INSTANTIATE(float)
VOXRAY_INSTANTIATE(double)
#undef VOXRAY_INSTANTIATE

}  // namespace voxray
