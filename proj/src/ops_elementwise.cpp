#include <cmath>

#include "voxray/ops.hpp"
#include "voxray/parallel.hpp"

namespace voxray {

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  const auto& xs = x.values();
  std::vector<T> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = xs[i] > T(0) ? xs[i] : T(0);
  auto backward = [x](const Tensor<T>& self) mutable {
    const auto& go = self.grad();
    const auto& xs = x.values();
    auto& gx = x.grad();
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (xs[i] > T(0)) gx[i] += go[i];
  };
  return Tensor<T>::from_op(x.shape(), std::move(out), {x}, std::move(backward));
}

template <typename T>
inline T sigmoid_stable(T z) {
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  const auto& xs = x.values();
  std::vector<T> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = sigmoid_stable(xs[i]);
  auto backward = [x](const Tensor<T>& self) mutable {
    const auto& go = self.grad();
    const auto& s = self.values();
    auto& gx = x.grad();
    for (std::size_t i = 0; i < s.size(); ++i)
      gx[i] += go[i] * s[i] * (T(1) - s[i]);
  };
  return Tensor<T>::from_op(x.shape(), std::move(out), {x}, std::move(backward));
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, RngState& rng, bool active) {
  if (p < 0.0 || p >= 1.0)
    throw TensorError("dropout: probability must be in [0,1), got " +
                      std::to_string(p));
  if (!active || p == 0.0) return x;
  const auto& xs = x.values();
  const std::size_t n = xs.size();
  // Masks are addressed by element index on a private stream, so the draw is
  // independent of worker count and can be replayed in the backward pass.
  const RngState base = rng;
  rng.counter += n;
  const T inv = T(1.0 / (1.0 - p));
  std::vector<T> out(n);
  parallel_for(std::int64_t(n), [&](std::int64_t i) {
    out[std::size_t(i)] = rng_uniform_at(base, std::uint64_t(i)) < p
                              ? T(0)
                              : xs[std::size_t(i)] * inv;
  });
  auto backward = [x, base, p, inv](const Tensor<T>& self) mutable {
    const auto& go = self.grad();
    auto& gx = x.grad();
    parallel_for(std::int64_t(go.size()), [&](std::int64_t i) {
      if (rng_uniform_at(base, std::uint64_t(i)) >= p)
        gx[std::size_t(i)] += go[std::size_t(i)] * inv;
    });
  };
  return Tensor<T>::from_op(x.shape(), std::move(out), {x}, std::move(backward));
}

template <typename T>
Tensor<T> dropblock3d(const Tensor<T>& x, int block_size, double drop_rate,
                      RngState& rng, bool active) {
  if (x.shape().size() != 5)
    throw TensorError("dropblock3d: input must be rank 5, got " +
                      shape_str(x.shape()));
  if (drop_rate < 0.0 || drop_rate >= 1.0)
    throw TensorError("dropblock3d: drop_rate must be in [0,1), got " +
                      std::to_string(drop_rate));
  const int d = x.dim(2), h = x.dim(3), w = x.dim(4);
  if (block_size < 1 || block_size > d || block_size > h || block_size > w)
    throw TensorError("dropblock3d: block_size " + std::to_string(block_size) +
                      " does not fit " + shape_str(x.shape()));
  if (!active || drop_rate == 0.0) return x;

  const int bs = block_size;
  const std::int64_t vd = d - bs + 1, vh = h - bs + 1, vw = w - bs + 1;
  const std::int64_t slice = std::int64_t(d) * h * w;
  const std::int64_t sites = vd * vh * vw;
  const int nslices = x.dim(0) * x.dim(1);
  // Seed-site rate chosen so the expected dropped fraction approximates
  // drop_rate (drop_rate / bs^3, corrected for the valid seeding region).
  const double gamma = std::min(
      1.0, drop_rate / double(bs) / bs / bs * double(slice) / double(sites));

  const RngState base = rng;
  rng.counter += std::uint64_t(nslices) * std::uint64_t(sites);

  const auto& xs = x.values();
  std::vector<T> out(xs.size());
  // Per-slice survivor scale: numel/kept keeps the activation sum unbiased.
  auto scales = std::make_shared<std::vector<T>>(std::size_t(nslices));
  auto mask = std::make_shared<std::vector<std::uint8_t>>(xs.size(), std::uint8_t(1));
  parallel_for(nslices, [&](std::int64_t s) {
    std::uint8_t* ms = mask->data() + s * slice;
    for (std::int64_t site = 0; site < sites; ++site) {
      if (rng_uniform_at(base, std::uint64_t(s * sites + site)) >= gamma) continue;
      const int z0 = int(site / (vh * vw));
      const int y0 = int((site / vw) % vh);
      const int x0 = int(site % vw);
      for (int z = z0; z < z0 + bs; ++z)
        for (int y = y0; y < y0 + bs; ++y) {
          std::uint8_t* row = ms + (std::int64_t(z) * h + y) * w;
          for (int xx = x0; xx < x0 + bs; ++xx) row[xx] = 0;
        }
    }
    std::int64_t kept = 0;
    for (std::int64_t i = 0; i < slice; ++i) kept += ms[i];
    const T scale = kept > 0 ? T(double(slice) / double(kept)) : T(0);
    (*scales)[std::size_t(s)] = scale;
    const T* in = xs.data() + s * slice;
    T* os = out.data() + s * slice;
    for (std::int64_t i = 0; i < slice; ++i) os[i] = ms[i] ? in[i] * scale : T(0);
  });

  auto backward = [x, mask, scales, slice](const Tensor<T>& self) mutable {
    const auto& go = self.grad();
    auto& gx = x.grad();
    for (std::size_t i = 0; i < go.size(); ++i)
      if ((*mask)[i]) gx[i] += go[i] * (*scales)[std::size_t(std::int64_t(i) / slice)];
  };
  return Tensor<T>::from_op(x.shape(), std::move(out), {x}, std::move(backward));
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (!shape_eq(a.shape(), b.shape()))
    throw TensorError("add: shape mismatch " + shape_str(a.shape()) + " vs " +
                      shape_str(b.shape()));
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  auto backward = [a, b](const Tensor<T>& self) mutable {
    const auto& go = self.grad();
    if (a.requires_grad()) {
      auto& ga = a.grad();
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    }
    if (b.requires_grad()) {
      auto& gb = b.grad();
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i];
    }
  };
  return Tensor<T>::from_op(a.shape(), std::move(out), {a, b}, std::move(backward));
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T c) {
  const auto& xs = x.values();
  std::vector<T> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = xs[i] * c;
  auto backward = [x, c](const Tensor<T>& self) mutable {
    const auto& go = self.grad();
    auto& gx = x.grad();
    for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * c;
  };
  return Tensor<T>::from_op(x.shape(), std::move(out), {x}, std::move(backward));
}

#define VOXRAY_INSTANTIATE(T)                                              \
  template Tensor<T> relu(const Tensor<T>&);                               \
  template Tensor<T> sigmoid(const Tensor<T>&);                            \
  template Tensor<T> dropout(const Tensor<T>&, double, RngState&, bool);   \
  template Tensor<T> dropblock3d(const Tensor<T>&, int, double, RngState&, \
                                 bool);                                    \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> scale(const Tensor<T>&, T);

VOXRAY_INSTANTIATE(float)
VOXRAY_INSTANTIATE(double)
#undef VOXRAY_INSTANTIATE

}  // namespace voxray
