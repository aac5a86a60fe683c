#include <cmath>

#include "voxray/ops.hpp"

namespace voxray {

namespace {

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (!shape_eq(a.shape(), b.shape()))
    throw TensorError(std::string(op) + ": shape mismatch " +
                      shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

template <typename T>
inline T sigmoid_stable(T z) {
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

}  // namespace

template <typename T>
Tensor<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& target) {
  check_same_shape(logits, target, "bce_with_logits");
  const auto& z = logits.values();
  const auto& y = target.values();
  const std::size_t n = z.size();
  double acc = 0.0;  // fixed-order accumulation in double
  for (std::size_t i = 0; i < n; ++i) {
    const double zi = double(z[i]), yi = double(y[i]);
    acc += std::max(zi, 0.0) - zi * yi + std::log1p(std::exp(-std::abs(zi)));
  }
  const T mean = T(acc / double(n));
  auto backward = [logits, target, n](const Tensor<T>& self) mutable {
    const T g = self.grad()[0];
    const auto& z = logits.values();
    const auto& y = target.values();
    const T invn = T(1.0 / double(n));
    if (logits.requires_grad()) {
      auto& gz = logits.grad();
      for (std::size_t i = 0; i < n; ++i)
        gz[i] += g * (sigmoid_stable(z[i]) - y[i]) * invn;
    }
  };
  return Tensor<T>::from_op({1}, {mean}, {logits, target}, std::move(backward));
}

template <typename T>
Tensor<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  check_same_shape(pred, target, "mse_loss");
  const auto& p = pred.values();
  const auto& t = target.values();
  const std::size_t n = p.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = double(p[i]) - double(t[i]);
    acc += d * d;
  }
  const T mean = T(acc / double(n));
  auto backward = [pred, target, n](const Tensor<T>& self) mutable {
    const T g = self.grad()[0];
    const auto& p = pred.values();
    const auto& t = target.values();
    const T c = g * T(2.0 / double(n));
    if (pred.requires_grad()) {
      auto& gp = pred.grad();
      for (std::size_t i = 0; i < n; ++i) gp[i] += c * (p[i] - t[i]);
    }
    if (target.requires_grad()) {
      auto& gt = target.grad();
      for (std::size_t i = 0; i < n; ++i) gt[i] -= c * (p[i] - t[i]);
    }
  };
  return Tensor<T>::from_op({1}, {mean}, {pred, target}, std::move(backward));
}

template <typename T>
Tensor<T> kl_diag_gauss(const Tensor<T>& mu_q, const Tensor<T>& logvar_q,
                        const Tensor<T>& mu_p, const Tensor<T>& logvar_p) {
  check_same_shape(mu_q, logvar_q, "kl_diag_gauss");
  check_same_shape(mu_q, mu_p, "kl_diag_gauss");
  check_same_shape(mu_q, logvar_p, "kl_diag_gauss");
  const int batch = mu_q.dim(0);
  const auto& mq = mu_q.values();
  const auto& lq = logvar_q.values();
  const auto& mp = mu_p.values();
  const auto& lp = logvar_p.values();
  const std::size_t n = mq.size();
  // KL(q||p) per dimension:
  //   0.5 * (exp(lq-lp) + (mq-mp)^2 * exp(-lp) - 1 + lp - lq)
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dl = double(lq[i]) - double(lp[i]);
    const double dm = double(mq[i]) - double(mp[i]);
    acc += 0.5 * (std::exp(dl) + dm * dm * std::exp(-double(lp[i])) - 1.0 - dl);
  }
  const T val = T(acc / double(batch));
  auto backward = [mu_q, logvar_q, mu_p, logvar_p, batch](const Tensor<T>& self) mutable {
    const T s = self.grad()[0] / T(batch);
    const auto& mq = mu_q.values();
    const auto& lq = logvar_q.values();
    const auto& mp = mu_p.values();
    const auto& lp = logvar_p.values();
    const std::size_t n = mq.size();
    for (std::size_t i = 0; i < n; ++i) {
      const T ratio = std::exp(lq[i] - lp[i]);
      const T dm = (mq[i] - mp[i]) * std::exp(-lp[i]);
      if (mu_q.requires_grad()) mu_q.grad()[i] += s * dm;
      if (mu_p.requires_grad()) mu_p.grad()[i] -= s * dm;
      if (logvar_q.requires_grad())
        logvar_q.grad()[i] += s * T(0.5) * (ratio - T(1));
      if (logvar_p.requires_grad())
        logvar_p.grad()[i] +=
            s * T(0.5) * (T(1) - ratio - (mq[i] - mp[i]) * dm);
    }
  };
  return Tensor<T>::from_op({1}, {val}, {mu_q, logvar_q, mu_p, logvar_p},
                            std::move(backward));
}

template <typename T>
Tensor<T> reparam_sample(const Tensor<T>& mu, const Tensor<T>& logvar,
                         RngState& rng) {
  check_same_shape(mu, logvar, "reparam_sample");
  const auto& m = mu.values();
  const auto& lv = logvar.values();
  const std::size_t n = m.size();
  const RngState base = rng;
  rng.counter += 2 * n;  // normals consume uniform pairs
  auto eps = std::make_shared<std::vector<T>>(n);
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const T e = T(rng_normal_at(base, std::uint64_t(i)));
    (*eps)[i] = e;
    out[i] = m[i] + std::exp(lv[i] * T(0.5)) * e;
  }
  auto backward = [mu, logvar, eps](const Tensor<T>& self) mutable {
    const auto& go = self.grad();
    const auto& lv = logvar.values();
    if (mu.requires_grad()) {
      auto& gm = mu.grad();
      for (std::size_t i = 0; i < go.size(); ++i) gm[i] += go[i];
    }
    if (logvar.requires_grad()) {
      auto& gl = logvar.grad();
      for (std::size_t i = 0; i < go.size(); ++i)
        gl[i] += go[i] * T(0.5) * std::exp(lv[i] * T(0.5)) * (*eps)[i];
    }
  };
  return Tensor<T>::from_op(mu.shape(), std::move(out), {mu, logvar},
                            std::move(backward));
}

#define VOXRAY_INSTANTIATE(T)                                                  \
  template Tensor<T> bce_with_logits(const Tensor<T>&, const Tensor<T>&);     \
  template Tensor<T> mse_loss(const Tensor<T>&, const Tensor<T>&);            \
  template Tensor<T> kl_diag_gauss(const Tensor<T>&, const Tensor<T>&,        \
                                   const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> reparam_sample(const Tensor<T>&, const Tensor<T>&,       \
                                    RngState&);

VOXRAY_INSTANTIATE(float)
VOXRAY_INSTANTIATE(double)
#undef VOXRAY_INSTANTIATE

}  // namespace voxray
