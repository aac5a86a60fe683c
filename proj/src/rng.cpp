#include "voxray/rng.hpp"

#include <cmath>
#include <numbers>

namespace voxray {

namespace {

// splitmix64 finalizer over a combined (seed, index) word. Bijective in the
// index for a fixed seed, also used as the general-purpose hash below.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_str(std::string_view s) {
  // FNV-1a
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace

std::uint64_t rng_u64_at(const RngState& s, std::uint64_t index) {
  return mix64(s.seed + 0x9E3779B97F4A7C15ull * (s.counter + index + 1));
}

double rng_uniform_at(const RngState& s, std::uint64_t index) {
  return double(rng_u64_at(s, index) >> 11) * 0x1.0p-53;
}

double rng_normal_at(const RngState& s, std::uint64_t index) {
  // Box-Muller; u1 shifted away from zero so log() stays finite.
  const double u1 =
      (double(rng_u64_at(s, 2 * index) >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = double(rng_u64_at(s, 2 * index + 1) >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t rng_next_u64(RngState& s) {
  const std::uint64_t v = rng_u64_at(s, 0);
  ++s.counter;
  return v;
}

double rng_next_uniform(RngState& s) {
  return double(rng_next_u64(s) >> 11) * 0x1.0p-53;
}

double rng_next_normal(RngState& s) {
  const double u1 = (double(rng_next_u64(s) >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = double(rng_next_u64(s) >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

RngState rng_fork(RngState& parent, std::string_view label) {
  const std::uint64_t tick = rng_next_u64(parent);
  return RngState{mix64(tick ^ hash_str(label)), 0};
}

RngState rng_stream(std::uint64_t root_seed, std::string_view name) {
  return RngState{mix64(root_seed ^ hash_str(name)), 0};
}

void rng_shuffle(RngState& s, std::uint32_t* idx, std::size_t n) {
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = std::size_t(rng_next_u64(s) % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace voxray
