#pragma once

#include <cstdint>
#include <string_view>

namespace voxray {

// Counter-based generator. Every draw is a pure function of (seed, index),
// so consumers can address disjoint index ranges in parallel and still
// reproduce bit-identical sequences at any worker count.
struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;
};

// Raw 64-bit value at an absolute counter index (stateless).
std::uint64_t rng_u64_at(const RngState& s, std::uint64_t index);

// Uniform in [0,1) at an absolute counter index (stateless, 53-bit mantissa).
double rng_uniform_at(const RngState& s, std::uint64_t index);

// Standard normal at an absolute counter index (stateless; Box-Muller over
// the uniforms at 2*index and 2*index+1).
double rng_normal_at(const RngState& s, std::uint64_t index);

// Sequential draws; advance `counter`.
std::uint64_t rng_next_u64(RngState& s);
double rng_next_uniform(RngState& s);
double rng_next_normal(RngState& s);

// Derive an independent child stream. Consumes one tick of the parent so
// successive forks (with or without equal labels) never collide.
RngState rng_fork(RngState& parent, std::string_view label);

// Derive a stream from a root seed and a name, without a parent state.
RngState rng_stream(std::uint64_t root_seed, std::string_view name);

// Seeded Fisher-Yates shuffle of [0, n) using sequential draws.
void rng_shuffle(RngState& s, std::uint32_t* idx, std::size_t n);

}  // namespace voxray
