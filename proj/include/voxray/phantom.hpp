#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "voxray/rng.hpp"

namespace voxray {

constexpr float kHuAir = -1000.0f;
constexpr float kHuMin = -1024.0f;
constexpr float kHuMax = 3000.0f;

// 3D scalar field in Hounsfield units, index (z, y, x) with x fastest.
struct VoxelVolume {
  int d = 0, h = 0, w = 0;
  std::array<float, 3> spacing = {1.0f, 1.0f, 1.0f};  // mm per (z, y, x)
  std::vector<float> values;

  std::int64_t numel() const { return std::int64_t(d) * h * w; }
  std::int64_t index(int z, int y, int x) const {
    return (std::int64_t(z) * h + y) * w + x;
  }
  float& at(int z, int y, int x) { return values[index(z, y, x)]; }
  float at(int z, int y, int x) const { return values[index(z, y, x)]; }
};

struct MaskVolume {
  int d = 0, h = 0, w = 0;
  std::vector<std::uint8_t> values;

  std::int64_t numel() const { return std::int64_t(d) * h * w; }
  std::int64_t index(int z, int y, int x) const {
    return (std::int64_t(z) * h + y) * w + x;
  }
  std::int64_t count() const;
};

struct PhantomSpec {
  enum class Kind { thorax, ribcage };
  Kind kind = Kind::thorax;
  int dims = 32;  // cubic volume, >= 16
  std::array<float, 3> spacing_mm = {1.0f, 1.0f, 1.0f};

  // Body envelope semi-axes as a fraction of the half-extent.
  float body_fill = 0.92f;

  // Thorax: per-lung semi-axis fractions (of the body envelope) and jitter.
  float lung_rx = 0.34f, lung_ry = 0.52f, lung_rz = 0.62f;
  float lung_size_jitter = 0.12f;   // relative
  float lung_pos_jitter = 0.05f;    // fraction of extent
  float lung_tilt_max_rad = 0.12f;  // in-plane orientation jitter
  float soft_hu_lo = 20.0f, soft_hu_hi = 50.0f;
  float lung_hu = -800.0f;

  // Ribcage: paired curved tubes over soft tissue with organ blobs.
  int rib_pairs_min = 4, rib_pairs_max = 6;  // 8..12 ribs
  float rib_radius_lo = 1.0f, rib_radius_hi = 1.6f;  // voxels
  float bone_hu_lo = 1800.0f, bone_hu_hi = 1900.0f;
};

struct DomainShiftSpec {
  float gain = 1.0f;
  float offset_hu = 0.0f;
  float noise_sigma_hu = 0.0f;
  bool occluder = false;
  // Occluder slab in fractional volume coordinates [0,1) per axis (z, y, x).
  std::array<float, 3> occluder_pos = {0.30f, 0.35f, 0.20f};
  std::array<float, 3> occluder_size = {0.30f, 0.30f, 0.35f};
  float occluder_added_hu = 600.0f;

  bool is_identity() const {
    return gain == 1.0f && offset_hu == 0.0f && noise_sigma_hu == 0.0f && !occluder;
  }
};

// Deterministic per (spec, seed). Thorax: water-equivalent body ellipsoid
// containing two disjoint air-filled lungs; mask marks lung voxels.
std::pair<VoxelVolume, MaskVolume> generate_thorax(const PhantomSpec& spec,
                                                   std::uint64_t seed);

// Ribcage: 8-12 paired curved tubular ribs at bone HU over soft tissue with
// embedded organ blobs; mask is exactly the bone HU band.
std::pair<VoxelVolume, MaskVolume> generate_ribcage(const PhantomSpec& spec,
                                                    std::uint64_t seed);

std::pair<VoxelVolume, MaskVolume> generate_phantom(const PhantomSpec& spec,
                                                    std::uint64_t seed);

// mask(v) = 1  iff  lo <= value(v) <= hi.
MaskVolume threshold_mask(const VoxelVolume& vol, float lo, float hi);

// gain/offset remap, seeded additive Gaussian noise, optional occluder slab;
// output clamped to the valid HU range.
VoxelVolume apply_domain_shift(const VoxelVolume& vol,
                               const DomainShiftSpec& shift,
                               std::uint64_t seed);

// Symmetric crop; odd remainders drop the trailing (high-index) side.
VoxelVolume center_crop(const VoxelVolume& vol, int d, int h, int w);
MaskVolume center_crop(const MaskVolume& mask, int d, int h, int w);

// 26-connectivity component count (used by phantom invariants).
int connected_components_26(const MaskVolume& mask);

}  // namespace voxray
