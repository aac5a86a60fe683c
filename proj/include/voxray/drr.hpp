#pragma once

#include <cstdint>
#include <vector>

#include "voxray/phantom.hpp"

namespace voxray {

// Fixed anterior-posterior view: rays travel along +y, detector rows map to
// +z and columns to +x, isocenter at the volume center. The volume frame has
// its origin at the (0,0,0) voxel corner.
struct ProjectionGeometry {
  enum class Mode { cone, parallel };
  Mode mode = Mode::cone;
  double source_to_isocenter_mm = 2000.0;  // cone only
  // Detector plane beyond the volume; <= 0 selects half the volume's
  // y-extent plus a 2 mm margin.
  double isocenter_to_detector_mm = 0.0;
  int det_rows = 128;
  int det_cols = 128;
  double pixel_mm = 0.51;
};

// Projection image. Values are path integrals of nonnegative density
// (mm * density); after normalize_image they live in [0,1] and the applied
// min/max are recorded.
struct DRRImage {
  int rows = 0, cols = 0;
  double pixel_mm = 0.51;
  std::vector<float> values;
  bool normalized = false;
  float norm_min = 0.0f, norm_max = 0.0f;

  std::int64_t index(int r, int c) const { return std::int64_t(r) * cols + c; }
  float at(int r, int c) const { return values[index(r, c)]; }
};

struct MaskImage {
  int rows = 0, cols = 0;
  std::vector<std::uint8_t> values;
  std::int64_t count() const;
};

// Exact Siddon-Jacobs line integrals of the HU-derived density
// mu = max(0, (HU + 1000) / 1000). Rays that miss the volume produce 0.
DRRImage siddon_raytrace(const VoxelVolume& vol, const ProjectionGeometry& geom);

// Same integrator over raw values (no HU mapping); used for mask projection
// and analytic tests.
DRRImage siddon_raytrace_density(const VoxelVolume& density,
                                 const ProjectionGeometry& geom);

// Explicit per-pixel projection weights m(i,j,k): (voxel linear index,
// intersection length in mm), in ray-walk order. Applying them to a density
// field in order reproduces siddon_raytrace_density bitwise.
struct RayWeights {
  int rows = 0, cols = 0;
  std::vector<std::vector<std::pair<std::int64_t, double>>> entries;
};
RayWeights extract_ray_weights(const ProjectionGeometry& geom, int d, int h,
                               int w, const std::array<float, 3>& spacing_mm);

// Box-average downsampling when target extents divide the source;
// area-weighted otherwise.
DRRImage downsample_image(const DRRImage& img, int rows, int cols);

// (v - min) / (max - min); a constant image maps to all zeros. Records the
// min/max used.
DRRImage normalize_image(const DRRImage& img);

// Raytrace the mask as a density field and binarize where the in-mask path
// length exceeds half the smallest voxel spacing.
MaskImage project_mask(const MaskVolume& mask,
                       const std::array<float, 3>& spacing_mm,
                       const ProjectionGeometry& geom);

}  // namespace voxray
