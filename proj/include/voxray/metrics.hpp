#pragma once

#include <string>
#include <vector>

#include "voxray/drr.hpp"
#include "voxray/phantom.hpp"

namespace voxray {

// Probability field over a volume grid, values in [0,1].
struct ProbVolume {
  int d = 0, h = 0, w = 0;
  std::vector<float> values;
};

// Threshold, then a 3x3 median filter per axial (z) slice to remove sparse
// noise; median3d switches to the 3x3x3 variant.
MaskVolume binarize_and_filter(const ProbVolume& prob, double threshold = 0.5,
                               bool median3d = false);
MaskVolume median_filter_mask(const MaskVolume& mask, bool median3d = false);

// 2|A∩B| / (|A|+|B|); both-empty pairs score 1.
double dice(const MaskVolume& pred, const MaskVolume& gt);
double dice2d(const MaskImage& pred, const MaskImage& gt);

// |pred| / |gt|; requires a nonempty gt.
double volume_ratio(const MaskVolume& pred, const MaskVolume& gt);

struct BoundStats {
  double mean = 0.0, stdev = 0.0, min = 0.0, max = 0.0;
};
BoundStats bound_stats(const std::vector<double>& xs);

struct SampleBounds {
  BoundStats dice;
  BoundStats volume_ratio;
};

// Binarize-and-filter each MC sample independently, score it against gt, and
// aggregate into (mean, std, min, max) per metric.
SampleBounds uncertainty_bounds(const std::vector<ProbVolume>& samples,
                                const MaskVolume& gt, double threshold = 0.5);

}  // namespace voxray
