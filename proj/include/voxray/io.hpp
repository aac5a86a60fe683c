#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "voxray/drr.hpp"
#include "voxray/phantom.hpp"
#include "voxray/tensor.hpp"

namespace voxray {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// VOLB: magic "VOLB", u8 version=1, u8 dtype (0=f32, 1=u8), 3x u32 dims
// (D,H,W), 3x f32 spacing mm, raw little-endian data, x fastest then y then z.
// ---------------------------------------------------------------------------
void write_volb(const std::string& path, const VoxelVolume& vol);
void write_volb(const std::string& path, const MaskVolume& mask,
                const std::array<float, 3>& spacing_mm);

struct VolbFile {
  std::uint8_t dtype = 0;
  int d = 0, h = 0, w = 0;
  std::array<float, 3> spacing = {1.0f, 1.0f, 1.0f};
  std::vector<float> f32;
  std::vector<std::uint8_t> u8;

  VoxelVolume as_volume() const;
  MaskVolume as_mask() const;  // u8 directly, f32 via != 0
};
VolbFile read_volb(const std::string& path);

// ---------------------------------------------------------------------------
// IMGF: magic "IMGF", u8 version=1, 2x u32 dims (rows, cols), f32 pixel
// spacing mm, f32 little-endian row-major data.
// ---------------------------------------------------------------------------
void write_imgf(const std::string& path, const DRRImage& img);
DRRImage read_imgf(const std::string& path);

// 16-bit PGM preview, max-normalized.
void write_pgm16(const std::string& path, const float* data, int rows, int cols);

// ---------------------------------------------------------------------------
// CKPT: magic "CKPT", u8 version=1, u32 tensor count, per tensor u32 name
// length, UTF-8 name, u32 rank, rank x u32 dims, f32 data; tensors in
// deterministic architecture order. Metadata (architecture tag + config
// echo) rides as a leading byte-packed tensor named "meta/json".
// ---------------------------------------------------------------------------
struct CheckpointTensor {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::string arch;         // model family tag
  std::string config_json;  // config echo
  std::vector<CheckpointTensor> tensors;
};

void write_ckpt(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_ckpt(const std::string& path);

// Shared helpers.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace voxray
