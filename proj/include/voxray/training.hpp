#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "voxray/drr.hpp"
#include "voxray/metrics.hpp"
#include "voxray/models.hpp"
#include "voxray/phantom.hpp"

namespace voxray {

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Machine-readable progress lines ({"event": ...}); the CLI forwards them.
using ProgressFn = std::function<void(const std::string& json_line)>;

// ---------------------------------------------------------------------------
// Dataset: rendered DRR / mask pairs on disk plus a JSON manifest.
// ---------------------------------------------------------------------------
struct DatasetSpec {
  PhantomSpec phantom;
  ProjectionGeometry geometry;
  int n_train = 50;
  int n_test = 10;
  int image = 32;  // network input size after downsampling
  std::uint64_t seed = 0;
  DomainShiftSpec shift;  // applied to volumes before rendering
  std::string out_dir;

  std::string to_json() const;
  static DatasetSpec from_json(const std::string& json);
};

void build_dataset(const DatasetSpec& spec, const ProgressFn& progress = {});

struct DatasetItem {
  int id = 0;
  std::uint64_t seed = 0;
  std::string split;  // "train" | "test"
  std::string image_path;
  std::string mask_path;
};

struct Dataset {
  DatasetSpec spec;
  std::string dir;
  std::vector<DatasetItem> items;

  std::vector<int> split_indices(const std::string& split) const;
  // Normalized [0,1] image as a flat row-major field.
  std::vector<float> load_image(int idx) const;
  MaskVolume load_mask(int idx) const;
};

Dataset load_dataset(const std::string& dir);

// ---------------------------------------------------------------------------
// Training.
// ---------------------------------------------------------------------------
struct TrainConfig {
  std::string model_family = "unet-dropout";
  std::string dataset_dir;
  std::string target_dataset_dir;  // phiseg-uda only
  std::string out_dir;
  double lr = 1e-4;
  int batch = 4;
  int epochs = 40;
  int patience = 10;  // early stop on this many epochs without val-Dice gain
  double beta = 1.0;  // KL weight, linear warmup over the first 10% of steps
  double recon_weight = 1.0;
  std::uint64_t seed = 0;

  std::string to_json() const;
  static TrainConfig from_json(const std::string& json);
};

struct TrainLog {
  struct Step {
    std::int64_t step = 0;
    double loss = 0.0, bce = 0.0, kl = 0.0, recon = 0.0;
  };
  struct Epoch {
    int epoch = 0;
    double val_dice = 0.0;
    double mean_loss = 0.0;
  };
  std::vector<Step> steps;
  std::vector<Epoch> epochs;
  int best_epoch = 0;
  double best_val_dice = 0.0;
  std::string rng_provenance;

  std::string to_json(const TrainConfig& cfg) const;
};

struct TrainResult {
  std::string checkpoint_path;
  std::string log_path;
  TrainLog log;
};

// Optimizes the configured loss; saves the best-by-validation-Dice
// checkpoint and a deterministic JSON log under cfg.out_dir. Aborts with a
// diagnostic if the loss stops being finite.
TrainResult train(const TrainConfig& cfg, const ProgressFn& progress = {});

// Alternating source-segmentation / target-reconstruction minibatches (1:1)
// with shared weights. Requires model_family "phiseg-uda".
TrainResult train_uda(const TrainConfig& cfg, const ProgressFn& progress = {});

// ---------------------------------------------------------------------------
// Evaluation.
// ---------------------------------------------------------------------------
struct EvalConfig {
  std::string checkpoint_path;
  std::string dataset_dir;
  std::string out_dir;
  std::string split = "test";
  int mc_samples = 20;
  double threshold = 0.5;
  bool median3d = false;
  bool project2d = false;  // add projected 2D Dice per case
  bool previews = false;   // PGM mid-slice previews
  std::uint64_t seed = 0;

  std::string to_json() const;
  static EvalConfig from_json(const std::string& json);
};

struct CaseMetrics {
  int id = 0;
  double dice = 0.0;          // headline: mean-probability mask
  double volume_ratio = 0.0;
  SampleBounds bounds;        // per-sample spread across MC draws
  double dice_2d = -1.0;      // projected evaluation; -1 when disabled
};

struct MetricsReport {
  std::vector<CaseMetrics> cases;
  BoundStats dice_across_cases;
  BoundStats ratio_across_cases;
  double mean_sample_dice_std = 0.0;  // mean over cases of per-case MC std
  double mean_dice2d = -1.0;
  std::string config_json;

  std::string to_json() const;
};

MetricsReport evaluate(const EvalConfig& cfg, const ProgressFn& progress = {});

}  // namespace voxray
