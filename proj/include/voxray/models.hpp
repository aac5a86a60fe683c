#pragma once

#include <memory>
#include <string>
#include <vector>

#include "voxray/io.hpp"
#include "voxray/ops.hpp"
#include "voxray/rng.hpp"
#include "voxray/tensor.hpp"

namespace voxray {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Known families: unet-det, unet-dropout, unet-dropblock, phiseg,
// phiseg-nofusion, phiseg-uda.
struct ModelConfig {
  std::string family = "unet-dropout";

  // Target volume extents and the (square) input image size.
  int depth = 32, height = 32, width = 32;
  int image = 32;

  // Structural reconstruction module: one transposed conv per entry, z-kernel
  // 4 / in-plane kernel 3, padding 1; the z-stride product must equal depth.
  std::vector<int> srm_z_strides = {2, 2, 2, 2, 2};
  int srm_channels = 8;

  int levels = 4;          // U-Net resolution levels
  int base_channels = 8;   // doubled per level, capped at 64

  double dropout_p = 0.6;
  int dropblock_size = 2;
  double dropblock_rate = 0.1;

  int latent_levels = 3;   // coarsest levels carrying latents
  int latent_channels = 4;
  bool fusion = true;
  bool lift_norm_preserving = true;
  bool uda_head = false;   // reconstruction output head (phiseg-uda)

  bool is_phiseg() const { return family.rfind("phiseg", 0) == 0; }
  int level_channels(int level) const;  // level 0 = finest
  void validate() const;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& json);
};

ModelConfig make_model_config(const std::string& family, int volume_dims,
                              int image_size);

// Ordered named parameters; registration order defines checkpoint order.
struct ParamStore {
  std::vector<std::string> names;
  std::vector<TensorF> tensors;

  TensorF& add(const std::string& name, const Shape& shape,
               std::vector<float> values);
  const TensorF* find(const std::string& name) const;
  std::int64_t total_count() const;
};

// Per-resolution latent parameters and samples, coarsest level first.
struct LatentStack {
  std::vector<TensorF> mu, logvar, sample;
  std::size_t size() const { return mu.size(); }
};

struct LossTerms {
  TensorF total;
  double bce = 0.0;
  double kl = 0.0;
  double recon = 0.0;
  std::vector<double> kl_per_level;
};

class Model {
 public:
  virtual ~Model() = default;
  virtual const ModelConfig& config() const = 0;
  virtual ParamStore& params() = 0;

  // Loss graph for one labeled batch: x [B,1,I,I], gt [B,1,D,H,W].
  virtual LossTerms training_loss(const TensorF& x, const TensorF& gt,
                                  RngState& rng, double beta) = 0;

  // Deterministic probability volume (no dropout, latents at their means).
  virtual TensorF predict_mean(const TensorF& x) = 0;

  // One stochastic probability volume; equals predict_mean for
  // deterministic families.
  virtual TensorF predict_sample(const TensorF& x, RngState& rng) = 0;

  virtual bool stochastic() const = 0;

  Checkpoint to_checkpoint() const;
  void load_parameters(const Checkpoint& ckpt);
};

std::unique_ptr<Model> make_model(const ModelConfig& cfg, std::uint64_t seed);
std::unique_ptr<Model> model_from_checkpoint(const Checkpoint& ckpt);

// T independent stochastic probability volumes from per-sample forked
// streams (identical volumes for deterministic families).
std::vector<TensorF> mc_sample(Model& model, const TensorF& x, int t,
                               RngState& rng);

// ---------------------------------------------------------------------------
// Introspection surface used by tests; both concrete models expose their
// stages.
// ---------------------------------------------------------------------------
class UNetModel;
class PhiSegModel;

class UNetModel final : public Model {
 public:
  UNetModel(const ModelConfig& cfg, std::uint64_t seed);
  explicit UNetModel(const ModelConfig& cfg);  // uninitialized params

  const ModelConfig& config() const override { return cfg_; }
  ParamStore& params() override { return params_; }

  // Transposed-conv stack inflating [B,1,I,I] to [B,C,depth,I,I].
  TensorF srm_forward(const TensorF& x);
  // 3D U-Net over SRM features; voxelwise logits [B,1,D,H,W].
  TensorF unet_forward(const TensorF& features, bool stochastic_active,
                       RngState& rng);
  TensorF logits(const TensorF& x, bool stochastic_active, RngState& rng);

  LossTerms training_loss(const TensorF& x, const TensorF& gt, RngState& rng,
                          double beta) override;
  TensorF predict_mean(const TensorF& x) override;
  TensorF predict_sample(const TensorF& x, RngState& rng) override;
  bool stochastic() const override;

 private:
  void build();
  ModelConfig cfg_;
  ParamStore params_;
};

class PhiSegModel final : public Model {
 public:
  PhiSegModel(const ModelConfig& cfg, std::uint64_t seed);
  explicit PhiSegModel(const ModelConfig& cfg);

  const ModelConfig& config() const override { return cfg_; }
  ParamStore& params() override { return params_; }

  // Strided 3D convs collapsing gt depth to 1 -> [B,C,I,I] feature maps.
  TensorF distill_forward(const TensorF& gt);

  // Posterior encode: q(z | x, gt). Draws samples with `rng`.
  LatentStack encode_posterior(const TensorF& x, const TensorF& gt,
                               RngState& rng);
  // Prior encode: p(z | x). When `condition_on` is given (posterior samples),
  // the hierarchy is evaluated at those samples and no draws happen; when
  // rng is null the stack's own means are used as samples.
  LatentStack encode_prior(const TensorF& x, const LatentStack* condition_on,
                           RngState* rng);

  // 3D likelihood decoder over lifted latents; returns logits s.
  TensorF decode(const LatentStack& z);
  // Fusion: conv features of x broadcast along depth, concatenated with s,
  // convolved to s'. Initialized as identity on s.
  TensorF fusion_forward(const TensorF& x, const TensorF& s);
  // Full decode including fusion when enabled.
  TensorF decode_with_fusion(const TensorF& x, const LatentStack& z);

  // Reconstruction branch (phiseg-uda): shared encoders/decoder, separate
  // 1-conv head, depth-mean collapse back to a 2D image.
  TensorF reconstruct2d(const TensorF& x);
  TensorF recon_loss(const TensorF& x_tgt);

  LossTerms training_loss(const TensorF& x, const TensorF& gt, RngState& rng,
                          double beta) override;
  TensorF predict_mean(const TensorF& x) override;
  TensorF predict_sample(const TensorF& x, RngState& rng) override;
  bool stochastic() const override { return true; }

 private:
  void build();
  struct Encoder;  // weights are named slices of params_
  ModelConfig cfg_;
  ParamStore params_;
};

// Source-domain segmentation loss plus target-domain reconstruction loss
// (shared weights); returned separately for weighting.
std::pair<LossTerms, TensorF> uda_forward(PhiSegModel& model,
                                          const TensorF& x_src,
                                          const TensorF& gt_src,
                                          const TensorF& x_tgt, RngState& rng,
                                          double beta);

}  // namespace voxray
