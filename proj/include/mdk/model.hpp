#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mdk/dataset.hpp"
#include "mdk/rng.hpp"
#include "mdk/tensor.hpp"

namespace mdk {

/// Masked-autoencoder regressor: shared pre-norm transformer encoder, a
/// shallow decoder that repaints masked patches, and a regression head that
/// reads a dedicated token. Defaults are the desk-scale shrink; the
/// full-scale configuration sits behind reference().
struct ModelConfig {
    std::size_t img_h = 32, img_w = 32;
    std::size_t patch = 8;
    std::size_t enc_blocks = 4;
    std::size_t enc_heads = 4;
    std::size_t enc_dim = 64;
    double mlp_ratio = 4.0;
    std::size_t dec_dim = 32;
    std::size_t dec_blocks = 2;
    std::size_t dec_heads = 4;
    double mask_ratio = 0.75;
    double alpha = 0.1;
    bool reference_scale = false;

    /// Full-scale configuration (224x224, p=16, 12 encoder blocks of width
    /// 192 with 3 heads, 2 decoder blocks of width 128 with 16 heads).
    static ModelConfig reference();

    void validate() const;
    std::size_t tokens_per_side_h() const { return img_h / patch; }
    std::size_t tokens_per_side_w() const { return img_w / patch; }
    std::size_t token_count() const { return tokens_per_side_h() * tokens_per_side_w(); }
    std::size_t patch_len() const { return patch * patch; }
    std::size_t enc_mlp_dim() const;
    std::size_t dec_mlp_dim() const;
};

/// Named parameter map in a canonical order. Positional tables and the label
/// scaler ride along as frozen entries so checkpoints are self-contained.
struct ModelParams {
    std::vector<std::string> order;
    std::map<std::string, Tensor> values;

    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;

    /// False for the fixed sinusoidal position tables and the label scaler.
    static bool trainable(const std::string& name);

    /// Every canonical name present exactly once, shapes per config, all
    /// finite; the error names the first offending entry.
    void validate(const ModelConfig& cfg) const;
};

std::vector<std::string> canonical_param_names(const ModelConfig& cfg);
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

/// Fixed sinusoidal position table with `rows` positions of width dim.
Tensor sinusoidal_positions(std::size_t rows, std::size_t dim);

/// Rows are patches in row-major grid order; within a row, patch pixels in
/// row-major order. Inverse available for any [token_count, patch_len] matrix.
Tensor patchify(const Tensor& img, std::size_t patch);
Tensor unpatchify(const Tensor& tokens, std::size_t img_h, std::size_t img_w, std::size_t patch);

struct MaskIndices {
    std::vector<std::size_t> kept, masked;  // ascending, disjoint, covering
};

/// round(rho * n_tok) masked tokens drawn uniformly without replacement.
MaskIndices random_mask(std::size_t n_tok, double rho, Rng& rng);

struct LossBreakdown {
    double total = 0.0;
    double l_reg = 0.0;
    double l_ssat = 0.0;
    std::size_t masked_patch_count = 0;
};

/// The one place the convex combination is written out, so the identity
/// total == alpha*l_reg + (1-alpha)*l_ssat holds bitwise everywhere.
LossBreakdown make_breakdown(double alpha, double l_reg, double l_ssat,
                             std::size_t masked_patch_count);

/// Mean squared error over the masked rows only; kept rows never contribute.
double ssat_loss(const Tensor& recon_patches, const Tensor& target_patches,
                 const std::vector<std::size_t>& masked);

enum class ForwardMode { RegressionOnly, Joint };

struct ForwardResult {
    double prediction_months = 0.0;
    Tensor recon_patches;  // [token_count, patch_len], Joint mode only
    LossBreakdown loss;    // populated when a label is supplied
};

/// Regression branch reads the full token set; the reconstruction branch sees
/// only kept tokens through the same encoder weights. `label_months` may be
/// null at inference. `mask` is required in Joint mode.
ForwardResult forward(const ModelConfig& cfg, const ModelParams& params, const Tensor& img,
                      const MaskIndices* mask, ForwardMode mode,
                      const double* label_months = nullptr);

struct TrainItem {
    Tensor image;  // [img_h, img_w]
    double label_months = 0.0;
    MaskIndices mask;
};

/// Exact reverse-mode gradients of the mean batch loss. Returns one gradient
/// per canonical parameter (frozen entries included). Joint mode uses the
/// convex combination; RegressionOnly differentiates l_reg alone.
std::map<std::string, Tensor> backward(const ModelConfig& cfg, const ModelParams& params,
                                       const std::vector<TrainItem>& batch,
                                       LossBreakdown* loss_out = nullptr,
                                       ForwardMode mode = ForwardMode::Joint);

/// Forward-only mean batch loss; the same scalar backward differentiates.
double batch_loss(const ModelConfig& cfg, const ModelParams& params,
                  const std::vector<TrainItem>& batch, LossBreakdown* breakdown = nullptr,
                  ForwardMode mode = ForwardMode::Joint);

// --- schedule / optimizer ---

struct ScheduleConfig {
    double lambda_t = 2.5e-4;
    std::size_t warmup_steps = 5;
    std::size_t total_steps = 0;  // required, no default

    void validate() const;
};

/// Linear ramp to lambda_t over the warmup, then the half-cosine decay to 0
/// at total_steps. Defined for 0 <= i <= total_steps.
double lr_at(std::size_t i, const ScheduleConfig& s);

struct OptimState {
    std::size_t step = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double weight_decay = 0.05;
    std::map<std::string, Tensor> m, v;
};

/// Decoupled-decay update with bias-corrected moments. Frozen parameters are
/// left untouched.
void adamw_step(ModelParams& params, const std::map<std::string, Tensor>& grads,
                OptimState& state, double lr);

// --- training ---

struct TrainOptions {
    std::size_t batch_size = 16;
    std::uint64_t seed = 42;
    std::string checkpoint_path;  // refreshed with the last finite-loss params
    bool augment_train = true;
    AugmentPolicy augment;  // target size is overridden by the model config
};

struct StepRecord {
    std::size_t step = 0;
    double lr = 0.0;
    LossBreakdown loss;
};

struct TrainResult {
    ModelParams params;
    OptimState optim;
    std::vector<StepRecord> history;
    bool diverged = false;
};

/// Mini-batch training over the train bucket. Labels are standardized by the
/// train-set mean/std (stored in the frozen label_scaler entry, undone at
/// prediction time). A non-finite loss aborts the run and the last finite
/// step's parameters are returned.
TrainResult train(const DatasetSplit& split, const ModelConfig& cfg, const ScheduleConfig& scfg,
                  const TrainOptions& opts);

/// Months-valued prediction for one image (resized to the model input).
double predict_months(const ModelConfig& cfg, const ModelParams& params, const Tensor& img);

// --- checkpoints ---

/// "MDCK" container: magic, config block, named f64 entries, optimizer block.
void write_checkpoint(const std::string& path, const ModelConfig& cfg, const ModelParams& params,
                      const OptimState* optim = nullptr);

struct Checkpoint {
    ModelConfig config;
    ModelParams params;
    OptimState optim;
    bool has_optim = false;
};
Checkpoint read_checkpoint(const std::string& path);

}  // namespace mdk
