#include "mdk/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "mdk/autograd.hpp"
#include "mdk/eigen_util.hpp"
#include "mdk/errors.hpp"
#include "mdk/io.hpp"

namespace mdk {

namespace {

std::size_t scaled_dim(double ratio, std::size_t dim) {
    return static_cast<std::size_t>(std::lround(ratio * static_cast<double>(dim)));
}

enum class InitKind { Uniform, Zero, One, EncoderPositions, DecoderPositions, LabelScaler };

struct ParamSpec {
    std::string name;
    std::size_t rows = 0, cols = 0;
    InitKind init = InitKind::Zero;
};

void append_block_specs(std::vector<ParamSpec>& out, const std::string& stem, std::size_t dim,
                        std::size_t mlp_dim) {
    auto p = [&](const char* leaf, std::size_t r, std::size_t c, InitKind k) {
        out.push_back(ParamSpec{stem + leaf, r, c, k});
    };
    p("ln1.g", 1, dim, InitKind::One);
    p("ln1.b", 1, dim, InitKind::Zero);
    p("attn.wq", dim, dim, InitKind::Uniform);
    p("attn.bq", 1, dim, InitKind::Zero);
    p("attn.wk", dim, dim, InitKind::Uniform);
    p("attn.bk", 1, dim, InitKind::Zero);
    p("attn.wv", dim, dim, InitKind::Uniform);
    p("attn.bv", 1, dim, InitKind::Zero);
    p("attn.wo", dim, dim, InitKind::Uniform);
    p("attn.bo", 1, dim, InitKind::Zero);
    p("ln2.g", 1, dim, InitKind::One);
    p("ln2.b", 1, dim, InitKind::Zero);
    p("mlp.w1", dim, mlp_dim, InitKind::Uniform);
    p("mlp.b1", 1, mlp_dim, InitKind::Zero);
    p("mlp.w2", mlp_dim, dim, InitKind::Uniform);
    p("mlp.b2", 1, dim, InitKind::Zero);
}

std::vector<ParamSpec> param_layout(const ModelConfig& cfg) {
    const std::size_t n1 = cfg.token_count() + 1;
    const std::size_t pl = cfg.patch_len();
    const std::size_t de = cfg.enc_dim, dd = cfg.dec_dim;
    std::vector<ParamSpec> out;
    out.push_back({"patch_proj.w", pl, de, InitKind::Uniform});
    out.push_back({"patch_proj.b", 1, de, InitKind::Zero});
    out.push_back({"reg_token", 1, de, InitKind::Zero});
    out.push_back({"enc_pos", n1, de, InitKind::EncoderPositions});
    for (std::size_t b = 0; b < cfg.enc_blocks; ++b)
        append_block_specs(out, "enc." + std::to_string(b) + ".", de, cfg.enc_mlp_dim());
    out.push_back({"enc_norm.g", 1, de, InitKind::One});
    out.push_back({"enc_norm.b", 1, de, InitKind::Zero});
    out.push_back({"reg_head.w", de, 1, InitKind::Uniform});
    out.push_back({"reg_head.b", 1, 1, InitKind::Zero});
    out.push_back({"dec_embed.w", de, dd, InitKind::Uniform});
    out.push_back({"dec_embed.b", 1, dd, InitKind::Zero});
    out.push_back({"mask_token", 1, dd, InitKind::Zero});
    out.push_back({"dec_pos", n1, dd, InitKind::DecoderPositions});
    for (std::size_t b = 0; b < cfg.dec_blocks; ++b)
        append_block_specs(out, "dec." + std::to_string(b) + ".", dd, cfg.dec_mlp_dim());
    out.push_back({"dec_norm.g", 1, dd, InitKind::One});
    out.push_back({"dec_norm.b", 1, dd, InitKind::Zero});
    out.push_back({"dec_head.w", dd, pl, InitKind::Uniform});
    out.push_back({"dec_head.b", 1, pl, InitKind::Zero});
    out.push_back({"label_scaler", 1, 2, InitKind::LabelScaler});
    return out;
}

}  // namespace

ModelConfig ModelConfig::reference() {
    ModelConfig c;
    c.img_h = 224;
    c.img_w = 224;
    c.patch = 16;
    c.enc_blocks = 12;
    c.enc_heads = 3;
    c.enc_dim = 192;
    c.mlp_ratio = 4.0;
    c.dec_dim = 128;
    c.dec_blocks = 2;
    c.dec_heads = 16;
    c.mask_ratio = 0.75;
    c.alpha = 0.1;
    c.reference_scale = true;
    return c;
}

void ModelConfig::validate() const {
    if (img_h == 0 || img_w == 0 || patch == 0) throw ConfigError("image and patch sizes must be positive");
    if (img_h % patch != 0 || img_w % patch != 0)
        throw ConfigError("image size must be divisible by the patch size");
    if (!(mask_ratio > 0.0 && mask_ratio < 1.0))
        throw ConfigError("mask_ratio must lie strictly between 0 and 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    if (enc_blocks == 0 || dec_blocks == 0) throw ConfigError("block counts must be positive");
    if (enc_heads == 0 || enc_dim % enc_heads != 0)
        throw ConfigError("enc_dim must be divisible by enc_heads");
    if (dec_heads == 0 || dec_dim % dec_heads != 0)
        throw ConfigError("dec_dim must be divisible by dec_heads");
    if (!(mlp_ratio > 0.0) || enc_mlp_dim() == 0 || dec_mlp_dim() == 0)
        throw ConfigError("mlp_ratio must yield a positive hidden width");
}

std::size_t ModelConfig::enc_mlp_dim() const { return scaled_dim(mlp_ratio, enc_dim); }
std::size_t ModelConfig::dec_mlp_dim() const { return scaled_dim(mlp_ratio, dec_dim); }

Tensor& ModelParams::at(const std::string& name) {
    auto it = values.find(name);
    if (it == values.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
}

const Tensor& ModelParams::at(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
}

bool ModelParams::trainable(const std::string& name) {
    return name != "enc_pos" && name != "dec_pos" && name != "label_scaler";
}

void ModelParams::validate(const ModelConfig& cfg) const {
    const auto layout = param_layout(cfg);
    if (order.size() != layout.size() || values.size() != layout.size())
        throw ConfigError("parameter map does not match the canonical layout");
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (order[i] != layout[i].name)
            throw ConfigError("parameter order differs from the canonical layout at " + order[i]);
        const Tensor& t = at(layout[i].name);
        if (t.dims.size() != 2 || t.dims[0] != layout[i].rows || t.dims[1] != layout[i].cols)
            throw ShapeError("parameter " + layout[i].name + " has the wrong shape");
        if (!t.all_finite()) throw NonFiniteError("non-finite values in parameter " + layout[i].name);
    }
}

std::vector<std::string> canonical_param_names(const ModelConfig& cfg) {
    std::vector<std::string> names;
    for (const auto& s : param_layout(cfg)) names.push_back(s.name);
    return names;
}

Tensor sinusoidal_positions(std::size_t rows, std::size_t dim) {
    Tensor out({rows, dim});
    for (std::size_t p = 0; p < rows; ++p) {
        for (std::size_t j = 0; j < dim; ++j) {
            const double expo = static_cast<double>(2 * (j / 2)) / static_cast<double>(dim);
            const double angle = static_cast<double>(p) / std::pow(10000.0, expo);
            out.at(p, j) = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return out;
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ModelParams params;
    for (const auto& spec : param_layout(cfg)) {
        Tensor t({spec.rows, spec.cols});
        switch (spec.init) {
            case InitKind::Zero:
                break;
            case InitKind::One:
                std::fill(t.data.begin(), t.data.end(), 1.0);
                break;
            case InitKind::Uniform: {
                Rng rng = derive_rng(seed, "init:" + spec.name);
                const double lim = 1.0 / std::sqrt(static_cast<double>(spec.rows));
                for (double& v : t.data) v = rng.uniform(-lim, lim);
                break;
            }
            case InitKind::EncoderPositions:
                t = sinusoidal_positions(spec.rows, spec.cols);
                break;
            case InitKind::DecoderPositions:
                t = sinusoidal_positions(spec.rows, spec.cols);
                break;
            case InitKind::LabelScaler:
                t.at(0, 0) = 0.0;
                t.at(0, 1) = 1.0;
                break;
        }
        params.order.push_back(spec.name);
        params.values.emplace(spec.name, std::move(t));
    }
    return params;
}

Tensor patchify(const Tensor& img, std::size_t patch) {
    if (img.dims.size() != 2) throw ShapeError("patchify expects a 2-d image");
    const std::size_t h = img.dims[0], w = img.dims[1];
    if (patch == 0 || h % patch != 0 || w % patch != 0)
        throw ShapeError("image size must be divisible by the patch size");
    const std::size_t gh = h / patch, gw = w / patch;
    Tensor out({gh * gw, patch * patch});
    for (std::size_t gy = 0; gy < gh; ++gy)
        for (std::size_t gx = 0; gx < gw; ++gx) {
            const std::size_t t = gy * gw + gx;
            for (std::size_t dy = 0; dy < patch; ++dy)
                for (std::size_t dx = 0; dx < patch; ++dx)
                    out.at(t, dy * patch + dx) = img.at(gy * patch + dy, gx * patch + dx);
        }
    return out;
}

Tensor unpatchify(const Tensor& tokens, std::size_t img_h, std::size_t img_w, std::size_t patch) {
    if (tokens.dims.size() != 2) throw ShapeError("unpatchify expects a 2-d token matrix");
    if (patch == 0 || img_h % patch != 0 || img_w % patch != 0)
        throw ShapeError("image size must be divisible by the patch size");
    const std::size_t gh = img_h / patch, gw = img_w / patch;
    if (tokens.dims[0] != gh * gw || tokens.dims[1] != patch * patch)
        throw ShapeError("token matrix does not match the target image layout");
    Tensor out({img_h, img_w});
    for (std::size_t gy = 0; gy < gh; ++gy)
        for (std::size_t gx = 0; gx < gw; ++gx) {
            const std::size_t t = gy * gw + gx;
            for (std::size_t dy = 0; dy < patch; ++dy)
                for (std::size_t dx = 0; dx < patch; ++dx)
                    out.at(gy * patch + dy, gx * patch + dx) = tokens.at(t, dy * patch + dx);
        }
    return out;
}

MaskIndices random_mask(std::size_t n_tok, double rho, Rng& rng) {
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("mask ratio must lie strictly between 0 and 1");
    if (n_tok == 0) throw ConfigError("cannot mask an empty token set");
    std::vector<std::size_t> perm(n_tok);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    shuffle(perm, rng);
    const std::size_t m = static_cast<std::size_t>(
        std::lround(rho * static_cast<double>(n_tok)));
    MaskIndices out;
    out.masked.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(m));
    out.kept.assign(perm.begin() + static_cast<std::ptrdiff_t>(m), perm.end());
    std::sort(out.masked.begin(), out.masked.end());
    std::sort(out.kept.begin(), out.kept.end());
    return out;
}

LossBreakdown make_breakdown(double alpha, double l_reg, double l_ssat,
                             std::size_t masked_patch_count) {
    LossBreakdown b;
    b.l_reg = l_reg;
    b.l_ssat = l_ssat;
    b.masked_patch_count = masked_patch_count;
    b.total = alpha * l_reg + (1.0 - alpha) * l_ssat;
    return b;
}

double ssat_loss(const Tensor& recon_patches, const Tensor& target_patches,
                 const std::vector<std::size_t>& masked) {
    if (recon_patches.dims != target_patches.dims || recon_patches.dims.size() != 2)
        throw ShapeError("reconstruction and target patch matrices must match");
    if (masked.empty()) return 0.0;
    const std::size_t cols = recon_patches.dims[1];
    double acc = 0.0;
    for (std::size_t r : masked) {
        if (r >= recon_patches.dims[0]) throw ShapeError("masked index out of range");
        for (std::size_t c = 0; c < cols; ++c) {
            const double d = recon_patches.at(r, c) - target_patches.at(r, c);
            acc += d * d;
        }
    }
    return acc / (static_cast<double>(masked.size()) * static_cast<double>(cols));
}

namespace {

struct SampleNodes {
    int pred_std = -1;  // [1,1] standardized prediction
    int recon = -1;     // [n_tok, patch_len] in Joint mode
    int l_reg = -1;
    int l_ssat = -1;
    int total = -1;
    std::size_t masked_count = 0;
};

int run_blocks(Tape& t, const std::map<std::string, int>& leaves, const std::string& stem,
               std::size_t blocks, std::size_t heads, std::size_t dim, int x) {
    const std::size_t dh = dim / heads;
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::string prefix = stem + std::to_string(b) + ".";
        auto leaf = [&](const char* name) { return leaves.at(prefix + name); };
        const int y = t.layernorm(x, leaf("ln1.g"), leaf("ln1.b"));
        const int q = t.linear(y, leaf("attn.wq"), leaf("attn.bq"));
        const int k = t.linear(y, leaf("attn.wk"), leaf("attn.bk"));
        const int v = t.linear(y, leaf("attn.wv"), leaf("attn.bv"));
        std::vector<int> heads_out;
        for (std::size_t h = 0; h < heads; ++h) {
            const int qh = t.slice_cols(q, h * dh, dh);
            const int kh = t.slice_cols(k, h * dh, dh);
            const int vh = t.slice_cols(v, h * dh, dh);
            const int logits = t.scale(t.matmul(qh, t.transpose(kh)), att_scale);
            heads_out.push_back(t.matmul(t.softmax_rows(logits), vh));
        }
        const int att = t.linear(t.concat_cols(heads_out), leaf("attn.wo"), leaf("attn.bo"));
        x = t.add(x, att);
        const int z = t.layernorm(x, leaf("ln2.g"), leaf("ln2.b"));
        const int hidden = t.gelu(t.linear(z, leaf("mlp.w1"), leaf("mlp.b1")));
        x = t.add(x, t.linear(hidden, leaf("mlp.w2"), leaf("mlp.b2")));
    }
    return x;
}

std::map<std::string, int> make_leaves(Tape& t, const ModelConfig& cfg, const ModelParams& params) {
    std::map<std::string, int> leaves;
    for (const std::string& name : canonical_param_names(cfg))
        leaves.emplace(name, t.leaf(to_eigen(params.at(name)), name));
    return leaves;
}

SampleNodes build_sample(Tape& t, const std::map<std::string, int>& leaves, const ModelConfig& cfg,
                         const Tensor& img, const MaskIndices* mask, ForwardMode mode,
                         const double* label_months) {
    if (img.dims.size() != 2 || img.dims[0] != cfg.img_h || img.dims[1] != cfg.img_w)
        throw ShapeError("input image does not match the configured size");
    const std::size_t n_tok = cfg.token_count();

    const Tensor patches_t = patchify(img, cfg.patch);
    const Eigen::MatrixXd patches = to_eigen(patches_t);
    const int patches_node = t.leaf(patches, "patches");
    const int tokens = t.linear(patches_node, leaves.at("patch_proj.w"), leaves.at("patch_proj.b"));

    std::vector<std::size_t> patch_rows(n_tok);
    std::iota(patch_rows.begin(), patch_rows.end(), std::size_t{1});
    const int with_reg = t.add(t.scatter_rows(tokens, patch_rows, n_tok + 1),
                               t.scatter_rows(leaves.at("reg_token"), {0}, n_tok + 1));
    const int positioned = t.add(with_reg, leaves.at("enc_pos"));

    SampleNodes out;

    // regression branch over the full token set
    const int enc_full = run_blocks(t, leaves, "enc.", cfg.enc_blocks, cfg.enc_heads, cfg.enc_dim,
                                    positioned);
    const int enc_full_n = t.layernorm(enc_full, leaves.at("enc_norm.g"), leaves.at("enc_norm.b"));
    const int reg_row = t.select_rows(enc_full_n, {0});
    out.pred_std = t.linear(reg_row, leaves.at("reg_head.w"), leaves.at("reg_head.b"));

    if (label_months != nullptr) {
        const int mean_n = t.slice_cols(leaves.at("label_scaler"), 0, 1);
        const int std_n = t.slice_cols(leaves.at("label_scaler"), 1, 1);
        Eigen::MatrixXd lab(1, 1);
        lab(0, 0) = *label_months;
        const int target = t.div(t.add(t.leaf(lab, "label"), t.scale(mean_n, -1.0)), std_n);
        const int diff = t.add(out.pred_std, t.scale(target, -1.0));
        out.l_reg = t.mul(diff, diff);
    }

    if (mode == ForwardMode::Joint) {
        if (mask == nullptr) throw ConfigError("joint forward requires a mask");
        if (mask->kept.size() + mask->masked.size() != n_tok)
            throw ShapeError("mask does not cover the token set");

        std::vector<std::size_t> visible{0};
        for (std::size_t k : mask->kept) visible.push_back(k + 1);
        const int enc_kept = run_blocks(t, leaves, "enc.", cfg.enc_blocks, cfg.enc_heads,
                                        cfg.enc_dim, t.select_rows(positioned, visible));
        const int enc_kept_n =
            t.layernorm(enc_kept, leaves.at("enc_norm.g"), leaves.at("enc_norm.b"));
        const int embedded = t.linear(enc_kept_n, leaves.at("dec_embed.w"), leaves.at("dec_embed.b"));

        std::vector<std::size_t> hidden_rows;
        for (std::size_t m : mask->masked) hidden_rows.push_back(m + 1);
        int dec_seq = t.scatter_rows(embedded, visible, n_tok + 1);
        if (!hidden_rows.empty()) {
            const int mask_fill =
                t.scatter_rows(t.broadcast_row(leaves.at("mask_token"), hidden_rows.size()),
                               hidden_rows, n_tok + 1);
            dec_seq = t.add(dec_seq, mask_fill);
        }
        const int dec_in = t.add(dec_seq, leaves.at("dec_pos"));
        const int dec_out = run_blocks(t, leaves, "dec.", cfg.dec_blocks, cfg.dec_heads,
                                       cfg.dec_dim, dec_in);
        const int dec_n = t.layernorm(dec_out, leaves.at("dec_norm.g"), leaves.at("dec_norm.b"));
        const int dropped = t.select_rows(dec_n, patch_rows);
        out.recon = t.linear(dropped, leaves.at("dec_head.w"), leaves.at("dec_head.b"));

        out.masked_count = mask->masked.size();
        if (!mask->masked.empty()) {
            Eigen::MatrixXd target(static_cast<Eigen::Index>(mask->masked.size()), patches.cols());
            for (std::size_t i = 0; i < mask->masked.size(); ++i)
                target.row(static_cast<Eigen::Index>(i)) =
                    patches.row(static_cast<Eigen::Index>(mask->masked[i]));
            out.l_ssat = t.mse_against(t.select_rows(out.recon, mask->masked), std::move(target));
        } else {
            out.l_ssat = t.leaf(Eigen::MatrixXd::Zero(1, 1), "l_ssat");
        }
        if (out.l_reg >= 0) out.total = t.combine(cfg.alpha, out.l_reg, 1.0 - cfg.alpha, out.l_ssat);
    } else if (out.l_reg >= 0) {
        out.total = out.l_reg;
    }
    return out;
}

double destandardize(const ModelParams& params, double pred_std) {
    const Tensor& sc = params.at("label_scaler");
    return pred_std * sc.at(0, 1) + sc.at(0, 0);
}

struct BatchGraph {
    Tape tape;
    std::map<std::string, int> leaves;
    int loss = -1;
    LossBreakdown breakdown;
};

void build_batch(BatchGraph& g, const ModelConfig& cfg, const ModelParams& params,
                 const std::vector<TrainItem>& batch, ForwardMode mode) {
    cfg.validate();
    params.validate(cfg);
    if (batch.empty()) throw ConfigError("empty batch");
    g.leaves = make_leaves(g.tape, cfg, params);
    int acc = -1;
    double reg_sum = 0.0, ssat_sum = 0.0;
    std::size_t masked_total = 0;
    for (const TrainItem& item : batch) {
        const SampleNodes s = build_sample(g.tape, g.leaves, cfg, item.image, &item.mask, mode,
                                           &item.label_months);
        acc = acc < 0 ? s.total : g.tape.add(acc, s.total);
        reg_sum += g.tape.value(s.l_reg)(0, 0);
        if (s.l_ssat >= 0) ssat_sum += g.tape.value(s.l_ssat)(0, 0);
        masked_total += s.masked_count;
    }
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    g.loss = g.tape.scale(acc, inv_b);
    g.breakdown = make_breakdown(mode == ForwardMode::Joint ? cfg.alpha : 1.0, reg_sum * inv_b,
                                 ssat_sum * inv_b, masked_total);
}

}  // namespace

ForwardResult forward(const ModelConfig& cfg, const ModelParams& params, const Tensor& img,
                      const MaskIndices* mask, ForwardMode mode, const double* label_months) {
    cfg.validate();
    params.validate(cfg);
    Tape tape;
    const auto leaves = make_leaves(tape, cfg, params);
    const SampleNodes s = build_sample(tape, leaves, cfg, img,
                                       mode == ForwardMode::Joint ? mask : nullptr, mode,
                                       label_months);
    ForwardResult out;
    out.prediction_months = destandardize(params, tape.value(s.pred_std)(0, 0));
    if (s.recon >= 0) out.recon_patches = from_eigen(tape.value(s.recon));
    if (s.l_reg >= 0) {
        const double l_ssat = s.l_ssat >= 0 ? tape.value(s.l_ssat)(0, 0) : 0.0;
        out.loss = make_breakdown(cfg.alpha, tape.value(s.l_reg)(0, 0), l_ssat, s.masked_count);
    }
    return out;
}

std::map<std::string, Tensor> backward(const ModelConfig& cfg, const ModelParams& params,
                                       const std::vector<TrainItem>& batch,
                                       LossBreakdown* loss_out, ForwardMode mode) {
    BatchGraph g;
    build_batch(g, cfg, params, batch, mode);
    g.tape.backward(g.loss);
    std::map<std::string, Tensor> grads;
    for (const auto& [name, id] : g.leaves) grads.emplace(name, from_eigen(g.tape.grad(id)));
    if (loss_out != nullptr) *loss_out = g.breakdown;
    return grads;
}

double batch_loss(const ModelConfig& cfg, const ModelParams& params,
                  const std::vector<TrainItem>& batch, LossBreakdown* breakdown,
                  ForwardMode mode) {
    BatchGraph g;
    build_batch(g, cfg, params, batch, mode);
    if (breakdown != nullptr) *breakdown = g.breakdown;
    return g.tape.value(g.loss)(0, 0);
}

void ScheduleConfig::validate() const {
    if (!(lambda_t > 0.0)) throw ConfigError("target learning rate must be positive");
    if (total_steps == 0 || warmup_steps >= total_steps)
        throw ConfigError("schedule requires 0 <= warmup < total steps");
}

double lr_at(std::size_t i, const ScheduleConfig& s) {
    s.validate();
    if (i > s.total_steps) throw ConfigError("schedule queried past its final step");
    if (i < s.warmup_steps)
        return s.lambda_t * static_cast<double>(i) / static_cast<double>(s.warmup_steps);
    const double u = static_cast<double>(i - s.warmup_steps) /
                     static_cast<double>(s.total_steps - s.warmup_steps);
    return 0.5 * s.lambda_t * (1.0 + std::cos(M_PI * u));
}

void adamw_step(ModelParams& params, const std::map<std::string, Tensor>& grads,
                OptimState& state, double lr) {
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (const std::string& name : params.order) {
        if (!ModelParams::trainable(name)) continue;
        auto git = grads.find(name);
        if (git == grads.end()) throw ConfigError("missing gradient for parameter " + name);
        Tensor& w = params.at(name);
        const Tensor& g = git->second;
        if (g.dims != w.dims) throw ShapeError("gradient shape mismatch for " + name);
        Tensor& m = state.m.emplace(name, Tensor(w.dims)).first->second;
        Tensor& v = state.v.emplace(name, Tensor(w.dims)).first->second;
        if (m.dims != w.dims || v.dims != w.dims)
            throw ShapeError("optimizer moment shape mismatch for " + name);
        for (std::size_t i = 0; i < w.numel(); ++i) {
            m.at(i) = state.beta1 * m.at(i) + (1.0 - state.beta1) * g.at(i);
            v.at(i) = state.beta2 * v.at(i) + (1.0 - state.beta2) * g.at(i) * g.at(i);
            const double mhat = m.at(i) / bc1;
            const double vhat = v.at(i) / bc2;
            w.at(i) -= lr * state.weight_decay * w.at(i);
            w.at(i) -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

namespace {

bool params_all_finite(const ModelParams& params) {
    for (const auto& [name, t] : params.values)
        if (!t.all_finite()) return false;
    return true;
}

}  // namespace

TrainResult train(const DatasetSplit& split, const ModelConfig& cfg, const ScheduleConfig& scfg,
                  const TrainOptions& opts) {
    cfg.validate();
    scfg.validate();
    if (split.train.empty()) throw ConfigError("training requires a non-empty train split");
    if (opts.batch_size == 0) throw ConfigError("batch size must be positive");

    double mean = 0.0;
    for (const SampleRecord& r : split.train) mean += r.label_months;
    mean /= static_cast<double>(split.train.size());
    double var = 0.0;
    for (const SampleRecord& r : split.train) {
        const double d = r.label_months - mean;
        var += d * d;
    }
    var /= static_cast<double>(split.train.size());
    double sd = std::sqrt(var);
    if (!(sd > 1e-12)) sd = 1.0;

    TrainResult result;
    result.params = init_params(cfg, opts.seed);
    {
        Tensor& sc = result.params.at("label_scaler");
        sc.at(0, 0) = mean;
        sc.at(0, 1) = sd;
    }

    AugmentPolicy policy = opts.augment;
    policy.target_h = cfg.img_h;
    policy.target_w = cfg.img_w;

    Rng rng = derive_rng(opts.seed, "train");
    std::vector<std::size_t> order(split.train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t cursor = order.size();  // forces a shuffle before the first batch

    const std::size_t batch_size = std::min(opts.batch_size, split.train.size());
    const std::size_t n_tok = cfg.token_count();

    ModelParams good = result.params;
    OptimState good_optim = result.optim;

    for (std::size_t step = 1; step <= scfg.total_steps; ++step) {
        if (cursor + batch_size > order.size()) {
            shuffle(order, rng);
            cursor = 0;
        }
        std::vector<TrainItem> batch;
        batch.reserve(batch_size);
        for (std::size_t i = 0; i < batch_size; ++i) {
            const SampleRecord& rec = split.train[order[cursor + i]];
            TrainItem item;
            item.image = opts.augment_train
                             ? augment(rec.image, rng, policy)
                             : resize_bilinear(rec.image, cfg.img_h, cfg.img_w);
            item.label_months = rec.label_months;
            item.mask = random_mask(n_tok, cfg.mask_ratio, rng);
            batch.push_back(std::move(item));
        }
        cursor += batch_size;

        LossBreakdown bd;
        std::map<std::string, Tensor> grads;
        bool bad = false;
        try {
            grads = backward(cfg, result.params, batch, &bd);
        } catch (const NonFiniteError&) {
            bad = true;
        }
        if (bad || !std::isfinite(bd.total)) {
            result.diverged = true;
            result.params = good;
            result.optim = good_optim;
            break;
        }

        // the loss came out finite, so the pre-update state is worth keeping
        good = result.params;
        good_optim = result.optim;
        if (!opts.checkpoint_path.empty())
            write_checkpoint(opts.checkpoint_path, cfg, good, &good_optim);

        const double lr = lr_at(step, scfg);
        adamw_step(result.params, grads, result.optim, lr);
        result.history.push_back(StepRecord{step, lr, bd});

        if (!params_all_finite(result.params)) {
            result.diverged = true;
            result.params = good;
            result.optim = good_optim;
            break;
        }
    }

    if (!opts.checkpoint_path.empty())
        write_checkpoint(opts.checkpoint_path, cfg, result.params, &result.optim);
    return result;
}

double predict_months(const ModelConfig& cfg, const ModelParams& params, const Tensor& img) {
    const Tensor sized = (img.dims.size() == 2 && img.dims[0] == cfg.img_h &&
                          img.dims[1] == cfg.img_w)
                             ? img
                             : resize_bilinear(img, cfg.img_h, cfg.img_w);
    return forward(cfg, params, sized, nullptr, ForwardMode::RegressionOnly).prediction_months;
}

namespace {

constexpr char kCheckpointMagic[4] = {'M', 'D', 'C', 'K'};

void put_string(std::ostream& os, const std::string& s) {
    put_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
    const std::uint64_t n = get_u64(is);
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is) throw Truncated("unexpected end of file in checkpoint name");
    return s;
}

void put_entry(std::ostream& os, const std::string& name, const Tensor& t) {
    put_string(os, name);
    put_u64(os, t.dims.size());
    for (std::size_t d : t.dims) put_u64(os, d);
    for (double v : t.data) put_f64(os, v);
}

std::pair<std::string, Tensor> get_entry(std::istream& is) {
    std::string name = get_string(is);
    const std::uint64_t ndim = get_u64(is);
    if (ndim > 8) throw DimOverflow("checkpoint entry rank is implausible");
    std::vector<std::size_t> dims(ndim);
    std::size_t numel = 1;
    for (auto& d : dims) {
        d = static_cast<std::size_t>(get_u64(is));
        numel *= d;
    }
    Tensor t(dims);
    for (std::size_t i = 0; i < numel; ++i) t.at(i) = get_f64(is);
    return {std::move(name), std::move(t)};
}

void put_config(std::ostream& os, const ModelConfig& c) {
    put_u64(os, c.img_h);
    put_u64(os, c.img_w);
    put_u64(os, c.patch);
    put_u64(os, c.enc_blocks);
    put_u64(os, c.enc_heads);
    put_u64(os, c.enc_dim);
    put_f64(os, c.mlp_ratio);
    put_u64(os, c.dec_dim);
    put_u64(os, c.dec_blocks);
    put_u64(os, c.dec_heads);
    put_f64(os, c.mask_ratio);
    put_f64(os, c.alpha);
    put_u64(os, c.reference_scale ? 1 : 0);
}

ModelConfig get_config(std::istream& is) {
    ModelConfig c;
    c.img_h = static_cast<std::size_t>(get_u64(is));
    c.img_w = static_cast<std::size_t>(get_u64(is));
    c.patch = static_cast<std::size_t>(get_u64(is));
    c.enc_blocks = static_cast<std::size_t>(get_u64(is));
    c.enc_heads = static_cast<std::size_t>(get_u64(is));
    c.enc_dim = static_cast<std::size_t>(get_u64(is));
    c.mlp_ratio = get_f64(is);
    c.dec_dim = static_cast<std::size_t>(get_u64(is));
    c.dec_blocks = static_cast<std::size_t>(get_u64(is));
    c.dec_heads = static_cast<std::size_t>(get_u64(is));
    c.mask_ratio = get_f64(is);
    c.alpha = get_f64(is);
    c.reference_scale = get_u64(is) != 0;
    return c;
}

}  // namespace

void write_checkpoint(const std::string& path, const ModelConfig& cfg, const ModelParams& params,
                      const OptimState* optim) {
    cfg.validate();
    params.validate(cfg);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ManifestError("cannot open checkpoint for writing: " + path);
    os.write(kCheckpointMagic, 4);
    put_config(os, cfg);
    put_u64(os, params.order.size());
    for (const std::string& name : params.order) put_entry(os, name, params.at(name));
    put_u64(os, optim != nullptr ? 1 : 0);
    if (optim != nullptr) {
        put_u64(os, optim->step);
        put_f64(os, optim->beta1);
        put_f64(os, optim->beta2);
        put_f64(os, optim->eps);
        put_f64(os, optim->weight_decay);
        put_u64(os, optim->m.size());
        for (const auto& [name, t] : optim->m) put_entry(os, name, t);
        put_u64(os, optim->v.size());
        for (const auto& [name, t] : optim->v) put_entry(os, name, t);
    }
    if (!os) throw ManifestError("short write to checkpoint: " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ManifestError("cannot open checkpoint: " + path);
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw BadMagic("not a model checkpoint: " + path);
    Checkpoint out;
    out.config = get_config(is);
    const std::uint64_t count = get_u64(is);
    for (std::uint64_t i = 0; i < count; ++i) {
        auto [name, t] = get_entry(is);
        out.params.order.push_back(name);
        if (!out.params.values.emplace(name, std::move(t)).second)
            throw DuplicateId("duplicate checkpoint entry: " + name);
    }
    out.params.validate(out.config);
    out.has_optim = get_u64(is) != 0;
    if (out.has_optim) {
        out.optim.step = static_cast<std::size_t>(get_u64(is));
        out.optim.beta1 = get_f64(is);
        out.optim.beta2 = get_f64(is);
        out.optim.eps = get_f64(is);
        out.optim.weight_decay = get_f64(is);
        const std::uint64_t mc = get_u64(is);
        for (std::uint64_t i = 0; i < mc; ++i) {
            auto [name, t] = get_entry(is);
            out.optim.m.emplace(std::move(name), std::move(t));
        }
        const std::uint64_t vc = get_u64(is);
        for (std::uint64_t i = 0; i < vc; ++i) {
            auto [name, t] = get_entry(is);
            out.optim.v.emplace(std::move(name), std::move(t));
        }
    }
    return out;
}

}  // namespace mdk
