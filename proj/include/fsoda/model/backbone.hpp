#pragma once

#include <array>
#include <string>
#include <vector>

#include "fsoda/core/rng.hpp"
#include "fsoda/core/tape.hpp"
#include "fsoda/data/registry.hpp"
#include "fsoda/model/conv.hpp"
#include "fsoda/model/mlp.hpp"

namespace fsoda {

enum class BackbonePreset { identity_mlp, small_conv, resnet18_like };

inline BackbonePreset backbone_preset_from_string(const std::string& s) {
    if (s == "identity-mlp") return BackbonePreset::identity_mlp;
    if (s == "small-conv") return BackbonePreset::small_conv;
    if (s == "resnet18-like") return BackbonePreset::resnet18_like;
    throw ConfigError("backbone.preset must be identity-mlp|small-conv|resnet18-like, got '" + s + "'");
}

struct BackboneConfig {
    InputKind input_kind = InputKind::vector;
    int input_dim = 8;       // vector inputs
    int image_size = 84;     // image inputs (square)
    int image_channels = 3;
    BackbonePreset preset = BackbonePreset::identity_mlp;
    int embed_dim = 8;
    int mlp_layers = 1;      // identity-mlp: 1 or 2 affine layers
    int base_width = 16;     // conv presets: channel width of the first stage
    std::string pretrained_path;  // optional checkpoint segment to start from

    void validate() const {
        if (embed_dim <= 0) throw ConfigError("backbone.embed_dim must be > 0");
        if (input_kind == InputKind::vector && preset != BackbonePreset::identity_mlp)
            throw ConfigError("vector inputs require the identity-mlp preset");
        if (input_kind == InputKind::image && preset == BackbonePreset::identity_mlp)
            throw ConfigError("image inputs require a conv preset");
        if (mlp_layers < 1 || mlp_layers > 2) throw ConfigError("backbone.mlp_layers must be 1 or 2");
    }
};

/// Domain-specific batch norm at the final normalization position: one
/// affine pair and one running-stats slot per domain, shared everything
/// upstream. Training normalizes by batch statistics of the tagged domain
/// and refreshes only that domain's running estimates.
struct DsbnParams {
    std::array<Param, 2> gamma;
    std::array<Param, 2> beta;
    std::array<Tensor, 2> run_mean;
    std::array<Tensor, 2> run_var;
    double momentum = 0.1;
    double var_floor = 1e-5;

    DsbnParams() = default;
    DsbnParams(int dim, double mom = 0.1, double floor = 1e-5) : momentum(mom), var_floor(floor) {
        for (int d = 0; d < 2; ++d) {
            const std::string tag = d == 0 ? "s" : "t";
            gamma[d] = Param("dsbn.gamma_" + tag, Tensor::full(1, dim, 1.0));
            beta[d] = Param("dsbn.beta_" + tag, Tensor(1, dim));
            run_mean[d] = Tensor(1, dim);
            run_var[d] = Tensor::full(1, dim, 1.0);
        }
    }

    int dim() const { return gamma[0].value.cols(); }

    void collect(std::vector<Param*>& out) {
        for (int d = 0; d < 2; ++d) {
            out.push_back(&gamma[d]);
            out.push_back(&beta[d]);
        }
    }
};

/// y = gamma_d * v + beta_d for the tagged domain (the affine reused by the
/// prototype alignment loss).
inline Var dsbn_affine(Tape& t, Var v, Domain d, DsbnParams& dsbn) {
    const int di = static_cast<int>(d);
    if (t.value(v).cols() != dsbn.dim()) throw NumericError("dsbn_affine: dimension mismatch");
    return t.add_rowvec(t.mul_rowvec(v, t.param(dsbn.gamma[di])), t.param(dsbn.beta[di]));
}

/// Batch-stat normalization + domain affine. In training mode the tagged
/// domain's running estimates are refreshed from the (detached) batch
/// statistics; the other domain's slots are untouched.
inline Var dsbn_forward(Tape& t, Var x, Domain d, bool training, DsbnParams& dsbn) {
    const int di = static_cast<int>(d);
    Var mean, var;
    if (training) {
        mean = t.mean_down(x);
        Var centered = t.sub(x, t.tile_rows(mean, t.value(x).rows()));
        var = t.mean_down(t.square(centered));
        const Tensor& bm = t.value(mean);
        const Tensor& bv = t.value(var);
        dsbn.run_mean[di].scale_inplace(1.0 - dsbn.momentum);
        dsbn.run_mean[di].axpy_inplace(dsbn.momentum, bm);
        dsbn.run_var[di].scale_inplace(1.0 - dsbn.momentum);
        dsbn.run_var[di].axpy_inplace(dsbn.momentum, bv);
    } else {
        mean = t.constant(dsbn.run_mean[di]);
        var = t.constant(dsbn.run_var[di]);
    }
    const int n = t.value(x).rows();
    Var inv_std = t.div(t.constant(Tensor::full(1, dsbn.dim(), 1.0)), t.sqrt_(t.clamp_min(var, dsbn.var_floor)));
    Var normed = t.mul(t.sub(x, t.tile_rows(mean, n)), t.tile_rows(inv_std, n));
    return dsbn_affine(t, normed, d, dsbn);
}

/// Trainable feature extractor f. The preset decides the trunk; every
/// preset ends in the DSBN layer so embeddings are domain-normalized.
class Backbone {
public:
    Backbone() = default;

    Backbone(const BackboneConfig& cfg, Rng& rng, double dsbn_momentum = 0.1, double var_floor = 1e-5) : cfg_(cfg) {
        cfg.validate();
        dsbn_ = DsbnParams(cfg.embed_dim, dsbn_momentum, var_floor);
        switch (cfg.preset) {
            case BackbonePreset::identity_mlp: {
                // identity-initialized affine stack; requires square layers
                if (cfg.input_dim != cfg.embed_dim)
                    throw ConfigError("identity-mlp preset needs input_dim == embed_dim");
                for (int l = 0; l < cfg.mlp_layers; ++l) {
                    mlp_w_.emplace_back("backbone.w" + std::to_string(l), Tensor::identity(cfg.embed_dim));
                    mlp_b_.emplace_back("backbone.b" + std::to_string(l), Tensor(1, cfg.embed_dim));
                }
                break;
            }
            case BackbonePreset::small_conv:
                conv_ = ConvTrunk::small_conv(cfg.image_channels, cfg.base_width, cfg.embed_dim, rng);
                break;
            case BackbonePreset::resnet18_like:
                conv_ = ConvTrunk::resnet18_like(cfg.image_channels, cfg.base_width, cfg.embed_dim, rng);
                break;
        }
    }

    const BackboneConfig& config() const { return cfg_; }
    DsbnParams& dsbn() { return dsbn_; }
    const DsbnParams& dsbn() const { return dsbn_; }

    /// Embeds a domain-tagged batch. All samples must share the tag; the
    /// DSBN slot for that domain is the only mutable state touched.
    Var extract(Tape& t, const std::vector<Sample>& batch, Domain d, bool training) {
        if (batch.empty()) throw DataError("extract: empty batch");
        Var h;
        if (cfg_.input_kind == InputKind::vector) {
            Tensor x(static_cast<int>(batch.size()), cfg_.input_dim);
            for (size_t i = 0; i < batch.size(); ++i) {
                if (batch[i].dim() != cfg_.input_dim) throw DataError("extract: sample dim mismatch");
                std::copy(batch[i].values.begin(), batch[i].values.end(), x.row_ptr(static_cast<int>(i)));
            }
            h = t.constant(std::move(x));
            for (size_t l = 0; l < mlp_w_.size(); ++l) {
                h = t.add_rowvec(t.matmul(h, t.param(mlp_w_[l])), t.param(mlp_b_[l]));
                if (l + 1 < mlp_w_.size()) h = t.leaky_relu(h, 0.1);
            }
        } else {
            for (const auto& s : batch)
                if (!s.is_image() || s.shape[1] != cfg_.image_size || s.shape[2] != cfg_.image_size)
                    throw DataError("extract: image shape mismatch");
            h = conv_.forward(t, batch, training);
        }
        return dsbn_forward(t, h, d, training, dsbn_);
    }

    /// Value-only eval-mode embedding.
    Tensor extract_eval(const std::vector<Sample>& batch, Domain d) {
        Tape t;
        return t.value(extract(t, batch, d, false));
    }

    void collect(std::vector<Param*>& out) {
        for (auto& w : mlp_w_) out.push_back(&w);
        for (auto& b : mlp_b_) out.push_back(&b);
        conv_.collect(out);
        dsbn_.collect(out);
    }

    /// Non-trainable state (running statistics) for checkpointing.
    void collect_buffers(std::vector<std::pair<std::string, Tensor*>>& out) {
        for (int d = 0; d < 2; ++d) {
            const std::string tag = d == 0 ? "s" : "t";
            out.emplace_back("dsbn.run_mean_" + tag, &dsbn_.run_mean[d]);
            out.emplace_back("dsbn.run_var_" + tag, &dsbn_.run_var[d]);
        }
        conv_.collect_buffers(out);
    }

private:
    BackboneConfig cfg_;
    std::vector<Param> mlp_w_;
    std::vector<Param> mlp_b_;
    ConvTrunk conv_;
    DsbnParams dsbn_;
};

}  // namespace fsoda
