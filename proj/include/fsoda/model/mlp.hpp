#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fsoda/core/rng.hpp"
#include "fsoda/core/tape.hpp"

namespace fsoda {

/// Stack of affine layers with leaky-relu between them (none after the last).
/// Generators, discriminators and the two open-set heads are all built from
/// this; layer widths come from config.
class Mlp {
public:
    Mlp() = default;

    /// dims = {in, h1, ..., out}; fan-in scaled Gaussian init.
    Mlp(const std::string& name, const std::vector<int>& dims, Rng& rng, double leak = 0.1) : leak_(leak) {
        init(name, dims, rng);
    }

    void init(const std::string& name, const std::vector<int>& dims, Rng& rng) {
        weights_.clear();
        biases_.clear();
        for (size_t l = 0; l + 1 < dims.size(); ++l) {
            const double std = std::sqrt(2.0 / dims[l]);
            weights_.emplace_back(name + ".w" + std::to_string(l), rng.normal_tensor(dims[l], dims[l + 1], std));
            biases_.emplace_back(name + ".b" + std::to_string(l), Tensor(1, dims[l + 1]));
        }
    }

    Var forward(Tape& t, Var x) {
        for (size_t l = 0; l < weights_.size(); ++l) {
            x = t.add_rowvec(t.matmul(x, t.param(weights_[l])), t.param(biases_[l]));
            if (l + 1 < weights_.size()) x = t.leaky_relu(x, leak_);
        }
        return x;
    }

    /// Inference path: same math, no graph.
    Tensor forward_value(const Tensor& x) const {
        Tensor h = x;
        for (size_t l = 0; l < weights_.size(); ++l) {
            Tensor out(h.rows(), weights_[l].value.cols());
            gemm_acc(out, h, false, weights_[l].value, false);
            for (int i = 0; i < out.rows(); ++i)
                for (int j = 0; j < out.cols(); ++j) out(i, j) += biases_[l].value(0, j);
            if (l + 1 < weights_.size())
                for (size_t k = 0; k < out.size(); ++k)
                    if (out[k] < 0.0) out[k] *= leak_;
            h = std::move(out);
        }
        return h;
    }

    int input_dim() const { return weights_.empty() ? 0 : weights_.front().value.rows(); }
    int output_dim() const { return weights_.empty() ? 0 : weights_.back().value.cols(); }
    size_t layer_count() const { return weights_.size(); }

    void collect(std::vector<Param*>& out) {
        for (auto& w : weights_) out.push_back(&w);
        for (auto& b : biases_) out.push_back(&b);
    }

private:
    std::vector<Param> weights_;
    std::vector<Param> biases_;
    double leak_ = 0.1;
};

}  // namespace fsoda
