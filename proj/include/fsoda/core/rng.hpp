#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fsoda/core/tensor.hpp"

namespace fsoda {

/// Deterministic RNG. Sampling is implemented directly on top of the engine
/// (Box-Muller, Fisher-Yates) instead of std:: distributions, so streams are
/// reproducible independent of the standard library's distribution internals.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(eng_() >> 11) * (1.0 / 9007199254740992.0);  // 2^53
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi] inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        // modulo bias is < 2^-40 for our spans; acceptable for sampling use
        return lo + static_cast<int64_t>(eng_() % span);
    }

    /// Standard normal via Box-Muller (one value per call, no cached state).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }
    double normal(double mean, double stdev) { return mean + stdev * normal(); }

    Tensor normal_tensor(int rows, int cols, double stdev = 1.0, double mean = 0.0) {
        Tensor t(rows, cols);
        for (size_t i = 0; i < t.size(); ++i) t[i] = mean + stdev * normal();
        return t;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// First n indices of a shuffled [0, total) range, without replacement.
    std::vector<int> sample_indices(int total, int n) {
        std::vector<int> idx(total);
        for (int i = 0; i < total; ++i) idx[i] = i;
        shuffle(idx);
        idx.resize(n);
        return idx;
    }

    /// Independent child stream derived from a tag; the parent is untouched.
    Rng fork(std::string_view tag) const {
        uint64_t h = 1469598103934665603ull;  // FNV-1a over (state hash, tag)
        for (char c : tag) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        std::ostringstream os;
        os << eng_;
        for (char c : os.str().substr(0, 64)) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        return Rng(h);
    }
    Rng fork(uint64_t salt) const {
        std::ostringstream os;
        os << eng_;
        uint64_t h = 1469598103934665603ull ^ salt * 0x9e3779b97f4a7c15ull;
        for (char c : os.str().substr(0, 64)) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        return Rng(h);
    }

    std::string save_state() const {
        std::ostringstream os;
        os << eng_;
        return os.str();
    }
    void load_state(const std::string& s) {
        std::istringstream is(s);
        is >> eng_;
    }

private:
    std::mt19937_64 eng_;
};

/// Stable 64-bit hash for deriving per-entity seeds (dataset, class, sample).
inline uint64_t hash_combine(uint64_t seed, std::string_view text) {
    uint64_t h = seed ^ 0xcbf29ce484222325ull;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t hash_combine(uint64_t seed, uint64_t v) {
    uint64_t h = seed ^ (v + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2));
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdull;
    h ^= h >> 33;
    return h;
}

}  // namespace fsoda
