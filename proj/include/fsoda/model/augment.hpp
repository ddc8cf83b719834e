#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "fsoda/core/error.hpp"
#include "fsoda/core/rng.hpp"
#include "fsoda/data/registry.hpp"

namespace fsoda {

enum class AugmentMode { none, weak, strong };

inline AugmentMode augment_mode_from_string(const std::string& s) {
    if (s == "none") return AugmentMode::none;
    if (s == "weak") return AugmentMode::weak;
    if (s == "strong") return AugmentMode::strong;
    throw ConfigError("augment.mode must be none|weak|strong, got '" + s + "'");
}

/// Image-level policy. Weak = flip / small rotation / resized crop;
/// strong = one intensity transform with magnitude drawn from
/// [0, strong_magnitude_max]. Vector inputs pass weak unchanged and get the
/// same intensity transform under strong.
struct AugmentPolicy {
    AugmentMode mode = AugmentMode::none;
    double flip_prob = 0.5;
    double max_rotate_deg = 15.0;
    double min_crop_scale = 0.8;
    double strong_magnitude_max = 0.5;

    void validate() const {
        if (strong_magnitude_max < 0.0 || strong_magnitude_max > 0.5)
            throw ConfigError("augment.strong_magnitude_max must lie in [0, 0.5]");
        if (flip_prob < 0.0 || flip_prob > 1.0) throw ConfigError("augment flip_prob out of [0,1]");
        if (min_crop_scale <= 0.0 || min_crop_scale > 1.0) throw ConfigError("augment min_crop_scale out of (0,1]");
    }
};

/// Magnitude draw for the strong branch, exposed so tests can audit its range.
inline double draw_strong_magnitude(const AugmentPolicy& policy, Rng& rng) {
    const double m = rng.uniform(0.0, policy.strong_magnitude_max);
    if (m < 0.0 || m > 0.5) throw NumericError("strong magnitude outside [0, 0.5]");
    return m;
}

namespace detail {

inline double image_at(const Sample& img, int c, double y, double x) {
    const int h = img.shape[1], w = img.shape[2];
    const int y0 = std::clamp(static_cast<int>(std::floor(y)), 0, h - 1);
    const int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, w - 1);
    const int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
    const double dy = std::clamp(y - y0, 0.0, 1.0), dx = std::clamp(x - x0, 0.0, 1.0);
    auto px = [&](int yy, int xx) { return img.values[(static_cast<size_t>(c) * h + yy) * w + xx]; };
    return (1 - dy) * ((1 - dx) * px(y0, x0) + dx * px(y0, x1)) + dy * ((1 - dx) * px(y1, x0) + dx * px(y1, x1));
}

inline Sample weak_image(const Sample& in, const AugmentPolicy& policy, Rng& rng) {
    const int c = in.shape[0], h = in.shape[1], w = in.shape[2];
    Sample out = in;
    if (rng.uniform() < policy.flip_prob) {
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    out.values[(static_cast<size_t>(ch) * h + y) * w + x] =
                        in.values[(static_cast<size_t>(ch) * h + y) * w + (w - 1 - x)];
    }
    const double theta = rng.uniform(-policy.max_rotate_deg, policy.max_rotate_deg) * 3.14159265358979323846 / 180.0;
    const double scale = rng.uniform(policy.min_crop_scale, 1.0);
    const double ct = std::cos(theta), st = std::sin(theta);
    const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
    Sample rot = out;
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                // rotate about the center, then zoom in by the crop scale
                const double ry = (y - cy) * scale, rx = (x - cx) * scale;
                const double sy = ct * ry - st * rx + cy;
                const double sx = st * ry + ct * rx + cx;
                rot.values[(static_cast<size_t>(ch) * h + y) * w + x] = image_at(out, ch, sy, sx);
            }
    return rot;
}

inline Sample strong_intensity(const Sample& in, const AugmentPolicy& policy, Rng& rng) {
    const double m = draw_strong_magnitude(policy, rng);
    const double scale = 1.0 + rng.uniform(-1.0, 1.0) * m;
    const double shift = rng.uniform(-1.0, 1.0) * m;
    Sample out = in;
    for (auto& v : out.values) {
        v = scale * v + shift;
        if (in.is_image()) v = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

}  // namespace detail

/// mode=none is the identity (bitwise). Weak leaves vector inputs unchanged;
/// strong applies a per-sample intensity scale/shift to either kind.
inline Sample augment(const Sample& in, const AugmentPolicy& policy, Rng& rng) {
    policy.validate();
    switch (policy.mode) {
        case AugmentMode::none:
            return in;
        case AugmentMode::weak:
            return in.is_image() ? detail::weak_image(in, policy, rng) : in;
        case AugmentMode::strong:
            return detail::strong_intensity(in, policy, rng);
    }
    throw ConfigError("unreachable augment mode");
}

}  // namespace fsoda
