#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsoda/core/error.hpp"
#include "fsoda/core/rng.hpp"
#include "fsoda/core/tensor.hpp"

namespace fsoda {

enum class Domain : int { source = 0, target = 1 };

inline const char* domain_name(Domain d) { return d == Domain::source ? "source" : "target"; }
inline Domain other_domain(Domain d) { return d == Domain::source ? Domain::target : Domain::source; }

/// Lazy handle to one dataset element; materialized by the registry.
struct SampleRef {
    Domain domain = Domain::source;
    int class_index = -1;   // into the per-domain class list
    int sample_index = -1;  // within the class

    bool operator==(const SampleRef& o) const = default;
    bool operator<(const SampleRef& o) const {
        return std::tie(domain, class_index, sample_index) < std::tie(o.domain, o.class_index, o.sample_index);
    }
};

enum class InputKind { vector, image };

/// A materialized input: vector samples use shape {d}; images use {c,h,w}
/// with values in [0,1], channel-major.
struct Sample {
    std::vector<int> shape;
    std::vector<double> values;

    bool is_image() const { return shape.size() == 3; }
    int dim() const {
        int n = 1;
        for (int s : shape) n *= s;
        return n;
    }
};

/// Synthetic two-domain task: each class is a unit-covariance Gaussian in
/// dim-D; the target domain applies a fixed rotation+shift to the source
/// statistics, giving a controllable domain gap.
struct SyntheticTask {
    int dim = 8;
    uint64_t seed = 0;
    double class_spread = 5.0;
    double noise_std = 1.0;
    double rotation_deg = 30.0;
    double shift = 2.0;

    Tensor class_mean(const std::string& class_name) const {
        Rng rng(hash_combine(hash_combine(seed, "mean"), class_name));
        return rng.normal_tensor(1, dim, class_spread);
    }

    /// Rotation built from Givens rotations over consecutive coordinate pairs.
    void apply_target_transform(Tensor& x) const {
        const double theta = rotation_deg * 3.14159265358979323846 / 180.0;
        const double c = std::cos(theta), s = std::sin(theta);
        for (int j = 0; j + 1 < dim; j += 2) {
            const double a = x(0, j), b = x(0, j + 1);
            x(0, j) = c * a - s * b;
            x(0, j + 1) = s * a + c * b;
        }
        Rng rng(hash_combine(seed, "shift"));
        Tensor dir = rng.normal_tensor(1, dim);
        const double n = dir.norm();
        if (n > 0)
            for (int j = 0; j < dim; ++j) x(0, j) += shift * dir(0, j) / n;
    }

    Sample make(Domain d, const std::string& class_name, int sample_index) const {
        Rng rng(hash_combine(hash_combine(hash_combine(hash_combine(seed, "sample"), class_name),
                                          static_cast<uint64_t>(sample_index)),
                             static_cast<uint64_t>(d)));
        Tensor x = class_mean(class_name);
        for (int j = 0; j < dim; ++j) x(0, j) += noise_std * rng.normal();
        if (d == Domain::target) apply_target_transform(x);
        Sample s;
        s.shape = {dim};
        s.values.assign(x.data(), x.data() + x.size());
        return s;
    }
};

namespace detail {

/// Minimal binary PPM (P6) / PGM (P5) reader; values scaled to [0,1].
inline Sample read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image " + path);
    std::string magic;
    in >> magic;
    if (magic != "P6" && magic != "P5") throw DataError("unsupported image format (want P5/P6 PNM): " + path);
    const int channels = magic == "P6" ? 3 : 1;
    auto next_int = [&in, &path]() {
        int v;
        while (true) {
            in >> std::ws;
            if (in.peek() == '#') {
                std::string line;
                std::getline(in, line);
                continue;
            }
            if (!(in >> v)) throw DataError("bad PNM header: " + path);
            return v;
        }
    };
    const int w = next_int(), h = next_int(), maxval = next_int();
    in.get();  // single whitespace after maxval
    if (maxval <= 0 || maxval > 255) throw DataError("unsupported PNM maxval: " + path);
    std::vector<unsigned char> raw(static_cast<size_t>(w) * h * channels);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw DataError("truncated image: " + path);
    Sample s;
    s.shape = {channels, h, w};
    s.values.resize(raw.size());
    for (int c = 0; c < channels; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                s.values[(static_cast<size_t>(c) * h + y) * w + x] =
                    raw[(static_cast<size_t>(y) * w + x) * channels + c] / static_cast<double>(maxval);
    return s;
}

inline Sample resize_bilinear(const Sample& img, int oh, int ow) {
    const int c = img.shape[0], h = img.shape[1], w = img.shape[2];
    Sample out;
    out.shape = {c, oh, ow};
    out.values.resize(static_cast<size_t>(c) * oh * ow);
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                const double fy = oh > 1 ? static_cast<double>(y) * (h - 1) / (oh - 1) : 0.0;
                const double fx = ow > 1 ? static_cast<double>(x) * (w - 1) / (ow - 1) : 0.0;
                const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
                const int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
                const double dy = fy - y0, dx = fx - x0;
                auto px = [&](int yy, int xx) { return img.values[(static_cast<size_t>(ch) * h + yy) * w + xx]; };
                out.values[(static_cast<size_t>(ch) * oh + y) * ow + x] =
                    (1 - dy) * ((1 - dx) * px(y0, x0) + dx * px(y0, x1)) +
                    dy * ((1 - dx) * px(y1, x0) + dx * px(y1, x1));
            }
    return out;
}

}  // namespace detail

/// Per-domain class -> sample lists plus the machinery to materialize
/// samples (from disk for image datasets, on the fly for synthetic ones).
class DatasetRegistry {
public:
    struct ClassEntry {
        std::string name;
        std::vector<std::string> files;  // empty for synthetic
        int sample_count = 0;
    };

    static DatasetRegistry load(const std::string& root, const nlohmann::json& manifest) {
        DatasetRegistry reg;
        const std::string kind = manifest.value("kind", "");
        if (kind == "synthetic") {
            reg.kind_ = InputKind::vector;
            reg.synthetic_ = true;
            reg.task_.dim = manifest.value("dim", 8);
            reg.task_.seed = manifest.value("seed", 0ull);
            reg.task_.class_spread = manifest.value("class_spread", 5.0);
            reg.task_.noise_std = manifest.value("noise_std", 1.0);
            reg.task_.rotation_deg = manifest.value("target_rotation_deg", 30.0);
            reg.task_.shift = manifest.value("target_shift", 2.0);
            const int n_classes = manifest.value("classes", 0);
            const int per_class = manifest.value("samples_per_class", 0);
            if (n_classes <= 0 || per_class <= 0) throw DataError("synthetic manifest needs classes > 0 and samples_per_class > 0");
            for (int d = 0; d < 2; ++d) {
                for (int c = 0; c < n_classes; ++c) {
                    char buf[16];
                    std::snprintf(buf, sizeof buf, "c%03d", c);
                    reg.classes_[d].push_back(ClassEntry{buf, {}, per_class});
                }
            }
        } else if (kind == "image_folder") {
            reg.kind_ = InputKind::image;
            reg.image_hw_ = manifest.value("image_size", 84);
            if (!manifest.contains("domains")) throw DataError("image_folder manifest needs a domains block");
            const std::array<std::string, 2> dirs = {manifest["domains"].value("source", ""),
                                                     manifest["domains"].value("target", "")};
            namespace fs = std::filesystem;
            for (int d = 0; d < 2; ++d) {
                const fs::path droot = fs::path(root) / dirs[d];
                if (!fs::is_directory(droot)) throw DataError("missing domain directory: " + droot.string());
                std::set<std::string> seen;
                std::vector<ClassEntry> entries;
                for (const auto& cls : fs::directory_iterator(droot)) {
                    if (!cls.is_directory()) continue;
                    const std::string cname = cls.path().filename().string();
                    if (!seen.insert(cname).second) throw DataError("duplicate class name: " + cname);
                    ClassEntry e;
                    e.name = cname;
                    for (const auto& f : fs::directory_iterator(cls.path()))
                        if (f.is_regular_file()) e.files.push_back(f.path().string());
                    std::sort(e.files.begin(), e.files.end());
                    e.sample_count = static_cast<int>(e.files.size());
                    if (e.sample_count == 0) throw DataError("empty class: " + cname + " in " + dirs[d]);
                    entries.push_back(std::move(e));
                }
                std::sort(entries.begin(), entries.end(),
                          [](const ClassEntry& a, const ClassEntry& b) { return a.name < b.name; });
                if (entries.empty()) throw DataError("no classes under " + droot.string());
                reg.classes_[d] = std::move(entries);
            }
        } else {
            throw DataError("manifest kind must be 'synthetic' or 'image_folder', got '" + kind + "'");
        }
        return reg;
    }

    InputKind input_kind() const { return kind_; }
    int vector_dim() const { return task_.dim; }
    int image_size() const { return image_hw_; }
    const SyntheticTask& task() const { return task_; }

    const std::vector<ClassEntry>& classes(Domain d) const { return classes_[static_cast<int>(d)]; }

    int find_class(Domain d, const std::string& name) const {
        const auto& cs = classes(d);
        for (size_t i = 0; i < cs.size(); ++i)
            if (cs[i].name == name) return static_cast<int>(i);
        throw DataError("class '" + name + "' not present in " + domain_name(d) + " domain");
    }

    int total_samples() const {
        int n = 0;
        for (const auto& dom : classes_)
            for (const auto& c : dom) n += c.sample_count;
        return n;
    }

    Sample materialize(const SampleRef& ref) const {
        const auto& entry = classes(ref.domain).at(ref.class_index);
        if (ref.sample_index < 0 || ref.sample_index >= entry.sample_count)
            throw DataError("sample index out of range for class " + entry.name);
        if (synthetic_) return task_.make(ref.domain, entry.name, ref.sample_index);
        Sample img = detail::read_pnm(entry.files[ref.sample_index]);
        if (img.shape[1] != image_hw_ || img.shape[2] != image_hw_)
            img = detail::resize_bilinear(img, image_hw_, image_hw_);
        return img;
    }

private:
    std::array<std::vector<ClassEntry>, 2> classes_;
    InputKind kind_ = InputKind::vector;
    bool synthetic_ = false;
    SyntheticTask task_;
    int image_hw_ = 84;
};

inline nlohmann::json load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError(std::string("manifest parse error: ") + e.what());
    }
    return j;
}

}  // namespace fsoda
