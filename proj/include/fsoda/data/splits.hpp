#pragma once

#include <algorithm>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsoda/core/rng.hpp"
#include "fsoda/data/registry.hpp"

namespace fsoda {

struct SplitSizes {
    int source_train = 0;         // |C_s|
    int target_train = 0;         // |C_d|
    int target_test_known = 0;    // |C'_t|
    int target_test_unknown = 0;  // |C_t - C'_t|
};

/// The four mutually disjoint class sets of a run. Disjointness is over
/// class names: a name used for source training is never reused on the
/// target side even when both domains share a label space.
struct ClassSplits {
    std::vector<std::string> source_train;    // from the source domain
    std::vector<std::string> target_train;    // from the target domain
    std::vector<std::string> test_known;      // target domain, seen only at test
    std::vector<std::string> test_unknown;    // target domain, open space
    uint64_t seed = 0;

    bool disjoint() const {
        std::set<std::string> all;
        size_t n = 0;
        for (const auto* v : {&source_train, &target_train, &test_known, &test_unknown}) {
            all.insert(v->begin(), v->end());
            n += v->size();
        }
        return all.size() == n;
    }
};

inline ClassSplits make_class_splits(const DatasetRegistry& reg, const SplitSizes& sizes, uint64_t seed) {
    if (sizes.source_train <= 0 || sizes.target_train <= 0 || sizes.target_test_known <= 0 ||
        sizes.target_test_unknown <= 0)
        throw ConfigError("split sizes must all be positive");

    std::vector<std::string> src_names, tgt_names;
    for (const auto& c : reg.classes(Domain::source)) src_names.push_back(c.name);
    for (const auto& c : reg.classes(Domain::target)) tgt_names.push_back(c.name);

    if (static_cast<int>(src_names.size()) < sizes.source_train)
        throw DataError("source domain has " + std::to_string(src_names.size()) + " classes, need " +
                        std::to_string(sizes.source_train));

    Rng rng(seed);
    Rng src_rng = rng.fork("source-classes");
    Rng tgt_rng = rng.fork("target-classes");
    src_rng.shuffle(src_names);
    tgt_rng.shuffle(tgt_names);

    ClassSplits out;
    out.seed = seed;
    out.source_train.assign(src_names.begin(), src_names.begin() + sizes.source_train);
    std::set<std::string> used(out.source_train.begin(), out.source_train.end());

    std::vector<std::string> avail;
    for (const auto& n : tgt_names)
        if (!used.count(n)) avail.push_back(n);
    const int need = sizes.target_train + sizes.target_test_known + sizes.target_test_unknown;
    if (static_cast<int>(avail.size()) < need)
        throw DataError("target domain has " + std::to_string(avail.size()) +
                        " classes disjoint from source training, need " + std::to_string(need));

    auto take = [&avail](int n) {
        std::vector<std::string> v(avail.begin(), avail.begin() + n);
        avail.erase(avail.begin(), avail.begin() + n);
        std::sort(v.begin(), v.end());
        return v;
    };
    out.target_train = take(sizes.target_train);
    out.test_known = take(sizes.target_test_known);
    out.test_unknown = take(sizes.target_test_unknown);
    std::sort(out.source_train.begin(), out.source_train.end());
    return out;
}

// ---- versioned split file ------------------------------------------------

inline void save_splits(const ClassSplits& s, const std::string& path) {
    nlohmann::json j;
    j["version"] = 1;
    j["seed"] = s.seed;
    j["source_train"] = s.source_train;
    j["target_train"] = s.target_train;
    j["test_known"] = s.test_known;
    j["test_unknown"] = s.test_unknown;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write splits file " + path);
    out << j.dump(2) << "\n";
}

inline ClassSplits load_splits(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open splits file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError(std::string("splits parse error: ") + e.what());
    }
    if (j.value("version", 0) != 1) throw DataError("unsupported splits file version");
    ClassSplits s;
    s.seed = j.value("seed", 0ull);
    s.source_train = j.at("source_train").get<std::vector<std::string>>();
    s.target_train = j.at("target_train").get<std::vector<std::string>>();
    s.test_known = j.at("test_known").get<std::vector<std::string>>();
    s.test_unknown = j.at("test_unknown").get<std::vector<std::string>>();
    if (!s.disjoint()) throw DataError("splits file violates disjointness");
    return s;
}

}  // namespace fsoda
