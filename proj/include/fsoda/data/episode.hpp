#pragma once

#include <array>
#include <set>
#include <string>
#include <vector>

#include "fsoda/core/rng.hpp"
#include "fsoda/data/registry.hpp"
#include "fsoda/data/splits.hpp"

namespace fsoda {

enum class Phase { train, test };

/// K-way m-shot task geometry. In training m_source > m_target >= 1 (the
/// source domain carries more supervision); at test only the target shot
/// count applies.
struct EpisodeSpec {
    int ways = 5;             // |K| known classes per domain
    int open_ways = 5;        // |U| pseudo-unknown classes per domain
    int shots_source = 5;     // m_S
    int shots_target = 1;     // m_T
    int queries_per_class = 3;
    Phase phase = Phase::train;

    void validate() const {
        if (ways < 2) throw ConfigError("episode.ways must be >= 2");
        if (open_ways < 1) throw ConfigError("episode.open_ways must be >= 1");
        if (queries_per_class < 1) throw ConfigError("episode.queries_per_class must be >= 1");
        if (shots_target < 1) throw ConfigError("episode.shots_target must be >= 1");
        if (phase == Phase::train && shots_source <= shots_target)
            throw ConfigError("episode.shots_source must exceed shots_target in training");
    }
};

struct EpisodeItem {
    SampleRef ref;
    int slot = -1;         // known-class slot (0..K-1) or unknown slot (0..U-1)
    bool unknown = false;
};

/// One self-contained task: per-domain supports over the known slots and
/// queries over knowns plus pseudo-unknowns. Class index maps record which
/// registry class occupies each slot.
struct Episode {
    Phase phase = Phase::train;
    bool generalized = false;
    std::array<std::vector<std::string>, 2> known_classes;    // slot -> class name
    std::array<std::vector<std::string>, 2> unknown_classes;  // slot -> class name
    std::array<std::vector<EpisodeItem>, 2> support;
    std::array<std::vector<EpisodeItem>, 2> query;

    const std::vector<EpisodeItem>& support_of(Domain d) const { return support[static_cast<int>(d)]; }
    const std::vector<EpisodeItem>& query_of(Domain d) const { return query[static_cast<int>(d)]; }

    const std::string& item_class(Domain d, const EpisodeItem& it) const {
        const auto& names = it.unknown ? unknown_classes[static_cast<int>(d)] : known_classes[static_cast<int>(d)];
        return names[it.slot];
    }
};

namespace detail {

struct ClassPool {
    Domain domain;
    std::vector<int> class_indices;  // into registry.classes(domain)
};

inline ClassPool make_pool(const DatasetRegistry& reg, Domain d, const std::vector<std::string>& names) {
    ClassPool p{d, {}};
    for (const auto& n : names) p.class_indices.push_back(reg.find_class(d, n));
    return p;
}

/// Draws `known` + `unknown` distinct classes, then per-class disjoint
/// support/query sample indices.
inline void fill_domain(Episode& ep, const DatasetRegistry& reg, const ClassPool& pool, int n_known, int n_unknown,
                        int shots, int queries, Rng& rng) {
    const int d = static_cast<int>(pool.domain);
    if (n_known + n_unknown > static_cast<int>(pool.class_indices.size()))
        throw DataError(std::string("insufficient classes in ") + domain_name(pool.domain) + " pool: need " +
                        std::to_string(n_known + n_unknown) + ", have " + std::to_string(pool.class_indices.size()));

    std::vector<int> order = pool.class_indices;
    rng.shuffle(order);

    for (int k = 0; k < n_known; ++k) {
        const int ci = order[k];
        const auto& entry = reg.classes(pool.domain)[ci];
        ep.known_classes[d].push_back(entry.name);
        if (entry.sample_count < shots + queries)
            throw DataError("class " + entry.name + " has " + std::to_string(entry.sample_count) +
                            " samples, need " + std::to_string(shots + queries));
        const std::vector<int> picks = rng.sample_indices(entry.sample_count, shots + queries);
        for (int i = 0; i < shots; ++i)
            ep.support[d].push_back({SampleRef{pool.domain, ci, picks[i]}, k, false});
        for (int i = 0; i < queries; ++i)
            ep.query[d].push_back({SampleRef{pool.domain, ci, picks[shots + i]}, k, false});
    }
    for (int u = 0; u < n_unknown; ++u) {
        const int ci = order[n_known + u];
        const auto& entry = reg.classes(pool.domain)[ci];
        ep.unknown_classes[d].push_back(entry.name);
        if (entry.sample_count < queries)
            throw DataError("class " + entry.name + " has too few samples for queries");
        const std::vector<int> picks = rng.sample_indices(entry.sample_count, queries);
        for (int i = 0; i < queries; ++i)
            ep.query[d].push_back({SampleRef{pool.domain, ci, picks[i]}, u, true});
    }
}

}  // namespace detail

/// Meta-training episode: knowns and pseudo-unknowns are drawn without
/// replacement from C_s (source side) and C_d (target side), disjoint
/// within the episode.
inline Episode sample_episode(const DatasetRegistry& reg, const ClassSplits& splits, const EpisodeSpec& spec,
                              Rng& rng) {
    if (spec.phase != Phase::train) throw ConfigError("sample_episode expects a training spec");
    spec.validate();
    Episode ep;
    ep.phase = Phase::train;
    const auto src = detail::make_pool(reg, Domain::source, splits.source_train);
    const auto tgt = detail::make_pool(reg, Domain::target, splits.target_train);
    detail::fill_domain(ep, reg, src, spec.ways, spec.open_ways, spec.shots_source, spec.queries_per_class, rng);
    detail::fill_domain(ep, reg, tgt, spec.ways, spec.open_ways, spec.shots_target, spec.queries_per_class, rng);
    return ep;
}

/// Meta-test episode: target support comes from the held-out known classes
/// C'_t, target queries mix C'_t with the open classes C_t - C'_t. The
/// source slots name the frozen-prototype bank classes used for distance
/// vectors; in the generalized protocol source queries (known + open) are
/// drawn as well.
inline Episode sample_test_episode(const DatasetRegistry& reg, const ClassSplits& splits, const EpisodeSpec& spec,
                                   Rng& rng, bool generalized = false) {
    spec.validate();
    Episode ep;
    ep.phase = Phase::test;
    ep.generalized = generalized;

    const auto tgt_known = detail::make_pool(reg, Domain::target, splits.test_known);
    const auto tgt_unknown = detail::make_pool(reg, Domain::target, splits.test_unknown);
    const int d_tgt = static_cast<int>(Domain::target);

    // knowns: support + queries from C'_t
    {
        Episode tmp;
        detail::fill_domain(tmp, reg, tgt_known, spec.ways, 0, spec.shots_target, spec.queries_per_class, rng);
        ep.known_classes[d_tgt] = std::move(tmp.known_classes[d_tgt]);
        ep.support[d_tgt] = std::move(tmp.support[d_tgt]);
        ep.query[d_tgt] = std::move(tmp.query[d_tgt]);
    }
    // opens: queries only, from C_t - C'_t
    {
        const int open_ways = std::min<int>(spec.open_ways, static_cast<int>(tgt_unknown.class_indices.size()));
        if (open_ways < 1) throw DataError("no open classes available for test episode");
        Episode tmp;
        detail::fill_domain(tmp, reg, tgt_unknown, 0, open_ways, 0, spec.queries_per_class, rng);
        ep.unknown_classes[d_tgt] = std::move(tmp.unknown_classes[d_tgt]);
        for (auto& it : tmp.query[d_tgt]) ep.query[d_tgt].push_back(it);
    }

    // source slots: bank classes for the distance-vector source block
    const int d_src = static_cast<int>(Domain::source);
    const auto src_pool = detail::make_pool(reg, Domain::source, splits.source_train);
    if (static_cast<int>(src_pool.class_indices.size()) < spec.ways)
        throw DataError("source pool smaller than episode ways");
    std::vector<int> order = src_pool.class_indices;
    rng.shuffle(order);
    for (int k = 0; k < spec.ways; ++k) ep.known_classes[d_src].push_back(reg.classes(Domain::source)[order[k]].name);

    if (generalized) {
        // known source queries over the bank classes
        for (int k = 0; k < spec.ways; ++k) {
            const int ci = reg.find_class(Domain::source, ep.known_classes[d_src][k]);
            const auto& entry = reg.classes(Domain::source)[ci];
            const std::vector<int> picks = rng.sample_indices(entry.sample_count, spec.queries_per_class);
            for (int i : picks) ep.query[d_src].push_back({SampleRef{Domain::source, ci, i}, k, false});
        }
        // open source queries from the remaining source classes
        const int avail = static_cast<int>(order.size()) - spec.ways;
        const int open_src = std::min(spec.open_ways, avail);
        for (int u = 0; u < open_src; ++u) {
            const int ci = order[spec.ways + u];
            const auto& entry = reg.classes(Domain::source)[ci];
            ep.unknown_classes[d_src].push_back(entry.name);
            const std::vector<int> picks = rng.sample_indices(entry.sample_count, spec.queries_per_class);
            for (int i : picks) ep.query[d_src].push_back({SampleRef{Domain::source, ci, i}, u, true});
        }
    }
    return ep;
}

/// Machine-checkable form of the episode contracts; used by tests and the
/// trainer's paranoia mode.
inline void check_episode_invariants(const Episode& ep) {
    for (int d = 0; d < 2; ++d) {
        std::set<std::string> known(ep.known_classes[d].begin(), ep.known_classes[d].end());
        std::set<std::string> unknown(ep.unknown_classes[d].begin(), ep.unknown_classes[d].end());
        if (known.size() != ep.known_classes[d].size()) throw DataError("duplicate known class in episode");
        if (unknown.size() != ep.unknown_classes[d].size()) throw DataError("duplicate unknown class in episode");
        for (const auto& u : unknown)
            if (known.count(u)) throw DataError("episode known/unknown class overlap: " + u);

        std::set<SampleRef> sup;
        for (const auto& it : ep.support[d]) {
            if (it.unknown) throw DataError("support contains a pseudo-unknown sample");
            if (!sup.insert(it.ref).second) throw DataError("duplicate support sample");
        }
        std::set<SampleRef> qry;
        for (const auto& it : ep.query[d]) {
            if (!qry.insert(it.ref).second) throw DataError("duplicate query sample");
            if (sup.count(it.ref)) throw DataError("sample appears in both support and query");
        }
    }
}

}  // namespace fsoda
