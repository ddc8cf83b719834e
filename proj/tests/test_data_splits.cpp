#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>

#include "fsoda/data/episode.hpp"
#include "fsoda/data/registry.hpp"
#include "fsoda/data/splits.hpp"

using namespace fsoda;
namespace fs = std::filesystem;

namespace {

nlohmann::json synth_manifest(int classes, int per_class, int dim = 4, uint64_t seed = 7) {
    return {{"kind", "synthetic"}, {"classes", classes}, {"samples_per_class", per_class}, {"dim", dim}, {"seed", seed}};
}

DatasetRegistry small_registry() { return DatasetRegistry::load("", synth_manifest(26, 20, 4)); }

ClassSplits small_splits(const DatasetRegistry& reg, uint64_t seed = 3) {
    return make_class_splits(reg, SplitSizes{10, 6, 5, 5}, seed);
}

}  // namespace

TEST_CASE("synthetic registry counts") {
    auto reg = DatasetRegistry::load("", synth_manifest(10, 20));
    REQUIRE(reg.classes(Domain::source).size() == 10);
    REQUIRE(reg.classes(Domain::target).size() == 10);
    REQUIRE(reg.total_samples() == 400);

    Sample s = reg.materialize({Domain::source, 0, 0});
    REQUIRE(s.shape == std::vector<int>{4});
    // deterministic materialization
    Sample s2 = reg.materialize({Domain::source, 0, 0});
    REQUIRE(s.values == s2.values);
    Sample s3 = reg.materialize({Domain::source, 0, 1});
    REQUIRE(s.values != s3.values);
}

TEST_CASE("synthetic target domain is an affine transform of source statistics") {
    auto reg = DatasetRegistry::load("", synth_manifest(4, 400, 6));
    auto mean_of = [&](Domain d, int ci) {
        Tensor m(1, 6);
        for (int i = 0; i < 400; ++i) {
            Sample s = reg.materialize({d, ci, i});
            for (int j = 0; j < 6; ++j) m(0, j) += s.values[j] / 400.0;
        }
        return m;
    };
    Tensor s0 = mean_of(Domain::source, 0), s1 = mean_of(Domain::source, 1);
    Tensor t0 = mean_of(Domain::target, 0), t1 = mean_of(Domain::target, 1);
    // rotation+shift preserves distances between class means
    Tensor ds = s0, dt = t0;
    ds.axpy_inplace(-1.0, s1);
    dt.axpy_inplace(-1.0, t1);
    REQUIRE(ds.norm() == Catch::Approx(dt.norm()).margin(0.5));
    Tensor gap = s0;
    gap.axpy_inplace(-1.0, t0);
    REQUIRE(gap.norm() > 1.0);  // a real domain shift exists
}

TEST_CASE("image_folder registry layout") {
    const fs::path root = fs::temp_directory_path() / "fsoda_officehome";
    fs::remove_all(root);
    for (const char* dom : {"Real-World", "Clipart"}) {
        for (int c = 0; c < 65; ++c) {
            fs::path cls = root / dom / ("class" + std::to_string(c));
            fs::create_directories(cls);
            std::ofstream(cls / "img0.ppm") << "P6 1 1 255\n \n";
        }
    }
    nlohmann::json m = {{"kind", "image_folder"},
                        {"domains", {{"source", "Real-World"}, {"target", "Clipart"}}},
                        {"image_size", 84}};
    auto reg = DatasetRegistry::load(root.string(), m);
    REQUIRE(reg.classes(Domain::source).size() == 65);
    REQUIRE(reg.classes(Domain::target).size() == 65);

    SECTION("empty class folder rejected") {
        fs::create_directories(root / "Real-World" / "zzz_empty");
        REQUIRE_THROWS_WITH(DatasetRegistry::load(root.string(), m), Catch::Matchers::ContainsSubstring("empty class"));
        fs::remove_all(root / "Real-World" / "zzz_empty");
    }
    SECTION("missing domain directory rejected") {
        nlohmann::json bad = m;
        bad["domains"]["target"] = "Sketch";
        REQUIRE_THROWS_WITH(DatasetRegistry::load(root.string(), bad),
                            Catch::Matchers::ContainsSubstring("missing domain directory"));
    }
    fs::remove_all(root);
}

TEST_CASE("class splits: sizes, disjointness, determinism") {
    SECTION("office-home sizes") {
        auto reg = DatasetRegistry::load("", synth_manifest(65, 5));
        auto s = make_class_splits(reg, SplitSizes{25, 10, 15, 15}, 11);
        REQUIRE(s.source_train.size() == 25);
        REQUIRE(s.target_train.size() == 10);
        REQUIRE(s.test_known.size() == 15);
        REQUIRE(s.test_unknown.size() == 15);
        REQUIRE(s.disjoint());
    }
    SECTION("domainnet sizes consume all 345 classes") {
        auto reg = DatasetRegistry::load("", synth_manifest(345, 2));
        auto s = make_class_splits(reg, SplitSizes{125, 75, 80, 65}, 4);
        REQUIRE(s.disjoint());
        std::set<std::string> all;
        for (const auto* v : {&s.source_train, &s.target_train, &s.test_known, &s.test_unknown})
            all.insert(v->begin(), v->end());
        REQUIRE(all.size() == 345);
    }
    SECTION("same seed twice gives identical splits") {
        auto reg = small_registry();
        auto a = small_splits(reg, 42);
        auto b = small_splits(reg, 42);
        REQUIRE(a.source_train == b.source_train);
        REQUIRE(a.target_train == b.target_train);
        REQUIRE(a.test_known == b.test_known);
        REQUIRE(a.test_unknown == b.test_unknown);
        auto c = small_splits(reg, 43);
        REQUIRE(a.source_train != c.source_train);
    }
    SECTION("oversized request rejected") {
        auto reg = small_registry();
        REQUIRE_THROWS_AS(make_class_splits(reg, SplitSizes{27, 6, 5, 5}, 1), DataError);
        REQUIRE_THROWS_AS(make_class_splits(reg, SplitSizes{10, 10, 5, 5}, 1), DataError);
    }
}

TEST_CASE("splits file round-trip") {
    auto reg = small_registry();
    auto s = small_splits(reg);
    const std::string path = (fs::temp_directory_path() / "fsoda_splits.json").string();
    save_splits(s, path);
    auto back = load_splits(path);
    REQUIRE(back.source_train == s.source_train);
    REQUIRE(back.test_unknown == s.test_unknown);
    REQUIRE(back.seed == s.seed);
}

TEST_CASE("training episode geometry") {
    auto reg = small_registry();
    auto splits = small_splits(reg);
    EpisodeSpec spec;
    spec.ways = 5;
    spec.open_ways = 1;  // C_d has 6 classes: 5 known + 1 pseudo-unknown
    spec.shots_source = 5;
    spec.shots_target = 1;
    spec.queries_per_class = 3;

    Rng rng(1);
    Episode ep = sample_episode(reg, splits, spec, rng);
    REQUIRE(ep.support_of(Domain::source).size() == 25);
    REQUIRE(ep.support_of(Domain::target).size() == 5);
    REQUIRE(ep.query_of(Domain::source).size() == (5 + 1) * 3);
    REQUIRE(ep.query_of(Domain::target).size() == (5 + 1) * 3);
    check_episode_invariants(ep);

    SECTION("insufficient classes error") {
        EpisodeSpec big = spec;
        big.open_ways = 6;  // 5 known + 6 unknown > 6 available in C_d
        REQUIRE_THROWS_WITH(sample_episode(reg, splits, big, rng),
                            Catch::Matchers::ContainsSubstring("insufficient classes"));
    }
    SECTION("m_S > m_T enforced in training") {
        EpisodeSpec bad = spec;
        bad.shots_source = 1;
        REQUIRE_THROWS_AS(sample_episode(reg, splits, bad, rng), ConfigError);
    }
    SECTION("invariant scan over many episodes") {
        Rng scan(99);
        for (int i = 0; i < 300; ++i) {
            Episode e = sample_episode(reg, splits, spec, scan);
            REQUIRE_NOTHROW(check_episode_invariants(e));
            for (const auto& n : e.known_classes[0])
                REQUIRE(std::count(splits.source_train.begin(), splits.source_train.end(), n) == 1);
            for (const auto& n : e.unknown_classes[1])
                REQUIRE(std::count(splits.target_train.begin(), splits.target_train.end(), n) == 1);
        }
    }
    SECTION("episodes are a pure function of the rng seed") {
        Rng r1(5), r2(5);
        Episode a = sample_episode(reg, splits, spec, r1);
        Episode b = sample_episode(reg, splits, spec, r2);
        REQUIRE(a.known_classes == b.known_classes);
        REQUIRE(a.support[0].size() == b.support[0].size());
        for (size_t i = 0; i < a.support[0].size(); ++i) REQUIRE(a.support[0][i].ref == b.support[0][i].ref);
    }
}

TEST_CASE("test episode construction") {
    auto reg = small_registry();
    auto splits = small_splits(reg);
    EpisodeSpec spec;
    spec.ways = 5;
    spec.open_ways = 5;
    spec.shots_target = 1;
    spec.queries_per_class = 3;
    spec.phase = Phase::test;

    Rng rng(8);
    SECTION("standard: support from test knowns, queries span knowns and opens") {
        Episode ep = sample_test_episode(reg, splits, spec, rng, false);
        REQUIRE(ep.support_of(Domain::target).size() == 5);
        REQUIRE(ep.known_classes[1].size() == 5);
        REQUIRE(!ep.unknown_classes[1].empty());
        for (const auto& n : ep.known_classes[1])
            REQUIRE(std::count(splits.test_known.begin(), splits.test_known.end(), n) == 1);
        for (const auto& n : ep.unknown_classes[1])
            REQUIRE(std::count(splits.test_unknown.begin(), splits.test_unknown.end(), n) == 1);
        REQUIRE(ep.query_of(Domain::source).empty());
        REQUIRE(ep.support_of(Domain::source).empty());
        check_episode_invariants(ep);
    }
    SECTION("generalized: queries carry both domain tags") {
        Episode ep = sample_test_episode(reg, splits, spec, rng, true);
        REQUIRE(!ep.query_of(Domain::source).empty());
        REQUIRE(!ep.query_of(Domain::target).empty());
        check_episode_invariants(ep);
    }
    SECTION("test unknowns never intersect target training classes") {
        Rng scan(123);
        for (int i = 0; i < 200; ++i) {
            Episode ep = sample_test_episode(reg, splits, spec, scan, i % 2 == 0);
            for (const auto& n : ep.unknown_classes[1])
                REQUIRE(std::count(splits.target_train.begin(), splits.target_train.end(), n) == 0);
        }
    }
}
