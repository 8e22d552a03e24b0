#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mmsched/scheduler.hpp"

using namespace mmsched;

namespace {

AlignmentResult alignment(std::vector<int> bs_beam) {
    AlignmentResult a;
    a.bs_beam = bs_beam;
    a.ue_beam.assign(bs_beam.size(), 0);
    a.metric.assign(bs_beam.size(), 1.0);
    a.distinct_bs = bs_beam;
    std::sort(a.distinct_bs.begin(), a.distinct_bs.end());
    a.distinct_bs.erase(std::unique(a.distinct_bs.begin(), a.distinct_bs.end()), a.distinct_bs.end());
    return a;
}

}  // namespace

TEST_CASE("beam set enumeration") {
    const std::vector<int> two{1, 2};
    CHECK(enumerate_beam_sets(two, 2, 100) == std::vector<BeamSet>{{1}, {2}, {1, 2}});

    const std::vector<int> three{4, 0, 9};
    const auto sets = enumerate_beam_sets(three, 2, 100);
    CHECK(sets.size() == 6);
    CHECK(sets == std::vector<BeamSet>{{0}, {4}, {9}, {0, 4}, {0, 9}, {4, 9}});

    CHECK(enumerate_beam_sets(three, 1, 100).size() == 3);
    CHECK(enumerate_beam_sets(three, 8, 100).size() == 7);

    const std::vector<int> many{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    CHECK(enumerate_beam_sets(many, 4, 10000).size() == 12 + 66 + 220 + 495);
    CHECK_THROWS_AS(enumerate_beam_sets(many, 4, 500), CapExceeded);
    try {
        enumerate_beam_sets(many, 4, 500);
    } catch (const CapExceeded& e) {
        CHECK(std::string(e.what()).find("lower the stream count L") != std::string::npos);
    }
    CHECK_THROWS_AS(enumerate_beam_sets(std::vector<int>{}, 2, 10), std::invalid_argument);
}

TEST_CASE("UE tuple enumeration") {
    // UEs 0, 1 prefer beam 1; UE 2 prefers beam 2.
    const auto a = alignment({1, 1, 2});
    CHECK(enumerate_ue_tuples({1, 2}, a, 100) == std::vector<UeTuple>{{0, 2}, {1, 2}});
    CHECK(enumerate_ue_tuples({1}, a, 100) == std::vector<UeTuple>{{0}, {1}});
    CHECK(enumerate_ue_tuples({1, 3}, a, 100).empty());

    const auto b = alignment({0, 0, 0, 1, 1, 1});
    CHECK(enumerate_ue_tuples({0, 1}, b, 100).size() == 9);
    CHECK_THROWS_AS(enumerate_ue_tuples({0, 1}, b, 8), CapExceeded);
}

TEST_CASE("candidate tensor layout") {
    SystemConfig cfg;
    cfg.max_streams = 2;
    const auto a = alignment({3, 3, 5, 7});
    const auto r = build_candidates(a, cfg, 2);
    // Sets: {3},{5},{7},{3,5},{3,7},{5,7}; tuples 2+1+1+2+2+1.
    REQUIRE(r.n_beam_sets() == 6);
    CHECK(r.n_tuples() == 9);
    CHECK(r.n_cbs() == 2);
    CHECK(r.beam_set(3) == BeamSet{3, 5});
    CHECK(r.tuple_end(3) - r.tuple_begin(3) == 2);
    CHECK(r.tuple(r.tuple_begin(3)) == UeTuple{0, 2});
    for (int l = 0; l < r.n_beam_sets(); ++l) {
        for (int t = r.tuple_begin(l); t < r.tuple_end(l); ++t) {
            CHECK(r.beam_set_of(t) == l);
            CHECK(r.tuple(t).size() == r.beam_set(l).size());
            for (std::size_t j = 0; j < r.tuple(t).size(); ++j) CHECK(a.bs_beam[r.tuple(t)[j]] == r.beam_set(l)[j]);
        }
    }

    cfg.max_ue_tuples = 8;
    CHECK_THROWS_AS(build_candidates(a, cfg, 2), CapExceeded);
}

TEST_CASE("rate storage and subsets") {
    RateTensor r(3, 2);
    r.add_beam_set({0}, {{0}, {1}});
    r.add_beam_set({0, 1}, {{0, 2}, {1, 2}});
    r.rate(2, 1, 1) = 4.5;
    r.rate(0, 0, 0) = 1.0;
    CHECK(r.rate_of(2, 1, 2) == 4.5);
    CHECK(r.rate_of(2, 1, 1) == 0.0);
    CHECK(r.rate_of(2, 0, 2) == 0.0);
    const std::vector<int> keep{1};
    const auto s = r.subset(keep);
    CHECK(s.n_beam_sets() == 1);
    CHECK(s.n_tuples() == 2);
    CHECK(s.rate(0, 1, 1) == 4.5);
    CHECK(s.beam_set(0) == BeamSet{0, 1});
}

TEST_CASE("precomputed rates") {
    SystemConfig cfg = validate_config(SystemConfig::desk());
    cfg.max_streams = 2;
    const auto table = RateTable::cqi();

    SUBCASE("zero channels give a zero tensor") {
        const auto a = alignment({0, 1, 1});
        auto r = build_candidates(a, cfg, cfg.n_cbs_freq);
        const EffectiveChannelSet eff(cfg.n_cbs_freq, 3, 2);
        precompute_rates(r, a, eff, cfg, table);
        for (int t = 0; t < r.n_tuples(); ++t) {
            for (int q = 0; q < r.n_cbs(); ++q) {
                for (std::size_t j = 0; j < r.tuple(t).size(); ++j) CHECK(r.rate(t, q, static_cast<int>(j)) == 0.0);
            }
        }
    }

    SUBCASE("single UE matches the interference-free SINR") {
        cfg.n_cbs_freq = 1;
        const auto a = alignment({0});
        auto r = build_candidates(a, cfg, 1);
        REQUIRE(r.n_tuples() == 1);
        EffectiveChannelSet eff(1, 1, 1);
        eff.by_beam(0, 0, 0) = 3e-6;
        precompute_rates(r, a, eff, cfg, table);
        const double gamma = 9e-12 * cfg.tx_power_w / cfg.n_freq_subch / cfg.noise_power_prb_w;
        CHECK(r.rate(0, 0, 0) == table.rate(gamma));
        CHECK(r.rate(0, 0, 0) > 0.0);
    }

    SUBCASE("rates come from the table's efficiency set") {
        const auto a = alignment({0, 1, 1});
        auto r = build_candidates(a, cfg, cfg.n_cbs_freq);
        EffectiveChannelSet eff(cfg.n_cbs_freq, 3, 2);
        for (int q = 0; q < cfg.n_cbs_freq; ++q) {
            for (int u = 0; u < 3; ++u) {
                for (int k = 0; k < 2; ++k) eff.by_beam(q, u, k) = cplx(1e-6 * (1 + q + u), 3e-7 * k);
            }
        }
        precompute_rates(r, a, eff, cfg, table);
        for (int t = 0; t < r.n_tuples(); ++t) {
            for (int q = 0; q < r.n_cbs(); ++q) {
                for (std::size_t j = 0; j < r.tuple(t).size(); ++j) {
                    const double v = r.rate(t, q, static_cast<int>(j));
                    bool in_set = v == 0.0;
                    for (const auto& row : table.rows()) in_set = in_set || v == row.efficiency;
                    CHECK(in_set);
                }
            }
        }
    }
}
