#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "mmsched/beams.hpp"
#include "mmsched/channel.hpp"

using namespace mmsched;

namespace {

CMatrix outer(const std::vector<cplx>& au, const std::vector<cplx>& ab, cplx g = 1.0) {
    CMatrix h(au.size(), ab.size());
    for (std::size_t r = 0; r < au.size(); ++r) {
        for (std::size_t c = 0; c < ab.size(); ++c) h(r, c) = g * au[r] * std::conj(ab[c]);
    }
    return h;
}

double spectral_norm_sq(const CMatrix& h) {
    Eigen::MatrixXcd m(h.rows, h.cols);
    for (std::size_t r = 0; r < h.rows; ++r) {
        for (std::size_t c = 0; c < h.cols; ++c) m(r, c) = h(r, c);
    }
    const double s = Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues()(0);
    return s * s;
}

UeChannels random_channels(int n_ues, int n_cbs, int nu, int nb, std::uint64_t seed) {
    SystemConfig cfg = SystemConfig::desk();
    cfg.n_ues = n_ues;
    cfg.n_ue_antennas = nu;
    cfg.n_bs_antennas = nb;
    const auto real = generate_realization(validate_config(cfg), seed);
    ChannelSynthesizer synth(real, nu, nb);
    UeChannels ch(n_ues);
    for (int u = 0; u < n_ues; ++u) {
        for (int q = 0; q < n_cbs; ++q) ch[u].push_back(synth.channel(u, q, 0));
    }
    return ch;
}

}  // namespace

TEST_CASE("codebook intervals tile sin-space") {
    const auto cb = design_codebook(8, 3, 1);
    CHECK(cb.size() == 8);
    CHECK(cb.interval_lo(0) == -1.0);
    CHECK(cb.interval_hi(7) == 1.0);
    for (int m = 1; m < cb.size(); ++m) CHECK(cb.interval_lo(m) == doctest::Approx(cb.interval_hi(m - 1)));
    CHECK(cb.center(3) == doctest::Approx(-0.125));
}

TEST_CASE("full-resolution single-chain codebook is orthogonal") {
    for (int n : {4, 8, 16}) {
        const int bits = static_cast<int>(std::log2(n));
        const auto cb = design_codebook(n, bits, 1);
        for (int i = 0; i < cb.size(); ++i) {
            for (int j = 0; j < cb.size(); ++j) {
                const double ip = std::abs(dot_conj(cb.codewords[i], cb.codewords[j]));
                CHECK(ip == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("codewords are unit norm") {
    for (int n : {8, 16, 32}) {
        for (int bits : {0, 2, 4}) {
            for (int k : {1, 2, 4}) {
                const auto cb = design_codebook(n, bits, k);
                for (const auto& w : cb.codewords) CHECK(std::abs(norm2(w) - 1.0) <= 1e-12);
            }
        }
    }
}

TEST_CASE("more RF chains per stream flatten the in-beam gain") {
    for (const auto [n, bits] : {std::pair{32, 3}, std::pair{32, 4}, std::pair{16, 2}}) {
        const auto one = design_codebook(n, bits, 1);
        const auto four = design_codebook(n, bits, 4);
        for (int m = 0; m < one.size(); ++m) {
            CAPTURE(n);
            CAPTURE(bits);
            CAPTURE(m);
            CHECK(in_beam_ripple_db(four, m) <= in_beam_ripple_db(one, m));
        }
    }
}

TEST_CASE("codebook argument checks") {
    CHECK_THROWS_AS(design_codebook(2, 2, 4), std::invalid_argument);
    CHECK_THROWS_AS(design_codebook(8, -1, 1), std::invalid_argument);
    CHECK_THROWS_AS(design_codebook(8, 2, 0), std::invalid_argument);
}

TEST_CASE("beam gain of a matched steering vector") {
    const auto cb = design_codebook(16, 4, 1);
    const double phi = std::asin(cb.center(5));
    CHECK(beam_gain(cb.codewords[5], phi) == doctest::Approx(16.0).epsilon(1e-12));
}

TEST_CASE("pattern export") {
    const auto cb = design_codebook(8, 2, 1);
    const auto csv = beam_pattern_csv(cb, "ue");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4 * 181);
    CHECK(csv.rfind("schema_version,side,n_antennas,rf_per_stream,codeword,azimuth_deg,gain_linear,gain_db\n", 0) == 0);
    CHECK(csv.find("\n1,ue,8,1,3,90,") != std::string::npos);
}

TEST_CASE("alignment picks the codewords steered at a single path") {
    const auto bs = design_codebook(16, 4, 1);
    const auto ue = design_codebook(8, 3, 1);
    const int mb = 11;
    const int mu = 2;
    const auto h = outer(steering_sin(8, ue.center(mu)), steering_sin(16, bs.center(mb)), 0.01);
    const UeChannels ch{{h, h}};
    const auto res = beam_align(ch, bs, ue);
    CHECK(res.bs_beam[0] == mb);
    CHECK(res.ue_beam[0] == mu);
    CHECK(res.metric[0] == doctest::Approx(2 * 1e-4 * 16 * 8).epsilon(1e-12));

    // Perfect steering gives exactly sigma^2 N_u N_b.
    const auto eff = effective_channels(ch, res, bs, ue);
    CHECK(std::norm(eff.at(res, 0, 0, 0)) == doctest::Approx(1e-4 * 16 * 8).epsilon(1e-12));
}

TEST_CASE("off-grid paths lose gain") {
    const auto bs = design_codebook(16, 4, 1);
    const auto ue = design_codebook(8, 3, 1);
    const auto h = outer(steering_sin(8, 0.31), steering_sin(16, -0.47));
    const auto res = beam_align({{h}}, bs, ue);
    const auto eff = effective_channels({{h}}, res, bs, ue);
    CHECK(std::norm(eff.at(res, 0, 0, 0)) <= 16.0 * 8.0);
    // Nearest centers.
    auto nearest = [](const Codebook& cb, double s) {
        int best = 0;
        for (int m = 1; m < cb.size(); ++m) {
            if (std::abs(cb.center(m) - s) < std::abs(cb.center(best) - s)) best = m;
        }
        return best;
    };
    CHECK(res.bs_beam[0] == nearest(bs, -0.47));
    CHECK(res.ue_beam[0] == nearest(ue, 0.31));
}

TEST_CASE("alignment is the argmax of an exhaustive re-scan") {
    const auto bs = design_codebook(32, 4, 1);
    const auto ue = design_codebook(8, 3, 2);
    REQUIRE(bs.size() * ue.size() <= 128);
    const auto ch = random_channels(6, 3, 8, 32, 21);
    const auto res = beam_align(ch, bs, ue);
    for (int u = 0; u < 6; ++u) {
        double best = -1.0;
        int bi = -1, ui = -1;
        for (int j = 0; j < bs.size(); ++j) {
            for (int i = 0; i < ue.size(); ++i) {
                const double m = alignment_metric(ch[u], bs.codewords[j], ue.codewords[i]);
                if (m > best) {
                    best = m;
                    bi = j;
                    ui = i;
                }
            }
        }
        CHECK(res.bs_beam[u] == bi);
        CHECK(res.ue_beam[u] == ui);
        CHECK(res.metric[u] == doctest::Approx(best).epsilon(1e-12));
    }
    CHECK(res.distinct_bs.size() <= 6u);
    CHECK(std::is_sorted(res.distinct_bs.begin(), res.distinct_bs.end()));
}

TEST_CASE("identical channels align identically and ties go low") {
    const auto bs = design_codebook(16, 3, 1);
    const auto ue = design_codebook(4, 2, 1);
    const auto ch = random_channels(1, 2, 4, 16, 8);
    const auto res = beam_align({ch[0], ch[0]}, bs, ue);
    CHECK(res.bs_beam[0] == res.bs_beam[1]);
    CHECK(res.ue_beam[0] == res.ue_beam[1]);
    CHECK(res.distinct_bs.size() == 1);

    const CMatrix zero(4, 16);
    const auto z = beam_align({{zero}}, bs, ue);
    CHECK(z.bs_beam[0] == 0);
    CHECK(z.ue_beam[0] == 0);
    const auto eff = effective_channels({{zero}}, z, bs, ue);
    CHECK(eff.by_beam(0, 0, 0) == cplx(0.0, 0.0));
}

TEST_CASE("effective channels obey the operator norm bound") {
    const auto bs = design_codebook(32, 4, 1);
    const auto ue = design_codebook(8, 2, 1);
    const auto ch = random_channels(5, 2, 8, 32, 33);
    const auto res = beam_align(ch, bs, ue);
    const auto eff = effective_channels(ch, res, bs, ue);
    CHECK(eff.n_beams() == static_cast<int>(res.distinct_bs.size()));
    for (int q = 0; q < 2; ++q) {
        for (int u = 0; u < 5; ++u) {
            const double bound = spectral_norm_sq(ch[u][q]);
            for (int k = 0; k < eff.n_beams(); ++k) CHECK(std::norm(eff.by_beam(q, u, k)) <= bound * (1 + 1e-12));
            // The per-CB slice agrees with the direct product.
            const auto& w = bs.codewords[res.bs_beam[u]];
            const cplx direct = dot_conj(ue.codewords[res.ue_beam[u]], matvec(ch[u][q], w));
            CHECK(std::abs(eff.at(res, q, u, u) - direct) <= 1e-12 * std::abs(direct));
        }
    }
}

TEST_CASE("relabeling UEs permutes effective channel rows") {
    const auto bs = design_codebook(32, 4, 1);
    const auto ue = design_codebook(8, 2, 1);
    auto ch = random_channels(3, 1, 8, 32, 44);
    const auto res = beam_align(ch, bs, ue);
    const auto eff = effective_channels(ch, res, bs, ue);
    std::swap(ch[0], ch[2]);
    const auto res2 = beam_align(ch, bs, ue);
    const auto eff2 = effective_channels(ch, res2, bs, ue);
    CHECK(res2.bs_beam[0] == res.bs_beam[2]);
    CHECK(res2.distinct_bs == res.distinct_bs);
    for (int k = 0; k < eff.n_beams(); ++k) {
        CHECK(eff2.by_beam(0, 0, k) == eff.by_beam(0, 2, k));
        CHECK(eff2.by_beam(0, 2, k) == eff.by_beam(0, 0, k));
        CHECK(eff2.by_beam(0, 1, k) == eff.by_beam(0, 1, k));
    }
}

TEST_CASE("slot lookup") {
    AlignmentResult a;
    a.bs_beam = {5, 2, 5};
    a.distinct_bs = {2, 5};
    CHECK(a.beam_slot(0) == 1);
    CHECK(a.beam_slot(1) == 0);
    CHECK(a.slot_of_beam(3) == -1);
}
