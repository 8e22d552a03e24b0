#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "mmsched/channel.hpp"

using namespace mmsched;

namespace {

const std::string kFixture = std::string(MMSCHED_TEST_DATA) + "/realization_desk_u3_seed42.txt";

SystemConfig fixture_config() {
    SystemConfig cfg = SystemConfig::desk();
    cfg.n_ues = 3;
    return validate_config(cfg);
}

int numeric_rank(const CMatrix& h) {
    Eigen::MatrixXcd m(h.rows, h.cols);
    for (std::size_t r = 0; r < h.rows; ++r) {
        for (std::size_t c = 0; c < h.cols; ++c) m(r, c) = h(r, c);
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    const auto s = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) rank += s(i) > 1e-10 * s(0) ? 1 : 0;
    return rank;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("array response") {
    const auto a0 = array_response(2, 0.0);
    CHECK(a0[0] == cplx(1.0, 0.0));
    CHECK(a0[1] == cplx(1.0, 0.0));

    const auto a1 = array_response(2, std::numbers::pi / 2);
    CHECK(std::abs(a1[1] - cplx(-1.0, 0.0)) < 1e-15);

    for (double phi : {-1.2, -0.3, 0.4, 1.5}) {
        for (const auto& x : array_response(4, phi)) CHECK(std::abs(x) == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("path loss") {
    const PathLossParams p{72.0, 2.92, 0.0};
    CHECK(mean_path_loss_db(1.0, p) == 72.0);
    CHECK(mean_path_loss_db(100.0, p) - mean_path_loss_db(10.0, p) == doctest::Approx(29.2).epsilon(1e-12));

    CounterRng zero(StreamKey{1, 0, 0, 0, 0, DrawKind::kTest});
    CHECK(path_loss_db(1.0, p, zero) == 72.0);

    const PathLossParams q{72.0, 2.92, 8.7};
    CounterRng rng(StreamKey{2, 0, 0, 0, 0, DrawKind::kTest});
    const int n = 100000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = path_loss_db(50.0, q, rng) - mean_path_loss_db(50.0, q);
        s += x;
        s2 += x * x;
    }
    const double mean = s / n;
    const double sd = std::sqrt(s2 / n - mean * mean);
    CHECK(sd == doctest::Approx(8.7).epsilon(0.02));
}

TEST_CASE("cluster powers decay exponentially and sum to one") {
    const auto nu = cluster_powers(5, 2.0);
    double total = 0.0;
    for (double v : nu) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
    for (std::size_t d = 1; d < nu.size(); ++d) CHECK(nu[d] / nu[d - 1] == doctest::Approx(std::exp(-0.5)));
}

TEST_CASE("drops are area uniform in the annulus") {
    SystemConfig cfg = SystemConfig::desk();
    cfg.n_ues = 100000;
    cfg.n_clusters = 1;
    cfg.n_paths = 1;
    const auto real = generate_realization(validate_config(cfg), 3);
    const double r1 = cfg.exclusion_radius_m;
    const double r2 = cfg.cell_radius_m;
    double sum = 0.0;
    for (const auto& ue : real.ues) {
        const double r = std::hypot(ue.position.x, ue.position.y);
        CHECK_MESSAGE(r > r1, "drop inside the exclusion radius");
        CHECK_MESSAGE(r <= r2 * (1 + 1e-15), "drop outside the cell");
        sum += r;
    }
    const double analytic = 2.0 / 3.0 * (r2 * r2 * r2 - r1 * r1 * r1) / (r2 * r2 - r1 * r1);
    CHECK(sum / cfg.n_ues == doctest::Approx(analytic).epsilon(0.01));
}

TEST_CASE("realizations are pure functions of the seed") {
    SystemConfig cfg = SystemConfig::desk();
    cfg.n_ues = 1;
    cfg = validate_config(cfg);
    const auto a = generate_realization(cfg, 77);
    const auto b = generate_realization(cfg, 77);
    CHECK(a.ues[0].position.x == b.ues[0].position.x);
    CHECK(a.ues[0].position.y == b.ues[0].position.y);
    CHECK(dump_realization(a) == dump_realization(b));
    CHECK(dump_realization(a) != dump_realization(generate_realization(cfg, 78)));

    // Adding UEs leaves the earlier ones untouched.
    cfg.n_ues = 4;
    const auto c = generate_realization(validate_config(cfg), 77);
    CHECK(c.ues[0].path_loss_db == a.ues[0].path_loss_db);
    CHECK(c.ues[0].aod_rad == a.ues[0].aod_rad);
}

TEST_CASE("angles stay in the front half-plane") {
    const auto real = generate_realization(fixture_config(), 9);
    for (const auto& ue : real.ues) {
        for (const auto& cluster : ue.aod_rad) {
            for (double a : cluster) CHECK(std::abs(a) <= std::numbers::pi / 2);
        }
        CHECK(ue.distance_3d_m >= 10.0);
    }
}

TEST_CASE("single path channel is a scaled outer product") {
    UeLargeScale ue;
    ue.path_loss_db = 0.0;
    ue.cluster_power = {1.0};
    ue.aod_rad = {{0.3}};
    ue.aoa_rad = {{-0.7}};
    const std::vector<cplx> kappa{1.0};
    const auto h = synthesize_channel(ue, 4, 8, 1, kappa);
    const auto au = array_response(4, -0.7);
    const auto ab = array_response(8, 0.3);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 8; ++c) CHECK(std::abs(h(r, c) - au[r] * std::conj(ab[c])) < 1e-14);
    }
    CHECK(numeric_rank(h) == 1);

    ue.path_loss_db = 20.0;
    const auto h2 = synthesize_channel(ue, 4, 8, 1, kappa);
    CHECK(std::abs(h2(2, 5) - 0.1 * h(2, 5)) < 1e-15);
}

TEST_CASE("rank is bounded by the number of paths") {
    SystemConfig cfg = SystemConfig::desk();
    cfg.n_ues = 1;
    cfg.n_clusters = 1;
    cfg.n_paths = 2;
    const auto real = generate_realization(validate_config(cfg), 5);
    ChannelSynthesizer synth(real, 8, 32);
    CHECK(numeric_rank(synth.channel(0, 0, 0)) <= 2);
}

TEST_CASE("mean Frobenius energy matches the path loss") {
    SystemConfig cfg = SystemConfig::desk();
    cfg.n_ues = 1;
    const auto real = generate_realization(validate_config(cfg), 11);
    ChannelSynthesizer synth(real, cfg.n_ue_antennas, cfg.n_bs_antennas);
    const int draws = 10000;
    double energy = 0.0;
    for (int i = 0; i < draws; ++i) {
        const auto h = synth.channel(0, 0, i);
        energy += norm2(h.data);
    }
    const double expected = cfg.n_ue_antennas * cfg.n_bs_antennas * std::pow(10.0, -0.1 * real.ues[0].path_loss_db);
    CHECK(energy / draws == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("coherence blocks share angles but not small-scale fading") {
    const auto real = generate_realization(fixture_config(), 4);
    ChannelSynthesizer synth(real, 8, 32);
    const auto h0 = synth.channel(1, 0, 0);
    const auto h1 = synth.channel(1, 1, 0);
    CHECK(std::abs(h0(0, 0) - h1(0, 0)) > 0.0);
    CHECK(draw_small_scale(real.seed, 1, 0, 0, 50) != draw_small_scale(real.seed, 1, 1, 0, 50));
    CHECK(draw_small_scale(real.seed, 1, 0, 0, 50) == draw_small_scale(real.seed, 1, 0, 0, 50));

    // Same kappa through both paths gives the same matrix.
    const auto kappa = draw_small_scale(real.seed, 1, 1, 0, 50);
    const auto h1b = synthesize_channel(real.ues[1], 8, 32, real.n_paths, kappa);
    for (std::size_t i = 0; i < h1.data.size(); ++i) CHECK(std::abs(h1.data[i] - h1b.data[i]) < 1e-18);
}

TEST_CASE("replay fixture is bit exact") {
    const std::string text = read_file(kFixture);
    REQUIRE_FALSE(text.empty());
    const auto loaded = parse_realization(text);
    CHECK(loaded.seed == 42);
    CHECK(loaded.n_ues() == 3);
    CHECK(dump_realization(loaded) == text);
    CHECK(dump_realization(generate_realization(fixture_config(), 42)) == text);

    // One channel entry of the replayed realization, pinned.
    const auto backend = kernels::active().backend;
    kernels::select(kernels::Backend::kScalar);
    ChannelSynthesizer synth(loaded, 8, 32);
    const auto h = synth.channel(1, 2, 3);
    kernels::select(backend);
    CHECK(h(0, 0).real() == doctest::Approx(-0x1.f2061ada5d377p-18).epsilon(1e-12));
    CHECK(h(0, 0).imag() == doctest::Approx(0x1.1ee4e5299fa9bp-18).epsilon(1e-12));
    CHECK(h(7, 31).real() == doctest::Approx(0x1.40f928bcb8376p-20).epsilon(1e-12));
    CHECK(norm2(h.data) == doctest::Approx(0x1.13d44cbdd85e4p-26).epsilon(1e-12));
}

TEST_CASE("malformed realization files are rejected") {
    CHECK_THROWS_AS(parse_realization("format = 2\n"), std::runtime_error);
    std::string text = read_file(kFixture);
    text.resize(text.size() / 2);
    CHECK_THROWS_AS(parse_realization(text), std::runtime_error);
}
