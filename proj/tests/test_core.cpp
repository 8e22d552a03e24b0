#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "mmsched/core.hpp"

using namespace mmsched;

namespace {

std::string field_of(const SystemConfig& cfg) {
    try {
        validate_config(cfg);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return {};
}

}  // namespace

TEST_CASE("dB helpers") {
    CHECK(db_to_linear(30.0) == doctest::Approx(1000.0));
    CHECK(linear_to_db(2.0) == doctest::Approx(3.0103).epsilon(1e-5));
    CHECK(dbm_to_watts(30.0) == doctest::Approx(1.0));
    CHECK(watts_to_dbm(1e-3) == doctest::Approx(0.0));
    CHECK(dbm_to_watts(-174.0) == doctest::Approx(3.981071705534973e-21).epsilon(1e-12));
}

TEST_CASE("both profiles validate") {
    const auto desk = validate_config(SystemConfig::desk());
    CHECK(desk.max_streams == 4);
    CHECK(desk.n_bs_antennas == 32);
    CHECK(desk.n_ue_antennas == 8);
    CHECK(desk.realizations == 20);
    CHECK(desk.n_mbs == 20);
    CHECK(desk.n_cbs_freq == 4);

    const auto t1 = validate_config(SystemConfig::table1());
    CHECK(t1.n_time_slots == 40);
    CHECK(t1.prb_time_s == 0.125e-3);
    CHECK(t1.coherence_time_s == 5e-3);
    CHECK(t1.n_bs_antennas == 128);
    CHECK(t1.n_cbs_freq == 22);
    CHECK(t1.usable_bandwidth_hz == doctest::Approx(190.08e6).epsilon(1e-12));
    CHECK(t1.bandwidth_hz == 200e6);
}

TEST_CASE("derived noise power is prb bandwidth times psd") {
    const auto cfg = validate_config(SystemConfig::table1());
    CHECK(cfg.noise_power_prb_w == cfg.prb_bw_hz * cfg.noise_psd_w_per_hz);
    CHECK(watts_to_dbm(cfg.noise_power_prb_w) == doctest::Approx(-115.4267).epsilon(1e-6));
}

TEST_CASE("stream count divisibility") {
    SystemConfig cfg;
    cfg.n_bs_rf = 8;
    cfg.rf_per_stream_bs = 4;
    CHECK(validate_config(cfg).max_streams == 2);
    cfg.rf_per_stream_bs = 3;
    CHECK(field_of(cfg) == "rf_per_stream_bs");
}

TEST_CASE("rejections name the field") {
    SystemConfig cfg;
    cfg.exclusion_radius_m = 80.0;
    CHECK(field_of(cfg) == "exclusion_radius_m");

    cfg = SystemConfig{};
    cfg.n_ue_rf = 2;
    CHECK(field_of(cfg) == "n_ue_rf");

    cfg = SystemConfig{};
    cfg.coherence_time_s = 4e-3;
    CHECK(field_of(cfg) == "coherence_time_s");

    cfg = SystemConfig{};
    cfg.n_freq_subch = 10;
    CHECK(field_of(cfg) == "coherence_bw_hz");

    cfg = SystemConfig{};
    cfg.n_ues = 0;
    CHECK(field_of(cfg) == "n_ues");

    cfg = SystemConfig{};
    cfg.tx_power_w = 0.0;
    CHECK(field_of(cfg) == "tx_power_dbm");

    cfg = SystemConfig{};
    cfg.rf_per_stream_ue = 16;
    cfg.n_ue_rf = 16;
    CHECK(field_of(cfg) == "rf_per_stream_ue");
}

TEST_CASE("key/value parsing") {
    const auto kv = parse_key_values("# comment\n n_ues = 4 \n\ntx_power_dbm=20 # trailing\nn_ues = 6\n");
    CHECK(kv.size() == 2);
    CHECK(kv.at("n_ues") == "6");
    CHECK(kv.at("tx_power_dbm") == "20");
    CHECK_THROWS_AS(parse_key_values("just words\n"), ConfigError);
}

TEST_CASE("overrides convert dB units") {
    const auto cfg = apply_overrides(SystemConfig::desk(), {{"tx_power_dbm", "20"}, {"noise_psd_dbm_hz", "-170"}});
    CHECK(cfg.tx_power_w == doctest::Approx(0.1));
    CHECK(cfg.noise_psd_w_per_hz == doctest::Approx(1e-20));
    CHECK_THROWS_AS(apply_overrides(SystemConfig{}, {{"no_such_key", "1"}}), ConfigError);
    CHECK_THROWS_AS(apply_overrides(SystemConfig{}, {{"n_ues", "four"}}), ConfigError);
    CHECK(is_config_key("n_bs_rf"));
    CHECK_FALSE(is_config_key("nonsense"));
}

TEST_CASE("config text round trip") {
    SystemConfig cfg = SystemConfig::table1();
    cfg.tx_power_w = 0.5;
    cfg.seed = 12345678901234ULL;
    const auto back = apply_overrides(SystemConfig::desk(), parse_key_values(to_config_text(cfg)));
    auto a = parse_key_values(to_config_text(cfg));
    auto b = parse_key_values(to_config_text(back));
    for (const char* db_key : {"tx_power_dbm", "noise_psd_dbm_hz"}) {
        CHECK(std::stod(a.at(db_key)) == doctest::Approx(std::stod(b.at(db_key))).epsilon(1e-14));
        a.erase(db_key);
        b.erase(db_key);
    }
    CHECK(a == b);
    CHECK(back.noise_psd_w_per_hz == doctest::Approx(cfg.noise_psd_w_per_hz).epsilon(1e-14));
    CHECK(back.tx_power_w == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(back.seed == cfg.seed);
    CHECK(back.n_bs_antennas == 128);
}

TEST_CASE("config file with profile and environment default") {
    const auto path = std::filesystem::temp_directory_path() / "mmsched_test_core.cfg";
    {
        std::ofstream out(path);
        out << "profile = table1\nn_ues = 5\n";
    }
    const auto cfg = load_config_file(path);
    CHECK(cfg.n_bs_antennas == 128);
    CHECK(cfg.n_ues == 5);

    ::setenv("MMSCHED_CONFIG", path.c_str(), 1);
    CHECK(default_config_path() == path);
    ::unsetenv("MMSCHED_CONFIG");
    CHECK(default_config_path().empty());
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_config_file(path), ConfigError);
    CHECK_THROWS_AS(profile_config("huge"), ConfigError);
}

TEST_CASE("frame index ranges") {
    const auto cfg = validate_config(SystemConfig::desk());
    CHECK(FrameIndex{0, 0, 0, 0}.in_range(cfg));
    CHECK(FrameIndex{cfg.n_mbs - 1, cfg.n_cbs_freq - 1, cfg.n_time_slots - 1, cfg.n_freq_subch - 1}.in_range(cfg));
    CHECK_FALSE(FrameIndex{0, cfg.n_cbs_freq, 0, 0}.in_range(cfg));
    CHECK_FALSE(FrameIndex{0, 0, 0, -1}.in_range(cfg));
}
