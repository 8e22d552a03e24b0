#include "mmsched/core.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <variant>
#include <vector>

#include <fmt/format.h>

namespace mmsched {

namespace {

enum class Unit { kNone, kDbm, kDbmPerHz };

using Member = std::variant<int SystemConfig::*, double SystemConfig::*,
                            std::uint64_t SystemConfig::*, std::string SystemConfig::*>;

struct Field {
    std::string_view key;
    Member member;
    Unit unit = Unit::kNone;
};

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        {"n_ues", &SystemConfig::n_ues},
        {"n_bs_antennas", &SystemConfig::n_bs_antennas},
        {"n_ue_antennas", &SystemConfig::n_ue_antennas},
        {"n_bs_rf", &SystemConfig::n_bs_rf},
        {"n_ue_rf", &SystemConfig::n_ue_rf},
        {"rf_per_stream_bs", &SystemConfig::rf_per_stream_bs},
        {"rf_per_stream_ue", &SystemConfig::rf_per_stream_ue},
        {"bs_codebook_bits", &SystemConfig::bs_codebook_bits},
        {"ue_codebook_bits", &SystemConfig::ue_codebook_bits},
        {"tx_power_dbm", &SystemConfig::tx_power_w, Unit::kDbm},
        {"carrier_freq_hz", &SystemConfig::carrier_freq_hz},
        {"bandwidth_hz", &SystemConfig::bandwidth_hz},
        {"noise_psd_dbm_hz", &SystemConfig::noise_psd_w_per_hz, Unit::kDbmPerHz},
        {"coherence_time_s", &SystemConfig::coherence_time_s},
        {"coherence_bw_hz", &SystemConfig::coherence_bw_hz},
        {"prb_time_s", &SystemConfig::prb_time_s},
        {"prb_bw_hz", &SystemConfig::prb_bw_hz},
        {"n_time_slots", &SystemConfig::n_time_slots},
        {"n_freq_subch", &SystemConfig::n_freq_subch},
        {"n_cbs_freq", &SystemConfig::n_cbs_freq},
        {"window", &SystemConfig::window},
        {"n_mbs", &SystemConfig::n_mbs},
        {"cell_radius_m", &SystemConfig::cell_radius_m},
        {"exclusion_radius_m", &SystemConfig::exclusion_radius_m},
        {"bs_height_m", &SystemConfig::bs_height_m},
        {"pl_intercept_db", &SystemConfig::pl_intercept_db},
        {"pl_exponent", &SystemConfig::pl_exponent},
        {"shadowing_std_db", &SystemConfig::shadowing_std_db},
        {"n_clusters", &SystemConfig::n_clusters},
        {"n_paths", &SystemConfig::n_paths},
        {"cluster_decay", &SystemConfig::cluster_decay},
        {"angle_spread_deg", &SystemConfig::angle_spread_deg},
        {"pf_floor_bps", &SystemConfig::pf_floor_bps},
        {"solver_rel_tol", &SystemConfig::solver_rel_tol},
        {"solver_max_iters", &SystemConfig::solver_max_iters},
        {"max_beam_sets", &SystemConfig::max_beam_sets},
        {"max_ue_tuples", &SystemConfig::max_ue_tuples},
        {"realizations", &SystemConfig::realizations},
        {"seed", &SystemConfig::seed},
        {"rate_table", &SystemConfig::rate_table_path},
    };
    return table;
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
    T value{};
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError(std::string(key), fmt::format("cannot parse '{}' as a number", text));
    }
    return value;
}

void set_field(SystemConfig& cfg, const Field& f, std::string_view text) {
    std::visit(
        [&](auto member) {
            using T = std::remove_reference_t<decltype(cfg.*member)>;
            if constexpr (std::is_same_v<T, std::string>) {
                cfg.*member = std::string(text);
            } else if constexpr (std::is_same_v<T, double>) {
                const double v = parse_number<double>(f.key, text);
                cfg.*member = f.unit == Unit::kNone ? v : dbm_to_watts(v);
            } else {
                cfg.*member = parse_number<T>(f.key, text);
            }
        },
        f.member);
}

std::string get_field(const SystemConfig& cfg, const Field& f) {
    return std::visit(
        [&](auto member) -> std::string {
            using T = std::remove_cvref_t<decltype(cfg.*member)>;
            if constexpr (std::is_same_v<T, std::string>) {
                return cfg.*member;
            } else if constexpr (std::is_same_v<T, double>) {
                const double v = f.unit == Unit::kNone ? cfg.*member : watts_to_dbm(cfg.*member);
                return fmt::format("{}", v);
            } else {
                return fmt::format("{}", cfg.*member);
            }
        },
        f.member);
}

void require(bool ok, std::string_view field, std::string_view what) {
    if (!ok) throw ConfigError(std::string(field), std::string(what));
}

bool close_rel(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); }

}  // namespace

SystemConfig SystemConfig::desk() { return SystemConfig{}; }

SystemConfig SystemConfig::table1() {
    SystemConfig cfg;
    cfg.n_bs_antennas = 128;
    cfg.n_ue_antennas = 16;
    cfg.bs_codebook_bits = 5;
    cfg.ue_codebook_bits = 2;
    cfg.n_cbs_freq = 22;
    cfg.n_mbs = 100;
    cfg.realizations = 100;
    return cfg;
}

SystemConfig profile_config(std::string_view name) {
    if (name == "desk") return SystemConfig::desk();
    if (name == "table1") return SystemConfig::table1();
    throw ConfigError("profile", fmt::format("unknown profile '{}' (expected desk or table1)", name));
}

SystemConfig validate_config(SystemConfig cfg) {
    const std::pair<std::string_view, int> counts[] = {
        {"n_ues", cfg.n_ues},
        {"n_bs_antennas", cfg.n_bs_antennas},
        {"n_ue_antennas", cfg.n_ue_antennas},
        {"n_bs_rf", cfg.n_bs_rf},
        {"n_ue_rf", cfg.n_ue_rf},
        {"rf_per_stream_bs", cfg.rf_per_stream_bs},
        {"rf_per_stream_ue", cfg.rf_per_stream_ue},
        {"n_time_slots", cfg.n_time_slots},
        {"n_freq_subch", cfg.n_freq_subch},
        {"n_cbs_freq", cfg.n_cbs_freq},
        {"window", cfg.window},
        {"n_mbs", cfg.n_mbs},
        {"n_clusters", cfg.n_clusters},
        {"n_paths", cfg.n_paths},
        {"solver_max_iters", cfg.solver_max_iters},
        {"max_beam_sets", cfg.max_beam_sets},
        {"max_ue_tuples", cfg.max_ue_tuples},
        {"realizations", cfg.realizations},
    };
    for (const auto& [name, value] : counts) require(value >= 1, name, "must be >= 1");

    require(cfg.bs_codebook_bits >= 0 && cfg.bs_codebook_bits <= 16, "bs_codebook_bits", "must be in [0, 16]");
    require(cfg.ue_codebook_bits >= 0 && cfg.ue_codebook_bits <= 16, "ue_codebook_bits", "must be in [0, 16]");
    require(cfg.n_bs_rf % cfg.rf_per_stream_bs == 0, "rf_per_stream_bs",
            fmt::format("n_bs_rf ({}) is not a multiple of rf_per_stream_bs ({})", cfg.n_bs_rf,
                        cfg.rf_per_stream_bs));
    require(cfg.n_ue_rf == cfg.rf_per_stream_ue, "n_ue_rf",
            "a UE receives a single stream, so n_ue_rf must equal rf_per_stream_ue");
    require(cfg.rf_per_stream_bs <= cfg.n_bs_antennas, "rf_per_stream_bs", "exceeds n_bs_antennas");
    require(cfg.rf_per_stream_ue <= cfg.n_ue_antennas, "rf_per_stream_ue", "exceeds n_ue_antennas");

    require(cfg.tx_power_w > 0, "tx_power_dbm", "must be a positive power");
    require(cfg.noise_psd_w_per_hz > 0, "noise_psd_dbm_hz", "must be a positive power density");
    require(cfg.carrier_freq_hz > 0, "carrier_freq_hz", "must be > 0");
    require(cfg.bandwidth_hz > 0, "bandwidth_hz", "must be > 0");
    require(cfg.prb_time_s > 0, "prb_time_s", "must be > 0");
    require(cfg.prb_bw_hz > 0, "prb_bw_hz", "must be > 0");
    require(close_rel(cfg.coherence_time_s, cfg.n_time_slots * cfg.prb_time_s), "coherence_time_s",
            fmt::format("must equal n_time_slots * prb_time_s = {} s", cfg.n_time_slots * cfg.prb_time_s));
    require(close_rel(cfg.coherence_bw_hz, cfg.n_freq_subch * cfg.prb_bw_hz), "coherence_bw_hz",
            fmt::format("must equal n_freq_subch * prb_bw_hz = {} Hz", cfg.n_freq_subch * cfg.prb_bw_hz));

    require(cfg.exclusion_radius_m >= 0, "exclusion_radius_m", "must be >= 0");
    require(cfg.exclusion_radius_m < cfg.cell_radius_m, "exclusion_radius_m", "must be smaller than cell_radius_m");
    require(cfg.bs_height_m >= 0, "bs_height_m", "must be >= 0");
    require(cfg.pl_exponent >= 0, "pl_exponent", "must be >= 0");
    require(cfg.shadowing_std_db >= 0, "shadowing_std_db", "must be >= 0");
    require(cfg.cluster_decay > 0, "cluster_decay", "must be > 0");
    require(cfg.angle_spread_deg >= 0, "angle_spread_deg", "must be >= 0");
    require(cfg.pf_floor_bps > 0, "pf_floor_bps", "must be > 0");
    require(cfg.solver_rel_tol > 0, "solver_rel_tol", "must be > 0");

    cfg.max_streams = cfg.n_bs_rf / cfg.rf_per_stream_bs;
    cfg.noise_power_prb_w = cfg.prb_bw_hz * cfg.noise_psd_w_per_hz;
    cfg.usable_bandwidth_hz = cfg.n_cbs_freq * cfg.n_freq_subch * cfg.prb_bw_hz;
    return cfg;
}

KeyValues parse_key_values(std::string_view text) {
    KeyValues kv;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(fmt::format("line {}", line_no), fmt::format("expected 'key = value', got '{}'", line));
        }
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(fmt::format("line {}", line_no), "empty key");
        kv[std::string(key)] = std::string(trim(line.substr(eq + 1)));
    }
    return kv;
}

bool is_config_key(std::string_view key) {
    for (const auto& f : fields()) {
        if (f.key == key) return true;
    }
    return false;
}

SystemConfig apply_overrides(SystemConfig base, const KeyValues& kv) {
    for (const auto& [key, value] : kv) {
        const Field* match = nullptr;
        for (const auto& f : fields()) {
            if (f.key == key) match = &f;
        }
        if (match == nullptr) throw ConfigError(key, "unknown configuration key");
        set_field(base, *match, value);
    }
    return base;
}

SystemConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", fmt::format("cannot open '{}'", path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    KeyValues kv = parse_key_values(buf.str());
    SystemConfig base = SystemConfig::desk();
    if (auto it = kv.find("profile"); it != kv.end()) {
        base = profile_config(it->second);
        kv.erase(it);
    }
    return apply_overrides(base, kv);
}

std::filesystem::path default_config_path() {
    const char* env = std::getenv("MMSCHED_CONFIG");
    return env != nullptr ? std::filesystem::path(env) : std::filesystem::path{};
}

std::string to_config_text(const SystemConfig& cfg) {
    std::string out;
    for (const auto& f : fields()) {
        out += fmt::format("{} = {}\n", f.key, get_field(cfg, f));
    }
    return out;
}

}  // namespace mmsched
