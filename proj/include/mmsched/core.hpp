#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mmsched {

// Raised when a configuration value violates an invariant. field() names the
// offending key as it appears in the config file.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

inline double db_to_linear(double db) { return std::pow(10.0, 0.1 * db); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watts(double dbm) { return 1e-3 * db_to_linear(dbm); }
inline double watts_to_dbm(double w) { return linear_to_db(w * 1e3); }

/// Full system description for one simulated cell. All members are in linear
/// SI units; dB/dBm inputs are converted when the file is parsed.
///
/// Defaults are the desk-scale profile. The derived members at the bottom are
/// only meaningful after validate_config().
struct SystemConfig {
    // Arrays and RF chains.
    int n_ues = 8;
    int n_bs_antennas = 32;
    int n_ue_antennas = 8;
    int n_bs_rf = 4;
    int n_ue_rf = 1;
    int rf_per_stream_bs = 1;
    int rf_per_stream_ue = 1;
    int bs_codebook_bits = 4;
    int ue_codebook_bits = 2;

    // Radio.
    double tx_power_w = 1.0;            // 30 dBm
    double carrier_freq_hz = 28e9;
    double bandwidth_hz = 200e6;        // metadata only, see usable_bandwidth_hz
    double noise_psd_w_per_hz = 3.981071705534973e-21;  // -174 dBm/Hz

    // Frame.
    double coherence_time_s = 5e-3;
    double coherence_bw_hz = 8.64e6;
    double prb_time_s = 0.125e-3;
    double prb_bw_hz = 720e3;
    int n_time_slots = 40;
    int n_freq_subch = 12;
    int n_cbs_freq = 4;
    int window = 100;
    int n_mbs = 20;

    // Geometry.
    double cell_radius_m = 75.0;
    double exclusion_radius_m = 6.0;
    double bs_height_m = 10.0;

    // Large-scale channel model.
    double pl_intercept_db = 72.0;
    double pl_exponent = 2.92;
    double shadowing_std_db = 8.7;
    int n_clusters = 5;
    int n_paths = 10;
    double cluster_decay = 2.0;         // nu_d proportional to exp(-d / cluster_decay)
    double angle_spread_deg = 10.0;

    // Scheduler.
    double pf_floor_bps = 1e3;
    double solver_rel_tol = 1e-6;
    int solver_max_iters = 20000;
    int max_beam_sets = 5000;
    int max_ue_tuples = 20000;

    // Campaign.
    int realizations = 20;
    std::uint64_t seed = 1;
    std::string rate_table_path;        // empty: built-in CQI table

    // Derived by validate_config().
    int max_streams = 0;                // L = K_b / K'_b
    double noise_power_prb_w = 0.0;     // delta_F * N0
    double usable_bandwidth_hz = 0.0;   // Q * N_F * delta_F

    int bs_codebook_size() const { return 1 << bs_codebook_bits; }
    int ue_codebook_size() const { return 1 << ue_codebook_bits; }

    /// Desk-scale profile: small enough to run a whole campaign in CI.
    static SystemConfig desk();
    /// The full-scale profile (N_b = 128, N_u = 16, Q = 22, 100 MBs, Z = 100).
    static SystemConfig table1();
};

/// Checks every invariant and fills in the derived members. Throws
/// ConfigError naming the first offending field.
SystemConfig validate_config(SystemConfig cfg);

/// Resolves a named profile ("desk" or "table1").
SystemConfig profile_config(std::string_view name);

/// Position of a PRB inside the simulated frame. Indices are 0-based.
struct FrameIndex {
    int mb = 0;
    int cb = 0;       // q in [0, Q)
    int slot = 0;     // t in [0, N_T)
    int subch = 0;    // f in [0, N_F)

    bool in_range(const SystemConfig& cfg) const {
        return mb >= 0 && mb < cfg.n_mbs && cb >= 0 && cb < cfg.n_cbs_freq && slot >= 0 &&
               slot < cfg.n_time_slots && subch >= 0 && subch < cfg.n_freq_subch;
    }
};

using KeyValues = std::map<std::string, std::string, std::less<>>;

/// Parses "key = value" lines. '#' starts a comment; blank lines are ignored.
/// Duplicate keys: last one wins.
KeyValues parse_key_values(std::string_view text);

/// Applies key/value pairs on top of `base`, converting dB units. Unknown keys
/// raise ConfigError.
SystemConfig apply_overrides(SystemConfig base, const KeyValues& kv);

/// Reads a config file. A "profile" key, if present, selects the base profile
/// that the remaining keys override.
SystemConfig load_config_file(const std::filesystem::path& path);

/// Config path from MMSCHED_CONFIG, or empty when unset.
std::filesystem::path default_config_path();

/// Serializes a config back to key/value text (linear values converted to the
/// file's dB conventions). Round-trips through apply_overrides().
std::string to_config_text(const SystemConfig& cfg);

/// True if `key` names a SystemConfig member.
bool is_config_key(std::string_view key);

}  // namespace mmsched
