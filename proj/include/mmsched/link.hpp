#pragma once

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "mmsched/beams.hpp"
#include "mmsched/core.hpp"

namespace mmsched {

/// Step function from linear SINR to spectral efficiency (bits/s/Hz).
class RateTable {
public:
    struct Row {
        double threshold_linear;
        double efficiency;
    };

    /// Throws std::invalid_argument unless both columns are strictly increasing
    /// and the table is non-empty.
    explicit RateTable(std::vector<Row> rows);

    /// Efficiency of the highest row whose threshold is <= sinr; 0 below the
    /// first threshold. The lower boundary is closed.
    double rate(double sinr_linear) const;

    const std::vector<Row>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }
    double max_efficiency() const { return rows_.back().efficiency; }

    /// The 15 CQI efficiencies of the LTE 4-bit CQI table with Shannon-inverted
    /// thresholds 2^eff - 1.
    static RateTable cqi();

    /// CSV with header "threshold_db,efficiency".
    static RateTable parse_csv(std::string_view text);
    static RateTable load(const std::filesystem::path& path);
    std::string to_csv() const;

private:
    std::vector<Row> rows_;
};

/// Rate table named by cfg.rate_table_path, or the built-in CQI table.
RateTable rate_table_for(const SystemConfig& cfg);

/// sigma^2_PRB = delta_F * N0 (linear units).
double noise_power_prb(double prb_bw_hz, double noise_psd_w_per_hz);

/// Everything the SINR of one (beam set, UE tuple, CB) needs besides h_eff.
/// tuple[j] is served by distinct beam slot beam_slots[j].
struct SinrContext {
    std::span<const int> beam_slots;
    std::span<const int> tuple;
    int q = 0;
    double tx_power_w = 1.0;
    int n_cbs = 1;
    int n_freq_subch = 1;
    double noise_power_prb_w = 0.0;

    /// P_BS / (|l| Q N_F)
    double power_per_prb_beam() const {
        return tx_power_w / (static_cast<double>(beam_slots.size()) * n_cbs * n_freq_subch);
    }
};

/// SINR of UE u under equal power split; 0 if u is not in the tuple.
double sinr(const EffectiveChannelSet& eff, const SinrContext& ctx, int u);

inline double rate_map(double sinr_linear, const RateTable& table) { return table.rate(sinr_linear); }

}  // namespace mmsched
