#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmsched/beams.hpp"
#include "mmsched/channel.hpp"
#include "mmsched/core.hpp"
#include "mmsched/link.hpp"
#include "mmsched/scheduler.hpp"

namespace mmsched {

inline constexpr int kCsvSchemaVersion = 1;

/// Per-MB outcome, kept when RunOptions::keep_mb_records is set.
struct MbRecord {
    int mb = 0;
    double objective_relaxed = 0.0;
    double objective_feasible = 0.0;
    double fw_gap = 0.0;
    int iterations = 0;
    std::vector<double> lambda_relaxed;
    std::vector<double> lambda_feasible;
    std::vector<double> objective_trace;
};

struct RealizationResult {
    int index = 0;
    std::uint64_t seed = 0;
    std::vector<double> throughput_feasible;  // lambda'_u(n), MB average, bits/s
    std::vector<double> throughput_relaxed;   // lambda''_u(n)
    double gm = 0.0;
    double gm_relaxed = 0.0;
    double active_ues_per_prb = 0.0;          // feasible schedule, MB average
    int n_distinct_beams = 0;                 // |C_b^*|
    double max_mb_objective_gap = 0.0;        // max over MBs of (f_r - f) / |f_r|
    double max_solver_rel_gap = 0.0;          // max over MBs of gap / |f_r|
    bool solver_traces_monotone = true;       // only meaningful with record_traces
    std::vector<MbRecord> mbs;
    std::string solution_csv;                 // per-MB dump rows (no header)
};

struct RunOptions {
    bool keep_mb_records = false;
    bool record_traces = false;
    bool dump_solutions = false;
};

/// Geometric mean; 0 if any element is 0.
double geometric_mean(std::span<const double> values);

/// Seed of realization `index` under `master_seed`. Independent of Z.
std::uint64_t realization_seed(std::uint64_t master_seed, int index);

/// A validated configuration with its codebooks and rate table built once.
class Simulation {
public:
    explicit Simulation(const SystemConfig& cfg);
    Simulation(const SystemConfig& cfg, RateTable table);

    const SystemConfig& config() const { return cfg_; }
    const Codebook& bs_codebook() const { return bs_; }
    const Codebook& ue_codebook() const { return ue_; }
    const RateTable& rate_table() const { return table_; }

    /// BA once, then n_mbs megablocks of channel synthesis, scheduling,
    /// rounding and PF update. Solver failures are rethrown as SolverError
    /// naming the realization and MB.
    RealizationResult run_realization(int index, std::uint64_t seed, const RunOptions& opts = {}) const;
    RealizationResult run_realization(const NetworkRealization& real, int index, const RunOptions& opts = {}) const;

private:
    SystemConfig cfg_;
    Codebook bs_;
    Codebook ue_;
    RateTable table_;
};

/// Aggregate over the realizations of one sweep point.
struct MetricsRow {
    int point = 0;
    std::vector<std::pair<std::string, std::string>> coordinates;  // swept key = value
    SystemConfig cfg;
    bool ok = true;
    std::string error;
    int realizations = 0;
    double gm_mean = 0.0;
    double gm_relaxed_mean = 0.0;
    double gm_stderr = 0.0;
    double gap_pct = 0.0;                  // 100 (GM_r-bar - GM-bar) / GM_r-bar
    double active_ues_per_prb = 0.0;
    double distinct_beams_mean = 0.0;
    double max_mb_objective_gap_pct = 0.0;
    double max_solver_rel_gap = 0.0;
    std::vector<RealizationResult> per_realization;
};

struct CampaignSpec {
    SystemConfig base;
    /// Swept keys (any SystemConfig key) with their values, outermost first.
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
    int realizations = 20;
    std::uint64_t master_seed = 1;
    bool per_realization_rows = false;

    /// Reads a campaign file: config keys plus "sweep.<key> = v1, v2, ..." lines.
    static CampaignSpec parse(std::string_view text);
    static CampaignSpec load(const std::filesystem::path& path);
};

struct CampaignOptions {
    int workers = 1;
    RunOptions run;
    std::function<void(const MetricsRow&)> on_row;
};

/// Runs Z realizations of `cfg` on a worker pool and aggregates them in
/// realization order. Failures are recorded in the row, not thrown.
MetricsRow run_point(const SystemConfig& cfg, int realizations, std::uint64_t master_seed, int workers,
                     const RunOptions& opts = {});

/// Every point of the sweep grid, in row-major order of `spec.axes`.
std::vector<MetricsRow> run_campaign(const CampaignSpec& spec, const CampaignOptions& opts = {});

/// The fixed campaign CSV header.
std::string metrics_csv_header();
/// Aggregate row plus (optionally) one row per realization.
std::string metrics_csv_rows(const MetricsRow& row, bool per_realization);

/// Header of the per-MB solution dump.
std::string solution_csv_header();

/// Randomized tiny scheduling instance for the exhaustive oracle.
struct TinyInstance {
    RateTensor rates;
    PfState pf;
    double coherence_bw_hz = 1e6;
    int n_time_slots = 2;
    int n_freq_subch = 2;
};

/// U <= 3, |L| <= 4, Q = 1, N_T in {2, 4}, N_F in {2, 3}; rates drawn from the
/// CQI efficiency set plus 0.
TinyInstance make_tiny_instance(std::uint64_t seed);

struct SandwichCheck {
    double feasible = 0.0;
    double exact = 0.0;
    double relaxed = 0.0;
    double relaxed_gap = 0.0;
    bool lower_ok = false;   // feasible <= exact
    bool upper_ok = false;   // exact <= relaxed + tolerance
    bool solution_feasible = false;
};

/// Rounded objective <= brute-force optimum <= relaxed optimum on one instance.
SandwichCheck sandwich_check(const TinyInstance& inst, double rel_tol);

}  // namespace mmsched
