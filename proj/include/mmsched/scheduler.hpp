#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmsched/beams.hpp"
#include "mmsched/core.hpp"
#include "mmsched/link.hpp"

namespace mmsched {

/// A combinatorial enumeration grew beyond its configured cap.
class CapExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The relaxed solver hit its iteration limit before certifying the tolerance.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double gap, int iterations)
        : std::runtime_error(what), gap_(gap), iterations_(iterations) {}
    double gap() const noexcept { return gap_; }
    int iterations() const noexcept { return iterations_; }

private:
    double gap_;
    int iterations_;
};

/// Sorted distinct BS codeword indices activated together in one time slot.
using BeamSet = std::vector<int>;
/// UE indices; tuple[j] is served by the j-th beam of its beam set.
using UeTuple = std::vector<int>;

/// All subsets of `distinct_beams` with 1..min(max_streams, |C_b^*|) elements,
/// ordered by size and then lexicographically. Throws CapExceeded past `cap`.
std::vector<BeamSet> enumerate_beam_sets(std::span<const int> distinct_beams, int max_streams, int cap);

/// Cartesian product of the per-beam UE groups of `beams`, in lexicographic
/// order of UE index. Empty if some beam is nobody's preferred beam.
std::vector<UeTuple> enumerate_ue_tuples(const BeamSet& beams, const AlignmentResult& align, int cap);

/// Spectral efficiencies r_l^{q,u}(z) for every candidate (beam set, tuple),
/// stored only for u in z. Tuples are numbered globally; the tuples of beam
/// set l are [tuple_begin(l), tuple_end(l)).
class RateTensor {
public:
    RateTensor() = default;
    RateTensor(int n_ues, int n_cbs) : n_ues_(n_ues), n_cbs_(n_cbs) { ell_begin_.push_back(0); }

    /// Appends beam set `beams` with its tuples; rates are zero-initialized.
    void add_beam_set(BeamSet beams, std::vector<UeTuple> tuples);

    int n_ues() const { return n_ues_; }
    int n_cbs() const { return n_cbs_; }
    int n_beam_sets() const { return static_cast<int>(beam_sets_.size()); }
    int n_tuples() const { return static_cast<int>(tuples_.size()); }

    const BeamSet& beam_set(int l) const { return beam_sets_[l]; }
    int tuple_begin(int l) const { return ell_begin_[l]; }
    int tuple_end(int l) const { return ell_begin_[l + 1]; }
    const UeTuple& tuple(int t) const { return tuples_[t]; }
    int beam_set_of(int t) const { return ell_of_[t]; }

    /// Efficiency of the j-th member of tuple t in CB q.
    double& rate(int t, int q, int j) { return rates_[rate_offset_[t] + q * tuples_[t].size() + j]; }
    double rate(int t, int q, int j) const { return rates_[rate_offset_[t] + q * tuples_[t].size() + j]; }
    /// Efficiency of UE u for tuple t in CB q (0 if u is not in the tuple).
    double rate_of(int t, int q, int u) const;

    /// Copy restricted to the listed beam sets (in the given order).
    RateTensor subset(std::span<const int> beam_sets) const;

private:
    int n_ues_ = 0;
    int n_cbs_ = 0;
    std::vector<BeamSet> beam_sets_;
    std::vector<int> ell_begin_;
    std::vector<UeTuple> tuples_;
    std::vector<int> ell_of_;
    std::vector<std::size_t> rate_offset_;
    std::vector<double> rates_;
};

/// Enumerates L and every M_l from the alignment, dropping beam sets whose
/// M_l is empty. Caps are cfg.max_beam_sets and cfg.max_ue_tuples (total).
RateTensor build_candidates(const AlignmentResult& align, const SystemConfig& cfg, int n_cbs);

/// Fills every rate of `tensor` as rate_map(sinr(...)).
void precompute_rates(RateTensor& tensor, const AlignmentResult& align, const EffectiveChannelSet& eff,
                      const SystemConfig& cfg, const RateTable& table);

/// Moving-average throughput state; R_u in bits/s.
struct PfState {
    std::vector<double> avg_throughput;
    int window = 100;

    static PfState initial(int n_ues, int window, double floor_bps) {
        return {std::vector<double>(static_cast<std::size_t>(n_ues), floor_bps), window};
    }
    /// W * R_u for each UE.
    std::vector<double> weighted() const;
};

/// R_u := (1 - 1/W) R_u + lambda_u / W
PfState update_average(const PfState& pf, std::span<const double> lambda);

/// sum_u ln(W R_u + lambda_u). Throws std::domain_error if any argument <= 0.
double pf_objective(std::span<const double> lambda, const PfState& pf);
double pf_objective(std::span<const double> lambda, std::span<const double> weighted_avg);

struct SolverOptions {
    double rel_tol = 1e-6;
    int max_iters = 20000;
    bool record_trace = false;

    static SolverOptions from(const SystemConfig& cfg) { return {cfg.solver_rel_tol, cfg.solver_max_iters, false}; }
};

/// Optimum of the continuous relaxation: alpha[l] and xi[t * Q + q].
struct RelaxedSolution {
    std::vector<double> alpha;
    std::vector<double> xi;
    std::vector<double> lambda;          // bits/s
    double objective = 0.0;
    double gap = 0.0;                    // Frank-Wolfe duality gap at exit
    int iterations = 0;
    std::vector<double> objective_trace; // per iteration, when requested
};

/// Maximizes sum_u ln(c_u + lambda_u(xi)) over the alpha/xi polytope with
/// away-step Frank-Wolfe and exact line search, where c_u = W R_u. Stops when
/// the duality gap is <= rel_tol * |objective|; throws SolverError after
/// max_iters otherwise.
RelaxedSolution solve_relaxed(const RateTensor& r, const PfState& pf, double coherence_bw_hz,
                              const SolverOptions& opts);

/// Integer schedule: alpha'_l = slots[l] / N_T, beta'_q(t) = prbs[t * Q + q] / N_F.
struct FeasibleSolution {
    int n_time_slots = 1;
    int n_freq_subch = 1;
    int n_cbs = 1;
    std::vector<int> slots;
    std::vector<int> prbs;

    double alpha(int l) const { return static_cast<double>(slots[l]) / n_time_slots; }
    double beta(int t, int q) const { return static_cast<double>(prbs[t * n_cbs + q]) / n_freq_subch; }
};

/// Rounds a relaxed point to an integer schedule: beta = xi / alpha, floor
/// both to their grids, give the leftover slots to argmax_l alpha and, per
/// (l, q), the leftover PRBs to argmax_z of the floored beta. Ties go to the
/// lowest index. Beam sets with alpha == 0 get beta = 0 and are skipped.
FeasibleSolution round_feasible(const RateTensor& r, std::span<const double> alpha, std::span<const double> xi,
                                int n_time_slots, int n_freq_subch);

/// lambda_u = B_c sum_l alpha_l sum_z sum_q beta_q^l(z) r_l^{q,u}(z)
std::vector<double> throughput(const RateTensor& r, const FeasibleSolution& s, double coherence_bw_hz);
/// Same with xi = alpha * beta.
std::vector<double> throughput_relaxed(const RateTensor& r, std::span<const double> xi, double coherence_bw_hz);

/// Mean |z| over all PRBs of the MB.
double active_ues_per_prb(const RateTensor& r, const FeasibleSolution& s);
double active_ues_per_prb_relaxed(const RateTensor& r, std::span<const double> xi);

/// True if s satisfies all integrality, range and sum-to-one constraints.
bool is_feasible(const RateTensor& r, const FeasibleSolution& s);

struct BruteForceResult {
    FeasibleSolution solution;
    std::vector<double> lambda;
    double objective = 0.0;
    std::uint64_t evaluated = 0;
};

/// Number of leaf schedules brute_force_schedule() would visit in the worst case.
double brute_force_count(const RateTensor& r, int n_time_slots, int n_freq_subch);

/// Exact maximizer of the integer problem by exhaustive enumeration. Throws
/// CapExceeded if brute_force_count() exceeds `cap`.
BruteForceResult brute_force_schedule(const RateTensor& r, const PfState& pf, double coherence_bw_hz,
                                      int n_time_slots, int n_freq_subch, double cap = 5e6);

}  // namespace mmsched
