#include <algorithm>
#include <cmath>
#include <functional>

#include <fmt/format.h>

#include "mmsched/scheduler.hpp"

namespace mmsched {

namespace {

// Values within this distance below an integer grid point are treated as on
// it, so exact multiples of 1/N survive floating-point noise.
constexpr double kGridSlack = 1e-9;

int floor_on_grid(double fraction, int n) { return static_cast<int>(std::floor(fraction * n + kGridSlack)); }

}  // namespace

std::vector<double> PfState::weighted() const {
    std::vector<double> out(avg_throughput.size());
    for (std::size_t u = 0; u < out.size(); ++u) out[u] = window * avg_throughput[u];
    return out;
}

PfState update_average(const PfState& pf, std::span<const double> lambda) {
    if (pf.window < 1) throw std::invalid_argument("update_average: window must be >= 1");
    PfState next = pf;
    const double w = pf.window;
    for (std::size_t u = 0; u < next.avg_throughput.size(); ++u) {
        next.avg_throughput[u] = (1.0 - 1.0 / w) * pf.avg_throughput[u] + lambda[u] / w;
    }
    return next;
}

double pf_objective(std::span<const double> lambda, std::span<const double> weighted_avg) {
    double f = 0.0;
    for (std::size_t u = 0; u < lambda.size(); ++u) {
        const double arg = weighted_avg[u] + lambda[u];
        if (!(arg > 0.0)) {
            throw std::domain_error(fmt::format("pf_objective: W*R + lambda = {} for UE {} (missing PF floor?)", arg, u));
        }
        f += std::log(arg);
    }
    return f;
}

double pf_objective(std::span<const double> lambda, const PfState& pf) { return pf_objective(lambda, pf.weighted()); }

FeasibleSolution round_feasible(const RateTensor& r, std::span<const double> alpha, std::span<const double> xi,
                                int n_time_slots, int n_freq_subch) {
    const int nl = r.n_beam_sets();
    const int nq = r.n_cbs();
    FeasibleSolution s;
    s.n_time_slots = n_time_slots;
    s.n_freq_subch = n_freq_subch;
    s.n_cbs = nq;
    s.slots.assign(nl, 0);
    s.prbs.assign(static_cast<std::size_t>(r.n_tuples()) * nq, 0);

    // Floors.
    for (int l = 0; l < nl; ++l) {
        s.slots[l] = floor_on_grid(alpha[l], n_time_slots);
        if (alpha[l] <= 0.0) continue;
        for (int t = r.tuple_begin(l); t < r.tuple_end(l); ++t) {
            for (int q = 0; q < nq; ++q) {
                const double beta = xi[static_cast<std::size_t>(t) * nq + q] / alpha[l];
                s.prbs[static_cast<std::size_t>(t) * nq + q] = floor_on_grid(beta, n_freq_subch);
            }
        }
    }

    // Leftover slots to argmax_l alpha.
    int used = 0;
    for (int v : s.slots) used += v;
    if (used < n_time_slots) {
        int best = 0;
        for (int l = 1; l < nl; ++l) {
            if (alpha[l] > alpha[best]) best = l;
        }
        s.slots[best] += n_time_slots - used;
    }

    // Leftover PRBs of each (l, q) to argmax_z of the floored beta.
    for (int q = 0; q < nq; ++q) {
        for (int l = 0; l < nl; ++l) {
            if (alpha[l] <= 0.0) continue;
            int sum = 0;
            int best = r.tuple_begin(l);
            for (int t = r.tuple_begin(l); t < r.tuple_end(l); ++t) {
                const int v = s.prbs[static_cast<std::size_t>(t) * nq + q];
                sum += v;
                if (v > s.prbs[static_cast<std::size_t>(best) * nq + q]) best = t;
            }
            if (sum < n_freq_subch) s.prbs[static_cast<std::size_t>(best) * nq + q] += n_freq_subch - sum;
        }
    }
    return s;
}

bool is_feasible(const RateTensor& r, const FeasibleSolution& s) {
    const int nq = r.n_cbs();
    if (static_cast<int>(s.slots.size()) != r.n_beam_sets()) return false;
    if (s.prbs.size() != static_cast<std::size_t>(r.n_tuples()) * nq) return false;
    int total = 0;
    for (int v : s.slots) {
        if (v < 0 || v > s.n_time_slots) return false;
        total += v;
    }
    if (total != s.n_time_slots) return false;
    for (int l = 0; l < r.n_beam_sets(); ++l) {
        if (s.slots[l] == 0) continue;
        for (int q = 0; q < nq; ++q) {
            int sum = 0;
            for (int t = r.tuple_begin(l); t < r.tuple_end(l); ++t) {
                const int v = s.prbs[static_cast<std::size_t>(t) * nq + q];
                if (v < 0 || v > s.n_freq_subch) return false;
                sum += v;
            }
            if (sum != s.n_freq_subch) return false;
        }
    }
    return true;
}

std::vector<double> throughput(const RateTensor& r, const FeasibleSolution& s, double coherence_bw_hz) {
    std::vector<double> lambda(static_cast<std::size_t>(r.n_ues()), 0.0);
    for (int l = 0; l < r.n_beam_sets(); ++l) {
        if (s.slots[l] == 0) continue;
        const double a = s.alpha(l);
        for (int t = r.tuple_begin(l); t < r.tuple_end(l); ++t) {
            const auto& z = r.tuple(t);
            for (int q = 0; q < r.n_cbs(); ++q) {
                const double b = s.beta(t, q);
                if (b == 0.0) continue;
                for (std::size_t j = 0; j < z.size(); ++j) {
                    lambda[z[j]] += coherence_bw_hz * a * b * r.rate(t, q, static_cast<int>(j));
                }
            }
        }
    }
    return lambda;
}

std::vector<double> throughput_relaxed(const RateTensor& r, std::span<const double> xi, double coherence_bw_hz) {
    std::vector<double> lambda(static_cast<std::size_t>(r.n_ues()), 0.0);
    const int nq = r.n_cbs();
    for (int t = 0; t < r.n_tuples(); ++t) {
        const auto& z = r.tuple(t);
        for (int q = 0; q < nq; ++q) {
            const double x = xi[static_cast<std::size_t>(t) * nq + q];
            if (x == 0.0) continue;
            for (std::size_t j = 0; j < z.size(); ++j) {
                lambda[z[j]] += coherence_bw_hz * x * r.rate(t, q, static_cast<int>(j));
            }
        }
    }
    return lambda;
}

double active_ues_per_prb(const RateTensor& r, const FeasibleSolution& s) {
    double total = 0.0;
    for (int l = 0; l < r.n_beam_sets(); ++l) {
        if (s.slots[l] == 0) continue;
        for (int t = r.tuple_begin(l); t < r.tuple_end(l); ++t) {
            for (int q = 0; q < r.n_cbs(); ++q) total += s.alpha(l) * s.beta(t, q) * r.tuple(t).size();
        }
    }
    return total / r.n_cbs();
}

double active_ues_per_prb_relaxed(const RateTensor& r, std::span<const double> xi) {
    double total = 0.0;
    for (int t = 0; t < r.n_tuples(); ++t) {
        for (int q = 0; q < r.n_cbs(); ++q) total += xi[static_cast<std::size_t>(t) * r.n_cbs() + q] * r.tuple(t).size();
    }
    return total / r.n_cbs();
}

// ---------------------------------------------------------------------------
// Exhaustive oracle.

namespace {

double binomial(int n, int k) {
    double v = 1.0;
    for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
    return v;
}

// All vectors of `parts` non-negative integers summing to `total`, lexicographic.
std::vector<std::vector<int>> compositions(int total, int parts) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(parts, 0);
    std::function<void(int, int)> rec = [&](int i, int left) {
        if (i == parts - 1) {
            cur[i] = left;
            out.push_back(cur);
            return;
        }
        for (int v = left; v >= 0; --v) {
            cur[i] = v;
            rec(i + 1, left - v);
        }
    };
    rec(0, total);
    return out;
}

}  // namespace

double brute_force_count(const RateTensor& r, int n_time_slots, int n_freq_subch) {
    const int nl = r.n_beam_sets();
    double count = binomial(n_time_slots + nl - 1, nl - 1);
    for (int l = 0; l < nl; ++l) {
        const int m = r.tuple_end(l) - r.tuple_begin(l);
        count *= std::pow(binomial(n_freq_subch + m - 1, m - 1), r.n_cbs());
    }
    return count;
}

BruteForceResult brute_force_schedule(const RateTensor& r, const PfState& pf, double coherence_bw_hz,
                                      int n_time_slots, int n_freq_subch, double cap) {
    const double count = brute_force_count(r, n_time_slots, n_freq_subch);
    if (count > cap) {
        throw CapExceeded(fmt::format("brute-force oracle would visit {} schedules (cap {}); it is for tiny instances only",
                                      count, cap));
    }
    const int nl = r.n_beam_sets();
    const int nq = r.n_cbs();
    const auto nu = static_cast<std::size_t>(r.n_ues());
    const auto base = pf.weighted();

    // Per beam set: every PRB split of one CB over its tuples.
    std::vector<std::vector<std::vector<int>>> splits(nl);
    for (int l = 0; l < nl; ++l) splits[l] = compositions(n_freq_subch, r.tuple_end(l) - r.tuple_begin(l));

    BruteForceResult best;
    best.objective = -INFINITY;
    FeasibleSolution cur;
    cur.n_time_slots = n_time_slots;
    cur.n_freq_subch = n_freq_subch;
    cur.n_cbs = nq;
    cur.prbs.assign(static_cast<std::size_t>(r.n_tuples()) * nq, 0);

    for (const auto& slots : compositions(n_time_slots, nl)) {
        cur.slots = slots;
        std::vector<std::pair<int, int>> cells;  // (l, q) with slots > 0
        for (int l = 0; l < nl; ++l) {
            for (int q = 0; q < nq; ++q) {
                if (slots[l] > 0) cells.emplace_back(l, q);
            }
            // Unused beam sets keep a fixed valid split.
            for (int t = r.tuple_begin(l); t < r.tuple_end(l); ++t) {
                for (int q = 0; q < nq; ++q) cur.prbs[static_cast<std::size_t>(t) * nq + q] = t == r.tuple_begin(l) ? n_freq_subch : 0;
            }
        }
        std::vector<double> lambda(nu, 0.0);
        std::function<void(std::size_t)> rec = [&](std::size_t c) {
            if (c == cells.size()) {
                ++best.evaluated;
                const double f = pf_objective(lambda, base);
                if (f > best.objective) {
                    best.objective = f;
                    best.solution = cur;
                    best.lambda = lambda;
                }
                return;
            }
            const auto [l, q] = cells[c];
            const double a = static_cast<double>(slots[l]) / n_time_slots;
            for (const auto& split : splits[l]) {
                std::vector<double> saved = lambda;
                for (int k = 0; k < static_cast<int>(split.size()); ++k) {
                    const int t = r.tuple_begin(l) + k;
                    cur.prbs[static_cast<std::size_t>(t) * nq + q] = split[k];
                    if (split[k] == 0) continue;
                    const double b = static_cast<double>(split[k]) / n_freq_subch;
                    const auto& z = r.tuple(t);
                    for (std::size_t j = 0; j < z.size(); ++j) {
                        lambda[z[j]] += coherence_bw_hz * a * b * r.rate(t, q, static_cast<int>(j));
                    }
                }
                rec(c + 1);
                lambda = std::move(saved);
            }
        };
        rec(0);
    }
    return best;
}

}  // namespace mmsched
