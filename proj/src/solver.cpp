// Away-step Frank-Wolfe for the relaxed proportional-fair problem.
//
// The objective depends on (alpha, xi) only through lambda, which is linear in
// xi, so the iterate is kept as a convex combination of polytope vertices and
// all arithmetic happens on their lambda images (one U-vector per vertex).
// A vertex puts alpha = 1 on one beam set and, per CB, xi = 1 on at most one
// of its tuples.

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "mmsched/scheduler.hpp"

namespace mmsched {

namespace {

struct Vertex {
    int ell = 0;
    std::vector<int> pick;        // per CB: global tuple index or -1
    std::vector<double> lambda;   // bits/s per UE
    double weight = 0.0;

    bool same_as(const Vertex& o) const { return ell == o.ell && pick == o.pick; }
};

class Lmo {
public:
    Lmo(const RateTensor& r, double bc) : r_(r), bc_(bc) {}

    // Vertex maximizing <grad_lambda, lambda(v)>.
    Vertex best(std::span<const double> grad) {
        const int nq = r_.n_cbs();
        Vertex v;
        v.pick.assign(nq, -1);
        double best_score = -1.0;
        std::vector<int> pick(nq);
        for (int l = 0; l < r_.n_beam_sets(); ++l) {
            double score = 0.0;
            for (int q = 0; q < nq; ++q) {
                double m = 0.0;
                int arg = -1;
                for (int t = r_.tuple_begin(l); t < r_.tuple_end(l); ++t) {
                    const auto& z = r_.tuple(t);
                    double g = 0.0;
                    for (std::size_t j = 0; j < z.size(); ++j) g += r_.rate(t, q, static_cast<int>(j)) * grad[z[j]];
                    g *= bc_;
                    if (g > m) {
                        m = g;
                        arg = t;
                    }
                }
                pick[q] = arg;
                score += m;
            }
            if (score > best_score) {
                best_score = score;
                v.ell = l;
                v.pick = pick;
            }
        }
        v.lambda = lambda_of(v);
        return v;
    }

    std::vector<double> lambda_of(const Vertex& v) const {
        std::vector<double> lam(static_cast<std::size_t>(r_.n_ues()), 0.0);
        for (int q = 0; q < r_.n_cbs(); ++q) {
            const int t = v.pick[q];
            if (t < 0) continue;
            const auto& z = r_.tuple(t);
            for (std::size_t j = 0; j < z.size(); ++j) lam[z[j]] += bc_ * r_.rate(t, q, static_cast<int>(j));
        }
        return lam;
    }

private:
    const RateTensor& r_;
    double bc_;
};

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double log_utility(std::span<const double> base, std::span<const double> lambda) {
    double f = 0.0;
    for (std::size_t u = 0; u < base.size(); ++u) f += std::log(base[u] + lambda[u]);
    return f;
}

// argmax over [0, gmax] of sum_u ln(b_u + gamma d_u); b > 0 and the derivative
// at 0 is positive.
double line_search(std::span<const double> b, std::span<const double> d, double gmax) {
    auto deriv = [&](double g) {
        double s = 0.0;
        for (std::size_t u = 0; u < b.size(); ++u) s += d[u] / (b[u] + g * d[u]);
        return s;
    };
    auto curv = [&](double g) {
        double s = 0.0;
        for (std::size_t u = 0; u < b.size(); ++u) {
            const double den = b[u] + g * d[u];
            s -= d[u] * d[u] / (den * den);
        }
        return s;
    };
    if (deriv(gmax) >= 0.0) return gmax;
    double lo = 0.0;
    double hi = gmax;
    double g = 0.5 * gmax;
    for (int it = 0; it < 200; ++it) {
        const double fp = deriv(g);
        if (fp > 0.0) {
            lo = g;
        } else {
            hi = g;
        }
        const double c = curv(g);
        double next = c < 0.0 ? g - fp / c : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - g) <= 1e-15 * std::max(1.0, g) || hi - lo <= 1e-15 * gmax) {
            g = next;
            break;
        }
        g = next;
    }
    return std::clamp(g, 0.0, gmax);
}

}  // namespace

RelaxedSolution solve_relaxed(const RateTensor& r, const PfState& pf, double coherence_bw_hz,
                              const SolverOptions& opts) {
    if (r.n_beam_sets() == 0) throw std::invalid_argument("solve_relaxed: empty candidate set");
    const auto base = pf.weighted();
    for (double c : base) {
        if (!(c > 0.0)) throw std::domain_error("solve_relaxed: W*R_u must be positive (missing PF floor)");
    }
    const std::size_t nu = base.size();
    Lmo lmo(r, coherence_bw_hz);

    std::vector<double> grad(nu);
    for (std::size_t u = 0; u < nu; ++u) grad[u] = 1.0 / base[u];

    std::vector<Vertex> active;
    active.push_back(lmo.best(grad));
    active.back().weight = 1.0;
    std::vector<double> lambda = active.back().lambda;
    std::vector<double> point(nu), dir(nu);

    RelaxedSolution sol;
    double gap = INFINITY;
    double f = log_utility(base, lambda);
    int it = 0;
    for (;; ++it) {
        f = log_utility(base, lambda);
        if (opts.record_trace) sol.objective_trace.push_back(f);
        for (std::size_t u = 0; u < nu; ++u) grad[u] = 1.0 / (base[u] + lambda[u]);

        Vertex s = lmo.best(grad);
        const double gs = dot(grad, s.lambda);
        const double gx = dot(grad, lambda);
        gap = std::max(0.0, gs - gx);
        if (gap <= opts.rel_tol * std::abs(f) || gap <= 1e-15 * (std::abs(gs) + std::abs(gx))) break;
        if (it >= opts.max_iters) {
            throw SolverError(fmt::format("relaxed solver did not converge in {} iterations (gap {:.3e}, objective {:.9g})",
                                          opts.max_iters, gap, f),
                              gap, it);
        }

        std::size_t away = 0;
        double ga = INFINITY;
        for (std::size_t i = 0; i < active.size(); ++i) {
            const double v = dot(grad, active[i].lambda);
            if (v < ga) {
                ga = v;
                away = i;
            }
        }
        const bool fw_step = active.size() == 1 || gs - gx >= gx - ga;
        double gmax = 1.0;
        if (fw_step) {
            for (std::size_t u = 0; u < nu; ++u) dir[u] = s.lambda[u] - lambda[u];
        } else {
            const double wa = active[away].weight;
            gmax = wa / (1.0 - wa);
            for (std::size_t u = 0; u < nu; ++u) dir[u] = lambda[u] - active[away].lambda[u];
        }
        for (std::size_t u = 0; u < nu; ++u) point[u] = base[u] + lambda[u];
        const double gamma = line_search(point, dir, gmax);

        if (fw_step) {
            for (auto& v : active) v.weight *= 1.0 - gamma;
            auto hit = std::find_if(active.begin(), active.end(), [&](const Vertex& v) { return v.same_as(s); });
            if (hit != active.end()) {
                hit->weight += gamma;
            } else {
                s.weight = gamma;
                active.push_back(std::move(s));
            }
        } else {
            for (auto& v : active) v.weight *= 1.0 + gamma;
            if (gamma >= gmax) {
                active[away].weight = 0.0;
            } else {
                active[away].weight -= gamma;
            }
        }
        std::erase_if(active, [](const Vertex& v) { return v.weight <= 0.0; });
        double total = 0.0;
        for (const auto& v : active) total += v.weight;
        std::fill(lambda.begin(), lambda.end(), 0.0);
        for (auto& v : active) {
            v.weight /= total;
            for (std::size_t u = 0; u < nu; ++u) lambda[u] += v.weight * v.lambda[u];
        }
    }

    sol.alpha.assign(r.n_beam_sets(), 0.0);
    sol.xi.assign(static_cast<std::size_t>(r.n_tuples()) * r.n_cbs(), 0.0);
    for (const auto& v : active) {
        sol.alpha[v.ell] += v.weight;
        for (int q = 0; q < r.n_cbs(); ++q) {
            if (v.pick[q] >= 0) sol.xi[static_cast<std::size_t>(v.pick[q]) * r.n_cbs() + q] += v.weight;
        }
    }
    sol.lambda = std::move(lambda);
    sol.objective = f;
    sol.gap = gap;
    sol.iterations = it;
    return sol;
}

}  // namespace mmsched
