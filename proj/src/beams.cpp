#include "mmsched/beams.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "mmsched/channel.hpp"

namespace mmsched {

std::vector<cplx> steering_sin(int n, double s) {
    std::vector<cplx> a(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) a[k] = std::polar(1.0, std::numbers::pi * k * s);
    return a;
}

namespace {

std::vector<cplx> normalized(std::vector<cplx> w) {
    const double n = std::sqrt(norm2(w));
    for (auto& e : w) e /= n;
    return w;
}

std::vector<cplx> flat_top_codeword(int n, double lo, double hi, int k_rf, int grid) {
    // Basis: k_rf steering vectors at the midpoints of k_rf equal sub-intervals.
    Eigen::MatrixXcd basis(n, k_rf);
    for (int k = 0; k < k_rf; ++k) {
        const auto a = steering_sin(n, lo + (k + 0.5) * (hi - lo) / k_rf);
        for (int i = 0; i < n; ++i) basis(i, k) = a[i];
    }
    // Response rows a(s_g)^H and a target that is constant (in the array-center
    // phase reference) inside [lo, hi) and zero outside.
    Eigen::MatrixXcd response(grid, n);
    Eigen::VectorXcd target = Eigen::VectorXcd::Zero(grid);
    for (int g = 0; g < grid; ++g) {
        const double s = -1.0 + (g + 0.5) * 2.0 / grid;
        const auto a = steering_sin(n, s);
        for (int i = 0; i < n; ++i) response(g, i) = std::conj(a[i]);
        if (s >= lo && s < hi) target(g) = std::polar(1.0, -std::numbers::pi * (n - 1) * s / 2.0);
    }
    const Eigen::MatrixXcd system = response * basis;
    const Eigen::VectorXcd coeff = system.completeOrthogonalDecomposition().solve(target);
    const Eigen::VectorXcd w = basis * coeff;
    std::vector<cplx> out(w.data(), w.data() + n);
    return normalized(std::move(out));
}

}  // namespace

Codebook design_codebook(int n, int bits, int rf_per_stream) {
    if (rf_per_stream < 1) throw std::invalid_argument("design_codebook: rf_per_stream must be >= 1");
    if (n < rf_per_stream) throw std::invalid_argument("design_codebook: fewer antennas than RF chains per stream");
    if (bits < 0 || bits > 16) throw std::invalid_argument("design_codebook: bits out of range");
    Codebook cb;
    cb.n_antennas = n;
    cb.rf_per_stream = rf_per_stream;
    const int count = 1 << bits;
    cb.codewords.resize(count);
    const int grid = std::max(16 * n, 32 * count);
    for (int m = 0; m < count; ++m) {
        if (rf_per_stream == 1) {
            cb.codewords[m] = normalized(steering_sin(n, cb.center(m)));
        } else {
            cb.codewords[m] = flat_top_codeword(n, cb.interval_lo(m), cb.interval_hi(m), rf_per_stream, grid);
        }
    }
    return cb;
}

double beam_gain(std::span<const cplx> w, double phi_rad) {
    const auto a = array_response(static_cast<int>(w.size()), phi_rad);
    return std::norm(dot_conj(a, w));
}

double in_beam_ripple_db(const Codebook& cb, int m) {
    double lo_gain = INFINITY;
    double hi_gain = 0.0;
    int points = 0;
    for (int deg = -90; deg <= 90; ++deg) {
        const double phi = deg * std::numbers::pi / 180.0;
        const double s = std::sin(phi);
        if (s < cb.interval_lo(m) || s >= cb.interval_hi(m)) continue;
        const double g = beam_gain(cb.codewords[m], phi);
        lo_gain = std::min(lo_gain, g);
        hi_gain = std::max(hi_gain, g);
        ++points;
    }
    if (points < 2) return 0.0;
    return linear_to_db(hi_gain / lo_gain);
}

std::string beam_pattern_csv(const Codebook& cb, std::string_view side) {
    std::string out = "schema_version,side,n_antennas,rf_per_stream,codeword,azimuth_deg,gain_linear,gain_db\n";
    for (int m = 0; m < cb.size(); ++m) {
        for (int deg = -90; deg <= 90; ++deg) {
            const double g = beam_gain(cb.codewords[m], deg * std::numbers::pi / 180.0);
            out += fmt::format("1,{},{},{},{},{},{:.9e},{:.6f}\n", side, cb.n_antennas, cb.rf_per_stream, m, deg, g,
                               linear_to_db(std::max(g, 1e-30)));
        }
    }
    return out;
}

int AlignmentResult::slot_of_beam(int beam) const {
    const auto it = std::lower_bound(distinct_bs.begin(), distinct_bs.end(), beam);
    if (it == distinct_bs.end() || *it != beam) return -1;
    return static_cast<int>(it - distinct_bs.begin());
}

int AlignmentResult::beam_slot(int ue) const { return slot_of_beam(bs_beam.at(ue)); }

double alignment_metric(std::span<const CMatrix> per_cb, std::span<const cplx> w, std::span<const cplx> v) {
    double total = 0.0;
    for (const auto& h : per_cb) total += std::norm(dot_conj(v, matvec(h, w)));
    return total;
}

AlignmentResult beam_align(const UeChannels& channels, const Codebook& bs, const Codebook& ue) {
    AlignmentResult res;
    const int n_ues = static_cast<int>(channels.size());
    res.bs_beam.assign(n_ues, 0);
    res.ue_beam.assign(n_ues, 0);
    res.metric.assign(n_ues, -1.0);
    const auto& k = kernels::active();
    std::vector<double> score(static_cast<std::size_t>(ue.size()));
    std::vector<cplx> hw;
    for (int u = 0; u < n_ues; ++u) {
        for (int j = 0; j < bs.size(); ++j) {
            std::fill(score.begin(), score.end(), 0.0);
            for (const auto& h : channels[u]) {
                hw.resize(h.rows);
                k.matvec(h.data.data(), h.rows, h.cols, bs.codewords[j].data(), hw.data());
                for (int i = 0; i < ue.size(); ++i) {
                    score[i] += std::norm(k.dot_conj(ue.codewords[i].data(), hw.data(), hw.size()));
                }
            }
            for (int i = 0; i < ue.size(); ++i) {
                if (score[i] > res.metric[u]) {
                    res.metric[u] = score[i];
                    res.bs_beam[u] = j;
                    res.ue_beam[u] = i;
                }
            }
        }
    }
    res.distinct_bs = res.bs_beam;
    std::sort(res.distinct_bs.begin(), res.distinct_bs.end());
    res.distinct_bs.erase(std::unique(res.distinct_bs.begin(), res.distinct_bs.end()), res.distinct_bs.end());
    return res;
}

void effective_channels(const UeChannels& channels, const AlignmentResult& align, const Codebook& bs,
                        const Codebook& ue, int q, EffectiveChannelSet& out) {
    const auto& k = kernels::active();
    std::vector<cplx> hw;
    for (int u = 0; u < align.n_ues(); ++u) {
        const CMatrix& h = channels[u][q];
        const auto& v = ue.codewords[align.ue_beam[u]];
        hw.resize(h.rows);
        for (int b = 0; b < static_cast<int>(align.distinct_bs.size()); ++b) {
            k.matvec(h.data.data(), h.rows, h.cols, bs.codewords[align.distinct_bs[b]].data(), hw.data());
            out.by_beam(q, u, b) = k.dot_conj(v.data(), hw.data(), hw.size());
        }
    }
}

EffectiveChannelSet effective_channels(const UeChannels& channels, const AlignmentResult& align, const Codebook& bs,
                                       const Codebook& ue) {
    const int n_cbs = channels.empty() ? 0 : static_cast<int>(channels.front().size());
    EffectiveChannelSet out(n_cbs, align.n_ues(), static_cast<int>(align.distinct_bs.size()));
    for (int q = 0; q < n_cbs; ++q) effective_channels(channels, align, bs, ue, q, out);
    return out;
}

}  // namespace mmsched
