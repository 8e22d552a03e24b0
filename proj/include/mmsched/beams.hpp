#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mmsched/kernels.hpp"

namespace mmsched {

/// Unit-norm beamforming codewords tiling sin(phi) in [-1, 1] with 2^B equal
/// intervals. Codeword m covers [lo(m), hi(m)) in sin-space.
struct Codebook {
    int n_antennas = 0;
    int rf_per_stream = 1;
    std::vector<std::vector<cplx>> codewords;

    int size() const { return static_cast<int>(codewords.size()); }
    double interval_lo(int m) const { return -1.0 + 2.0 * m / size(); }
    double interval_hi(int m) const { return -1.0 + 2.0 * (m + 1) / size(); }
    double center(int m) const { return -1.0 + (2.0 * m + 1.0) / size(); }
};

/// Steering vector parameterized directly by s = sin(phi): element k is exp(j pi k s).
std::vector<cplx> steering_sin(int n, double s);

/// Codebook of 2^bits beams for an n-element ULA driven by rf_per_stream RF chains.
///
/// rf_per_stream == 1: each codeword is the normalized steering vector at its
/// interval center. rf_per_stream > 1: each codeword is the least-squares fit,
/// inside the span of rf_per_stream steering vectors spread across the
/// interval, to a flat-top response that is constant inside the interval and
/// zero elsewhere (evaluated on a dense sin-space grid), then normalized.
///
/// Throws std::invalid_argument if n < rf_per_stream or bits is out of range.
Codebook design_codebook(int n, int bits, int rf_per_stream);

/// |a(phi)^H w|^2 for a ULA of w.size() elements.
double beam_gain(std::span<const cplx> w, double phi_rad);

/// max/min gain (dB) of codeword m over the 1-degree azimuth grid points whose
/// sin falls inside the codeword's interval. Returns 0 if fewer than 2 points.
double in_beam_ripple_db(const Codebook& cb, int m);

/// CSV with one row per (codeword, azimuth degree in [-90, 90]).
std::string beam_pattern_csv(const Codebook& cb, std::string_view side);

struct AlignmentResult {
    std::vector<int> bs_beam;       // b(u), 0-based codeword index
    std::vector<int> ue_beam;
    std::vector<double> metric;     // sum_q |v^H H_q w|^2 of the chosen pair
    std::vector<int> distinct_bs;   // C_b^*, sorted ascending

    int n_ues() const { return static_cast<int>(bs_beam.size()); }
    /// Position of b(u) inside distinct_bs.
    int beam_slot(int ue) const;
    /// Position of BS codeword `beam` inside distinct_bs, or -1.
    int slot_of_beam(int beam) const;
};

/// Per-UE channels of one megablock: channels[u][q].
using UeChannels = std::vector<std::vector<CMatrix>>;

/// Score of one (w, v) pair for one UE: sum over CBs of |v^H H_q w|^2.
double alignment_metric(std::span<const CMatrix> per_cb, std::span<const cplx> w, std::span<const cplx> v);

/// Exhaustive search over all BS x UE codeword pairs for each UE. Ties go to
/// the lowest (bs index, ue index).
AlignmentResult beam_align(const UeChannels& channels, const Codebook& bs, const Codebook& ue);

/// h_eff for every (q, victim u, distinct BS beam k). The beam serving UE n is
/// distinct_bs[beam_slot(n)], so h(q, u, n) = by_beam(q, u, beam_slot(n)).
class EffectiveChannelSet {
public:
    EffectiveChannelSet() = default;
    EffectiveChannelSet(int n_cbs, int n_ues, int n_beams)
        : n_cbs_(n_cbs), n_ues_(n_ues), n_beams_(n_beams), data_(static_cast<std::size_t>(n_cbs) * n_ues * n_beams) {}

    int n_cbs() const { return n_cbs_; }
    int n_ues() const { return n_ues_; }
    int n_beams() const { return n_beams_; }

    cplx& by_beam(int q, int u, int k) { return data_[index(q, u, k)]; }
    cplx by_beam(int q, int u, int k) const { return data_[index(q, u, k)]; }
    cplx at(const AlignmentResult& align, int q, int u, int n) const { return by_beam(q, u, align.beam_slot(n)); }

private:
    std::size_t index(int q, int u, int k) const {
        return (static_cast<std::size_t>(q) * n_ues_ + u) * n_beams_ + k;
    }

    int n_cbs_ = 0;
    int n_ues_ = 0;
    int n_beams_ = 0;
    std::vector<cplx> data_;
};

/// Fills CB q of `out` with v*_u^H H_{q,u} w for every distinct BS beam.
void effective_channels(const UeChannels& channels, const AlignmentResult& align, const Codebook& bs,
                        const Codebook& ue, int q, EffectiveChannelSet& out);

/// All CBs at once.
EffectiveChannelSet effective_channels(const UeChannels& channels, const AlignmentResult& align, const Codebook& bs,
                                       const Codebook& ue);

}  // namespace mmsched
