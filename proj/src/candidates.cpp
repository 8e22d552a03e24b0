#include <algorithm>
#include <functional>

#include <fmt/format.h>

#include "mmsched/scheduler.hpp"

namespace mmsched {

namespace {

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

std::vector<BeamSet> enumerate_beam_sets(std::span<const int> distinct_beams, int max_streams, int cap) {
    if (distinct_beams.empty()) throw std::invalid_argument("enumerate_beam_sets: no beams selected");
    std::vector<int> pool(distinct_beams.begin(), distinct_beams.end());
    std::sort(pool.begin(), pool.end());
    const int n = static_cast<int>(pool.size());
    const int kmax = std::min(max_streams, n);

    double count = 0.0;
    for (int k = 1; k <= kmax; ++k) count += binomial(n, k);
    if (count > cap) {
        throw CapExceeded(fmt::format(
            "{} candidate beam sets exceed the cap of {}; lower the stream count L (n_bs_rf / rf_per_stream_bs) "
            "or the number of UEs",
            count, cap));
    }

    std::vector<BeamSet> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 1; k <= kmax; ++k) {
        std::vector<int> idx(k);
        for (int i = 0; i < k; ++i) idx[i] = i;
        while (true) {
            BeamSet s(k);
            for (int i = 0; i < k; ++i) s[i] = pool[idx[i]];
            out.push_back(std::move(s));
            int i = k - 1;
            while (i >= 0 && idx[i] == n - k + i) --i;
            if (i < 0) break;
            ++idx[i];
            for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
        }
    }
    return out;
}

std::vector<UeTuple> enumerate_ue_tuples(const BeamSet& beams, const AlignmentResult& align, int cap) {
    std::vector<std::vector<int>> groups(beams.size());
    for (std::size_t j = 0; j < beams.size(); ++j) {
        for (int u = 0; u < align.n_ues(); ++u) {
            if (align.bs_beam[u] == beams[j]) groups[j].push_back(u);
        }
        if (groups[j].empty()) return {};
    }
    double count = 1.0;
    for (const auto& g : groups) count *= static_cast<double>(g.size());
    if (count > cap) {
        throw CapExceeded(fmt::format(
            "{} UE tuples for one beam set exceed the cap of {}; lower the stream count L or the number of UEs",
            count, cap));
    }
    std::vector<UeTuple> out;
    std::vector<std::size_t> odo(beams.size(), 0);
    while (true) {
        UeTuple z(beams.size());
        for (std::size_t j = 0; j < beams.size(); ++j) z[j] = groups[j][odo[j]];
        out.push_back(std::move(z));
        int j = static_cast<int>(beams.size()) - 1;
        while (j >= 0 && ++odo[j] == groups[j].size()) odo[j--] = 0;
        if (j < 0) break;
    }
    return out;
}

void RateTensor::add_beam_set(BeamSet beams, std::vector<UeTuple> tuples) {
    const int l = n_beam_sets();
    beam_sets_.push_back(std::move(beams));
    for (auto& z : tuples) {
        rate_offset_.push_back(rates_.size());
        rates_.resize(rates_.size() + static_cast<std::size_t>(n_cbs_) * z.size(), 0.0);
        ell_of_.push_back(l);
        tuples_.push_back(std::move(z));
    }
    ell_begin_.push_back(n_tuples());
}

double RateTensor::rate_of(int t, int q, int u) const {
    const auto& z = tuples_[t];
    for (std::size_t j = 0; j < z.size(); ++j) {
        if (z[j] == u) return rate(t, q, static_cast<int>(j));
    }
    return 0.0;
}

RateTensor RateTensor::subset(std::span<const int> beam_sets) const {
    RateTensor out(n_ues_, n_cbs_);
    for (int l : beam_sets) {
        std::vector<UeTuple> zs(tuples_.begin() + tuple_begin(l), tuples_.begin() + tuple_end(l));
        out.add_beam_set(beam_sets_[l], std::move(zs));
        const int nl = out.n_beam_sets() - 1;
        for (int k = 0; k < tuple_end(l) - tuple_begin(l); ++k) {
            const int src = tuple_begin(l) + k;
            const int dst = out.tuple_begin(nl) + k;
            for (int q = 0; q < n_cbs_; ++q) {
                for (std::size_t j = 0; j < tuples_[src].size(); ++j) {
                    out.rate(dst, q, static_cast<int>(j)) = rate(src, q, static_cast<int>(j));
                }
            }
        }
    }
    return out;
}

RateTensor build_candidates(const AlignmentResult& align, const SystemConfig& cfg, int n_cbs) {
    const auto sets = enumerate_beam_sets(align.distinct_bs, cfg.max_streams, cfg.max_beam_sets);
    RateTensor tensor(align.n_ues(), n_cbs);
    long total = 0;
    for (const auto& s : sets) {
        auto tuples = enumerate_ue_tuples(s, align, cfg.max_ue_tuples);
        if (tuples.empty()) continue;
        total += static_cast<long>(tuples.size());
        if (total > cfg.max_ue_tuples) {
            throw CapExceeded(fmt::format(
                "more than {} UE tuples in total; lower the stream count L (n_bs_rf / rf_per_stream_bs) or the "
                "number of UEs",
                cfg.max_ue_tuples));
        }
        tensor.add_beam_set(s, std::move(tuples));
    }
    return tensor;
}

void precompute_rates(RateTensor& tensor, const AlignmentResult& align, const EffectiveChannelSet& eff,
                      const SystemConfig& cfg, const RateTable& table) {
    std::vector<int> slots;
    for (int l = 0; l < tensor.n_beam_sets(); ++l) {
        const auto& beams = tensor.beam_set(l);
        slots.resize(beams.size());
        for (std::size_t j = 0; j < beams.size(); ++j) slots[j] = align.slot_of_beam(beams[j]);
        for (int t = tensor.tuple_begin(l); t < tensor.tuple_end(l); ++t) {
            const auto& z = tensor.tuple(t);
            for (int q = 0; q < tensor.n_cbs(); ++q) {
                const SinrContext ctx{slots, z, q, cfg.tx_power_w, cfg.n_cbs_freq, cfg.n_freq_subch,
                                      cfg.noise_power_prb_w};
                for (std::size_t j = 0; j < z.size(); ++j) {
                    tensor.rate(t, q, static_cast<int>(j)) = rate_map(sinr(eff, ctx, z[j]), table);
                }
            }
        }
    }
}

}  // namespace mmsched
