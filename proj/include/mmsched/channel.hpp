#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mmsched/core.hpp"
#include "mmsched/kernels.hpp"
#include "mmsched/rng.hpp"

namespace mmsched {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Large-scale state of one UE; fixed for the whole realization.
struct UeLargeScale {
    Point2 position;
    double distance_3d_m = 0.0;
    double path_loss_db = 0.0;                 // includes shadowing
    std::vector<double> cluster_power;         // nu_d, sums to 1
    std::vector<std::vector<double>> aod_rad;  // [cluster][path], BS side
    std::vector<std::vector<double>> aoa_rad;  // [cluster][path], UE side
};

/// One drop of UEs in the cell. The BS sits at the origin at bs_height.
struct NetworkRealization {
    std::uint64_t seed = 0;
    double bs_height_m = 0.0;
    int n_clusters = 0;
    int n_paths = 0;
    std::vector<UeLargeScale> ues;

    int n_ues() const { return static_cast<int>(ues.size()); }
};

struct PathLossParams {
    double intercept_db = 72.0;
    double exponent = 2.92;
    double shadowing_std_db = 8.7;

    static PathLossParams from(const SystemConfig& cfg) {
        return {cfg.pl_intercept_db, cfg.pl_exponent, cfg.shadowing_std_db};
    }
};

/// a + 10 b log10(d), no shadowing.
double mean_path_loss_db(double distance_3d_m, const PathLossParams& p);

/// a + 10 b log10(d) + X with X ~ N(0, sigma_sh^2) drawn from `rng`.
double path_loss_db(double distance_3d_m, const PathLossParams& p, CounterRng& rng);

/// ULA response with half-wavelength spacing: element k is exp(j pi k sin(phi)).
std::vector<cplx> array_response(int n, double phi_rad);

/// Normalized exponential cluster powers, nu_d proportional to exp(-d / decay), d = 1..n.
std::vector<double> cluster_powers(int n, double decay);

/// Draws UE positions (area-uniform in the annulus) and large-scale state.
/// Pure function of (cfg, seed).
NetworkRealization generate_realization(const SystemConfig& cfg, std::uint64_t seed);

/// Builds H (n_ue_antennas x n_bs_antennas) of one UE from explicit small-scale
/// coefficients kappa laid out [cluster][path].
CMatrix synthesize_channel(const UeLargeScale& ue, int n_ue_antennas, int n_bs_antennas, int n_paths,
                           std::span<const cplx> kappa);

/// Per-(mb, q, u) channel synthesis with the realization's steering vectors cached.
class ChannelSynthesizer {
public:
    ChannelSynthesizer(const NetworkRealization& real, int n_ue_antennas, int n_bs_antennas);

    /// H_{q,u} of megablock `mb`. kappa ~ CN(0,1) drawn from the stream
    /// (seed, mb, q, u, kSmallScale).
    CMatrix channel(int ue, int cb, int mb) const;

    /// Same, with caller-supplied kappa.
    CMatrix channel_with(int ue, std::span<const cplx> kappa) const;

    int n_ue_antennas() const { return n_ue_ant_; }
    int n_bs_antennas() const { return n_bs_ant_; }
    const NetworkRealization& realization() const { return *real_; }

private:
    struct PathTerm {
        double sigma;            // sqrt(nu_d 10^{-PL/10}) / sqrt(N_path)
        std::vector<cplx> a_ue;
        std::vector<cplx> a_bs;
    };

    const NetworkRealization* real_;
    int n_ue_ant_;
    int n_bs_ant_;
    std::vector<std::vector<PathTerm>> terms_;  // [ue][cluster * n_paths + path]
};

/// Draws the kappa vector used by ChannelSynthesizer::channel().
std::vector<cplx> draw_small_scale(std::uint64_t seed, int ue, int cb, int mb, int n_terms);

/// Writes a realization as "key = value" text with hex-float numbers, so a
/// reload is bit-exact.
std::string dump_realization(const NetworkRealization& real);
void save_realization(const NetworkRealization& real, const std::filesystem::path& path);

/// Inverse of dump_realization(). Throws std::runtime_error on malformed input.
NetworkRealization parse_realization(std::string_view text);
NetworkRealization load_realization(const std::filesystem::path& path);

}  // namespace mmsched
