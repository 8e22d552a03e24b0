#include "mmsched/channel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace mmsched {

double mean_path_loss_db(double distance_3d_m, const PathLossParams& p) {
    return p.intercept_db + 10.0 * p.exponent * std::log10(distance_3d_m);
}

double path_loss_db(double distance_3d_m, const PathLossParams& p, CounterRng& rng) {
    return mean_path_loss_db(distance_3d_m, p) + p.shadowing_std_db * rng.normal();
}

std::vector<cplx> array_response(int n, double phi_rad) {
    std::vector<cplx> a(static_cast<std::size_t>(n));
    const double step = std::numbers::pi * std::sin(phi_rad);
    for (int k = 0; k < n; ++k) a[k] = std::polar(1.0, step * k);
    return a;
}

std::vector<double> cluster_powers(int n, double decay) {
    std::vector<double> nu(static_cast<std::size_t>(n));
    double total = 0.0;
    for (int d = 0; d < n; ++d) {
        nu[d] = std::exp(-static_cast<double>(d + 1) / decay);
        total += nu[d];
    }
    for (auto& v : nu) v /= total;
    return nu;
}

NetworkRealization generate_realization(const SystemConfig& cfg, std::uint64_t seed) {
    constexpr double kHalfPi = std::numbers::pi / 2.0;
    const PathLossParams pl = PathLossParams::from(cfg);
    const double spread = cfg.angle_spread_deg * std::numbers::pi / 180.0;
    const double r1sq = cfg.exclusion_radius_m * cfg.exclusion_radius_m;
    const double r2sq = cfg.cell_radius_m * cfg.cell_radius_m;

    NetworkRealization real;
    real.seed = seed;
    real.bs_height_m = cfg.bs_height_m;
    real.n_clusters = cfg.n_clusters;
    real.n_paths = cfg.n_paths;
    real.ues.resize(static_cast<std::size_t>(cfg.n_ues));

    const auto nu = cluster_powers(cfg.n_clusters, cfg.cluster_decay);
    for (int u = 0; u < cfg.n_ues; ++u) {
        auto& ue = real.ues[u];
        const auto key = [&](DrawKind k) { return StreamKey{seed, 0, 0, 0, static_cast<std::uint64_t>(u), k}; };

        // 1 - uniform() lies in (0, 1], so r lies in (r_ex, r_cell].
        CounterRng pos(key(DrawKind::kPosition));
        const double r = std::sqrt(r1sq + (1.0 - pos.uniform()) * (r2sq - r1sq));
        const double theta = pos.uniform(-std::numbers::pi, std::numbers::pi);
        ue.position = {r * std::cos(theta), r * std::sin(theta)};
        ue.distance_3d_m = std::hypot(r, cfg.bs_height_m);

        CounterRng shadow(key(DrawKind::kShadowing));
        ue.path_loss_db = path_loss_db(ue.distance_3d_m, pl, shadow);
        ue.cluster_power = nu;

        CounterRng centers(key(DrawKind::kClusterAngles));
        CounterRng offsets(key(DrawKind::kPathOffsets));
        ue.aod_rad.assign(cfg.n_clusters, std::vector<double>(cfg.n_paths));
        ue.aoa_rad.assign(cfg.n_clusters, std::vector<double>(cfg.n_paths));
        for (int d = 0; d < cfg.n_clusters; ++d) {
            const double aod_c = centers.uniform(-kHalfPi, kHalfPi);
            const double aoa_c = centers.uniform(-kHalfPi, kHalfPi);
            for (int l = 0; l < cfg.n_paths; ++l) {
                ue.aod_rad[d][l] = std::clamp(aod_c + spread * offsets.normal(), -kHalfPi, kHalfPi);
                ue.aoa_rad[d][l] = std::clamp(aoa_c + spread * offsets.normal(), -kHalfPi, kHalfPi);
            }
        }
    }
    return real;
}

CMatrix synthesize_channel(const UeLargeScale& ue, int n_ue_antennas, int n_bs_antennas, int n_paths,
                           std::span<const cplx> kappa) {
    const auto n_clusters = ue.cluster_power.size();
    if (kappa.size() != n_clusters * static_cast<std::size_t>(n_paths)) {
        throw std::invalid_argument("synthesize_channel: kappa has the wrong length");
    }
    CMatrix h(n_ue_antennas, n_bs_antennas);
    const double large = std::pow(10.0, -0.1 * ue.path_loss_db);
    const double inv_sqrt_paths = 1.0 / std::sqrt(static_cast<double>(n_paths));
    const auto& k = kernels::active();
    for (std::size_t d = 0; d < n_clusters; ++d) {
        const double sigma = std::sqrt(ue.cluster_power[d] * large) * inv_sqrt_paths;
        for (int l = 0; l < n_paths; ++l) {
            const auto a_u = array_response(n_ue_antennas, ue.aoa_rad[d][l]);
            const auto a_b = array_response(n_bs_antennas, ue.aod_rad[d][l]);
            k.rank1_update(h.data.data(), h.rows, h.cols, sigma * kappa[d * n_paths + l], a_u.data(), a_b.data());
        }
    }
    return h;
}

ChannelSynthesizer::ChannelSynthesizer(const NetworkRealization& real, int n_ue_antennas, int n_bs_antennas)
    : real_(&real), n_ue_ant_(n_ue_antennas), n_bs_ant_(n_bs_antennas) {
    const double inv_sqrt_paths = 1.0 / std::sqrt(static_cast<double>(real.n_paths));
    terms_.resize(real.ues.size());
    for (std::size_t u = 0; u < real.ues.size(); ++u) {
        const auto& ue = real.ues[u];
        const double large = std::pow(10.0, -0.1 * ue.path_loss_db);
        for (int d = 0; d < real.n_clusters; ++d) {
            const double sigma = std::sqrt(ue.cluster_power[d] * large) * inv_sqrt_paths;
            for (int l = 0; l < real.n_paths; ++l) {
                terms_[u].push_back({sigma, array_response(n_ue_antennas, ue.aoa_rad[d][l]),
                                     array_response(n_bs_antennas, ue.aod_rad[d][l])});
            }
        }
    }
}

std::vector<cplx> draw_small_scale(std::uint64_t seed, int ue, int cb, int mb, int n_terms) {
    CounterRng rng(StreamKey{seed, 0, static_cast<std::uint64_t>(mb), static_cast<std::uint64_t>(cb),
                             static_cast<std::uint64_t>(ue), DrawKind::kSmallScale});
    std::vector<cplx> kappa(static_cast<std::size_t>(n_terms));
    for (auto& k : kappa) k = rng.complex_normal();
    return kappa;
}

CMatrix ChannelSynthesizer::channel(int ue, int cb, int mb) const {
    const auto kappa = draw_small_scale(real_->seed, ue, cb, mb, static_cast<int>(terms_[ue].size()));
    return channel_with(ue, kappa);
}

CMatrix ChannelSynthesizer::channel_with(int ue, std::span<const cplx> kappa) const {
    const auto& terms = terms_.at(ue);
    if (kappa.size() != terms.size()) throw std::invalid_argument("channel_with: kappa has the wrong length");
    CMatrix h(n_ue_ant_, n_bs_ant_);
    const auto& k = kernels::active();
    for (std::size_t i = 0; i < terms.size(); ++i) {
        k.rank1_update(h.data.data(), h.rows, h.cols, terms[i].sigma * kappa[i], terms[i].a_ue.data(),
                       terms[i].a_bs.data());
    }
    return h;
}

// ---------------------------------------------------------------------------
// Text dump. Doubles are written as hex floats so the reload is bit-exact.

namespace {

std::string hex_list(std::span<const double> v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i != 0) out += ' ';
        out += fmt::format("{:a}", v[i]);
    }
    return out;
}

double parse_hex(const std::string& tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw std::runtime_error("realization: bad number '" + tok + "'");
    return v;
}

class LineReader {
public:
    explicit LineReader(std::string_view text) : in_(std::string(text)) {}

    // Next non-comment line, split at " = ".
    std::pair<std::string, std::string> next() {
        std::string line;
        while (std::getline(in_, line)) {
            if (line.empty() || line[0] == '#') continue;
            const auto eq = line.find(" = ");
            if (eq == std::string::npos) throw std::runtime_error("realization: malformed line '" + line + "'");
            return {line.substr(0, eq), line.substr(eq + 3)};
        }
        throw std::runtime_error("realization: unexpected end of input");
    }

    std::string expect(std::string_view key) {
        auto [k, v] = next();
        if (k != key) throw std::runtime_error(fmt::format("realization: expected '{}', found '{}'", key, k));
        return v;
    }

    std::vector<double> expect_list(std::string_view key, std::size_t count) {
        std::istringstream ss(expect(key));
        std::vector<double> out;
        std::string tok;
        while (ss >> tok) out.push_back(parse_hex(tok));
        if (out.size() != count) {
            throw std::runtime_error(fmt::format("realization: '{}' has {} values, expected {}", key, out.size(), count));
        }
        return out;
    }

private:
    std::istringstream in_;
};

}  // namespace

std::string dump_realization(const NetworkRealization& real) {
    std::string out = "# mmsched network realization\n";
    out += "format = 1\n";
    out += fmt::format("seed = {}\n", real.seed);
    out += fmt::format("bs_height_m = {:a}\n", real.bs_height_m);
    out += fmt::format("n_clusters = {}\n", real.n_clusters);
    out += fmt::format("n_paths = {}\n", real.n_paths);
    out += fmt::format("n_ues = {}\n", real.ues.size());
    for (std::size_t u = 0; u < real.ues.size(); ++u) {
        const auto& ue = real.ues[u];
        out += fmt::format("ue = {}\n", u);
        out += fmt::format("position = {:a} {:a}\n", ue.position.x, ue.position.y);
        out += fmt::format("distance_3d_m = {:a}\n", ue.distance_3d_m);
        out += fmt::format("path_loss_db = {:a}\n", ue.path_loss_db);
        out += fmt::format("cluster_power = {}\n", hex_list(ue.cluster_power));
        std::vector<double> aod, aoa;
        for (const auto& c : ue.aod_rad) aod.insert(aod.end(), c.begin(), c.end());
        for (const auto& c : ue.aoa_rad) aoa.insert(aoa.end(), c.begin(), c.end());
        out += fmt::format("aod_rad = {}\n", hex_list(aod));
        out += fmt::format("aoa_rad = {}\n", hex_list(aoa));
    }
    return out;
}

NetworkRealization parse_realization(std::string_view text) {
    LineReader in(text);
    if (in.expect("format") != "1") throw std::runtime_error("realization: unsupported format version");
    NetworkRealization real;
    real.seed = std::stoull(in.expect("seed"));
    real.bs_height_m = parse_hex(in.expect("bs_height_m"));
    real.n_clusters = std::stoi(in.expect("n_clusters"));
    real.n_paths = std::stoi(in.expect("n_paths"));
    const int n_ues = std::stoi(in.expect("n_ues"));
    if (real.n_clusters < 1 || real.n_paths < 1 || n_ues < 1) throw std::runtime_error("realization: bad sizes");
    const auto n_terms = static_cast<std::size_t>(real.n_clusters) * real.n_paths;
    for (int u = 0; u < n_ues; ++u) {
        if (std::stoi(in.expect("ue")) != u) throw std::runtime_error("realization: UE records out of order");
        UeLargeScale ue;
        const auto pos = in.expect_list("position", 2);
        ue.position = {pos[0], pos[1]};
        ue.distance_3d_m = parse_hex(in.expect("distance_3d_m"));
        ue.path_loss_db = parse_hex(in.expect("path_loss_db"));
        ue.cluster_power = in.expect_list("cluster_power", real.n_clusters);
        const auto aod = in.expect_list("aod_rad", n_terms);
        const auto aoa = in.expect_list("aoa_rad", n_terms);
        for (int d = 0; d < real.n_clusters; ++d) {
            ue.aod_rad.emplace_back(aod.begin() + d * real.n_paths, aod.begin() + (d + 1) * real.n_paths);
            ue.aoa_rad.emplace_back(aoa.begin() + d * real.n_paths, aoa.begin() + (d + 1) * real.n_paths);
        }
        real.ues.push_back(std::move(ue));
    }
    return real;
}

void save_realization(const NetworkRealization& real, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << dump_realization(real);
}

NetworkRealization load_realization(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_realization(buf.str());
}

}  // namespace mmsched
