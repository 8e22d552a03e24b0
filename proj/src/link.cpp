#include "mmsched/link.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace mmsched {

namespace {

// LTE 4-bit CQI table, efficiencies in bits/s/Hz (CQI 1..15).
constexpr double kCqiEfficiency[] = {0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141,
                                     2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547};

}  // namespace

RateTable::RateTable(std::vector<Row> rows) : rows_(std::move(rows)) {
    if (rows_.empty()) throw std::invalid_argument("rate table is empty");
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        if (!(rows_[i].efficiency > 0.0) || !std::isfinite(rows_[i].threshold_linear) ||
            rows_[i].threshold_linear < 0.0) {
            throw std::invalid_argument(fmt::format("rate table row {}: invalid values", i + 1));
        }
        if (i > 0 && !(rows_[i].threshold_linear > rows_[i - 1].threshold_linear)) {
            throw std::invalid_argument(fmt::format("rate table row {}: thresholds must strictly increase", i + 1));
        }
        if (i > 0 && !(rows_[i].efficiency > rows_[i - 1].efficiency)) {
            throw std::invalid_argument(fmt::format("rate table row {}: efficiencies must strictly increase", i + 1));
        }
    }
}

double RateTable::rate(double sinr_linear) const {
    const auto it = std::upper_bound(rows_.begin(), rows_.end(), sinr_linear,
                                     [](double s, const Row& r) { return s < r.threshold_linear; });
    return it == rows_.begin() ? 0.0 : std::prev(it)->efficiency;
}

RateTable RateTable::cqi() {
    std::vector<Row> rows;
    for (double eff : kCqiEfficiency) rows.push_back({std::exp2(eff) - 1.0, eff});
    return RateTable(std::move(rows));
}

RateTable RateTable::parse_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("rate table: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "threshold_db,efficiency") {
        throw std::invalid_argument("rate table: header must be 'threshold_db,efficiency'");
    }
    std::vector<Row> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::invalid_argument(fmt::format("rate table line {}: expected 2 columns", line_no));
        try {
            std::size_t used_a = 0, used_b = 0;
            const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
            const double thr_db = std::stod(a, &used_a);
            const double eff = std::stod(b, &used_b);
            if (used_a != a.size() || used_b != b.size()) throw std::invalid_argument("trailing characters");
            rows.push_back({db_to_linear(thr_db), eff});
        } catch (const std::logic_error&) {
            throw std::invalid_argument(fmt::format("rate table line {}: cannot parse '{}'", line_no, line));
        }
    }
    return RateTable(std::move(rows));
}

RateTable RateTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read rate table " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str());
}

std::string RateTable::to_csv() const {
    std::string out = "threshold_db,efficiency\n";
    for (const auto& r : rows_) out += fmt::format("{},{}\n", linear_to_db(r.threshold_linear), r.efficiency);
    return out;
}

RateTable rate_table_for(const SystemConfig& cfg) {
    return cfg.rate_table_path.empty() ? RateTable::cqi() : RateTable::load(cfg.rate_table_path);
}

double noise_power_prb(double prb_bw_hz, double noise_psd_w_per_hz) { return prb_bw_hz * noise_psd_w_per_hz; }

double sinr(const EffectiveChannelSet& eff, const SinrContext& ctx, int u) {
    const auto pos = std::find(ctx.tuple.begin(), ctx.tuple.end(), u);
    if (pos == ctx.tuple.end()) return 0.0;
    const double p = ctx.power_per_prb_beam();
    double signal = 0.0;
    double interference = 0.0;
    for (std::size_t j = 0; j < ctx.tuple.size(); ++j) {
        const double g = std::norm(eff.by_beam(ctx.q, u, ctx.beam_slots[j])) * p;
        if (ctx.tuple[j] == u) {
            signal = g;
        } else {
            interference += g;
        }
    }
    const double denom = interference + ctx.noise_power_prb_w;
    if (denom == 0.0) return signal > 0.0 ? INFINITY : 0.0;
    return signal / denom;
}

}  // namespace mmsched
