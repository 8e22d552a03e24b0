#include "mmsched/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

namespace mmsched {

double geometric_mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    double acc = 0.0;
    for (double v : values) {
        if (!(v > 0.0)) return 0.0;
        acc += std::log(v);
    }
    return std::exp(acc / static_cast<double>(values.size()));
}

std::uint64_t realization_seed(std::uint64_t master_seed, int index) {
    return StreamKey{master_seed, static_cast<std::uint64_t>(index), 0, 0, 0, DrawKind::kRealizationSeed}.digest();
}

Simulation::Simulation(const SystemConfig& cfg) : Simulation(cfg, rate_table_for(validate_config(cfg))) {}

Simulation::Simulation(const SystemConfig& cfg, RateTable table)
    : cfg_(validate_config(cfg)),
      bs_(design_codebook(cfg_.n_bs_antennas, cfg_.bs_codebook_bits, cfg_.rf_per_stream_bs)),
      ue_(design_codebook(cfg_.n_ue_antennas, cfg_.ue_codebook_bits, cfg_.rf_per_stream_ue)),
      table_(std::move(table)) {}

RealizationResult Simulation::run_realization(int index, std::uint64_t seed, const RunOptions& opts) const {
    return run_realization(generate_realization(cfg_, seed), index, opts);
}

namespace {

std::string join(std::span<const int> v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i != 0) out += ';';
        out += std::to_string(v[i]);
    }
    return out;
}

void append_solution_rows(std::string& out, int realization, int mb, const RateTensor& r, const RelaxedSolution& rel,
                          const FeasibleSolution& feas, std::span<const double> lambda_f, double obj_f) {
    out += fmt::format("{},{},{},summary,,,,,{:.12g},{:.12g},{:.6e},{}\n", kCsvSchemaVersion, realization, mb,
                       rel.objective, obj_f, rel.gap, rel.iterations);
    const int nq = r.n_cbs();
    for (int l = 0; l < r.n_beam_sets(); ++l) {
        if (rel.alpha[l] == 0.0 && feas.slots[l] == 0) continue;
        const auto beams = join(r.beam_set(l));
        out += fmt::format("{},{},{},alpha,{},,,,{:.12g},{:.12g},,\n", kCsvSchemaVersion, realization, mb, beams,
                           rel.alpha[l], feas.alpha(l));
        for (int t = r.tuple_begin(l); t < r.tuple_end(l); ++t) {
            for (int q = 0; q < nq; ++q) {
                const double xi = rel.xi[static_cast<std::size_t>(t) * nq + q];
                const double beta_rel = rel.alpha[l] > 0.0 ? xi / rel.alpha[l] : 0.0;
                const double beta_f = feas.slots[l] > 0 ? feas.beta(t, q) : 0.0;
                if (beta_rel == 0.0 && beta_f == 0.0) continue;
                out += fmt::format("{},{},{},beta,{},{},{},,{:.12g},{:.12g},,\n", kCsvSchemaVersion, realization, mb,
                                   beams, q, join(r.tuple(t)), beta_rel, beta_f);
            }
        }
    }
    for (std::size_t u = 0; u < lambda_f.size(); ++u) {
        out += fmt::format("{},{},{},ue,,,,{},{:.12g},{:.12g},,\n", kCsvSchemaVersion, realization, mb, u,
                           rel.lambda[u], lambda_f[u]);
    }
}

}  // namespace

std::string solution_csv_header() {
    return "schema_version,realization,mb,kind,beam_set,cb,tuple,ue,relaxed,feasible,fw_gap,iterations\n";
}

RealizationResult Simulation::run_realization(const NetworkRealization& real, int index, const RunOptions& opts) const {
    const SystemConfig& cfg = cfg_;
    const int nu = real.n_ues();
    const int nq = cfg.n_cbs_freq;
    const double bc = cfg.coherence_bw_hz;
    ChannelSynthesizer synth(real, cfg.n_ue_antennas, cfg.n_bs_antennas);
    SolverOptions sopts = SolverOptions::from(cfg);
    sopts.record_trace = opts.record_traces;

    RealizationResult res;
    res.index = index;
    res.seed = real.seed;
    res.throughput_feasible.assign(nu, 0.0);
    res.throughput_relaxed.assign(nu, 0.0);

    PfState pf = PfState::initial(nu, cfg.window, cfg.pf_floor_bps);
    AlignmentResult align;
    RateTensor tensor;
    UeChannels channels(nu, std::vector<CMatrix>(nq));
    double active_sum = 0.0;

    for (int mb = 0; mb < cfg.n_mbs; ++mb) {
        for (int u = 0; u < nu; ++u) {
            for (int q = 0; q < nq; ++q) channels[u][q] = synth.channel(u, q, mb);
        }
        if (mb == 0) {
            align = beam_align(channels, bs_, ue_);
            tensor = build_candidates(align, cfg, nq);
            res.n_distinct_beams = static_cast<int>(align.distinct_bs.size());
        }
        const auto eff = effective_channels(channels, align, bs_, ue_);
        precompute_rates(tensor, align, eff, cfg, table_);

        RelaxedSolution rel;
        try {
            rel = solve_relaxed(tensor, pf, bc, sopts);
        } catch (const SolverError& e) {
            throw SolverError(fmt::format("realization {} (seed {}), MB {}: {}", index, real.seed, mb, e.what()),
                              e.gap(), e.iterations());
        }
        const auto feas = round_feasible(tensor, rel.alpha, rel.xi, cfg.n_time_slots, cfg.n_freq_subch);
        const auto lambda_f = throughput(tensor, feas, bc);
        const double obj_f = pf_objective(lambda_f, pf);

        for (int u = 0; u < nu; ++u) {
            res.throughput_feasible[u] += lambda_f[u];
            res.throughput_relaxed[u] += rel.lambda[u];
        }
        active_sum += active_ues_per_prb(tensor, feas);
        const double scale = std::abs(rel.objective);
        res.max_mb_objective_gap = std::max(res.max_mb_objective_gap, (rel.objective - obj_f) / scale);
        res.max_solver_rel_gap = std::max(res.max_solver_rel_gap, rel.gap / scale);
        for (std::size_t i = 1; i < rel.objective_trace.size(); ++i) {
            if (rel.objective_trace[i] < rel.objective_trace[i - 1]) res.solver_traces_monotone = false;
        }
        if (opts.dump_solutions) append_solution_rows(res.solution_csv, index, mb, tensor, rel, feas, lambda_f, obj_f);
        if (opts.keep_mb_records) {
            res.mbs.push_back({mb, rel.objective, obj_f, rel.gap, rel.iterations, rel.lambda, lambda_f,
                               std::move(rel.objective_trace)});
        }
        pf = update_average(pf, lambda_f);
    }

    for (int u = 0; u < nu; ++u) {
        res.throughput_feasible[u] /= cfg.n_mbs;
        res.throughput_relaxed[u] /= cfg.n_mbs;
    }
    res.gm = geometric_mean(res.throughput_feasible);
    res.gm_relaxed = geometric_mean(res.throughput_relaxed);
    res.active_ues_per_prb = active_sum / cfg.n_mbs;
    return res;
}

// ---------------------------------------------------------------------------
// Campaigns.

MetricsRow run_point(const SystemConfig& cfg, int realizations, std::uint64_t master_seed, int workers,
                     const RunOptions& opts) {
    MetricsRow row;
    row.cfg = cfg;
    row.realizations = realizations;
    std::optional<Simulation> sim;
    try {
        sim.emplace(cfg);
        row.cfg = sim->config();
    } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
        return row;
    }

    std::vector<std::optional<RealizationResult>> results(realizations);
    std::vector<std::string> errors(realizations);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < realizations; i = next++) {
            try {
                results[i] = sim->run_realization(i, realization_seed(master_seed, i), opts);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const int n_threads = std::clamp(workers, 1, std::max(1, realizations));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    for (int i = 0; i < realizations; ++i) {
        if (!results[i]) {
            row.ok = false;
            if (row.error.empty()) row.error = errors[i];
            continue;
        }
        row.per_realization.push_back(std::move(*results[i]));
    }
    const auto& per = row.per_realization;
    const double n = static_cast<double>(per.size());
    if (per.empty()) return row;
    for (const auto& r : per) {
        row.gm_mean += r.gm / n;
        row.gm_relaxed_mean += r.gm_relaxed / n;
        row.active_ues_per_prb += r.active_ues_per_prb / n;
        row.distinct_beams_mean += r.n_distinct_beams / n;
        row.max_mb_objective_gap_pct = std::max(row.max_mb_objective_gap_pct, 100.0 * r.max_mb_objective_gap);
        row.max_solver_rel_gap = std::max(row.max_solver_rel_gap, r.max_solver_rel_gap);
    }
    if (per.size() > 1) {
        double ss = 0.0;
        for (const auto& r : per) ss += (r.gm - row.gm_mean) * (r.gm - row.gm_mean);
        row.gm_stderr = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    row.gap_pct = row.gm_relaxed_mean > 0.0 ? 100.0 * (row.gm_relaxed_mean - row.gm_mean) / row.gm_relaxed_mean : 0.0;
    return row;
}

namespace {

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        auto item = s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string_view::npos) out.emplace_back(item.substr(b, e - b + 1));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

CampaignSpec CampaignSpec::parse(std::string_view text) {
    KeyValues kv = parse_key_values(text);
    CampaignSpec spec;
    spec.base = SystemConfig::desk();
    if (auto it = kv.find("profile"); it != kv.end()) {
        spec.base = profile_config(it->second);
        kv.erase(it);
    }
    if (auto it = kv.find("per_realization_rows"); it != kv.end()) {
        spec.per_realization_rows = it->second == "true" || it->second == "1";
        kv.erase(it);
    }
    KeyValues plain;
    for (const auto& [key, value] : kv) {
        if (key.rfind("sweep.", 0) == 0) {
            const std::string axis = key.substr(6);
            if (!is_config_key(axis)) throw ConfigError(key, "unknown sweep axis");
            auto values = split_list(value);
            if (values.empty()) throw ConfigError(key, "sweep axis has no values");
            spec.axes.emplace_back(axis, std::move(values));
        } else {
            plain[key] = value;
        }
    }
    // Axes follow their order in the file.
    std::vector<std::string> order;
    std::istringstream lines{std::string(text)};
    for (std::string line; std::getline(lines, line);) {
        const auto b = line.find_first_not_of(" \t");
        const auto eq = line.find('=');
        if (b == std::string::npos || eq == std::string::npos || line.compare(b, 6, "sweep.") != 0) continue;
        auto key = line.substr(b + 6, eq - b - 6);
        key.erase(key.find_last_not_of(" \t") + 1);
        if (std::find(order.begin(), order.end(), key) == order.end()) order.push_back(key);
    }
    std::stable_sort(spec.axes.begin(), spec.axes.end(), [&](const auto& a, const auto& b) {
        return std::find(order.begin(), order.end(), a.first) < std::find(order.begin(), order.end(), b.first);
    });
    spec.base = apply_overrides(spec.base, plain);
    spec.realizations = spec.base.realizations;
    spec.master_seed = spec.base.seed;
    return spec;
}

CampaignSpec CampaignSpec::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("campaign", "cannot open '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::vector<MetricsRow> run_campaign(const CampaignSpec& spec, const CampaignOptions& opts) {
    std::size_t total = 1;
    for (const auto& axis : spec.axes) total *= axis.second.size();
    std::vector<MetricsRow> rows;
    for (std::size_t p = 0; p < total; ++p) {
        // Row-major decode: the last axis varies fastest.
        std::vector<std::pair<std::string, std::string>> coords(spec.axes.size());
        std::size_t rem = p;
        for (std::size_t a = spec.axes.size(); a-- > 0;) {
            const auto& values = spec.axes[a].second;
            coords[a] = {spec.axes[a].first, values[rem % values.size()]};
            rem /= values.size();
        }
        KeyValues kv;
        for (const auto& [k, v] : coords) kv[k] = v;
        if (kv.contains("rf_per_stream_ue") && !kv.contains("n_ue_rf")) kv["n_ue_rf"] = kv["rf_per_stream_ue"];

        MetricsRow row;
        try {
            row = run_point(apply_overrides(spec.base, kv), spec.realizations, spec.master_seed, opts.workers, opts.run);
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
            row.cfg = spec.base;
        }
        row.point = static_cast<int>(p);
        row.coordinates = std::move(coords);
        if (opts.on_row) opts.on_row(row);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string metrics_csv_header() {
    return "schema_version,row_kind,point,realization,coordinates,n_ues,n_bs_antennas,n_ue_antennas,n_bs_rf,"
           "rf_per_stream_bs,rf_per_stream_ue,max_streams,bs_codebook_bits,ue_codebook_bits,n_cbs_freq,n_mbs,"
           "realizations,gm_bps,gm_relaxed_bps,gm_stderr_bps,gap_pct,active_ues_per_prb,distinct_bs_beams,"
           "max_mb_objective_gap_pct,max_solver_rel_gap,status,error\n";
}

namespace {

std::string csv_escape(std::string s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

std::string config_columns(const SystemConfig& c) {
    return fmt::format("{},{},{},{},{},{},{},{},{},{},{}", c.n_ues, c.n_bs_antennas, c.n_ue_antennas, c.n_bs_rf,
                       c.rf_per_stream_bs, c.rf_per_stream_ue, c.n_bs_rf / std::max(1, c.rf_per_stream_bs),
                       c.bs_codebook_bits, c.ue_codebook_bits, c.n_cbs_freq, c.n_mbs);
}

}  // namespace

std::string metrics_csv_rows(const MetricsRow& row, bool per_realization) {
    std::string coords;
    for (const auto& [k, v] : row.coordinates) {
        if (!coords.empty()) coords += ';';
        coords += k + "=" + v;
    }
    coords = csv_escape(coords);
    const std::string cfg_cols = config_columns(row.cfg);
    std::string out = fmt::format(
        "{},aggregate,{},,{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.4f},{:.6f},{:.3e},{},{}\n", kCsvSchemaVersion,
        row.point, coords, cfg_cols, row.per_realization.size(), row.gm_mean, row.gm_relaxed_mean, row.gm_stderr,
        row.gap_pct, row.active_ues_per_prb, row.distinct_beams_mean, row.max_mb_objective_gap_pct,
        row.max_solver_rel_gap, row.ok ? "ok" : "error", csv_escape(row.error));
    if (per_realization) {
        for (const auto& r : row.per_realization) {
            const double gap = r.gm_relaxed > 0.0 ? 100.0 * (r.gm_relaxed - r.gm) / r.gm_relaxed : 0.0;
            out += fmt::format("{},realization,{},{},{},{},1,{:.6f},{:.6f},,{:.6f},{:.6f},{},{:.6f},{:.3e},ok,\n",
                               kCsvSchemaVersion, row.point, r.index, coords, cfg_cols, r.gm, r.gm_relaxed, gap,
                               r.active_ues_per_prb, r.n_distinct_beams, 100.0 * r.max_mb_objective_gap,
                               r.max_solver_rel_gap);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tiny instances for the exhaustive oracle.

TinyInstance make_tiny_instance(std::uint64_t seed) {
    CounterRng rng(StreamKey{seed, 0, 0, 0, 0, DrawKind::kTest});
    auto pick = [&](int n) { return static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n)); };

    const int n_ues = 2 + pick(2);
    const int n_beams = 1 + pick(std::min(n_ues, 3));
    // |L| <= 4: three beams only with single-stream beam sets.
    const int max_streams = n_beams == 3 ? 1 : 1 + pick(2);

    AlignmentResult align;
    align.bs_beam.resize(n_ues);
    for (int u = 0; u < n_ues; ++u) align.bs_beam[u] = u < n_beams ? u : pick(n_beams);
    align.ue_beam.assign(n_ues, 0);
    align.metric.assign(n_ues, 1.0);
    for (int b = 0; b < n_beams; ++b) align.distinct_bs.push_back(b);

    SystemConfig cfg;
    cfg.n_ues = n_ues;
    cfg.max_streams = max_streams;
    TinyInstance inst;
    inst.rates = build_candidates(align, cfg, 1);

    const RateTable cqi = RateTable::cqi();
    const auto& table = cqi.rows();
    for (int t = 0; t < inst.rates.n_tuples(); ++t) {
        for (std::size_t j = 0; j < inst.rates.tuple(t).size(); ++j) {
            const int k = pick(static_cast<int>(table.size()) + 2);
            inst.rates.rate(t, 0, static_cast<int>(j)) = k < 2 ? 0.0 : table[k - 2].efficiency;
        }
    }
    inst.pf.window = 10;
    inst.pf.avg_throughput.resize(n_ues);
    for (auto& r : inst.pf.avg_throughput) r = rng.uniform(1e4, 1e6);
    inst.coherence_bw_hz = 1e6;
    inst.n_time_slots = pick(2) == 0 ? 2 : 4;
    inst.n_freq_subch = 2 + pick(2);
    return inst;
}

SandwichCheck sandwich_check(const TinyInstance& inst, double rel_tol) {
    SandwichCheck out;
    const auto rel = solve_relaxed(inst.rates, inst.pf, inst.coherence_bw_hz, {rel_tol, 100000, false});
    const auto feas = round_feasible(inst.rates, rel.alpha, rel.xi, inst.n_time_slots, inst.n_freq_subch);
    out.solution_feasible = is_feasible(inst.rates, feas);
    out.feasible = pf_objective(throughput(inst.rates, feas, inst.coherence_bw_hz), inst.pf);
    const auto exact =
        brute_force_schedule(inst.rates, inst.pf, inst.coherence_bw_hz, inst.n_time_slots, inst.n_freq_subch);
    out.exact = exact.objective;
    out.relaxed = rel.objective;
    out.relaxed_gap = rel.gap;
    // The two objectives on the left are sums of logs of the same schedule
    // class; allow only floating-point summation noise.
    out.lower_ok = out.feasible <= out.exact + 1e-12 * std::abs(out.exact);
    out.upper_ok = out.exact <= out.relaxed + rel_tol * std::abs(out.relaxed);
    return out;
}

}  // namespace mmsched
