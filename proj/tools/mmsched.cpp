// mmsched: command-line driver for single runs, sweeps, the tiny-instance
// oracle check and beam-pattern export.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "mmsched/harness.hpp"
#include "mmsched/kernels.hpp"

using namespace mmsched;

namespace {

struct Common {
    std::string config;
    std::string profile;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<int> realizations;
    int workers = 1;
    std::string output = "-";
};

void add_common(CLI::App* app, Common& c, bool with_config = true) {
    if (with_config) {
        app->add_option("-c,--config", c.config, "Config file (key = value); defaults to $MMSCHED_CONFIG");
        app->add_option("--set", c.sets, "Override one config key, as key=value (repeatable)");
    }
    app->add_option("-p,--profile", c.profile, "Base profile")->check(CLI::IsMember({"desk", "table1"}));
    app->add_option("-s,--seed", c.seed, "Master seed");
    app->add_option("-z,--realizations", c.realizations, "Number of realizations")->check(CLI::PositiveNumber);
    app->add_option("-j,--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
    app->add_option("-o,--output", c.output, "Output path, '-' for stdout");
}

KeyValues parse_sets(const std::vector<std::string>& sets) {
    KeyValues kv;
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(s, "--set expects key=value");
        auto trim = [](std::string v) {
            const auto b = v.find_first_not_of(" \t");
            const auto e = v.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
        };
        kv[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
    }
    return kv;
}

SystemConfig resolve_config(const Common& c) {
    SystemConfig cfg = c.profile.empty() ? SystemConfig::desk() : profile_config(c.profile);
    std::filesystem::path path = c.config.empty() ? default_config_path() : std::filesystem::path(c.config);
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("config", "cannot open '" + path.string() + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        KeyValues kv = parse_key_values(buf.str());
        if (auto it = kv.find("profile"); it != kv.end()) {
            if (c.profile.empty()) cfg = profile_config(it->second);
            kv.erase(it);
        }
        cfg = apply_overrides(cfg, kv);
    }
    cfg = apply_overrides(cfg, parse_sets(c.sets));
    if (c.seed) cfg.seed = *c.seed;
    if (c.realizations) cfg.realizations = *c.realizations;
    return validate_config(cfg);
}

class Output {
public:
    explicit Output(const std::string& path) {
        if (path != "-") {
            file_.open(path, std::ios::binary);
            if (!file_) throw std::runtime_error("cannot write '" + path + "'");
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

int cmd_run(const Common& c, bool per_realization, const std::string& dump_path) {
    const SystemConfig cfg = resolve_config(c);
    RunOptions opts;
    opts.dump_solutions = !dump_path.empty();
    const MetricsRow row = run_point(cfg, cfg.realizations, cfg.seed, c.workers, opts);
    Output out(c.output);
    out.stream() << metrics_csv_header() << metrics_csv_rows(row, per_realization);
    if (opts.dump_solutions) {
        Output dump(dump_path);
        dump.stream() << solution_csv_header();
        for (const auto& r : row.per_realization) dump.stream() << r.solution_csv;
    }
    if (!row.ok) {
        std::cerr << "error: " << row.error << '\n';
        return 1;
    }
    return 0;
}

int cmd_sweep(const Common& c, const std::string& spec_path, bool per_realization) {
    std::ifstream in(spec_path);
    if (!in) throw ConfigError("campaign", "cannot open '" + spec_path + "'");
    std::stringstream buf;
    if (!c.profile.empty()) buf << "profile = " << c.profile << '\n';
    buf << in.rdbuf();
    CampaignSpec spec = CampaignSpec::parse(buf.str());
    if (c.seed) spec.master_seed = *c.seed;
    if (c.realizations) spec.realizations = *c.realizations;
    per_realization = per_realization || spec.per_realization_rows;

    Output out(c.output);
    out.stream() << metrics_csv_header();
    int failures = 0;
    CampaignOptions opts;
    opts.workers = c.workers;
    opts.on_row = [&](const MetricsRow& row) {
        out.stream() << metrics_csv_rows(row, per_realization) << std::flush;
        if (!row.ok) {
            ++failures;
            std::cerr << fmt::format("point {}: {}\n", row.point, row.error);
        }
    };
    run_campaign(spec, opts);
    return failures == 0 ? 0 : 1;
}

int cmd_oracle(int instances, std::uint64_t seed, double rel_tol, bool verbose) {
    int violations = 0;
    for (int i = 0; i < instances; ++i) {
        const auto inst = make_tiny_instance(hash_combine(seed, static_cast<std::uint64_t>(i)));
        const auto chk = sandwich_check(inst, rel_tol);
        const bool ok = chk.lower_ok && chk.upper_ok && chk.solution_feasible;
        if (!ok) ++violations;
        if (verbose || !ok) {
            std::cout << fmt::format("{:4d} U={} |L|={} NT={} NF={}  alg1={:.12f} exact={:.12f} relaxed={:.12f}  {}\n", i,
                                     inst.rates.n_ues(), inst.rates.n_beam_sets(), inst.n_time_slots,
                                     inst.n_freq_subch, chk.feasible, chk.exact, chk.relaxed, ok ? "ok" : "VIOLATION");
        }
    }
    std::cout << fmt::format("{} instances, {} violations\n", instances, violations);
    return violations == 0 ? 0 : 1;
}

int cmd_patterns(const Common& c, const std::string& side) {
    const SystemConfig cfg = resolve_config(c);
    Output out(c.output);
    bool first = true;
    auto emit = [&](const Codebook& cb, std::string_view name) {
        std::string csv = beam_pattern_csv(cb, name);
        if (!first) csv.erase(0, csv.find('\n') + 1);
        first = false;
        out.stream() << csv;
    };
    if (side == "bs" || side == "both") {
        emit(design_codebook(cfg.n_bs_antennas, cfg.bs_codebook_bits, cfg.rf_per_stream_bs), "bs");
    }
    if (side == "ue" || side == "both") {
        emit(design_codebook(cfg.n_ue_antennas, cfg.ue_codebook_bits, cfg.rf_per_stream_ue), "ue");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mmWave multi-user PF scheduling simulator"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string simd;
    app.add_option("--simd", simd, "Kernel backend (default: best available)")
        ->check(CLI::IsMember({"scalar", "avx2"}));

    Common run_opts;
    bool run_per_real = false;
    std::string dump_path;
    auto* run = app.add_subcommand("run", "Simulate one configuration and print its metrics row");
    add_common(run, run_opts);
    run->add_flag("--per-realization", run_per_real, "Also emit one row per realization");
    run->add_option("--dump-solutions", dump_path, "Write per-MB relaxed/feasible allocations to this CSV");

    Common sweep_opts;
    std::string spec_path;
    bool sweep_per_real = false;
    auto* sweep = app.add_subcommand("sweep", "Run every point of a campaign file");
    sweep->add_option("campaign", spec_path, "Campaign file")->required()->check(CLI::ExistingFile);
    add_common(sweep, sweep_opts, false);
    sweep->add_flag("--per-realization", sweep_per_real, "Also emit one row per realization");

    int instances = 50;
    std::uint64_t oracle_seed = 1;
    double rel_tol = 1e-6;
    bool verbose = false;
    auto* oracle = app.add_subcommand("oracle-check", "Compare rounding, brute force and relaxation on tiny instances");
    oracle->add_option("-n,--instances", instances, "Number of random instances")->check(CLI::PositiveNumber);
    oracle->add_option("-s,--seed", oracle_seed, "Instance seed");
    oracle->add_option("--rel-tol", rel_tol, "Relaxed solver tolerance")->check(CLI::PositiveNumber);
    oracle->add_flag("-v,--verbose", verbose, "Print every instance");

    Common pat_opts;
    std::string side = "both";
    auto* patterns = app.add_subcommand("patterns", "Export codebook gain patterns as CSV");
    add_common(patterns, pat_opts);
    patterns->add_option("--side", side, "Which codebook")->check(CLI::IsMember({"bs", "ue", "both"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (simd == "scalar") {
            kernels::select(kernels::Backend::kScalar);
        } else if (simd == "avx2") {
            if (!kernels::cpu_has_avx2()) throw std::runtime_error("AVX2 kernels are not available on this CPU");
            kernels::select(kernels::Backend::kAvx2);
        }
        if (*run) return cmd_run(run_opts, run_per_real, dump_path);
        if (*sweep) return cmd_sweep(sweep_opts, spec_path, sweep_per_real);
        if (*oracle) return cmd_oracle(instances, oracle_seed, rel_tol, verbose);
        if (*patterns) return cmd_patterns(pat_opts, side);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
