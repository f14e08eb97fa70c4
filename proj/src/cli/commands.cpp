#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <iostream>

#include "divsand/cli.hpp"
#include "divsand/dsgf.hpp"
#include "divsand/errors.hpp"
#include "divsand/sandpile.hpp"

namespace divsand::cli {

namespace {

namespace fs = std::filesystem;

struct Flags {
    std::string config;
    std::vector<std::string> set;
    std::string dim, n, seed, replicates, tol, max_rounds, epsilon, cutoff, out, threads, method,
        psd_repair, scaling;
    bool csv = false;
    bool brute_force = false;
    std::string input;
};

std::vector<std::string> coord_header(int dim) {
    std::vector<std::string> h;
    for (int k = 1; k <= dim; ++k) h.push_back("z" + std::to_string(k));
    return h;
}

std::string tagged(const std::string& stem, int n, long r, const std::string& ext) {
    return stem + "_n" + std::to_string(n) + "_r" + std::to_string(r) + ext;
}

MonteCarloOptions mc_options(const RunConfig& cfg) { return {cfg.psd_repair, cfg.threads}; }

int cmd_sample_sigma(const RunConfig& cfg, const Flags& flags, std::ostream& out) {
    const long m = cfg.replicates.value_or(1);
    std::optional<CsvWriter> csv;
    if (flags.csv) {
        auto header = std::vector<std::string>{"n", "replicate", "index"};
        for (const auto& h : coord_header(cfg.dim)) header.push_back(h);
        header.push_back("value");
        csv.emplace(cfg.out_dir / "sigma.csv", header);
    }
    for (int n : cfg.sides) {
        const TorusGrid grid(cfg.dim, n);
        const SigmaSampler sampler(cfg.kernel, grid, SamplerOptions{cfg.psd_repair});
        for (long r = 0; r < m; ++r) {
            const ScalarField sigma = sampler.sample(RngStream{cfg.seed, static_cast<std::uint64_t>(r)});
            write_dsgf(cfg.out_dir / tagged("sigma", n, r, ".dsgf"), sigma);
            if (csv) {
                for_each_site(grid, [&](std::size_t idx, const Coord& z) {
                    std::vector<std::string> cells{std::to_string(n), std::to_string(r),
                                                   std::to_string(idx)};
                    for (int k = 0; k < cfg.dim; ++k) cells.push_back(std::to_string(z[k]));
                    cells.push_back(format_real(sigma[idx]));
                    csv->row(cells);
                });
            }
        }
        out << "sample-sigma n=" << n << " replicates=" << m
            << " clipped_modes=" << sampler.clipped_modes() << '\n';
    }
    return 0;
}

int cmd_stabilize(const RunConfig& cfg, std::ostream& out) {
    const long m = cfg.replicates.value_or(1);
    CsvWriter summary(cfg.out_dir / "summary.csv",
                      {"n", "replicate", "method", "rounds", "residual", "min_u", "max_u"});
    std::optional<CsvWriter> disc;
    if (cfg.method == "both") {
        disc.emplace(cfg.out_dir / "discrepancy.csv",
                     std::vector<std::string>{"n", "replicate", "max_abs_discrepancy"});
    }
    for (int n : cfg.sides) {
        const TorusGrid grid(cfg.dim, n);
        const SigmaSampler sampler(cfg.kernel, grid, SamplerOptions{cfg.psd_repair});
        for (long r = 0; r < m; ++r) {
            const SandpileConfig sc = initial_configuration(
                sampler.sample(RngStream{cfg.seed, static_cast<std::uint64_t>(r)}));
            std::vector<std::pair<std::string, OdometerResult>> results;
            if (cfg.method != "spectral") {
                results.emplace_back("toppling", stabilize_toppling(sc, cfg.tol, cfg.max_rounds));
            }
            if (cfg.method != "toppling") results.emplace_back("spectral", odometer_spectral(sc));
            for (const auto& [name, res] : results) {
                write_dsgf(cfg.out_dir / tagged("odometer_" + name, n, r, ".dsgf"), res.u);
                summary.row({std::to_string(n), std::to_string(r), name, std::to_string(res.rounds),
                             format_real(res.residual), format_real(res.u.min()),
                             format_real(res.u.max())});
            }
            if (disc) {
                double gap = 0.0;
                const auto& a = results[0].second.u;
                const auto& b = results[1].second.u;
                for (std::size_t i = 0; i < grid.total(); ++i) gap = std::max(gap, std::abs(a[i] - b[i]));
                disc->row({std::to_string(n), std::to_string(r), format_real(gap)});
                out << "n=" << n << " replicate=" << r << " max_abs_discrepancy=" << format_real(gap)
                    << '\n';
            }
        }
    }
    return 0;
}

int cmd_validate_kernel(const RunConfig& cfg, const Flags& flags, std::ostream& out,
                        std::ostream& err) {
    CsvWriter csv(cfg.out_dir / "psd_report.csv",
                  {"n", "kernel", "is_valid", "valid_on_zero_mean", "min_multiplier",
                   "nonpositive_modes", "max_asymmetry", "offending_frequency",
                   "min_eigenvalue_bruteforce"});
    bool all_valid = true;
    for (int n : cfg.sides) {
        const TorusGrid grid(cfg.dim, n);
        const PSDReport rep = validate(cfg.kernel, grid, flags.brute_force);
        const std::string offending =
            rep.offending_frequency ? format_coord(*rep.offending_frequency, cfg.dim) : "";
        const std::string eig =
            rep.min_eigenvalue_bruteforce ? format_real(*rep.min_eigenvalue_bruteforce) : "";
        csv.row({std::to_string(n), kernel_name(cfg.kernel), rep.is_valid ? "true" : "false",
                 rep.valid_on_zero_mean ? "true" : "false", format_real(rep.min_multiplier),
                 std::to_string(rep.nonpositive_modes), format_real(rep.max_asymmetry), offending,
                 eig});
        out << "n=" << n << " is_valid=" << (rep.is_valid ? "true" : "false")
            << " min_multiplier=" << format_real(rep.min_multiplier);
        if (!offending.empty()) out << " offending_frequency=" << offending;
        if (!eig.empty()) out << " min_eigenvalue_bruteforce=" << eig;
        out << '\n';
        if (!rep.is_valid) {
            all_valid = false;
            err << "error: " << kernel_name(cfg.kernel) << " is not a valid covariance at n=" << n
                << ", offending frequency " << offending << '\n';
        }
    }
    return all_valid ? 0 : 1;
}

int cmd_variance_convergence(const RunConfig& cfg, std::ostream& out) {
    const auto rows = convergence_sweep(cfg.test_function, cfg.kernel, cfg.scaling, cfg.sides);
    CsvWriter csv(cfg.out_dir / "sweep.csv", {"n", "finite_n", "limit", "gap"});
    for (const auto& r : rows) {
        csv.row({std::to_string(r.n), format_real(r.finite_n), format_real(r.limit), format_real(r.gap)});
        out << "n=" << r.n << " finite_n=" << format_real(r.finite_n)
            << " limit=" << format_real(r.limit) << " gap=" << format_real(r.gap) << '\n';
    }
    return 0;
}

int cmd_monte_carlo(const RunConfig& cfg, std::ostream& out) {
    const long m = cfg.replicates.value_or(1000);
    CsvWriter csv(cfg.out_dir / "monte_carlo.csv",
                  {"n", "finite_n", "limit", "mc_mean", "mc_var", "mc_stderr", "mc_mean_stderr",
                   "skewness", "excess_kurtosis", "replicates"});
    for (int n : cfg.sides) {
        const TorusGrid grid(cfg.dim, n);
        const VarianceReport r = monte_carlo_pairing(cfg.kernel, grid, cfg.test_function,
                                                     cfg.scaling, m, cfg.seed, mc_options(cfg));
        csv.row({std::to_string(r.n), format_real(r.finite_n), format_real(r.limit),
                 format_real(r.mc_mean), format_real(r.mc_var), format_real(r.mc_stderr),
                 format_real(r.mc_mean_stderr), format_real(r.skewness),
                 format_real(r.excess_kurtosis), std::to_string(r.replicates)});
        out << "n=" << n << " mc_var=" << format_real(r.mc_var) << " +- "
            << format_real(r.mc_stderr) << " finite_n=" << format_real(r.finite_n)
            << " limit=" << format_real(r.limit) << '\n';
    }
    return 0;
}

int cmd_tightness(const RunConfig& cfg, std::ostream& out) {
    if (cfg.scaling != ScalingMode::Standard) {
        throw ValidationError("tightness proxy is defined for run.scaling = standard");
    }
    const long m = cfg.replicates.value_or(200);
    const double eps = cfg.epsilon.value_or(default_epsilon(cfg.dim));
    CsvWriter csv(cfg.out_dir / "tightness.csv",
                  {"n", "epsilon", "cutoff", "mean", "stderr_mean", "max_tail_bound",
                   "max_tail_ratio", "replicates"});
    for (int n : cfg.sides) {
        const TightnessRow r = tightness_proxy(cfg.kernel, cfg.dim, n, m, cfg.seed, eps, cfg.cutoff,
                                               cfg.sobolev, mc_options(cfg));
        csv.row({std::to_string(r.n), format_real(eps), std::to_string(cfg.cutoff),
                 format_real(r.mean), format_real(r.stderr_mean), format_real(r.max_tail_bound),
                 format_real(r.max_tail_ratio), std::to_string(r.replicates)});
        out << "n=" << n << " mean=" << format_real(r.mean)
            << " max_tail_ratio=" << format_real(r.max_tail_ratio) << '\n';
    }
    return 0;
}

int cmd_render(const RunConfig& cfg, const Flags& flags, std::ostream& out) {
    std::optional<ScalarField> field;
    std::size_t clipped = 0;
    std::string source;
    if (!flags.input.empty()) {
        field = read_dsgf(fs::path(flags.input));
        source = flags.input;
    } else {
        if (cfg.dim != 2) throw ValidationError("render needs run.dim = 2");
        if (cfg.sides.size() != 1) throw ValidationError("render takes a single run.n");
        const TorusGrid grid(2, cfg.sides.front());
        const SigmaSampler sampler(cfg.kernel, grid, SamplerOptions{cfg.psd_repair});
        clipped = sampler.clipped_modes();
        const OdometerResult odo =
            odometer_spectral(initial_configuration(sampler.sample(RngStream{cfg.seed, 0})));
        field = odo.u;
        source = "spectral odometer";
        write_dsgf(cfg.out_dir / "odometer.dsgf", *field);
    }
    const PgmBounds b = write_pgm16(cfg.out_dir / "odometer.pgm", *field);
    std::ofstream side(cfg.out_dir / "odometer.txt");
    side << "source = " << source << '\n'
         << "kernel = " << kernel_name(cfg.kernel) << '\n'
         << "n = " << field->grid().side() << '\n'
         << "seed = " << cfg.seed << '\n'
         << "min = " << format_real(b.min) << '\n'
         << "max = " << format_real(b.max) << '\n'
         << "clipped_modes = " << clipped << '\n';
    if (!side) throw ValidationError("cannot write render sidecar");
    out << "render " << (cfg.out_dir / "odometer.pgm").string() << " min=" << format_real(b.min)
        << " max=" << format_real(b.max) << " clipped_modes=" << clipped << '\n';
    return 0;
}

Settings collect_settings(const Flags& f) {
    Settings raw;
    if (!f.config.empty()) raw = read_settings_file(f.config);
    for (const std::string& kv : f.set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ValidationError("--set expects key=value, got '" + kv + "'");
        }
        raw[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    Settings s = normalize_settings(raw);
    const std::pair<const char*, const std::string*> direct[] = {
        {"run.dim", &f.dim},         {"run.n", &f.n},
        {"run.seed", &f.seed},       {"run.replicates", &f.replicates},
        {"run.tol", &f.tol},         {"run.max_rounds", &f.max_rounds},
        {"run.epsilon", &f.epsilon}, {"run.cutoff", &f.cutoff},
        {"run.out_dir", &f.out},     {"run.threads", &f.threads},
        {"run.method", &f.method},   {"run.psd_repair", &f.psd_repair},
        {"run.scaling", &f.scaling},
    };
    for (const auto& [key, value] : direct) {
        if (!value->empty()) s[key] = *value;
    }
    return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Divisible sandpiles on discrete tori with Gaussian initial weights", "divsand"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.set_version_flag("--version", kVersion);

    Flags f;
    app.add_option("--config", f.config, "flat key=value configuration file");
    app.add_option("--set", f.set, "override a configuration key (key=value), repeatable");
    app.add_option("--dim", f.dim, "torus dimension d");
    app.add_option("--n", f.n, "side length, or comma-separated list");
    app.add_option("--seed", f.seed, "base RNG seed");
    app.add_option("--replicates", f.replicates, "number of replicates");
    app.add_option("--tol", f.tol, "toppling tolerance on the largest excess");
    app.add_option("--max-rounds", f.max_rounds, "toppling round budget");
    app.add_option("--epsilon", f.epsilon, "Sobolev exponent epsilon");
    app.add_option("--cutoff", f.cutoff, "frequency cutoff radius");
    app.add_option("--out", f.out, "output directory");
    app.add_option("--threads", f.threads, "worker threads (0 = default)");
    app.add_option("--method", f.method, "toppling | spectral | both");
    app.add_option("--psd-repair", f.psd_repair, "none | clip");
    app.add_option("--scaling", f.scaling, "standard | bilap");

    auto* sample = app.add_subcommand("sample-sigma", "draw Gaussian weight fields (DSGF)");
    sample->add_flag("--csv", f.csv, "also write sigma.csv with site values");
    auto* stab = app.add_subcommand("stabilize", "compute odometers by toppling and/or spectrally");
    auto* val = app.add_subcommand("validate-kernel", "check a kernel is a valid covariance");
    val->add_flag("--brute-force", f.brute_force, "diagonalise the dense covariance (n^d <= 4096)");
    auto* conv = app.add_subcommand("variance-convergence", "finite-n variance against its limit");
    auto* mc = app.add_subcommand("monte-carlo", "Monte Carlo variance of the odometer pairing");
    auto* tight = app.add_subcommand("tightness", "mean Sobolev norm of the scaled odometer");
    auto* render = app.add_subcommand("render", "16-bit PGM of a d=2 odometer");
    render->add_option("--input", f.input, "render this DSGF file instead of simulating");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        const RunConfig cfg = resolve_config(collect_settings(f));
        fs::create_directories(cfg.out_dir);
        write_resolved_config(cfg.out_dir, cfg);
        if (cfg.threads > 0) omp_set_num_threads(cfg.threads);

        if (*sample) return cmd_sample_sigma(cfg, f, out);
        if (*stab) return cmd_stabilize(cfg, out);
        if (*val) return cmd_validate_kernel(cfg, f, out, err);
        if (*conv) return cmd_variance_convergence(cfg, out);
        if (*mc) return cmd_monte_carlo(cfg, out);
        if (*tight) return cmd_tightness(cfg, out);
        if (*render) return cmd_render(cfg, f, out);
        err << app.help();
        return 1;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 2;
    }
}

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace divsand::cli
