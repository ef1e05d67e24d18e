// isar_sim: command-line front end for the encoded-aperture ISAR simulator.
//
// Exit codes: 0 success, 1 some cells failed (or a check did not pass),
// 2 configuration or usage error.

#include "isar/encoding.hpp"
#include "isar/errors.hpp"
#include "isar/harness.hpp"
#include "isar/io.hpp"
#include "isar/metrics.hpp"
#include "isar/rng.hpp"
#include "isar/signal_model.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

using namespace isar;

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kConfigError = 2;

struct Overrides {
    std::string config;
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<int> threads;
};

void add_common(CLI::App* sub, Overrides& o)
{
    sub->add_option("--config", o.config, "experiment config (JSON)")->required();
    sub->add_option("--output-dir", o.output_dir, "override output_dir");
    sub->add_option("--seed", o.seed, "override master_seed");
    sub->add_option("--trials", o.trials, "override trials")->check(CLI::PositiveNumber);
    sub->add_option("--threads", o.threads, "override threads")->check(CLI::PositiveNumber);
}

ExperimentConfig load(const Overrides& o)
{
    ExperimentConfig cfg = io::load_config(o.config);
    if (o.output_dir) {
        cfg.output_dir = *o.output_dir;
    }
    if (o.seed) {
        cfg.master_seed = *o.seed;
    }
    if (o.trials) {
        cfg.trials = *o.trials;
    }
    if (o.threads) {
        cfg.threads = *o.threads;
    }
    validate(cfg);
    return cfg;
}

void print_cells(const ExperimentReport& rep)
{
    std::cout << format_report_csv(rep.cells);
    for (const auto& f : rep.failures) {
        std::cerr << "failed: " << to_string(f.solver) << " M=" << f.snapshots << " snr=" << format_snr(f.snr_db)
                  << " trial=" << f.trial << ": " << f.message << '\n';
    }
}

int report_status(const ExperimentReport& rep)
{
    print_cells(rep);
    return rep.ok() ? kOk : kPartial;
}

int physics_check(std::uint64_t seed, int pairs, double tolerance, const std::optional<std::string>& out_dir)
{
    const double lambda = RadarParams::x_band().wavelength_m;
    Rng rng(seed);
    std::string csv = "radius_m,omega_rad_s,predicted_hz,measured_hz,relative_error\n";
    bool all = true;
    std::printf("%10s %10s %14s %14s %9s\n", "r [m]", "w [rad/s]", "predicted Hz", "measured Hz", "rel err");
    for (int i = 0; i < pairs; ++i) {
        const double r = rng.uniform(0.5, 10.0);
        const double omega = rng.uniform(0.05, 1.0);
        const auto c = spectral_bandwidth_check(r, omega, lambda);
        all = all && c.relative_error <= tolerance;
        std::printf("%10.4f %10.4f %14.3f %14.3f %9.4f\n", r, omega, c.predicted_hz, c.measured_hz, c.relative_error);
        csv += format_double(r) + ',' + format_double(omega) + ',' + format_double(c.predicted_hz) + ',' +
               format_double(c.measured_hz) + ',' + format_double(c.relative_error) + '\n';
    }
    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        io::write_text_atomic(std::filesystem::path(*out_dir) / "physics_check.csv", csv);
    }
    std::cout << (all ? "all pairs within " : "some pairs outside ") << tolerance * 100 << "%\n";
    return all ? kOk : kPartial;
}

int validate_matrix(int n, int m, double p, std::uint64_t seed, const std::optional<std::string>& matrix,
                    const std::optional<std::string>& out_dir)
{
    std::optional<SensingMatrix> phi;
    if (matrix) {
        const Matrix data = io::read_csv_matrix(*matrix);
        const auto side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(data.cols()))));
        phi.emplace(data, side);
    } else {
        phi.emplace(SensingMatrix::assemble(generate_apertures(n, m, p, seed)));
    }
    const auto rep = rip_diagnostics(*phi);
    std::cout << "rows " << phi->rows() << "\ncols " << phi->cols() << "\nunderdetermined "
              << (rep.is_underdetermined ? "yes" : "no") << "\nmutual_coherence "
              << (rep.mutual_coherence ? format_double(*rep.mutual_coherence) : std::string("undefined"))
              << "\nmax_row_inner_product " << format_double(rep.max_row_inner_product) << "\nduplicate_rows "
              << rep.duplicate_row_count << "\nzero_columns " << rep.zero_column_count << '\n';
    const auto budget = check_observation_budget(phi->rows(), ObservationBudget{});
    std::cout << "budget " << (budget.pass ? "pass" : "fail") << " margin_s " << format_double(budget.margin_s)
              << '\n';
    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        io::write_csv_matrix(phi->data(), std::filesystem::path(*out_dir) / "sensing_matrix.csv");
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Encoded-aperture ISAR imaging simulator"};
    app.require_subcommand(1);

    Overrides run_o, sweep_o, bench_o, proc_o;
    auto* run = app.add_subcommand("run-scenario", "run every (solver, M, SNR, trial) cell");
    add_common(run, run_o);
    auto* sweep = app.add_subcommand("sweep-snr", "SNR sweep at the first snapshot count");
    add_common(sweep, sweep_o);
    auto* bench = app.add_subcommand("benchmark", "solver runtimes over the snapshot counts");
    add_common(bench, bench_o);

    auto* proc = app.add_subcommand("imaging-procedure", "grow M until the image is good enough");
    add_common(proc, proc_o);
    std::optional<double> threshold, detection;
    std::optional<int> m_step, initial_m;
    std::optional<std::string> proc_solver, proc_mode;
    proc->add_option("--threshold", threshold, "quality threshold");
    proc->add_option("--detection-threshold", detection, "outside-energy fraction for a detection");
    proc->add_option("--m-step", m_step, "snapshots added per iteration")->check(CLI::PositiveNumber);
    proc->add_option("--initial-m", initial_m, "first snapshot count")->check(CLI::PositiveNumber);
    proc->add_option("--solver", proc_solver, "L1, TV, SL0 or SBL");
    proc->add_option("--mode", proc_mode, "simulation or deployment")
        ->check(CLI::IsMember({"simulation", "deployment"}));

    auto* phys = app.add_subcommand("physics-check", "spectral bandwidth vs Doppler bandwidth on random (r, w)");
    std::uint64_t phys_seed = 1;
    int pairs = 10;
    double tolerance = 0.15;
    std::optional<std::string> phys_out;
    phys->add_option("--seed", phys_seed, "RNG seed for the (r, w) pairs");
    phys->add_option("--pairs", pairs, "number of pairs")->check(CLI::PositiveNumber);
    phys->add_option("--tolerance", tolerance, "allowed relative error");
    phys->add_option("--output-dir", phys_out, "write physics_check.csv here");

    auto* vm = app.add_subcommand("validate-matrix", "RIP-style diagnostics of a sensing matrix");
    int vm_n = 40, vm_m = 100;
    double vm_p = 0.5;
    std::uint64_t vm_seed = 1;
    std::optional<std::string> vm_matrix, vm_out;
    vm->add_option("--n", vm_n, "aperture side")->check(CLI::PositiveNumber);
    vm->add_option("--m", vm_m, "number of apertures")->check(CLI::PositiveNumber);
    vm->add_option("--p", vm_p, "Bernoulli probability");
    vm->add_option("--seed", vm_seed, "aperture seed");
    vm->add_option("--matrix", vm_matrix, "read the matrix from CSV instead")->check(CLI::ExistingFile);
    vm->add_option("--output-dir", vm_out, "write sensing_matrix.csv here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (*run) {
            return report_status(run_scenario(load(run_o)));
        }
        if (*sweep) {
            return report_status(sweep_snr(load(sweep_o)));
        }
        if (*bench) {
            const auto rt = benchmark_runtime(load(bench_o));
            const int rc = report_status(rt.report);
            for (const auto& [mode, rho] : rt.runtime_vs_m_spearman) {
                std::cout << "spearman(runtime, M) " << to_string(mode) << ' ' << format_double(rho) << '\n';
            }
            return rc;
        }
        if (*proc) {
            ExperimentConfig cfg = load(proc_o);
            ProcedureParams p = cfg.procedure;
            if (threshold) {
                p.quality_threshold = *threshold;
            }
            if (detection) {
                p.detection_threshold = *detection;
            }
            if (m_step) {
                p.m_step = *m_step;
            }
            if (initial_m) {
                p.initial_m = *initial_m;
            }
            if (proc_solver) {
                try {
                    p.solver = parse_solver_mode(*proc_solver);
                } catch (const ArgumentError& e) {
                    throw ConfigError("--solver", e.what());
                }
            }
            if (proc_mode) {
                p.mode = *proc_mode == "deployment" ? QualityMode::Deployment : QualityMode::Simulation;
            }
            const auto r = imaging_procedure(cfg, p);
            std::cout << "snapshots,quality,quality_met\n";
            for (const auto& s : r.steps) {
                std::cout << s.snapshots << ',' << format_double(s.quality) << ',' << (s.quality_met ? 1 : 0) << '\n';
            }
            std::cout << "status " << (r.status == ProcedureStatus::QualityMet ? "quality met" : "budget exhausted")
                      << "\noutside_energy_fraction " << format_double(r.outside_energy_fraction) << "\ndecision "
                      << r.decision << '\n';
            return kOk;
        }
        if (*phys) {
            return physics_check(phys_seed, pairs, tolerance, phys_out);
        }
        if (*vm) {
            return validate_matrix(vm_n, vm_m, vm_p, vm_seed, vm_matrix, vm_out);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ArgumentError& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kPartial;
    }
    return kOk;
}
