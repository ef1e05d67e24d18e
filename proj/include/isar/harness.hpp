#pragma once

// Experiment runner: scenario sweeps over snapshot counts and SNRs,
// multi-trial aggregation, runtime benchmarks, the observation-time budget,
// and the grow-M imaging procedure.

#include "isar/metrics.hpp"
#include "isar/phantoms.hpp"
#include "isar/solvers.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace isar {

enum class Scenario { SatelliteOnly, DebrisOnly, Combined };

std::string_view to_string(Scenario s) noexcept;
Scenario parse_scenario(std::string_view name);

struct ObservationBudget {
    double snapshot_time_s = 1e-4;    // t_s
    double total_observation_s = 3.0; // observation window

    /// floor(total_observation_s / snapshot_time_s), with a relative 1e-12
    /// guard so exact quotients are not lost to rounding.
    long max_snapshots() const;
    void validate() const;
};

struct BudgetCheck {
    bool pass = false;
    double required_s = 0.0;
    double margin_s = 0.0; // total_observation_s - M·t_s
};

BudgetCheck check_observation_budget(long snapshots, const ObservationBudget& budget);

struct PhantomParams {
    int debris_count = 10;
    AmplitudeRange amplitudes{};
    std::optional<SatelliteSpec> satellite; // default_for(n) when unset
};

enum class QualityMode { Simulation, Deployment };

struct ProcedureParams {
    int initial_m = 100;
    int m_step = 50;
    double quality_threshold = 1e-2;
    QualityMode mode = QualityMode::Simulation;
    double detection_threshold = 0.05;
    SolverMode solver = SolverMode::L1;
};

struct ExperimentConfig {
    Scenario scenario = Scenario::SatelliteOnly;
    int n = 40;
    std::vector<int> snapshot_counts{100, 200, 300};
    std::vector<std::optional<double>> snr_db_list{5.0}; // nullopt = noiseless
    int trials = 100;
    std::vector<SolverMode> solvers{SolverMode::L1, SolverMode::TV, SolverMode::SL0, SolverMode::SBL};
    double bernoulli_p = 0.5;
    std::uint64_t master_seed = 1;
    std::string output_dir = "out"; // empty: no files written
    PhantomParams phantom{};
    std::map<SolverMode, SolverConfig> solver_configs; // missing modes use defaults
    ObservationBudget budget{};
    ProcedureParams procedure{};
    int threads = 1;
    bool write_images = true;

    SolverConfig solver_config(SolverMode mode) const;
    SatelliteSpec satellite_spec() const;
};

/// Throws ConfigError naming the offending field.
void validate(const ExperimentConfig& cfg);

struct CellFailure {
    SolverMode solver;
    int snapshots;
    std::optional<double> snr_db;
    int trial;
    std::string message;
};

struct ExperimentReport {
    std::vector<TrialMetrics> trials; // sorted by (solver, M, snr, trial)
    std::vector<CellSummary> cells;
    std::vector<CellFailure> failures;
    std::vector<std::filesystem::path> files;

    bool ok() const noexcept { return failures.empty(); }
    const CellSummary* find(SolverMode solver, int snapshots, const std::optional<double>& snr) const;
};

/// One simulated acquisition: ground truth, sensing matrix and measurements.
struct TrialInstance {
    Scene scene;
    SensingMatrix phi;
    MeasurementSet measurement;
};

/// Seed of the scene/aperture/noise draws for one (M, snr, trial) cell of a
/// scenario. Shared by every solver so that solvers are compared on
/// identical instances.
std::uint64_t instance_seed(std::uint64_t master_seed, Scenario scenario, int snapshots, int snr_index,
                            int trial);
/// Seed handed to a solver for one trial.
std::uint64_t solver_seed(std::uint64_t instance, SolverMode solver);

TrialInstance make_instance(const ExperimentConfig& cfg, int snapshots, const std::optional<double>& snr,
                            std::uint64_t seed);

/// Config handed to a solver for one instance: the per-mode config with ε
/// (L1, TV) and the noise variance (SBL) filled from the known noise level
/// when the user left them unset.
SolverConfig trial_solver_config(const ExperimentConfig& cfg, SolverMode mode, const MeasurementSet& meas,
                                 std::uint64_t seed);

/// Runs every (solver, M, snr, trial) cell; writes <scenario>_metrics.csv,
/// <scenario>_trials.csv, first-trial PGM images and a manifest when
/// cfg.output_dir is set.
ExperimentReport run_scenario(const ExperimentConfig& cfg);

/// run_scenario at the first snapshot count over the SNR grid; writes
/// <scenario>_snr_sweep.csv.
ExperimentReport sweep_snr(const ExperimentConfig& cfg);

struct RuntimeReport {
    ExperimentReport report;
    std::map<SolverMode, double> runtime_vs_m_spearman;
};

/// Times each solver at every snapshot count (first SNR); writes
/// <scenario>_benchmark.csv.
RuntimeReport benchmark_runtime(const ExperimentConfig& cfg);

enum class ProcedureStatus { QualityMet, BudgetExhausted };

struct ProcedureStep {
    int snapshots;
    double quality; // relative L2 (simulation) or |y - Φx̂| / |y| (deployment)
    bool quality_met;
    double runtime_s;
};

struct ProcedureResult {
    Image image;
    ProcedureStatus status = ProcedureStatus::BudgetExhausted;
    std::vector<ProcedureStep> steps;
    bool debris_detected = false;
    double outside_energy_fraction = 0.0;
    std::string decision; // "debris detected" or "no debris detected"
    long max_snapshots = 0;
};

/// Solve, check quality, and add m_step snapshots while the budget allows.
/// Detection: fraction of recovered energy outside the satellite silhouette
/// (the whole grid for DebrisOnly) above detection_threshold. The silhouette
/// is only known in simulation, so the rule is a simulation surrogate.
ProcedureResult imaging_procedure(const ExperimentConfig& cfg, const ProcedureParams& params);

/// Output image name: <scenario>_<solver>_M<count>_snr<db>.pgm
std::string image_file_name(Scenario scenario, SolverMode solver, int snapshots,
                            const std::optional<double>& snr_db);

} // namespace isar
