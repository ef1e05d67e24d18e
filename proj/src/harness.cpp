#include "isar/harness.hpp"

#include "isar/errors.hpp"
#include "isar/io.hpp"
#include "isar/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

namespace isar {

std::string_view to_string(Scenario s) noexcept
{
    switch (s) {
    case Scenario::SatelliteOnly: return "SatelliteOnly";
    case Scenario::DebrisOnly: return "DebrisOnly";
    case Scenario::Combined: return "Combined";
    }
    return "?";
}

Scenario parse_scenario(std::string_view name)
{
    for (auto s : {Scenario::SatelliteOnly, Scenario::DebrisOnly, Scenario::Combined}) {
        if (name == to_string(s)) {
            return s;
        }
    }
    throw ArgumentError("unknown scenario '" + std::string(name) +
                        "' (expected SatelliteOnly, DebrisOnly or Combined)");
}

// --- observation budget -----------------------------------------------------

void ObservationBudget::validate() const
{
    if (!(snapshot_time_s > 0.0) || !std::isfinite(snapshot_time_s)) {
        throw ArgumentError("snapshot time must be positive");
    }
    if (!(total_observation_s >= 0.0) || !std::isfinite(total_observation_s)) {
        throw ArgumentError("observation window must be nonnegative");
    }
}

long ObservationBudget::max_snapshots() const
{
    validate();
    return static_cast<long>(std::floor(total_observation_s / snapshot_time_s * (1.0 + 1e-12)));
}

BudgetCheck check_observation_budget(long snapshots, const ObservationBudget& budget)
{
    budget.validate();
    if (snapshots < 0) {
        throw ArgumentError("snapshot count must be nonnegative");
    }
    BudgetCheck c;
    c.required_s = static_cast<double>(snapshots) * budget.snapshot_time_s;
    c.margin_s = budget.total_observation_s - c.required_s;
    c.pass = snapshots <= budget.max_snapshots();
    return c;
}

// --- config -----------------------------------------------------------------

SolverConfig ExperimentConfig::solver_config(SolverMode mode) const
{
    const auto it = solver_configs.find(mode);
    SolverConfig c = it != solver_configs.end() ? it->second : SolverConfig::defaults_for(mode);
    c.mode = mode;
    return c;
}

SatelliteSpec ExperimentConfig::satellite_spec() const
{
    if (phantom.satellite) {
        return *phantom.satellite;
    }
    return n >= 10 ? SatelliteSpec::default_for(n) : SatelliteSpec{};
}

void validate(const ExperimentConfig& cfg)
{
    if (cfg.n < 1) {
        throw ConfigError("n", "must be at least 1");
    }
    const long cells = static_cast<long>(cfg.n) * cfg.n;
    if (cfg.snapshot_counts.empty()) {
        throw ConfigError("snapshot_counts", "must not be empty");
    }
    try {
        cfg.budget.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError("budget", e.what());
    }
    const long max_m = cfg.budget.max_snapshots();
    for (std::size_t i = 0; i < cfg.snapshot_counts.size(); ++i) {
        const std::string where = "snapshot_counts[" + std::to_string(i) + "]";
        const int m = cfg.snapshot_counts[i];
        if (m < 1) {
            throw ConfigError(where, "must be at least 1");
        }
        if (m >= cells) {
            throw ConfigError(where, "must be below n² = " + std::to_string(cells));
        }
        if (m > max_m) {
            throw ConfigError(where, std::to_string(m) + " snapshots exceed the observation budget of " +
                                         std::to_string(max_m));
        }
    }
    if (cfg.snr_db_list.empty()) {
        throw ConfigError("snr_db_list", "must not be empty");
    }
    for (std::size_t i = 0; i < cfg.snr_db_list.size(); ++i) {
        if (cfg.snr_db_list[i] && !std::isfinite(*cfg.snr_db_list[i])) {
            throw ConfigError("snr_db_list[" + std::to_string(i) + "]", "must be finite");
        }
    }
    if (cfg.trials < 1) {
        throw ConfigError("trials", "must be at least 1");
    }
    if (cfg.solvers.empty()) {
        throw ConfigError("solvers", "must not be empty");
    }
    if (std::set<SolverMode>(cfg.solvers.begin(), cfg.solvers.end()).size() != cfg.solvers.size()) {
        throw ConfigError("solvers", "duplicate solver");
    }
    if (!(cfg.bernoulli_p > 0.0 && cfg.bernoulli_p <= 1.0)) {
        throw ConfigError("bernoulli_p", "must be in (0, 1]");
    }
    if (cfg.threads < 1) {
        throw ConfigError("threads", "must be at least 1");
    }
    const auto& ph = cfg.phantom;
    if (cfg.scenario != Scenario::SatelliteOnly) {
        const int min_k = cfg.scenario == Scenario::DebrisOnly ? 1 : 0;
        if (ph.debris_count < min_k || ph.debris_count > cells) {
            throw ConfigError("phantom.debris_count", "out of range for this scenario");
        }
    }
    if (!(ph.amplitudes.low > 0.0 && ph.amplitudes.low <= ph.amplitudes.high)) {
        throw ConfigError("phantom.amplitude_low", "need 0 < amplitude_low <= amplitude_high");
    }
    if (cfg.scenario != Scenario::DebrisOnly) {
        if (!ph.satellite && cfg.n < 10) {
            throw ConfigError("phantom.satellite", "the default satellite needs n >= 10");
        }
        try {
            satellite_support(cfg.n, cfg.satellite_spec());
        } catch (const ArgumentError& e) {
            throw ConfigError("phantom.satellite", e.what());
        }
        if (cfg.scenario == Scenario::Combined) {
            const long free = cells - count_nonzero(satellite_support(cfg.n, cfg.satellite_spec()));
            if (ph.debris_count > free) {
                throw ConfigError("phantom.debris_count", "more debris than free pixels");
            }
        }
    }
    const auto& pr = cfg.procedure;
    if (pr.initial_m < 1) {
        throw ConfigError("procedure.initial_m", "must be at least 1");
    }
    if (pr.m_step < 1) {
        throw ConfigError("procedure.m_step", "must be at least 1");
    }
    if (!(pr.quality_threshold > 0.0)) {
        throw ConfigError("procedure.quality_threshold", "must be positive");
    }
    if (!(pr.detection_threshold >= 0.0 && pr.detection_threshold <= 1.0)) {
        throw ConfigError("procedure.detection_threshold", "must be in [0, 1]");
    }
    for (const auto& [mode, sc] : cfg.solver_configs) {
        try {
            sc.validate();
        } catch (const ArgumentError& e) {
            throw ConfigError("solver_configs." + std::string(to_string(mode)), e.what());
        }
    }
}

const CellSummary* ExperimentReport::find(SolverMode solver, int snapshots,
                                          const std::optional<double>& snr) const
{
    for (const auto& c : cells) {
        if (c.solver == solver && c.snapshots == snapshots && c.snr_db == snr) {
            return &c;
        }
    }
    return nullptr;
}

// --- trial generation -------------------------------------------------------

std::uint64_t instance_seed(std::uint64_t master_seed, Scenario scenario, int snapshots, int snr_index,
                            int trial)
{
    return derive_seed(master_seed, {static_cast<std::uint64_t>(scenario), static_cast<std::uint64_t>(snapshots),
                                     static_cast<std::uint64_t>(snr_index), static_cast<std::uint64_t>(trial)});
}

std::uint64_t solver_seed(std::uint64_t instance, SolverMode solver)
{
    return derive_seed(instance, {0x50u, static_cast<std::uint64_t>(solver)});
}

namespace {

Scene make_scene(const ExperimentConfig& cfg, std::uint64_t seed)
{
    switch (cfg.scenario) {
    case Scenario::SatelliteOnly: return make_satellite_phantom(cfg.n, cfg.satellite_spec());
    case Scenario::DebrisOnly:
        return make_debris_phantom(cfg.n, cfg.phantom.debris_count, cfg.phantom.amplitudes, seed);
    case Scenario::Combined:
        return make_combined_phantom(cfg.n, cfg.satellite_spec(), cfg.phantom.debris_count,
                                     cfg.phantom.amplitudes, seed);
    }
    throw ArgumentError("unknown scenario");
}

MeasurementSet measure(const SensingMatrix& phi, const Scene& scene, const std::optional<double>& snr,
                       std::uint64_t noise_seed)
{
    const Vector y = forward_measure(phi, scene.flat());
    return snr ? add_awgn(y, *snr, noise_seed) : noiseless_measurement(y);
}

} // namespace

TrialInstance make_instance(const ExperimentConfig& cfg, int snapshots, const std::optional<double>& snr,
                            std::uint64_t seed)
{
    Scene scene = make_scene(cfg, derive_seed(seed, {1}));
    const auto apertures = generate_apertures(cfg.n, snapshots, cfg.bernoulli_p, derive_seed(seed, {2}));
    SensingMatrix phi = SensingMatrix::assemble(apertures);
    MeasurementSet meas = measure(phi, scene, snr, derive_seed(seed, {3}));
    return {std::move(scene), std::move(phi), std::move(meas)};
}

SolverConfig trial_solver_config(const ExperimentConfig& cfg, SolverMode mode, const MeasurementSet& meas,
                                 std::uint64_t seed)
{
    SolverConfig c = cfg.solver_config(mode);
    c.seed = seed;
    const double m = static_cast<double>(meas.y.size());
    if (!c.epsilon && (mode == SolverMode::L1 || mode == SolverMode::TV)) {
        // |noise|² is χ²_M·σ²; mean plus two standard deviations
        c.epsilon = meas.noiseless() ? 0.0 : std::sqrt(meas.noise_variance * (m + 2.0 * std::sqrt(2.0 * m)));
    }
    if (mode == SolverMode::SBL && !c.noise_variance && !meas.noiseless()) {
        c.noise_variance = meas.noise_variance;
    }
    return c;
}

std::string image_file_name(Scenario scenario, SolverMode solver, int snapshots,
                            const std::optional<double>& snr_db)
{
    return std::string(to_string(scenario)) + "_" + std::string(to_string(solver)) + "_M" +
           std::to_string(snapshots) + "_snr" + format_snr(snr_db) + ".pgm";
}

// --- grid runner ------------------------------------------------------------

namespace {

namespace fs = std::filesystem;

struct Job {
    int m_index;
    int snr_index;
    int trial;
};

struct JobOutput {
    std::vector<TrialMetrics> metrics;
    std::vector<CellFailure> failures;
    std::vector<std::pair<SolverMode, Vector>> images; // first trial only
    Vector truth;
};

void run_parallel(std::size_t count, int threads, const std::function<void(std::size_t)>& body)
{
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                body(i);
            }
        });
    }
}

Image display_image(const Vector& x, int n)
{
    return unflatten(x.cwiseMax(0.0), n);
}

fs::path prepare_output_dir(const ExperimentConfig& cfg)
{
    const fs::path dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw ConfigError("output_dir", "cannot create " + dir.string());
    }
    return dir;
}

std::string trials_csv(const std::vector<TrialMetrics>& trials)
{
    std::string out = "solver,snapshots,snr_db,trial_seed,mse,rel_l2,runtime_s\n";
    for (const auto& t : trials) {
        out += std::string(to_string(t.solver)) + ',' + std::to_string(t.snapshots_m) + ',' +
               format_snr(t.snr_db) + ',' + std::to_string(t.trial_seed) + ',' + format_double(t.mse) + ',' +
               format_double(t.relative_l2) + ',' + format_double(t.runtime_s) + '\n';
    }
    return out;
}

void write_manifest_for(const ExperimentConfig& cfg, const std::string& command, const fs::path& dir,
                        ExperimentReport& report)
{
    io::RunManifest man;
    man.command = command;
    man.config_digest = io::sha256_hex(io::dump_config(cfg));
    man.master_seed = cfg.master_seed;
    man.tool_version = std::string(io::kToolVersion);
    for (const auto& f : report.files) {
        man.file_checksums[f.filename().string()] = io::sha256_hex(io::read_text(f));
    }
    const fs::path path = dir / (std::string(to_string(cfg.scenario)) + "_" + command + "_manifest.json");
    io::write_manifest(man, path);
    report.files.push_back(path);
}

ExperimentReport run_grid(const ExperimentConfig& cfg, const std::string& label)
{
    validate(cfg);
    const fs::path dir = cfg.output_dir.empty() ? fs::path() : prepare_output_dir(cfg);

    std::vector<Job> jobs;
    for (int mi = 0; mi < static_cast<int>(cfg.snapshot_counts.size()); ++mi) {
        for (int si = 0; si < static_cast<int>(cfg.snr_db_list.size()); ++si) {
            for (int t = 0; t < cfg.trials; ++t) {
                jobs.push_back({mi, si, t});
            }
        }
    }

    std::vector<JobOutput> outputs(jobs.size());
    run_parallel(jobs.size(), cfg.threads, [&](std::size_t j) {
        const Job& job = jobs[j];
        const int m = cfg.snapshot_counts[job.m_index];
        const auto& snr = cfg.snr_db_list[job.snr_index];
        const auto seed = instance_seed(cfg.master_seed, cfg.scenario, m, job.snr_index, job.trial);
        JobOutput& out = outputs[j];

        std::optional<TrialInstance> inst;
        try {
            inst = make_instance(cfg, m, snr, seed);
        } catch (const std::exception& e) {
            for (auto mode : cfg.solvers) {
                out.failures.push_back({mode, m, snr, job.trial, e.what()});
            }
            return;
        }
        const Vector truth = inst->scene.flat();
        if (job.trial == 0) {
            out.truth = truth;
        }
        for (auto mode : cfg.solvers) {
            try {
                const SolverConfig sc = trial_solver_config(cfg, mode, inst->measurement, solver_seed(seed, mode));
                RecoveryResult res;
                const double runtime = time_solver([&] { res = recover(inst->phi, inst->measurement.y, sc); });
                if (!res.x_hat.allFinite()) {
                    throw std::runtime_error("solver produced non-finite pixels");
                }
                out.metrics.push_back(
                    {mse(res.x_hat, truth), relative_l2(res.x_hat, truth), runtime, mode, m, snr, seed});
                if (job.trial == 0) {
                    out.images.emplace_back(mode, std::move(res.x_hat));
                }
            } catch (const std::exception& e) {
                out.failures.push_back({mode, m, snr, job.trial, e.what()});
            }
        }
    });

    ExperimentReport report;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        for (auto& t : outputs[j].metrics) {
            report.trials.push_back(t);
        }
        for (auto& f : outputs[j].failures) {
            report.failures.push_back(std::move(f));
        }
    }
    // jobs are already in (M, snr, trial) order; a stable sort on solver
    // gives (solver, M, snr, trial)
    std::stable_sort(report.trials.begin(), report.trials.end(),
                     [](const TrialMetrics& a, const TrialMetrics& b) { return a.solver < b.solver; });
    if (!report.trials.empty()) {
        report.cells = aggregate_trials(report.trials);
    }

    if (!dir.empty()) {
        const std::string prefix = std::string(to_string(cfg.scenario)) + "_" + label;
        const fs::path csv = dir / (prefix + ".csv");
        io::write_text_atomic(csv, format_report_csv(report.cells));
        report.files.push_back(csv);
        const fs::path raw = dir / (prefix + "_trials.csv");
        io::write_text_atomic(raw, trials_csv(report.trials));
        report.files.push_back(raw);
        if (!report.failures.empty()) {
            std::string text = "solver,snapshots,snr_db,trial,message\n";
            for (const auto& f : report.failures) {
                std::string msg = f.message;
                std::replace(msg.begin(), msg.end(), ',', ';');
                std::replace(msg.begin(), msg.end(), '\n', ' ');
                text += std::string(to_string(f.solver)) + ',' + std::to_string(f.snapshots) + ',' +
                        format_snr(f.snr_db) + ',' + std::to_string(f.trial) + ',' + msg + '\n';
            }
            const fs::path fail = dir / (prefix + "_failures.csv");
            io::write_text_atomic(fail, text);
            report.files.push_back(fail);
        }
        if (cfg.write_images) {
            for (std::size_t j = 0; j < jobs.size(); ++j) {
                if (jobs[j].trial != 0) {
                    continue;
                }
                const int m = cfg.snapshot_counts[jobs[j].m_index];
                const auto& snr = cfg.snr_db_list[jobs[j].snr_index];
                if (outputs[j].truth.size()) {
                    const fs::path p = dir / (std::string(to_string(cfg.scenario)) + "_truth_M" +
                                              std::to_string(m) + "_snr" + format_snr(snr) + ".pgm");
                    io::write_pgm(display_image(outputs[j].truth, cfg.n), p);
                    report.files.push_back(p);
                }
                for (const auto& [mode, x] : outputs[j].images) {
                    const fs::path p = dir / image_file_name(cfg.scenario, mode, m, snr);
                    io::write_pgm(display_image(x, cfg.n), p);
                    report.files.push_back(p);
                }
            }
        }
        write_manifest_for(cfg, label, dir, report);
    }
    return report;
}

} // namespace

ExperimentReport run_scenario(const ExperimentConfig& cfg)
{
    return run_grid(cfg, "metrics");
}

ExperimentReport sweep_snr(const ExperimentConfig& cfg)
{
    if (cfg.snr_db_list.empty()) {
        throw ConfigError("snr_db_list", "must not be empty");
    }
    ExperimentConfig c = cfg;
    if (!c.snapshot_counts.empty()) {
        c.snapshot_counts = {cfg.snapshot_counts.front()};
    }
    return run_grid(c, "snr_sweep");
}

RuntimeReport benchmark_runtime(const ExperimentConfig& cfg)
{
    ExperimentConfig c = cfg;
    if (!c.snr_db_list.empty()) {
        c.snr_db_list = {cfg.snr_db_list.front()};
    }
    c.threads = 1; // concurrent solves would distort wall times
    RuntimeReport out;
    out.report = run_grid(c, "benchmark");
    for (auto mode : c.solvers) {
        std::vector<double> ms, rt;
        for (const auto& cell : out.report.cells) {
            if (cell.solver == mode) {
                ms.push_back(cell.snapshots);
                rt.push_back(cell.runtime_mean_s);
            }
        }
        if (ms.size() >= 2) {
            out.runtime_vs_m_spearman[mode] = spearman(ms, rt);
        }
    }
    return out;
}

// --- imaging procedure ------------------------------------------------------

ProcedureResult imaging_procedure(const ExperimentConfig& cfg, const ProcedureParams& params)
{
    validate(cfg);
    if (params.initial_m < 1) {
        throw ConfigError("procedure.initial_m", "must be at least 1");
    }
    if (params.m_step < 1) {
        throw ConfigError("procedure.m_step", "must be at least 1");
    }
    if (!(params.quality_threshold > 0.0)) {
        throw ConfigError("procedure.quality_threshold", "must be positive");
    }
    const long cells = static_cast<long>(cfg.n) * cfg.n;
    ProcedureResult out;
    out.max_snapshots = std::min<long>(cfg.budget.max_snapshots(), cells - 1);
    if (params.initial_m > out.max_snapshots) {
        throw ConfigError("procedure.initial_m", "exceeds the snapshot budget of " +
                                                     std::to_string(out.max_snapshots));
    }

    const auto& snr = cfg.snr_db_list.front();
    const std::uint64_t seed = instance_seed(cfg.master_seed, cfg.scenario, 0, 0, 0);
    const Scene scene = make_scene(cfg, derive_seed(seed, {1}));
    const Vector truth = scene.flat();

    Vector best;
    double best_quality = std::numeric_limits<double>::infinity();
    int m = params.initial_m;
    while (true) {
        const auto apertures = generate_apertures(cfg.n, m, cfg.bernoulli_p, derive_seed(seed, {2}));
        const SensingMatrix phi = SensingMatrix::assemble(apertures);
        const MeasurementSet meas = measure(phi, scene, snr, derive_seed(seed, {3, static_cast<std::uint64_t>(m)}));
        const SolverConfig sc =
            trial_solver_config(cfg, params.solver, meas, solver_seed(seed, params.solver));
        RecoveryResult res;
        const double runtime = time_solver([&] { res = recover(phi, meas.y, sc); });

        double quality;
        if (params.mode == QualityMode::Simulation) {
            quality = relative_l2(res.x_hat, truth);
        } else {
            const double yn = meas.y.norm();
            quality = yn > 0.0 ? (meas.y - phi.data() * res.x_hat).norm() / yn : 0.0;
        }
        const bool met = quality <= params.quality_threshold;
        out.steps.push_back({m, quality, met, runtime});
        if (met || quality < best_quality) {
            best_quality = quality;
            best = res.x_hat;
        }
        if (met) {
            out.status = ProcedureStatus::QualityMet;
            best = res.x_hat;
            break;
        }
        if (m + params.m_step > out.max_snapshots) {
            out.status = ProcedureStatus::BudgetExhausted;
            break;
        }
        m += params.m_step;
    }
    out.image = unflatten(best, cfg.n);

    Image support = Image::Zero(cfg.n, cfg.n);
    if (cfg.scenario != Scenario::DebrisOnly) {
        support = satellite_support(cfg.n, cfg.satellite_spec());
    }
    double total = 0.0, outside = 0.0;
    for (Eigen::Index i = 0; i < out.image.size(); ++i) {
        const double e = out.image.data()[i] * out.image.data()[i];
        total += e;
        if (support.data()[i] == 0.0) {
            outside += e;
        }
    }
    out.outside_energy_fraction = total > 0.0 ? outside / total : 0.0;
    out.debris_detected = out.outside_energy_fraction > params.detection_threshold;
    out.decision = out.debris_detected ? "debris detected" : "no debris detected";

    if (!cfg.output_dir.empty()) {
        const fs::path dir = prepare_output_dir(cfg);
        ExperimentReport files;
        const std::string prefix = std::string(to_string(cfg.scenario)) + "_procedure";
        const fs::path img = dir / (prefix + "_" + std::string(to_string(params.solver)) + ".pgm");
        io::write_pgm(display_image(best, cfg.n), img);
        files.files.push_back(img);
        std::string csv = "snapshots,quality,quality_met,runtime_s\n";
        for (const auto& s : out.steps) {
            csv += std::to_string(s.snapshots) + ',' + format_double(s.quality) + ',' +
                   (s.quality_met ? "1" : "0") + ',' + format_double(s.runtime_s) + '\n';
        }
        const fs::path steps = dir / (prefix + ".csv");
        io::write_text_atomic(steps, csv);
        files.files.push_back(steps);
        write_manifest_for(cfg, "procedure", dir, files);
    }
    return out;
}

} // namespace isar
