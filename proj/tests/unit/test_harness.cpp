#include "isar/errors.hpp"
#include "isar/harness.hpp"
#include "isar/io.hpp"

#include "support/outputs.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include <unistd.h>

using namespace isar;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        path = fs::temp_directory_path() / ("isar_h_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static inline int counter = 0;
};

ExperimentConfig small_config()
{
    ExperimentConfig c;
    c.scenario = Scenario::DebrisOnly;
    c.n = 12;
    c.snapshot_counts = {40, 60};
    c.snr_db_list = {10.0, std::nullopt};
    c.trials = 3;
    c.solvers = {SolverMode::L1, SolverMode::TV, SolverMode::SL0, SolverMode::SBL};
    c.phantom.debris_count = 4;
    c.output_dir = "";
    return c;
}

std::string config_error_field(const ExperimentConfig& c)
{
    try {
        validate(c);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<none>";
}

} // namespace

TEST_CASE("observation budget")
{
    const ObservationBudget b{};
    CHECK(b.max_snapshots() == 30000);

    const auto ok = check_observation_budget(300, b);
    CHECK(ok.pass);
    CHECK(ok.required_s == doctest::Approx(0.03));
    CHECK(ok.margin_s == doctest::Approx(2.97));
    CHECK(ok.margin_s >= 2.9);

    CHECK(check_observation_budget(30000, b).pass);
    const auto over = check_observation_budget(30001, b);
    CHECK_FALSE(over.pass);
    CHECK(over.margin_s < 0.0);

    const auto none = check_observation_budget(0, b);
    CHECK(none.pass);
    CHECK(none.margin_s == 3.0);

    // 0.3 / 1e-4 is 2999.9999999999995 in binary
    CHECK(ObservationBudget{1e-4, 0.3}.max_snapshots() == 3000);

    CHECK_THROWS_AS(check_observation_budget(-1, b), ArgumentError);
    CHECK_THROWS_AS(check_observation_budget(1, ObservationBudget{0.0, 3.0}), ArgumentError);
    CHECK_THROWS_AS(ObservationBudget({1e-4, -1.0}).max_snapshots(), ArgumentError);
}

TEST_CASE("scenario names")
{
    for (auto s : {Scenario::SatelliteOnly, Scenario::DebrisOnly, Scenario::Combined}) {
        CHECK(parse_scenario(to_string(s)) == s);
    }
    CHECK_THROWS_AS(parse_scenario("Moon"), ArgumentError);
    CHECK(image_file_name(Scenario::Combined, SolverMode::TV, 200, 5.0) == "Combined_TV_M200_snr5.pgm");
    CHECK(image_file_name(Scenario::DebrisOnly, SolverMode::L1, 100, std::nullopt) ==
          "DebrisOnly_L1_M100_snrnoiseless.pgm");
    CHECK(image_file_name(Scenario::SatelliteOnly, SolverMode::SBL, 300, -5.0) == "SatelliteOnly_SBL_M300_snr-5.pgm");
}

TEST_CASE("config validation")
{
    ExperimentConfig c;
    CHECK(config_error_field(c) == "<none>");

    auto bad = c;
    bad.snapshot_counts = {100, 1600};
    CHECK(config_error_field(bad) == "snapshot_counts[1]");
    bad = c;
    bad.n = 200;
    bad.snapshot_counts = {30001};
    CHECK(config_error_field(bad) == "snapshot_counts[0]");
    bad = c;
    bad.snapshot_counts = {};
    CHECK(config_error_field(bad) == "snapshot_counts");
    bad = c;
    bad.snr_db_list = {};
    CHECK(config_error_field(bad) == "snr_db_list");
    bad = c;
    bad.snr_db_list = {INFINITY};
    CHECK(config_error_field(bad) == "snr_db_list[0]");
    bad = c;
    bad.solvers = {SolverMode::L1, SolverMode::L1};
    CHECK(config_error_field(bad) == "solvers");
    bad = c;
    bad.threads = 0;
    CHECK(config_error_field(bad) == "threads");
    bad = c;
    bad.scenario = Scenario::Combined;
    bad.phantom.debris_count = 1600;
    CHECK(config_error_field(bad) == "phantom.debris_count");
    bad = c;
    bad.n = 8;
    bad.snapshot_counts = {10};
    CHECK(config_error_field(bad) == "phantom.satellite");
    bad = c;
    bad.solver_configs[SolverMode::SL0].sl0_sigma_decrease = 2.0;
    CHECK(config_error_field(bad) == "solver_configs.SL0");
    bad = c;
    bad.budget.snapshot_time_s = 0.0;
    CHECK(config_error_field(bad) == "budget");

    CHECK_THROWS_AS(run_scenario(bad), ConfigError);
}

TEST_CASE("seeds are pure functions of the cell")
{
    const auto s = instance_seed(1, Scenario::DebrisOnly, 100, 0, 0);
    CHECK(s == instance_seed(1, Scenario::DebrisOnly, 100, 0, 0));
    std::set<std::uint64_t> seen{s, instance_seed(2, Scenario::DebrisOnly, 100, 0, 0),
                                 instance_seed(1, Scenario::Combined, 100, 0, 0),
                                 instance_seed(1, Scenario::DebrisOnly, 200, 0, 0),
                                 instance_seed(1, Scenario::DebrisOnly, 100, 1, 0),
                                 instance_seed(1, Scenario::DebrisOnly, 100, 0, 1)};
    CHECK(seen.size() == 6);
    CHECK(solver_seed(s, SolverMode::L1) != solver_seed(s, SolverMode::TV));
}

TEST_CASE("trial instances")
{
    auto cfg = small_config();
    cfg.scenario = Scenario::Combined;
    const auto inst = make_instance(cfg, 60, 5.0, 42);
    CHECK(inst.scene.kind == SceneKind::Combined);
    CHECK(inst.phi.rows() == 60);
    CHECK(inst.phi.cols() == 144);
    CHECK(inst.measurement.snr_db == 5.0);
    CHECK(inst.measurement.noise_variance > 0.0);
    const auto again = make_instance(cfg, 60, 5.0, 42);
    CHECK(again.measurement.y == inst.measurement.y);
    CHECK(again.scene.image == inst.scene.image);

    const auto clean = make_instance(cfg, 60, std::nullopt, 42);
    CHECK(clean.measurement.noiseless());
    CHECK(clean.measurement.y == inst.phi.data() * inst.scene.flat());

    const auto l1 = trial_solver_config(cfg, SolverMode::L1, inst.measurement, 3);
    REQUIRE(l1.epsilon.has_value());
    CHECK(*l1.epsilon == doctest::Approx(std::sqrt(inst.measurement.noise_variance * (60 + 2 * std::sqrt(120.0)))));
    CHECK(l1.seed == 3);
    CHECK(trial_solver_config(cfg, SolverMode::TV, clean.measurement, 3).epsilon == 0.0);
    CHECK(trial_solver_config(cfg, SolverMode::SBL, inst.measurement, 3).noise_variance ==
          inst.measurement.noise_variance);

    cfg.solver_configs[SolverMode::L1].epsilon = 0.25;
    CHECK(trial_solver_config(cfg, SolverMode::L1, inst.measurement, 3).epsilon == 0.25);
}

TEST_CASE("run_scenario covers the grid")
{
    TempDir tmp;
    auto cfg = small_config();
    cfg.output_dir = tmp.path.string();
    const auto rep = run_scenario(cfg);
    CHECK(rep.ok());
    CHECK(rep.trials.size() == 4 * 2 * 2 * 3);
    CHECK(rep.cells.size() == 4 * 2 * 2);
    for (const auto& c : rep.cells) {
        CHECK(c.trials == 3);
    }
    REQUIRE(rep.find(SolverMode::L1, 60, std::nullopt) != nullptr);
    CHECK(rep.find(SolverMode::L1, 61, std::nullopt) == nullptr);

    // sorted by (solver, M, snr, trial)
    for (std::size_t i = 1; i < rep.trials.size(); ++i) {
        CHECK(rep.trials[i - 1].solver <= rep.trials[i].solver);
    }

    const std::string csv = io::read_text(tmp.path / "DebrisOnly_metrics.csv");
    CHECK(csv.rfind("solver,snapshots,snr_db,trials,mse_mean,mse_std,rel_l2_mean,runtime_mean_s\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 16);
    CHECK(csv.find("L1,40,noiseless,3,") != std::string::npos);
    CHECK(fs::exists(tmp.path / "DebrisOnly_metrics_trials.csv"));
    CHECK(fs::exists(tmp.path / "DebrisOnly_metrics_manifest.json"));
    CHECK(fs::exists(tmp.path / "DebrisOnly_TV_M60_snr10.pgm"));
    CHECK(fs::exists(tmp.path / "DebrisOnly_SBL_M40_snrnoiseless.pgm"));
    CHECK(fs::exists(tmp.path / "DebrisOnly_truth_M40_snr10.pgm"));
    CHECK_FALSE(fs::exists(tmp.path / "DebrisOnly_metrics_failures.csv"));

    const auto man = io::read_text(tmp.path / "DebrisOnly_metrics_manifest.json");
    CHECK(man.find(io::sha256_hex(io::dump_config(cfg))) != std::string::npos);
}

TEST_CASE("outputs are identical across runs and thread counts")
{
    TempDir a, b, c;
    auto cfg = small_config();
    cfg.output_dir = a.path.string();
    const auto ra = run_scenario(cfg);
    cfg.output_dir = b.path.string();
    run_scenario(cfg);
    cfg.output_dir = c.path.string();
    cfg.threads = 3;
    const auto rc = run_scenario(cfg);

    int compared = 0;
    CHECK(support::diff_outputs(a.path, b.path, &compared).empty());
    CHECK(compared > 10);
    CHECK(support::diff_outputs(a.path, c.path).empty());
    REQUIRE(ra.trials.size() == rc.trials.size());
    for (std::size_t i = 0; i < ra.trials.size(); ++i) {
        CHECK(ra.trials[i].mse == rc.trials[i].mse);
        CHECK(ra.trials[i].trial_seed == rc.trials[i].trial_seed);
    }
}

TEST_CASE("a failing cell is recorded and the run continues")
{
    TempDir tmp;
    auto cfg = small_config();
    cfg.output_dir = tmp.path.string();
    cfg.snr_db_list = {5.0};
    cfg.solvers = {SolverMode::SL0};
    // amplitudes whose squares underflow make the SNR undefined
    cfg.phantom.amplitudes = {1e-300, 1e-300};
    const auto rep = run_scenario(cfg);
    CHECK_FALSE(rep.ok());
    CHECK(rep.failures.size() == 2 * 3);
    CHECK(rep.cells.empty());
    CHECK(fs::exists(tmp.path / "DebrisOnly_metrics_failures.csv"));
}

TEST_CASE("noiseless debris recovery with 100 snapshots")
{
    ExperimentConfig cfg;
    cfg.scenario = Scenario::DebrisOnly;
    cfg.snapshot_counts = {100};
    cfg.snr_db_list = {std::nullopt};
    cfg.trials = 3;
    cfg.solvers = {SolverMode::L1};
    cfg.output_dir = "";
    const auto rep = run_scenario(cfg);
    REQUIRE(rep.ok());
    for (const auto& t : rep.trials) {
        CHECK(t.relative_l2 < 1e-2);
    }
}

TEST_CASE("sweep_snr uses the first snapshot count")
{
    auto cfg = small_config();
    cfg.scenario = Scenario::SatelliteOnly;
    cfg.snapshot_counts = {90, 120};
    cfg.snr_db_list = {-5.0, 0.0, 5.0, 10.0, 15.0};
    cfg.solvers = {SolverMode::L1, SolverMode::SL0};
    cfg.trials = 8;
    const auto rep = sweep_snr(cfg);
    CHECK(rep.ok());
    CHECK(rep.cells.size() == 2 * 5);
    for (const auto& c : rep.cells) {
        CHECK(c.snapshots == 90);
    }
    // mse non-increasing in SNR within two standard deviations
    for (auto mode : cfg.solvers) {
        for (std::size_t i = 1; i < cfg.snr_db_list.size(); ++i) {
            const auto* lo = rep.find(mode, 90, cfg.snr_db_list[i - 1]);
            const auto* hi = rep.find(mode, 90, cfg.snr_db_list[i]);
            REQUIRE(lo);
            REQUIRE(hi);
            CHECK(hi->mse_mean <= lo->mse_mean + 2 * std::max(lo->mse_std, hi->mse_std));
        }
    }
    cfg.snr_db_list.clear();
    CHECK_THROWS_AS(sweep_snr(cfg), ConfigError);
}

TEST_CASE("benchmark runtime grows with snapshots")
{
    ExperimentConfig cfg;
    cfg.scenario = Scenario::SatelliteOnly;
    cfg.n = 20;
    cfg.snapshot_counts = {40, 120, 360};
    cfg.trials = 2;
    cfg.threads = 4;
    cfg.solvers = {SolverMode::SL0, SolverMode::SBL};
    cfg.output_dir = "";
    const auto rt = benchmark_runtime(cfg);
    CHECK(rt.report.ok());
    CHECK(rt.report.cells.size() == 6);
    for (auto mode : cfg.solvers) {
        REQUIRE(rt.runtime_vs_m_spearman.count(mode) == 1);
        CHECK(rt.runtime_vs_m_spearman.at(mode) > 0.0);
    }
}

TEST_CASE("imaging procedure stops when quality is met")
{
    auto cfg = small_config();
    ProcedureParams p;
    p.initial_m = 100;
    p.m_step = 10;
    p.quality_threshold = 0.5;
    cfg.snr_db_list = {std::nullopt};
    const auto r = imaging_procedure(cfg, p);
    REQUIRE(r.steps.size() == 1);
    CHECK(r.steps[0].snapshots == 100);
    CHECK(r.status == ProcedureStatus::QualityMet);
    CHECK(r.image.rows() == 12);
}

TEST_CASE("imaging procedure exhausts the budget")
{
    auto cfg = small_config();
    cfg.snr_db_list = {-5.0};
    cfg.budget = {1e-4, 0.005}; // 50 snapshots
    cfg.snapshot_counts = {40};
    ProcedureParams p;
    p.initial_m = 30;
    p.m_step = 10;
    p.quality_threshold = 1e-9;
    p.solver = SolverMode::SL0;
    const auto r = imaging_procedure(cfg, p);
    CHECK(r.max_snapshots == 50);
    REQUIRE(r.steps.size() == 3);
    CHECK(r.steps[0].snapshots == 30);
    CHECK(r.steps[1].snapshots == 40);
    CHECK(r.steps[2].snapshots == 50);
    CHECK(r.status == ProcedureStatus::BudgetExhausted);
    for (const auto& s : r.steps) {
        CHECK_FALSE(s.quality_met);
    }

    p.initial_m = 60;
    CHECK_THROWS_AS(imaging_procedure(cfg, p), ConfigError);
    p.initial_m = 30;
    p.m_step = 0;
    CHECK_THROWS_AS(imaging_procedure(cfg, p), ConfigError);
}

TEST_CASE("imaging procedure on noiseless debris")
{
    ExperimentConfig cfg;
    cfg.scenario = Scenario::DebrisOnly;
    cfg.snr_db_list = {std::nullopt};
    cfg.output_dir = "";
    ProcedureParams p; // initial 100, step 50, rel-L2 1e-2, L1
    const auto r = imaging_procedure(cfg, p);
    CHECK(r.status == ProcedureStatus::QualityMet);
    CHECK(r.steps.back().snapshots <= 200);
    for (std::size_t i = 1; i < r.steps.size(); ++i) {
        CHECK(r.steps[i].snapshots > r.steps[i - 1].snapshots);
    }
    CHECK(r.debris_detected);
    CHECK(r.decision == "debris detected");
}

TEST_CASE("imaging procedure detection and outputs")
{
    TempDir tmp;
    ExperimentConfig cfg;
    cfg.n = 20;
    cfg.scenario = Scenario::SatelliteOnly;
    cfg.snr_db_list = {std::nullopt};
    cfg.output_dir = tmp.path.string();
    ProcedureParams p;
    p.solver = SolverMode::TV;
    p.initial_m = 150;
    const auto sat = imaging_procedure(cfg, p);
    CHECK(sat.status == ProcedureStatus::QualityMet);
    CHECK_FALSE(sat.debris_detected);
    CHECK(sat.decision == "no debris detected");
    CHECK(fs::exists(tmp.path / "SatelliteOnly_procedure_TV.pgm"));
    CHECK(fs::exists(tmp.path / "SatelliteOnly_procedure.csv"));
    CHECK(fs::exists(tmp.path / "SatelliteOnly_procedure_manifest.json"));

    cfg.scenario = Scenario::Combined;
    cfg.phantom.debris_count = 10;
    p.mode = QualityMode::Deployment;
    p.quality_threshold = 1e-6;
    const auto comb = imaging_procedure(cfg, p);
    CHECK(comb.debris_detected);
    CHECK(comb.outside_energy_fraction > p.detection_threshold);
    CHECK(comb.steps.front().quality <= 1e-6);
}
