#pragma once

#include "isar/solvers.hpp"
#include "isar/types.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace isar {

struct TrialMetrics {
    double mse = 0.0;
    double relative_l2 = 0.0;
    double runtime_s = 0.0;
    SolverMode solver = SolverMode::L1;
    int snapshots_m = 0;
    std::optional<double> snr_db; // empty when noiseless
    std::uint64_t trial_seed = 0;
};

/// Aggregate of one (solver, snapshots, snr) cell. Standard deviations use
/// the n-1 denominator and are 0 for a single trial.
struct CellSummary {
    SolverMode solver = SolverMode::L1;
    int snapshots = 0;
    std::optional<double> snr_db;
    int trials = 0;
    double mse_mean = 0.0;
    double mse_std = 0.0;
    double rel_l2_mean = 0.0;
    double runtime_mean_s = 0.0;
    double runtime_std_s = 0.0;
};

/// Pixel-mean squared error (1/N) Σ (a_i - b_i)².
double mse(const Vector& x_hat, const Vector& x_true);

/// |x_hat - x_true| / |x_true|; |x_hat| when x_true is zero.
double relative_l2(const Vector& x_hat, const Vector& x_true);

/// Groups by (solver, snapshots, snr) and returns cells sorted by solver,
/// then snapshots, then snr (noiseless last). Result is independent of input order.
std::vector<CellSummary> aggregate_trials(std::span<const TrialMetrics> trials);

/// Wall time of fn() alone on the monotonic clock.
template <class Fn>
double time_solver(Fn&& fn)
{
    const auto t0 = std::chrono::steady_clock::now();
    std::forward<Fn>(fn)();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Shortest round-trip decimal rendering.
std::string format_double(double v);
/// SNR label: the number, or "noiseless".
std::string format_snr(const std::optional<double>& snr_db);

/// Report CSV:
///   solver,snapshots,snr_db,trials,mse_mean,mse_std,rel_l2_mean,runtime_mean_s
std::string format_report_csv(std::span<const CellSummary> cells);

/// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> a, std::span<const double> b);

} // namespace isar
