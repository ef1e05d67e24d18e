#pragma once

// Sparse-recovery solvers for y = Φx:
//   L1  - min |x|_1  s.t. |y - Φx|_2 <= ε
//   TV  - min TV(X)  s.t. |y - Φx|_2 <= ε   (isotropic, replicate boundary)
//   SL0 - smoothed-L0 with feasibility projections
//   SBL - evidence-maximization sparse Bayesian learning
// L1 and TV share one first-order scheme: Nesterov's accelerated method on a
// Huber-smoothed objective over the residual ball, with geometric
// continuation of the smoothing parameter μ.

#include "isar/encoding.hpp"
#include "isar/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace isar {

enum class SolverMode { L1, TV, SL0, SBL };

inline constexpr SolverMode kAllSolvers[] = {SolverMode::L1, SolverMode::TV, SolverMode::SL0,
                                             SolverMode::SBL};

std::string_view to_string(SolverMode mode) noexcept;
/// Accepts "L1", "TV", "SL0", "SBL" (case-insensitive).
SolverMode parse_solver_mode(std::string_view name);

struct SolverConfig {
    SolverMode mode = SolverMode::L1;

    // Residual-ball radius. Unset means 0 (equality constraint) unless the
    // caller fills it from the known noise level.
    std::optional<double> epsilon;

    // Smoothing continuation (L1, TV). mu_final is relative to |x0|_inf where
    // x0 is the minimum-norm solution; the first stage starts at 0.9 |x0|_inf.
    double mu_final = 1e-6;
    int continuation_stages = 5;
    int max_iters_per_stage = 5000;
    double convergence_tol = 1e-6;

    // SL0: σ starts at 2 max|x0| and is multiplied by sl0_sigma_decrease until
    // it falls below sl0_sigma_min * max|x0|.
    double sl0_sigma_decrease = 0.5;
    int sl0_inner_iters = 3;
    double sl0_step = 2.0;
    double sl0_sigma_min = 1e-4;

    // SBL: coefficients whose precision 1/γ exceeds sbl_prune_threshold are
    // fixed at zero. noise_variance unset means a 1e-10 relative floor when
    // not estimating; sbl_estimate_noise turns on the EM noise update.
    double sbl_prune_threshold = 1e8;
    int sbl_max_iters = 200;
    double sbl_tol = 1e-6;
    std::optional<double> noise_variance;
    bool sbl_estimate_noise = false;

    std::uint64_t seed = 0;

    /// Throws ArgumentError on invariant violations.
    void validate() const;
    static SolverConfig defaults_for(SolverMode mode);
};

struct RecoveryResult {
    Vector x_hat;
    int iterations = 0;
    double final_residual = 0.0;
    std::vector<double> objective_trace; // one entry per stage (SBL: per iteration)
    double wall_time_s = 0.0;
    bool converged = false;

    // Solver-specific diagnostics.
    std::vector<double> sigma_schedule;  // SL0
    std::vector<double> evidence_trace;  // SBL log marginal likelihood per iteration
    std::vector<double> mu_schedule;     // L1/TV
    bool pseudoinverse_fallback = false; // SL0: ΦΦᵀ was numerically singular
    bool jitter_applied = false;         // SBL: covariance needed regularization
    double estimated_noise_variance = 0.0;
    std::vector<std::string> warnings;
};

RecoveryResult solve_l1(const SensingMatrix& phi, const Vector& y, const SolverConfig& cfg);
RecoveryResult solve_tv(const SensingMatrix& phi, const Vector& y, int n, const SolverConfig& cfg);
RecoveryResult solve_sl0(const SensingMatrix& phi, const Vector& y, const SolverConfig& cfg);
RecoveryResult solve_sbl(const SensingMatrix& phi, const Vector& y, const SolverConfig& cfg);

/// Dispatches on cfg.mode; TV uses phi.side() as the image side.
RecoveryResult recover(const SensingMatrix& phi, const Vector& y, const SolverConfig& cfg);

/// Σ_ij sqrt(D_h(X)² + D_v(X)²), D_h(i,j) = X(i+1,j) - X(i,j),
/// D_v(i,j) = X(i,j+1) - X(i,j), differences past the last row/column are 0.
double tv_norm(const Image& X);

namespace smoothing {

/// Huber-smoothed |x|_1: Σ h_μ(x_i) with h_μ(t) = t²/2μ for |t| < μ and
/// |t| - μ/2 otherwise. Writes the gradient when grad is non-null.
double huber_l1(const Vector& x, double mu, Vector* grad = nullptr);

/// Huber-smoothed isotropic TV of the row-major n×n image x.
double smoothed_tv(const Vector& x, int n, double mu, Vector* grad = nullptr);

/// Upper bound on |D|² for the stacked difference operator (8 in 2D).
inline constexpr double kDifferenceOperatorNormSq = 8.0;

} // namespace smoothing

} // namespace isar
