#include "isar/solvers.hpp"

#include "isar/errors.hpp"
#include "residual_ball.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>

namespace isar {

std::string_view to_string(SolverMode mode) noexcept
{
    switch (mode) {
    case SolverMode::L1: return "L1";
    case SolverMode::TV: return "TV";
    case SolverMode::SL0: return "SL0";
    case SolverMode::SBL: return "SBL";
    }
    return "?";
}

SolverMode parse_solver_mode(std::string_view name)
{
    std::string up(name);
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
    for (auto m : kAllSolvers) {
        if (up == to_string(m)) {
            return m;
        }
    }
    throw ArgumentError("unknown solver '" + std::string(name) + "'");
}

void SolverConfig::validate() const
{
    if (epsilon && !(*epsilon >= 0.0)) {
        throw ArgumentError("epsilon must be nonnegative");
    }
    if (!(mu_final > 0.0)) {
        throw ArgumentError("mu_final must be positive");
    }
    if (continuation_stages < 1) {
        throw ArgumentError("continuation_stages must be at least 1");
    }
    if (max_iters_per_stage < 1) {
        throw ArgumentError("max_iters_per_stage must be at least 1");
    }
    if (!(convergence_tol >= 0.0)) {
        throw ArgumentError("convergence_tol must be nonnegative");
    }
    if (!(sl0_sigma_decrease > 0.0 && sl0_sigma_decrease < 1.0)) {
        throw ArgumentError("sl0_sigma_decrease must be in (0, 1)");
    }
    if (sl0_inner_iters < 1) {
        throw ArgumentError("sl0_inner_iters must be at least 1");
    }
    if (!(sl0_step > 0.0) || !(sl0_sigma_min > 0.0)) {
        throw ArgumentError("sl0_step and sl0_sigma_min must be positive");
    }
    if (!(sbl_prune_threshold > 0.0)) {
        throw ArgumentError("sbl_prune_threshold must be positive");
    }
    if (sbl_max_iters < 1) {
        throw ArgumentError("sbl_max_iters must be at least 1");
    }
    if (noise_variance && !(*noise_variance >= 0.0)) {
        throw ArgumentError("noise_variance must be nonnegative");
    }
}

SolverConfig SolverConfig::defaults_for(SolverMode mode)
{
    SolverConfig cfg;
    cfg.mode = mode;
    return cfg;
}

namespace {

using Clock = std::chrono::steady_clock;

void check_dimensions(const SensingMatrix& phi, const Vector& y)
{
    if (y.size() != phi.rows()) {
        throw ArgumentError("measurement length " + std::to_string(y.size()) + " does not match " +
                            std::to_string(phi.rows()) + " sensing rows");
    }
    if (!y.allFinite()) {
        throw ArgumentError("measurements must be finite");
    }
}

// Smooth objective f_μ with gradient Lipschitz constant lipschitz_scale / μ.
struct SmoothObjective {
    double lipschitz_scale;
    double (*eval)(const Vector& x, double mu, Vector* grad, int n);
    int n;

    double operator()(const Vector& x, double mu, Vector* grad) const { return eval(x, mu, grad, n); }
};

double eval_l1(const Vector& x, double mu, Vector* grad, int)
{
    return smoothing::huber_l1(x, mu, grad);
}

double eval_tv(const Vector& x, double mu, Vector* grad, int n)
{
    return smoothing::smoothed_tv(x, n, mu, grad);
}

struct StageOutcome {
    Vector x;
    int iterations;
    bool converged;
};

// One continuation stage of Nesterov's method with two-sequence averaging:
//   y_k = P(x_k - ∇f(x_k)/L)
//   z_k = P(x_start - Σ_{i<=k} α_i ∇f(x_i)/L),   α_i = (i+1)/2
//   x_{k+1} = τ_k z_k + (1-τ_k) y_k,             τ_k = 2/(k+3)
// Stops when f_μ(x_k) moves less than tol relative to its mean over the
// previous 10 iterates; `floor` keeps the test meaningful when the objective
// itself goes to zero (e.g. TV of a constant image).
StageOutcome nesterov_stage(const SmoothObjective& f, const detail::ResidualBall& ball, const Matrix& phi,
                            const Vector& start, double mu, int max_iters, double tol, double floor)
{
    const double lip = f.lipschitz_scale / mu;
    const bool affine = ball.epsilon() == 0.0;

    // With ε = 0 the feasible set is affine, so projecting x - g/L for a
    // feasible x reduces to removing the row-space component of g.
    auto tangent = [&](const Vector& g) -> Vector { return g - ball.pinv_apply(phi * g); };

    Vector x = start;
    Vector yk = start;
    Vector grad(start.size());
    Vector acc = Vector::Zero(start.size());
    std::deque<double> recent;

    int k = 0;
    bool converged = false;
    for (; k < max_iters; ++k) {
        const double fx = f(x, mu, &grad);

        if (recent.size() == 10) {
            const double mean = std::accumulate(recent.begin(), recent.end(), 0.0) / 10.0;
            if (std::abs(fx - mean) <= tol * std::max(mean, floor)) {
                converged = true;
                break;
            }
            recent.pop_front();
        }
        recent.push_back(fx);

        const double alpha = 0.5 * (k + 1);
        const double tau = 2.0 / (k + 3);
        Vector zk;
        if (affine) {
            const Vector pg = tangent(grad);
            yk = x - pg / lip;
            acc += alpha * pg;
            zk = start - acc / lip;
        } else {
            yk = ball.project(x - grad / lip);
            acc += alpha * grad;
            zk = ball.project(start - acc / lip);
        }
        x = tau * zk + (1.0 - tau) * yk;
    }
    if (affine) {
        yk = ball.project(yk); // clear rounding drift off the affine set
    }
    return {std::move(yk), k, converged};
}

RecoveryResult smoothed_continuation(const SmoothObjective& f, const SensingMatrix& phi, const Vector& y,
                                     const SolverConfig& cfg)
{
    cfg.validate();
    check_dimensions(phi, y);
    const auto t0 = Clock::now();

    RecoveryResult res;
    const double eps = cfg.epsilon.value_or(0.0);
    const Matrix& a = phi.data();

    if (y.norm() <= eps) {
        // zero is feasible and minimizes both objectives
        res.x_hat = Vector::Zero(phi.cols());
        res.final_residual = y.norm();
        res.converged = true;
        res.objective_trace.assign(1, 0.0);
        res.wall_time_s = std::chrono::duration<double>(Clock::now() - t0).count();
        return res;
    }

    detail::ResidualBall ball(a, y, eps);
    Vector x = ball.project(ball.min_norm_solution());
    const double scale = x.cwiseAbs().maxCoeff();
    const double mu_start = 0.9 * scale;
    const double mu_end = std::min(cfg.mu_final * scale, mu_start);
    const int stages = cfg.continuation_stages;
    const double ratio = stages > 1 ? std::pow(mu_end / mu_start, 1.0 / (stages - 1)) : 1.0;

    const double floor = 1e-6 * f(x, mu_end, nullptr);

    res.converged = true;
    double mu = stages > 1 ? mu_start : mu_end;
    for (int s = 0; s < stages; ++s) {
        auto out = nesterov_stage(f, ball, a, x, mu, cfg.max_iters_per_stage, cfg.convergence_tol, floor);
        x = std::move(out.x);
        res.iterations += out.iterations;
        res.converged = res.converged && out.converged;
        res.mu_schedule.push_back(mu);
        res.objective_trace.push_back(f(x, mu_end, nullptr));
        mu *= ratio;
    }

    res.x_hat = std::move(x);
    res.final_residual = (y - a * res.x_hat).norm();
    if (!res.converged) {
        res.warnings.emplace_back("iteration budget reached before the stopping tolerance");
    }
    res.wall_time_s = std::chrono::duration<double>(Clock::now() - t0).count();
    return res;
}

} // namespace

RecoveryResult solve_l1(const SensingMatrix& phi, const Vector& y, const SolverConfig& cfg)
{
    if (cfg.mode != SolverMode::L1) {
        throw ArgumentError("solve_l1 called with a non-L1 config");
    }
    const SmoothObjective f{1.0, &eval_l1, phi.side()};
    return smoothed_continuation(f, phi, y, cfg);
}

RecoveryResult solve_tv(const SensingMatrix& phi, const Vector& y, int n, const SolverConfig& cfg)
{
    if (cfg.mode != SolverMode::TV) {
        throw ArgumentError("solve_tv called with a non-TV config");
    }
    if (n < 1 || static_cast<Eigen::Index>(n) * n != phi.cols()) {
        throw ArgumentError("image side " + std::to_string(n) + " does not match " +
                            std::to_string(phi.cols()) + " sensing columns");
    }
    const SmoothObjective f{smoothing::kDifferenceOperatorNormSq, &eval_tv, n};
    return smoothed_continuation(f, phi, y, cfg);
}

RecoveryResult recover(const SensingMatrix& phi, const Vector& y, const SolverConfig& cfg)
{
    switch (cfg.mode) {
    case SolverMode::L1: return solve_l1(phi, y, cfg);
    case SolverMode::TV: return solve_tv(phi, y, phi.side(), cfg);
    case SolverMode::SL0: return solve_sl0(phi, y, cfg);
    case SolverMode::SBL: return solve_sbl(phi, y, cfg);
    }
    throw ArgumentError("unknown solver mode");
}

} // namespace isar
