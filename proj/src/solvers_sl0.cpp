#include "isar/solvers.hpp"

#include "isar/errors.hpp"
#include "residual_ball.hpp"

#include <chrono>
#include <cmath>

namespace isar {

RecoveryResult solve_sl0(const SensingMatrix& phi, const Vector& y, const SolverConfig& cfg)
{
    if (cfg.mode != SolverMode::SL0) {
        throw ArgumentError("solve_sl0 called with a non-SL0 config");
    }
    cfg.validate();
    if (y.size() != phi.rows() || !y.allFinite()) {
        throw ArgumentError("measurement vector does not match the sensing matrix");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const Matrix& a = phi.data();

    RecoveryResult res;
    detail::ResidualBall ball(a, y, 0.0);
    if (ball.rank_deficient()) {
        res.pseudoinverse_fallback = true;
        res.warnings.emplace_back("ΦΦᵀ is singular; using the pseudoinverse");
    }

    Vector x = ball.min_norm_solution();
    const double peak = x.cwiseAbs().maxCoeff();
    res.converged = true;
    if (peak > 0.0) {
        const double sigma_min = cfg.sl0_sigma_min * peak;
        double sigma = 2.0 * peak;
        while (sigma > sigma_min) {
            res.sigma_schedule.push_back(sigma);
            const double two_sigma_sq = 2.0 * sigma * sigma;
            for (int it = 0; it < cfg.sl0_inner_iters; ++it) {
                // ascent on Σ exp(-x²/2σ²), then back onto Φx = y
                const Vector delta = x.array() * (-x.array().square() / two_sigma_sq).exp();
                x -= cfg.sl0_step * delta;
                x -= ball.pinv_apply(a * x - y);
                ++res.iterations;
            }
            const double surrogate =
                static_cast<double>(x.size()) - (-x.array().square() / two_sigma_sq).exp().sum();
            res.objective_trace.push_back(surrogate);
            sigma *= cfg.sl0_sigma_decrease;
        }
    }

    res.x_hat = std::move(x);
    res.final_residual = (y - a * res.x_hat).norm();
    res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

} // namespace isar
