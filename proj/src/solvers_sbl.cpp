#include "isar/solvers.hpp"

#include "isar/errors.hpp"
#include "residual_ball.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <vector>

namespace isar {

namespace {

// Posterior quantities for the current hyperparameters restricted to the
// active columns. Σ_y = λI + Φ_A Γ_A Φ_Aᵀ is factored as L Lᵀ.
struct Posterior {
    Vector mean;       // μ_A
    Vector cov_diag;   // diag(Σ_x) on the active set
    double log_evidence = 0.0;
    double residual_sq = 0.0;
    bool jittered = false;
};

Posterior posterior(const Matrix& phi_a, const Vector& gamma_a, double lambda, const Vector& y)
{
    const Eigen::Index m = phi_a.rows();
    const Matrix b = phi_a * gamma_a.cwiseSqrt().asDiagonal();

    Matrix sy = Matrix::Zero(m, m);
    sy.selfadjointView<Eigen::Lower>().rankUpdate(b);
    sy.diagonal().array() += lambda;

    Posterior post;
    Eigen::LLT<Matrix> llt(sy);
    double jitter = 1e-12 * (sy.diagonal().sum() / static_cast<double>(m));
    while (llt.info() != Eigen::Success) {
        post.jittered = true;
        sy.diagonal().array() += jitter;
        llt.compute(sy);
        jitter *= 10.0;
        if (!std::isfinite(jitter)) {
            throw ArgumentError("SBL covariance could not be regularized");
        }
    }

    const auto lower = llt.matrixL();
    const Vector w = lower.solve(y);                 // L⁻¹ y
    const Matrix z = lower.solve(phi_a);             // L⁻¹ Φ_A
    const Vector sy_inv_y = lower.transpose().solve(w);

    post.mean = gamma_a.cwiseProduct(phi_a.transpose() * sy_inv_y);
    post.cov_diag = gamma_a - gamma_a.cwiseProduct(gamma_a).cwiseProduct(z.colwise().squaredNorm().transpose());
    post.cov_diag = post.cov_diag.cwiseMax(0.0);

    double log_det = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        log_det += 2.0 * std::log(llt.matrixLLT()(i, i));
    }
    post.log_evidence =
        -0.5 * (log_det + w.squaredNorm() + static_cast<double>(m) * std::log(2.0 * std::numbers::pi));
    post.residual_sq = (y - phi_a * post.mean).squaredNorm();
    return post;
}

} // namespace

RecoveryResult solve_sbl(const SensingMatrix& phi, const Vector& y, const SolverConfig& cfg)
{
    if (cfg.mode != SolverMode::SBL) {
        throw ArgumentError("solve_sbl called with a non-SBL config");
    }
    cfg.validate();
    if (y.size() != phi.rows() || !y.allFinite()) {
        throw ArgumentError("measurement vector does not match the sensing matrix");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const Matrix& a = phi.data();
    const Eigen::Index n = a.cols();
    const double m = static_cast<double>(a.rows());

    RecoveryResult res;
    res.x_hat = Vector::Zero(n);
    if (y.squaredNorm() == 0.0) {
        res.converged = true;
        res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return res;
    }

    double lambda = cfg.noise_variance.value_or(1e-10 * y.squaredNorm() / m);
    if (!(lambda > 0.0)) {
        lambda = 1e-10 * y.squaredNorm() / m;
    }

    // start from the energy of the minimum-norm solution spread evenly
    const Vector x0 = detail::ResidualBall(a, y, 0.0).min_norm_solution();
    Vector gamma = Vector::Constant(n, std::max(x0.squaredNorm() / static_cast<double>(n), 1e-12));
    const double prune_below = 1.0 / cfg.sbl_prune_threshold;

    std::vector<Eigen::Index> active(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        active[i] = i;
    }

    Posterior post;
    for (int it = 0; it < cfg.sbl_max_iters; ++it) {
        Matrix phi_a(a.rows(), static_cast<Eigen::Index>(active.size()));
        Vector gamma_a(static_cast<Eigen::Index>(active.size()));
        for (std::size_t k = 0; k < active.size(); ++k) {
            phi_a.col(static_cast<Eigen::Index>(k)) = a.col(active[k]);
            gamma_a[static_cast<Eigen::Index>(k)] = gamma[active[k]];
        }

        post = posterior(phi_a, gamma_a, lambda, y);
        res.jitter_applied = res.jitter_applied || post.jittered;
        res.evidence_trace.push_back(post.log_evidence);
        res.objective_trace.push_back(-post.log_evidence);
        ++res.iterations;

        // EM updates: γ_i ← μ_i² + Σ_ii, and optionally the noise variance
        double change = 0.0, peak = 0.0;
        double effective = 0.0;
        std::vector<Eigen::Index> keep;
        keep.reserve(active.size());
        for (std::size_t k = 0; k < active.size(); ++k) {
            const auto i = active[k];
            const auto kk = static_cast<Eigen::Index>(k);
            const double g_old = gamma[i];
            const double g_new = post.mean[kk] * post.mean[kk] + post.cov_diag[kk];
            effective += 1.0 - post.cov_diag[kk] / g_old;
            change = std::max(change, std::abs(g_new - g_old));
            peak = std::max(peak, g_new);
            gamma[i] = g_new;
            if (g_new >= prune_below) {
                keep.push_back(i);
            } else {
                gamma[i] = 0.0;
            }
        }
        if (cfg.sbl_estimate_noise) {
            lambda = std::max((post.residual_sq + lambda * effective) / m, 1e-12 * y.squaredNorm() / m);
        }
        const bool shrunk = keep.size() != active.size();
        active = std::move(keep);
        if (active.empty()) {
            break;
        }
        if (!shrunk && peak > 0.0 && change / peak < cfg.sbl_tol) {
            res.converged = true;
            break;
        }
    }

    // posterior mean for the final hyperparameters
    if (!active.empty()) {
        Matrix phi_a(a.rows(), static_cast<Eigen::Index>(active.size()));
        Vector gamma_a(static_cast<Eigen::Index>(active.size()));
        for (std::size_t k = 0; k < active.size(); ++k) {
            phi_a.col(static_cast<Eigen::Index>(k)) = a.col(active[k]);
            gamma_a[static_cast<Eigen::Index>(k)] = gamma[active[k]];
        }
        post = posterior(phi_a, gamma_a, lambda, y);
        res.jitter_applied = res.jitter_applied || post.jittered;
        for (std::size_t k = 0; k < active.size(); ++k) {
            res.x_hat[active[k]] = post.mean[static_cast<Eigen::Index>(k)];
        }
    }
    if (res.jitter_applied) {
        res.warnings.emplace_back("posterior covariance needed jitter regularization");
    }
    res.estimated_noise_variance = lambda;
    res.final_residual = (y - a * res.x_hat).norm();
    res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

} // namespace isar
