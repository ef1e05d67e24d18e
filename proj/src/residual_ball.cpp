#include "residual_ball.hpp"

#include <cmath>
#include <limits>

namespace isar::detail {

ResidualBall::ResidualBall(const Matrix& phi, const Vector& y, double epsilon)
    : phi_(phi)
    , y_(y)
    , epsilon_(epsilon)
{
    const Matrix gram = phi_ * phi_.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    u_ = eig.eigenvectors();
    s_ = eig.eigenvalues();
    const double smax = s_.size() ? s_.maxCoeff() : 0.0;
    const double tol = smax * static_cast<double>(gram.rows()) * std::numeric_limits<double>::epsilon() * 16;
    rank_ = 0;
    for (Eigen::Index i = 0; i < s_.size(); ++i) {
        if (s_[i] <= tol) {
            s_[i] = 0.0;
        } else {
            ++rank_;
        }
    }
}

Vector ResidualBall::pinv_apply(const Vector& r) const
{
    Vector c = u_.transpose() * r;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        c[i] = s_[i] > 0.0 ? c[i] / s_[i] : 0.0;
    }
    return phi_.transpose() * (u_ * c);
}

Vector ResidualBall::project(const Vector& q) const
{
    const Vector r0 = y_ - phi_ * q;
    const double r0_norm = r0.norm();
    if (r0_norm <= epsilon_) {
        return q;
    }
    const Vector c = u_.transpose() * r0;

    // Residual components along the null space of ΦΦᵀ cannot be reduced.
    double floor_sq = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        if (s_[i] == 0.0) {
            floor_sq += c[i] * c[i];
        }
    }

    Vector w(c.size());
    if (epsilon_ == 0.0 || floor_sq >= epsilon_ * epsilon_) {
        for (Eigen::Index i = 0; i < c.size(); ++i) {
            w[i] = s_[i] > 0.0 ? c[i] / s_[i] : 0.0;
        }
        return q + phi_.transpose() * (u_ * w);
    }

    // x = q + λ Φᵀ r(λ) with r(λ) = Σ c_i / (1 + λ s_i) u_i; pick λ so that
    // |r(λ)| = ε. Newton on 1/|r(λ)| - 1/ε is monotone from λ = 0.
    auto residual_norm = [&](double lambda, double* deriv) {
        double sq = 0.0, dsq = 0.0;
        for (Eigen::Index i = 0; i < c.size(); ++i) {
            const double d = 1.0 + lambda * s_[i];
            sq += c[i] * c[i] / (d * d);
            dsq += -2.0 * c[i] * c[i] * s_[i] / (d * d * d);
        }
        const double nrm = std::sqrt(sq);
        if (deriv) {
            *deriv = 0.5 * dsq / nrm;
        }
        return nrm;
    };

    double lambda = 0.0;
    for (int it = 0; it < 200; ++it) {
        double dnorm = 0.0;
        const double nrm = residual_norm(lambda, &dnorm);
        const double psi = 1.0 / nrm - 1.0 / epsilon_;
        if (psi >= 0.0) {
            break;
        }
        const double dpsi = -dnorm / (nrm * nrm);
        const double next = lambda - psi / dpsi;
        if (!(next > lambda)) {
            break;
        }
        const bool done = (next - lambda) <= 1e-15 * next;
        lambda = next;
        if (done) {
            break;
        }
    }
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        w[i] = lambda * c[i] / (1.0 + lambda * s_[i]);
    }
    return q + phi_.transpose() * (u_ * w);
}

} // namespace isar::detail
