#pragma once

#include "isar/types.hpp"

namespace isar::detail {

// Euclidean projection onto {x : |y - Φx|_2 <= ε} for a general Φ. ΦΦᵀ is
// diagonalized once (M×M); each projection costs two products with Φ plus a
// scalar root find for the multiplier.
class ResidualBall {
public:
    ResidualBall(const Matrix& phi, const Vector& y, double epsilon);

    Vector project(const Vector& q) const;

    /// Φᵀ (ΦΦᵀ)⁺ r.
    Vector pinv_apply(const Vector& r) const;

    /// Φ⁺ y, the minimum-norm least-squares solution.
    Vector min_norm_solution() const { return pinv_apply(y_); }

    bool rank_deficient() const noexcept { return rank_ < s_.size(); }
    double epsilon() const noexcept { return epsilon_; }

private:
    const Matrix& phi_;
    Vector y_;
    double epsilon_;
    Matrix u_;       // eigenvectors of ΦΦᵀ
    Vector s_;       // eigenvalues, zeroed below tolerance
    Eigen::Index rank_ = 0;
};

} // namespace isar::detail
