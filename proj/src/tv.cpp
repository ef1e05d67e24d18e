#include "isar/solvers.hpp"

#include "isar/errors.hpp"

#include <cmath>

namespace isar {

double tv_norm(const Image& X)
{
    if (X.rows() < 1 || X.rows() != X.cols()) {
        throw ArgumentError("TV norm needs a non-empty square image");
    }
    const Eigen::Index n = X.rows();
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double dh = i + 1 < n ? X(i + 1, j) - X(i, j) : 0.0;
            const double dv = j + 1 < n ? X(i, j + 1) - X(i, j) : 0.0;
            total += std::sqrt(dh * dh + dv * dv);
        }
    }
    return total;
}

namespace smoothing {

double huber_l1(const Vector& x, double mu, Vector* grad)
{
    double value = 0.0;
    if (grad) {
        grad->resize(x.size());
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double a = std::abs(x[i]);
        if (a < mu) {
            value += x[i] * x[i] / (2.0 * mu);
            if (grad) {
                (*grad)[i] = x[i] / mu;
            }
        } else {
            value += a - 0.5 * mu;
            if (grad) {
                (*grad)[i] = x[i] > 0.0 ? 1.0 : -1.0;
            }
        }
    }
    return value;
}

double smoothed_tv(const Vector& x, int n, double mu, Vector* grad)
{
    if (x.size() != static_cast<Eigen::Index>(n) * n) {
        throw ArgumentError("image vector length must be n²");
    }
    if (grad) {
        grad->setZero(x.size());
    }
    double value = 0.0;
    auto at = [n](int i, int j) { return static_cast<Eigen::Index>(i) * n + j; };
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double here = x[at(i, j)];
            const double dh = i + 1 < n ? x[at(i + 1, j)] - here : 0.0;
            const double dv = j + 1 < n ? x[at(i, j + 1)] - here : 0.0;
            const double mag = std::sqrt(dh * dh + dv * dv);
            double scale;
            if (mag < mu) {
                value += mag * mag / (2.0 * mu);
                scale = 1.0 / mu;
            } else {
                value += mag - 0.5 * mu;
                scale = 1.0 / mag;
            }
            if (grad) {
                // adjoint of the forward differences
                const double gh = scale * dh;
                const double gv = scale * dv;
                if (i + 1 < n) {
                    (*grad)[at(i + 1, j)] += gh;
                    (*grad)[at(i, j)] -= gh;
                }
                if (j + 1 < n) {
                    (*grad)[at(i, j + 1)] += gv;
                    (*grad)[at(i, j)] -= gv;
                }
            }
        }
    }
    return value;
}

} // namespace smoothing
} // namespace isar
