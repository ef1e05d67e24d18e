#pragma once

#include <Eigen/Dense>

namespace isar {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// n×n real image stored row-major, so the flat view is the row-major
/// vectorization used by the sensing model.
using Image = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Vector flatten(const Image& img)
{
    return Eigen::Map<const Vector>(img.data(), img.size());
}

inline Image unflatten(const Vector& x, Eigen::Index side)
{
    Image img(side, side);
    Eigen::Map<Vector>(img.data(), img.size()) = x;
    return img;
}

} // namespace isar
