#include "isar/encoding.hpp"

#include "isar/errors.hpp"
#include "isar/rng.hpp"

#include <cmath>
#include <set>
#include <string>

namespace isar {

int EncodedAperture::active_count() const
{
    return static_cast<int>(mask.cast<int>().sum());
}

SensingMatrix::SensingMatrix(Matrix data, int side, std::vector<std::uint64_t> row_seeds)
    : data_(std::move(data))
    , side_(side)
    , row_seeds_(std::move(row_seeds))
{
    if (data_.rows() < 1) {
        throw ArgumentError("sensing matrix needs at least one row");
    }
    if (side_ < 1 || data_.cols() != static_cast<Eigen::Index>(side_) * side_) {
        throw ArgumentError("sensing matrix columns must equal side²");
    }
    if (row_seeds_.empty()) {
        row_seeds_.assign(data_.rows(), 0);
    }
    if (row_seeds_.size() != static_cast<std::size_t>(data_.rows())) {
        throw ArgumentError("one seed per row required");
    }
    for (Eigen::Index i = 0; i < data_.rows(); ++i) {
        bool any = false;
        for (Eigen::Index j = 0; j < data_.cols(); ++j) {
            const double v = data_(i, j);
            if (v != 0.0 && v != 1.0) {
                throw ArgumentError("sensing matrix entries must be 0 or 1");
            }
            any = any || v == 1.0;
        }
        if (!any) {
            throw ArgumentError("row " + std::to_string(i) + " has no active spot beam");
        }
    }
}

SensingMatrix SensingMatrix::assemble(std::span<const EncodedAperture> apertures)
{
    if (apertures.empty()) {
        throw ArgumentError("no apertures to assemble");
    }
    const int n = apertures.front().side();
    const Eigen::Index cols = static_cast<Eigen::Index>(n) * n;
    Matrix data(static_cast<Eigen::Index>(apertures.size()), cols);
    std::vector<std::uint64_t> seeds;
    seeds.reserve(apertures.size());
    for (std::size_t i = 0; i < apertures.size(); ++i) {
        const auto& a = apertures[i];
        if (a.mask.rows() != n || a.mask.cols() != n) {
            throw ArgumentError("apertures have mixed sizes");
        }
        // MaskGrid is row-major, so its storage order is the flattening order
        data.row(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::Matrix<std::uint8_t, 1, Eigen::Dynamic>>(a.mask.data(), cols)
                .cast<double>();
        seeds.push_back(a.seed);
    }
    return SensingMatrix(std::move(data), n, std::move(seeds));
}

MaskGrid SensingMatrix::row_mask(int i) const
{
    if (i < 0 || i >= rows()) {
        throw ArgumentError("row index out of range");
    }
    MaskGrid m(side_, side_);
    for (int r = 0; r < side_; ++r) {
        for (int c = 0; c < side_; ++c) {
            m(r, c) = static_cast<std::uint8_t>(data_(i, r * side_ + c));
        }
    }
    return m;
}

SensingMatrix SensingMatrix::leading_rows(int count) const
{
    if (count < 1 || count > rows()) {
        throw ArgumentError("leading row count out of range");
    }
    return SensingMatrix(data_.topRows(count), side_,
                         std::vector<std::uint64_t>(row_seeds_.begin(), row_seeds_.begin() + count));
}

EncodedAperture generate_encoded_aperture(int n, double p, std::uint64_t seed)
{
    if (n < 1) {
        throw ArgumentError("aperture side must be at least 1");
    }
    if (!(p > 0.0 && p <= 1.0)) {
        throw ArgumentError("Bernoulli probability must be in (0, 1]");
    }
    Rng rng(seed);
    EncodedAperture ap{MaskGrid::Zero(n, n), seed, p};
    for (int attempt = 0; attempt < kApertureRetryBudget; ++attempt) {
        for (Eigen::Index k = 0; k < ap.mask.size(); ++k) {
            ap.mask.data()[k] = rng.uniform() < p ? 1 : 0;
        }
        if (ap.active_count() > 0) {
            return ap;
        }
    }
    throw GenerationError("all-zero aperture drawn " + std::to_string(kApertureRetryBudget) + " times");
}

std::vector<EncodedAperture> generate_apertures(int n, int count, double p, std::uint64_t base_seed)
{
    if (count < 1) {
        throw ArgumentError("aperture count must be at least 1");
    }
    std::vector<EncodedAperture> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        out.push_back(generate_encoded_aperture(n, p, derive_seed(base_seed, {static_cast<std::uint64_t>(i)})));
    }
    return out;
}

namespace {

struct CoherenceScan {
    std::optional<double> coherence;
    int zero_columns = 0;
};

CoherenceScan scan_columns(const Matrix& a)
{
    const Matrix gram = a.transpose() * a;
    std::vector<Eigen::Index> nonzero;
    CoherenceScan scan;
    for (Eigen::Index j = 0; j < gram.cols(); ++j) {
        if (gram(j, j) > 0.0) {
            nonzero.push_back(j);
        } else {
            ++scan.zero_columns;
        }
    }
    if (nonzero.size() < 2) {
        return scan;
    }
    double best = 0.0;
    for (std::size_t a_i = 0; a_i < nonzero.size(); ++a_i) {
        const auto i = nonzero[a_i];
        for (std::size_t b_i = a_i + 1; b_i < nonzero.size(); ++b_i) {
            const auto j = nonzero[b_i];
            best = std::max(best, std::abs(gram(i, j)) / std::sqrt(gram(i, i) * gram(j, j)));
        }
    }
    scan.coherence = std::min(best, 1.0);
    return scan;
}

} // namespace

double mutual_coherence(const SensingMatrix& phi)
{
    const auto scan = scan_columns(phi.data());
    if (!scan.coherence) {
        throw ArgumentError("mutual coherence needs at least two nonzero columns");
    }
    return *scan.coherence;
}

CoherenceReport rip_diagnostics(const SensingMatrix& phi)
{
    CoherenceReport rep;
    const auto scan = scan_columns(phi.data());
    rep.mutual_coherence = scan.coherence;
    rep.zero_column_count = scan.zero_columns;
    rep.is_underdetermined = phi.rows() < phi.cols();

    const Matrix& a = phi.data();
    const Matrix rows_gram = a * a.transpose();
    for (Eigen::Index i = 0; i < rows_gram.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < rows_gram.cols(); ++j) {
            const double v = std::abs(rows_gram(i, j)) / std::sqrt(rows_gram(i, i) * rows_gram(j, j));
            rep.max_row_inner_product = std::max(rep.max_row_inner_product, v);
        }
    }

    std::set<std::vector<std::uint8_t>> seen;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        std::vector<std::uint8_t> key(a.cols());
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            key[j] = a(i, j) != 0.0;
        }
        if (!seen.insert(std::move(key)).second) {
            ++rep.duplicate_row_count;
        }
    }
    return rep;
}

Vector forward_measure(const SensingMatrix& phi, const Vector& x)
{
    if (x.size() != phi.cols()) {
        throw ArgumentError("scene length " + std::to_string(x.size()) + " does not match " +
                            std::to_string(phi.cols()) + " sensing columns");
    }
    return phi.data() * x;
}

MeasurementSet add_awgn(const Vector& y, double snr_db, std::uint64_t seed)
{
    if (!std::isfinite(snr_db)) {
        throw ArgumentError("SNR must be finite");
    }
    if (y.size() == 0) {
        throw ArgumentError("empty measurement vector");
    }
    const double power = y.squaredNorm() / static_cast<double>(y.size());
    if (!(power > 0.0)) {
        throw UndefinedSnrError("SNR is undefined for an all-zero measurement vector");
    }
    const double variance = power / std::pow(10.0, snr_db / 10.0);
    const double sigma = std::sqrt(variance);

    Rng rng(seed);
    MeasurementSet out{y, snr_db, seed, variance};
    for (Eigen::Index i = 0; i < out.y.size(); ++i) {
        out.y[i] += sigma * rng.normal();
    }
    return out;
}

MeasurementSet noiseless_measurement(const Vector& y)
{
    return MeasurementSet{y, std::nullopt, 0, 0.0};
}

} // namespace isar
