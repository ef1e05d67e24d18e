#pragma once

// Encoded apertures, the sensing matrix built from them, the linear
// measurement model y = Φx and its noise.

#include "isar/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace isar {

using MaskGrid = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One snapshot's spot-beam pattern: mask(i, j) == 1 when the beam covering
/// cell (i, j) is active.
struct EncodedAperture {
    MaskGrid mask;
    std::uint64_t seed = 0;
    double bernoulli_p = 0.5;

    int side() const noexcept { return static_cast<int>(mask.rows()); }
    int active_count() const;
};

/// M×N binary matrix whose i-th row is the row-major flattening of aperture i.
class SensingMatrix {
public:
    /// Validates that data is binary with at least one active beam per row and
    /// that cols == side².
    SensingMatrix(Matrix data, int side, std::vector<std::uint64_t> row_seeds = {});

    static SensingMatrix assemble(std::span<const EncodedAperture> apertures);

    int rows() const noexcept { return static_cast<int>(data_.rows()); }
    int cols() const noexcept { return static_cast<int>(data_.cols()); }
    int side() const noexcept { return side_; }
    const Matrix& data() const noexcept { return data_; }
    const std::vector<std::uint64_t>& row_seeds() const noexcept { return row_seeds_; }

    /// Row i folded back into an n×n mask.
    MaskGrid row_mask(int i) const;

    /// First `count` rows, used when an imaging run grows M incrementally.
    SensingMatrix leading_rows(int count) const;

private:
    Matrix data_;
    int side_;
    std::vector<std::uint64_t> row_seeds_;
};

struct MeasurementSet {
    Vector y;
    std::optional<double> snr_db; // empty when noiseless
    std::uint64_t noise_seed = 0;
    double noise_variance = 0.0;

    bool noiseless() const noexcept { return !snr_db.has_value(); }
};

struct CoherenceReport {
    std::optional<double> mutual_coherence; // empty with fewer than two nonzero columns
    double max_row_inner_product = 0.0;
    bool is_underdetermined = false;
    int duplicate_row_count = 0;
    int zero_column_count = 0;
};

inline constexpr int kApertureRetryBudget = 64;

/// Bernoulli(p) mask; the all-zero draw is rejected and redrawn from the same
/// stream up to kApertureRetryBudget times.
EncodedAperture generate_encoded_aperture(int n, double p, std::uint64_t seed);

/// count apertures whose seeds are derive_seed(base_seed, {index}). Aperture i
/// does not depend on count, so a longer sequence extends a shorter one.
std::vector<EncodedAperture> generate_apertures(int n, int count, double p, std::uint64_t base_seed);

/// max over distinct nonzero columns of |<c_i, c_j>| / (|c_i| |c_j|).
double mutual_coherence(const SensingMatrix& phi);

CoherenceReport rip_diagnostics(const SensingMatrix& phi);

Vector forward_measure(const SensingMatrix& phi, const Vector& x);

/// Adds N(0, mean(y²) / 10^(snr_db/10)) noise to every entry.
MeasurementSet add_awgn(const Vector& y, double snr_db, std::uint64_t seed);

MeasurementSet noiseless_measurement(const Vector& y);

} // namespace isar
