#include "isar/encoding.hpp"
#include "isar/errors.hpp"
#include "isar/rng.hpp"

#include "oracles/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace isar;

namespace {

oracle::Rows to_rows(const Matrix& m)
{
    oracle::Rows r(m.rows(), std::vector<double>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            r[i][j] = m(i, j);
        }
    }
    return r;
}

SensingMatrix random_matrix(int m, int side, std::uint64_t seed)
{
    auto aps = generate_apertures(side, m, 0.5, seed);
    return SensingMatrix::assemble(aps);
}

Vector random_vector(int n, Rng& rng)
{
    Vector x(n);
    for (int i = 0; i < n; ++i) {
        x[i] = rng.normal();
    }
    return x;
}

SensingMatrix identity_pattern(int side)
{
    return SensingMatrix(Matrix::Identity(side * side, side * side), side);
}

} // namespace

TEST_CASE("aperture generation")
{
    const auto ones = generate_encoded_aperture(3, 1.0, 5);
    CHECK(ones.mask.size() == 9);
    CHECK(ones.active_count() == 9);

    const auto a = generate_encoded_aperture(40, 0.5, 77);
    const auto b = generate_encoded_aperture(40, 0.5, 77);
    CHECK(a.mask == b.mask);
    CHECK(a.seed == 77);
    CHECK(a.bernoulli_p == 0.5);
    CHECK(a.mask != generate_encoded_aperture(40, 0.5, 78).mask);

    CHECK_THROWS_AS(generate_encoded_aperture(4, 0.0, 1), ArgumentError);
    CHECK_THROWS_AS(generate_encoded_aperture(4, 1.5, 1), ArgumentError);
    CHECK_THROWS_AS(generate_encoded_aperture(0, 0.5, 1), ArgumentError);
    CHECK_THROWS_AS(generate_apertures(4, 0, 0.5, 1), ArgumentError);
}

TEST_CASE("all-zero draws exhaust the retry budget")
{
    // a single cell at p = 1e-300 is all-zero on every draw
    CHECK_THROWS_AS(generate_encoded_aperture(1, 1e-300, 3), GenerationError);
}

TEST_CASE("active-beam count lies in the central binomial interval")
{
    const int lo = oracle::binomial_quantile(1600, 0.5, 0.00005);
    const int hi = oracle::binomial_quantile(1600, 0.5, 0.99995);
    CHECK(lo == doctest::Approx(722).epsilon(0.003));
    CHECK(hi == doctest::Approx(878).epsilon(0.003));
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const int c = generate_encoded_aperture(40, 0.5, seed).active_count();
        CHECK(c >= lo);
        CHECK(c <= hi);
    }
}

TEST_CASE("per-cell activation rate over 1000 apertures")
{
    const auto aps = generate_apertures(40, 1000, 0.5, 99);
    std::vector<int> count(1600, 0);
    for (const auto& a : aps) {
        for (int k = 0; k < 1600; ++k) {
            count[k] += a.mask.data()[k];
        }
    }
    // [0.46, 0.54] is about 2.5 sigma per cell, so some of the 1600 cells
    // land outside it by chance; compare the outlier count with the binomial tail
    const double tail = oracle::binomial_cdf(1000, 0.5, 459) + (1.0 - oracle::binomial_cdf(1000, 0.5, 540));
    long total = 0;
    int outside = 0;
    for (int c : count) {
        total += c;
        outside += c < 460 || c > 540;
    }
    const double expected = 1600 * tail;
    CHECK(total / 1.6e6 == doctest::Approx(0.5).epsilon(0.01));
    CHECK(outside <= expected + 4 * std::sqrt(expected));
}

TEST_CASE("longer aperture sequences extend shorter ones")
{
    const auto shorter = generate_apertures(8, 5, 0.5, 4);
    const auto longer = generate_apertures(8, 9, 0.5, 4);
    for (int i = 0; i < 5; ++i) {
        CHECK(shorter[i].mask == longer[i].mask);
    }
    const auto phi = SensingMatrix::assemble(longer);
    CHECK(phi.leading_rows(5).data() == SensingMatrix::assemble(shorter).data());
    CHECK_THROWS_AS(phi.leading_rows(0), ArgumentError);
    CHECK_THROWS_AS(phi.leading_rows(10), ArgumentError);
}

TEST_CASE("assembly and the mask/row bijection")
{
    const auto aps = generate_apertures(40, 100, 0.5, 1);
    const auto phi = SensingMatrix::assemble(aps);
    CHECK(phi.rows() == 100);
    CHECK(phi.cols() == 1600);
    CHECK(phi.side() == 40);
    for (int i = 0; i < phi.rows(); ++i) {
        CHECK(phi.row_mask(i) == aps[i].mask);
        for (int r = 0; r < 40; ++r) {
            for (int c = 0; c < 40; ++c) {
                REQUIRE(phi.data()(i, r * 40 + c) == aps[i].mask(r, c));
            }
        }
    }

    const auto ones = SensingMatrix::assemble(std::vector{generate_encoded_aperture(3, 1.0, 1)});
    CHECK(ones.data() == Matrix::Ones(1, 9));

    std::vector mixed{generate_encoded_aperture(3, 0.5, 1), generate_encoded_aperture(4, 0.5, 1)};
    CHECK_THROWS_AS(SensingMatrix::assemble(mixed), ArgumentError);
    CHECK_THROWS_AS(SensingMatrix::assemble(std::vector<EncodedAperture>{}), ArgumentError);
}

TEST_CASE("sensing matrix validation")
{
    Matrix m = Matrix::Ones(2, 4);
    CHECK_NOTHROW(SensingMatrix(m, 2));
    CHECK_THROWS_AS(SensingMatrix(m, 3), ArgumentError);
    m(0, 0) = 0.5;
    CHECK_THROWS_AS(SensingMatrix(m, 2), ArgumentError);
    m.row(0).setZero();
    CHECK_THROWS_AS(SensingMatrix(m, 2), ArgumentError);
    CHECK_THROWS_AS(SensingMatrix(Matrix(0, 4), 2), ArgumentError);
    CHECK_THROWS_AS(SensingMatrix(Matrix::Ones(2, 4), 2, {1}), ArgumentError);
}

TEST_CASE("mutual coherence")
{
    CHECK(mutual_coherence(identity_pattern(3)) == 0.0);

    Matrix twin = Matrix::Zero(2, 4);
    twin << 1, 1, 0, 0,
            0, 0, 1, 0;
    CHECK(mutual_coherence(SensingMatrix(twin, 2)) == doctest::Approx(1.0));

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        // 6×16 keeps the grid square while matching the small brute-force size
        Matrix a = random_matrix(6, 4, seed).data();
        const double mu = mutual_coherence(SensingMatrix(a, 4));
        CHECK(mu == doctest::Approx(oracle::coherence(to_rows(a))).epsilon(1e-14));
        CHECK(mu >= 0.0);
        CHECK(mu <= 1.0);
    }

    Matrix lonely = Matrix::Zero(1, 4);
    lonely(0, 2) = 1;
    CHECK_THROWS_AS(mutual_coherence(SensingMatrix(lonely, 2)), ArgumentError);
}

TEST_CASE("rip diagnostics")
{
    const auto phi = random_matrix(100, 40, 3);
    const auto rep = rip_diagnostics(phi);
    CHECK(rep.is_underdetermined);
    REQUIRE(rep.mutual_coherence.has_value());
    CHECK(*rep.mutual_coherence > 0.0);
    CHECK(rep.max_row_inner_product > 0.0);
    CHECK(rep.duplicate_row_count == 0);

    Matrix disjoint = Matrix::Zero(2, 4);
    disjoint << 1, 1, 0, 0,
                0, 0, 1, 1;
    const auto d = rip_diagnostics(SensingMatrix(disjoint, 2));
    CHECK(d.max_row_inner_product == 0.0);
    CHECK(d.duplicate_row_count == 0);

    Matrix repeated = Matrix::Zero(3, 4);
    repeated << 1, 0, 1, 0,
                0, 1, 0, 0,
                1, 0, 1, 0;
    const auto r = rip_diagnostics(SensingMatrix(repeated, 2));
    CHECK(r.duplicate_row_count == 1);
    CHECK(r.zero_column_count == 1);
    CHECK(r.max_row_inner_product == doctest::Approx(1.0));

    CHECK_FALSE(rip_diagnostics(identity_pattern(2)).is_underdetermined);
}

TEST_CASE("forward model")
{
    Rng rng(17);
    Matrix row = Matrix::Ones(1, 9);
    const Vector x = random_vector(9, rng);
    CHECK(forward_measure(SensingMatrix(row, 3), x)[0] == doctest::Approx(x.sum()));
    CHECK(forward_measure(identity_pattern(3), x) == x);
    CHECK_THROWS_AS(forward_measure(SensingMatrix(row, 3), Vector::Ones(4)), ArgumentError);

    const auto phi = random_matrix(5, 3, 8);
    const Vector a = random_vector(9, rng), b = random_vector(9, rng);
    const Vector lhs = forward_measure(phi, 2.5 * a - 0.75 * b);
    const Vector rhs = 2.5 * forward_measure(phi, a) - 0.75 * forward_measure(phi, b);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("forward model matches the naive oracle")
{
    Rng rng(41);
    for (int rep = 0; rep < 100; ++rep) {
        const int side = 1 + static_cast<int>(rng.below(20));
        const int m = 1 + static_cast<int>(rng.below(20));
        const auto phi = random_matrix(m, side, rng.below(1u << 30));
        const Vector x = random_vector(side * side, rng);
        const Vector y = forward_measure(phi, x);
        const auto ref = oracle::matvec(to_rows(phi.data()), std::vector<double>(x.data(), x.data() + x.size()));
        for (int i = 0; i < m; ++i) {
            REQUIRE(std::abs(y[i] - ref[i]) <= 1e-12);
        }
    }
}

TEST_CASE("awgn")
{
    Rng rng(5);
    const Vector y = random_vector(50, rng);
    const auto quiet = add_awgn(y, 200.0, 9);
    CHECK((quiet.y - y).norm() <= 1e-8 * y.norm());
    CHECK(quiet.snr_db == 200.0);
    CHECK(quiet.noise_seed == 9);

    const auto a = add_awgn(y, 5.0, 3), b = add_awgn(y, 5.0, 3);
    CHECK(a.y == b.y);
    CHECK(a.noise_variance == doctest::Approx(y.squaredNorm() / 50 / std::pow(10.0, 0.5)));
    CHECK(a.y != add_awgn(y, 5.0, 4).y);

    CHECK_THROWS_AS(add_awgn(Vector::Zero(5), 5.0, 1), UndefinedSnrError);
    CHECK_THROWS_AS(add_awgn(y, std::nan(""), 1), ArgumentError);

    const auto clean = noiseless_measurement(y);
    CHECK(clean.noiseless());
    CHECK(clean.y == y);
}

TEST_CASE("realized SNR over 10000 trials")
{
    const auto phi = random_matrix(100, 10, 6);
    Rng rng(12);
    double signal = 0.0, noise = 0.0;
    for (std::uint64_t t = 0; t < 10000; ++t) {
        Vector x = Vector::Zero(100);
        for (int k = 0; k < 5; ++k) {
            x[rng.below(100)] = rng.uniform(0.5, 1.5);
        }
        const Vector y = forward_measure(phi, x);
        const auto meas = add_awgn(y, 5.0, derive_seed(100, {t}));
        signal += y.squaredNorm();
        noise += (meas.y - y).squaredNorm();
    }
    CHECK(10.0 * std::log10(signal / noise) == doctest::Approx(5.0).epsilon(0.02));
}
