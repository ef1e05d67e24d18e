#pragma once

// Independent reference computations. Everything here is written with plain
// loops and std containers so it shares no code path with the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

namespace oracle {

using Rows = std::vector<std::vector<double>>;

inline std::vector<double> matvec(const Rows& a, const std::vector<double>& x)
{
    std::vector<double> y(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        long double acc = 0.0L;
        for (std::size_t j = 0; j < x.size(); ++j) {
            acc += static_cast<long double>(a[i][j]) * x[j];
        }
        y[i] = static_cast<double>(acc);
    }
    return y;
}

inline double coherence(const Rows& a)
{
    const std::size_t m = a.size(), n = a.front().size();
    double best = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            double dot = 0.0, np = 0.0, nq = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                dot += a[i][p] * a[i][q];
                np += a[i][p] * a[i][p];
                nq += a[i][q] * a[i][q];
            }
            if (np == 0.0 || nq == 0.0) {
                continue;
            }
            best = std::max(best, std::abs(dot) / std::sqrt(np * nq));
        }
    }
    return best;
}

// Gaussian elimination with partial pivoting; empty on (near) singularity.
inline std::optional<std::vector<double>> solve_square(Rows a, std::vector<double> b)
{
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) {
                piv = r;
            }
        }
        if (std::abs(a[piv][c]) < 1e-10) {
            return std::nullopt;
        }
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) {
            s -= a[i][k] * x[k];
        }
        x[i] = s / a[i][i];
    }
    return x;
}

// Calls fn on every k-subset of {0..n-1} in lexicographic order.
inline void for_each_subset(int n, int k, const std::function<void(const std::vector<int>&)>& fn)
{
    std::vector<int> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        fn(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) {
            --i;
        }
        if (i < 0) {
            return;
        }
        ++idx[i];
        for (int j = i + 1; j < k; ++j) {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

// Basis pursuit min |x|_1 s.t. Ax = y by vertex enumeration: for full row
// rank A (m×n) an optimum sits on a basic solution with m columns.
inline double basis_pursuit_value(const Rows& a, const std::vector<double>& y)
{
    const int m = static_cast<int>(a.size()), n = static_cast<int>(a.front().size());
    double best = std::numeric_limits<double>::infinity();
    for_each_subset(n, m, [&](const std::vector<int>& s) {
        Rows sub(m, std::vector<double>(m));
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                sub[i][j] = a[i][s[j]];
            }
        }
        if (auto x = solve_square(sub, y)) {
            double l1 = 0.0;
            for (double v : *x) {
                l1 += std::abs(v);
            }
            best = std::min(best, l1);
        }
    });
    return best;
}

// Least-squares residual of y on the columns in s (normal equations).
inline double support_residual(const Rows& a, const std::vector<double>& y, const std::vector<int>& s)
{
    const std::size_t m = a.size(), k = s.size();
    Rows g(k, std::vector<double>(k, 0.0));
    std::vector<double> rhs(k, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t i = 0; i < m; ++i) {
            rhs[p] += a[i][s[p]] * y[i];
            for (std::size_t q = 0; q < k; ++q) {
                g[p][q] += a[i][s[p]] * a[i][s[q]];
            }
        }
    }
    auto c = solve_square(g, rhs);
    if (!c) {
        return std::numeric_limits<double>::infinity();
    }
    double r2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double fit = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            fit += a[i][s[p]] * (*c)[p];
        }
        r2 += (y[i] - fit) * (y[i] - fit);
    }
    return r2;
}

// Best k-sparse support by exhaustive search.
inline std::vector<int> best_support(const Rows& a, const std::vector<double>& y, int k)
{
    std::vector<int> best;
    double r = std::numeric_limits<double>::infinity();
    for_each_subset(static_cast<int>(a.front().size()), k, [&](const std::vector<int>& s) {
        const double rs = support_residual(a, y, s);
        if (rs < r) {
            r = rs;
            best = s;
        }
    });
    return best;
}

// |DFT|² by direct summation.
inline std::vector<double> power_spectrum(const std::vector<std::complex<double>>& x)
{
    const std::size_t n = x.size();
    std::vector<double> p(n);
    const double two_pi = 2.0 * std::acos(-1.0);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc{};
        for (std::size_t t = 0; t < n; ++t) {
            acc += x[t] * std::polar(1.0, -two_pi * static_cast<double>(k * t % n) / static_cast<double>(n));
        }
        p[k] = std::norm(acc);
    }
    return p;
}

// Isotropic TV with replicate boundary, from the definition.
inline double tv(const std::vector<std::vector<double>>& img)
{
    const std::size_t n = img.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double dh = i + 1 < n ? img[i + 1][j] - img[i][j] : 0.0;
            const double dv = j + 1 < n ? img[i][j + 1] - img[i][j] : 0.0;
            s += std::sqrt(dh * dh + dv * dv);
        }
    }
    return s;
}

// Central-difference gradient of f at x.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h)
{
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        x[i] = xi + h;
        const double fp = f(x);
        x[i] = xi - h;
        const double fm = f(x);
        x[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// P(X <= k) for X ~ Binomial(n, p), via log-pmf sums.
inline double binomial_cdf(int n, double p, int k)
{
    double cdf = 0.0;
    for (int i = 0; i <= std::min(k, n); ++i) {
        const double lp = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
                          i * std::log(p) + (n - i) * std::log1p(-p);
        cdf += std::exp(lp);
    }
    return cdf;
}

// Smallest k with P(X <= k) >= q.
inline int binomial_quantile(int n, double p, double q)
{
    for (int k = 0; k < n; ++k) {
        if (binomial_cdf(n, p, k) >= q) {
            return k;
        }
    }
    return n;
}

} // namespace oracle
