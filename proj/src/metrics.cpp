#include "isar/metrics.hpp"

#include "isar/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

namespace isar {

double mse(const Vector& x_hat, const Vector& x_true)
{
    if (x_hat.size() != x_true.size()) {
        throw ArgumentError("mse: length mismatch");
    }
    if (x_hat.size() == 0) {
        throw ArgumentError("mse: empty vectors");
    }
    return (x_hat - x_true).squaredNorm() / static_cast<double>(x_hat.size());
}

double relative_l2(const Vector& x_hat, const Vector& x_true)
{
    if (x_hat.size() != x_true.size()) {
        throw ArgumentError("relative_l2: length mismatch");
    }
    const double denom = x_true.norm();
    const double num = (x_hat - x_true).norm();
    return denom > 0.0 ? num / denom : num;
}

namespace {

// noiseless sorts after every finite SNR
double snr_key(const std::optional<double>& s)
{
    return s ? *s : INFINITY;
}

struct Moments {
    double mean = 0.0;
    double std = 0.0;
};

Moments moments(std::vector<double> v)
{
    // sorted summation makes the result independent of arrival order
    std::sort(v.begin(), v.end());
    Moments m;
    m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) {
            ss += (x - m.mean) * (x - m.mean);
        }
        m.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return m;
}

} // namespace

std::vector<CellSummary> aggregate_trials(std::span<const TrialMetrics> trials)
{
    if (trials.empty()) {
        throw ArgumentError("no trials to aggregate");
    }
    using Key = std::tuple<int, int, double>;
    struct Columns {
        std::optional<double> snr;
        std::vector<double> mse, rel, runtime;
    };
    std::map<Key, Columns> groups;
    for (const auto& t : trials) {
        auto& g = groups[{static_cast<int>(t.solver), t.snapshots_m, snr_key(t.snr_db)}];
        g.snr = t.snr_db;
        g.mse.push_back(t.mse);
        g.rel.push_back(t.relative_l2);
        g.runtime.push_back(t.runtime_s);
    }

    std::vector<CellSummary> out;
    for (auto& [key, g] : groups) {
        CellSummary c;
        c.solver = static_cast<SolverMode>(std::get<0>(key));
        c.snapshots = std::get<1>(key);
        c.snr_db = g.snr;
        c.trials = static_cast<int>(g.mse.size());
        const auto m = moments(g.mse);
        c.mse_mean = m.mean;
        c.mse_std = m.std;
        c.rel_l2_mean = moments(g.rel).mean;
        const auto r = moments(g.runtime);
        c.runtime_mean_s = r.mean;
        c.runtime_std_s = r.std;
        out.push_back(c);
    }
    return out;
}

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string format_snr(const std::optional<double>& snr_db)
{
    return snr_db ? format_double(*snr_db) : std::string("noiseless");
}

std::string format_report_csv(std::span<const CellSummary> cells)
{
    std::string out = "solver,snapshots,snr_db,trials,mse_mean,mse_std,rel_l2_mean,runtime_mean_s\n";
    for (const auto& c : cells) {
        out += std::string(to_string(c.solver)) + ',' + std::to_string(c.snapshots) + ',' +
               format_snr(c.snr_db) + ',' + std::to_string(c.trials) + ',' + format_double(c.mse_mean) +
               ',' + format_double(c.mse_std) + ',' + format_double(c.rel_l2_mean) + ',' +
               format_double(c.runtime_mean_s) + '\n';
    }
    return out;
}

namespace {

std::vector<double> ranks(std::span<const double> v)
{
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) {
            ++j;
        }
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    return r;
}

} // namespace

double spearman(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size() || a.size() < 2) {
        throw ArgumentError("spearman needs two equal-length series of at least 2 points");
    }
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) {
        return 0.0;
    }
    return sab / std::sqrt(saa * sbb);
}

} // namespace isar
