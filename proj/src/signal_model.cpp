#include "isar/signal_model.hpp"

#include "isar/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

namespace isar {

using std::numbers::pi;

RadarParams RadarParams::from_center_frequency(double center_frequency_hz, double prf_hz,
                                               double pulse_length_s)
{
    if (!(center_frequency_hz > 0.0)) {
        throw ArgumentError("center frequency must be positive");
    }
    RadarParams p;
    p.center_frequency_hz = center_frequency_hz;
    p.wavelength_m = kSpeedOfLight / center_frequency_hz;
    p.prf_hz = prf_hz;
    p.pulse_length_s = pulse_length_s;
    p.validate();
    return p;
}

RadarParams RadarParams::x_band()
{
    return from_center_frequency(10.2e9, 200.0, 50e-6);
}

void RadarParams::validate() const
{
    if (!(wavelength_m > 0.0) || !std::isfinite(wavelength_m)) {
        throw ArgumentError("wavelength must be positive and finite");
    }
    if (!(center_frequency_hz > 0.0)) {
        throw ArgumentError("center frequency must be positive");
    }
    const double expected = kSpeedOfLight / center_frequency_hz;
    if (std::abs(wavelength_m - expected) > 1e-9 * expected) {
        throw ArgumentError("wavelength inconsistent with center frequency");
    }
    if (!(prf_hz > 0.0)) {
        throw ArgumentError("PRF must be positive");
    }
}

SlowTimeGrid::SlowTimeGrid(std::vector<double> samples) : samples_(std::move(samples))
{
    if (samples_.empty()) {
        throw ArgumentError("slow-time grid is empty");
    }
    for (std::size_t i = 1; i < samples_.size(); ++i) {
        if (!(samples_[i] > samples_[i - 1])) {
            throw ArgumentError("slow-time grid must be strictly increasing");
        }
    }
}

SlowTimeGrid SlowTimeGrid::uniform(double start_s, double step_s, std::size_t count)
{
    std::vector<double> t(count);
    for (std::size_t i = 0; i < count; ++i) {
        t[i] = start_s + step_s * static_cast<double>(i);
    }
    return SlowTimeGrid(std::move(t));
}

namespace {

void check_scatterer(const Scatterer& s)
{
    if (!(s.radius_m >= 0.0) || !std::isfinite(s.radius_m)) {
        throw ArgumentError("scatterer radius must be nonnegative");
    }
    if (!std::isfinite(s.reflectivity.real()) || !std::isfinite(s.reflectivity.imag())) {
        throw ArgumentError("scatterer reflectivity must be finite");
    }
}

} // namespace

double instantaneous_phase(const Scatterer& s, double omega, double wavelength, double t_m)
{
    return 4.0 * pi * s.radius_m * std::cos(omega * t_m + s.phase_rad) / wavelength;
}

std::vector<std::complex<double>> baseband_echo(const RotatingScene& scene, const RadarParams& radar,
                                                const SlowTimeGrid& grid)
{
    radar.validate();
    if (!std::isfinite(scene.angular_velocity_rad_s)) {
        throw ArgumentError("angular velocity must be finite");
    }
    for (const auto& s : scene.scatterers) {
        check_scatterer(s);
    }

    std::vector<std::complex<double>> out(grid.size(), {0.0, 0.0});
    for (std::size_t m = 0; m < grid.size(); ++m) {
        const double t = grid.samples()[m];
        std::complex<double> acc{0.0, 0.0};
        for (const auto& s : scene.scatterers) {
            const double theta =
                instantaneous_phase(s, scene.angular_velocity_rad_s, radar.wavelength_m, t);
            acc += s.reflectivity * std::polar(1.0, theta);
        }
        out[m] = acc;
    }
    return out;
}

double doppler_frequency(const Scatterer& s, double omega, const RadarParams& radar, double t_m)
{
    radar.validate();
    return -2.0 * s.radius_m * omega * std::sin(omega * t_m + s.phase_rad) / radar.wavelength_m;
}

double doppler_bandwidth(double radius_m, double omega, double wavelength_m)
{
    if (!(wavelength_m > 0.0)) {
        throw ArgumentError("wavelength must be positive");
    }
    if (!(radius_m >= 0.0)) {
        throw ArgumentError("radius must be nonnegative");
    }
    if (!std::isfinite(omega)) {
        throw ArgumentError("angular velocity must be finite");
    }
    return 4.0 * radius_m * std::abs(omega) / wavelength_m;
}

double occupied_bandwidth(const std::vector<std::complex<double>>& series, double sample_rate_hz,
                          double fraction)
{
    if (series.size() < 2) {
        throw ArgumentError("need at least two samples");
    }
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ArgumentError("energy fraction must be in (0, 1)");
    }
    const int n = static_cast<int>(series.size());

    std::vector<std::complex<double>> in(series), spec(series.size());
    // only fftw_execute is reentrant; planning goes through one lock
    static std::mutex planner_mutex;
    std::unique_lock lock(planner_mutex);
    fftw_plan plan = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(spec.data()), FFTW_FORWARD,
                                      FFTW_ESTIMATE);
    lock.unlock();
    fftw_execute(plan);
    lock.lock();
    fftw_destroy_plan(plan);
    lock.unlock();

    // reorder bins from -fs/2 to +fs/2
    std::vector<double> energy(series.size());
    const int half = n / 2;
    for (int i = 0; i < n; ++i) {
        const int bin = (i + (n - half)) % n;
        energy[i] = std::norm(spec[bin]);
    }
    double total = 0.0;
    for (double e : energy) {
        total += e;
    }
    if (total == 0.0) {
        return 0.0;
    }

    const double lo_target = 0.5 * (1.0 - fraction) * total;
    const double hi_target = 0.5 * (1.0 + fraction) * total;
    int lo = -1, hi = -1;
    double cum = 0.0;
    for (int i = 0; i < n; ++i) {
        cum += energy[i];
        if (lo < 0 && cum >= lo_target) {
            lo = i;
        }
        if (hi < 0 && cum >= hi_target) {
            hi = i;
            break;
        }
    }
    if (hi < 0) {
        hi = n - 1;
    }
    const double df = sample_rate_hz / n;
    return (hi - lo + 1) * df;
}

SpectralCheck spectral_bandwidth_check(double radius_m, double omega, double wavelength_m)
{
    const double predicted = doppler_bandwidth(radius_m, omega, wavelength_m);
    if (!(predicted > 0.0)) {
        throw ArgumentError("spectral check needs a nonzero Doppler bandwidth");
    }
    const double period = 2.0 * pi / std::abs(omega);
    const auto count = static_cast<std::size_t>(std::ceil(4.0 * predicted * period));
    const double dt = period / static_cast<double>(count);

    RotatingScene scene;
    scene.angular_velocity_rad_s = omega;
    scene.scatterers.push_back(Scatterer{{1.0, 0.0}, radius_m, 0.0});

    RadarParams radar = RadarParams::from_center_frequency(kSpeedOfLight / wavelength_m, 200.0, 50e-6);
    radar.wavelength_m = wavelength_m;

    const auto echo = baseband_echo(scene, radar, SlowTimeGrid::uniform(0.0, dt, count));
    const double measured = occupied_bandwidth(echo, 1.0 / dt, 0.95);
    return {radius_m, omega, predicted, measured, std::abs(measured - predicted) / predicted};
}

} // namespace isar
