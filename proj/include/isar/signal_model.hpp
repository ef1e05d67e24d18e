#pragma once

// Rotating point-scatterer echo model and Doppler relations. This module is
// a physics cross-check; the recovery chain treats scenes as static images.

#include <complex>
#include <vector>

namespace isar {

inline constexpr double kSpeedOfLight = 299792458.0;

struct RadarParams {
    double wavelength_m = 0.0;
    double center_frequency_hz = 0.0;
    double prf_hz = 0.0;
    double pulse_length_s = 0.0;
    double hpbw_elevation_rad = 0.0;
    double hpbw_azimuth_rad = 0.0;

    /// Builds parameters with λ = c / f_c.
    static RadarParams from_center_frequency(double center_frequency_hz, double prf_hz,
                                             double pulse_length_s);
    /// Table-1 X-band configuration: 10.2 GHz, PRF 200 Hz, 50 µs pulses.
    static RadarParams x_band();
    /// Throws ArgumentError when an invariant does not hold.
    void validate() const;
};

struct Scatterer {
    std::complex<double> reflectivity{1.0, 0.0};
    double radius_m = 0.0;
    double phase_rad = 0.0;
};

struct RotatingScene {
    std::vector<Scatterer> scatterers;
    double angular_velocity_rad_s = 0.0;
};

/// Strictly increasing, non-empty list of slow-time instants.
class SlowTimeGrid {
public:
    explicit SlowTimeGrid(std::vector<double> samples);
    /// count samples starting at start_s with spacing step_s.
    static SlowTimeGrid uniform(double start_s, double step_s, std::size_t count);

    const std::vector<double>& samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }

private:
    std::vector<double> samples_;
};

/// Instantaneous phase 4π r cos(ω t + φ) / λ of one scatterer.
double instantaneous_phase(const Scatterer& s, double omega, double wavelength, double t_m);

/// Σ_k σ_k exp(j·4π r_k cos(ω t_m + φ_k) / λ) at every grid instant.
std::vector<std::complex<double>> baseband_echo(const RotatingScene& scene, const RadarParams& radar,
                                                const SlowTimeGrid& grid);

/// −2 r ω sin(ω t_m + φ) / λ.
double doppler_frequency(const Scatterer& s, double omega, const RadarParams& radar, double t_m);

/// 4 r |ω| / λ.
double doppler_bandwidth(double radius_m, double omega, double wavelength_m);

/// Width of the smallest centred band holding `fraction` of the energy of a
/// uniformly sampled complex series. The band edges are the (1-fraction)/2 and
/// (1+fraction)/2 quantiles of the cumulative spectral energy, ordered from
/// -fs/2 to +fs/2.
double occupied_bandwidth(const std::vector<std::complex<double>>& series, double sample_rate_hz,
                          double fraction = 0.95);

struct SpectralCheck {
    double radius_m;
    double omega;
    double predicted_hz;
    double measured_hz;
    double relative_error;
};

/// Simulates one unit scatterer over a full rotation at 4x the predicted
/// Doppler bandwidth and compares the 95%-energy bandwidth with 4 r ω / λ.
SpectralCheck spectral_bandwidth_check(double radius_m, double omega, double wavelength_m);

} // namespace isar
