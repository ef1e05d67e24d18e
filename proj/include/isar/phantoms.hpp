#pragma once

// Ground-truth scenes: sparse debris fields, piecewise-constant satellite
// silhouettes, and both together.

#include "isar/types.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace isar {

enum class SceneKind { Debris, Satellite, Combined };

std::string_view to_string(SceneKind kind) noexcept;

struct Scene {
    Image image;
    int sparsity_r = 0;
    SceneKind kind = SceneKind::Debris;
    std::uint64_t seed = 0;

    int side() const noexcept { return static_cast<int>(image.rows()); }
    Vector flat() const { return flatten(image); }
};

struct Rect {
    int row = 0;
    int col = 0;
    int height = 0;
    int width = 0;
    double amplitude = 1.0;

    bool operator==(const Rect&) const = default;
};

/// Central body plus solar panels. Overlapping rectangles take the larger
/// amplitude.
struct SatelliteSpec {
    std::vector<Rect> rects;

    /// Body of side n/5 at the centre (amplitude 1.0) and two panels of
    /// (n/10)×(n/5) one pixel off each side (amplitude 0.6); 8% of pixels.
    static SatelliteSpec default_for(int n);

    bool operator==(const SatelliteSpec&) const = default;
};

struct AmplitudeRange {
    double low = 0.5;
    double high = 1.5;
};

/// K distinct uniformly chosen pixels with amplitudes uniform in [low, high].
Scene make_debris_phantom(int n, int k, AmplitudeRange amp, std::uint64_t seed);

Scene make_satellite_phantom(int n, const SatelliteSpec& spec);

/// Satellite silhouette plus K debris spikes on pixels outside it. With an
/// empty spec the debris placement equals make_debris_phantom for the same seed.
Scene make_combined_phantom(int n, const SatelliteSpec& spec, int k_debris, AmplitudeRange amp,
                            std::uint64_t seed);

/// 1 on pixels covered by a rectangle of the spec.
Image satellite_support(int n, const SatelliteSpec& spec);

int count_nonzero(const Image& img);

} // namespace isar
