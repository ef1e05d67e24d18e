#include "isar/phantoms.hpp"

#include "isar/errors.hpp"
#include "isar/rng.hpp"

#include <algorithm>
#include <string>

namespace isar {

std::string_view to_string(SceneKind kind) noexcept
{
    switch (kind) {
    case SceneKind::Debris: return "Debris";
    case SceneKind::Satellite: return "Satellite";
    case SceneKind::Combined: return "Combined";
    }
    return "?";
}

SatelliteSpec SatelliteSpec::default_for(int n)
{
    if (n < 10) {
        throw ArgumentError("default satellite needs n >= 10");
    }
    const int body = n / 5;
    const int origin = n / 2 - body / 2;
    const int panel_h = std::max(1, body / 2);
    const int panel_row = origin + (body - panel_h) / 2;
    SatelliteSpec spec;
    spec.rects.push_back({origin, origin, body, body, 1.0});
    spec.rects.push_back({panel_row, origin - 1 - body, panel_h, body, 0.6});
    spec.rects.push_back({panel_row, origin + body + 1, panel_h, body, 0.6});
    return spec;
}

int count_nonzero(const Image& img)
{
    return static_cast<int>((img.array() != 0.0).count());
}

namespace {

void check_side(int n)
{
    if (n < 1) {
        throw ArgumentError("scene side must be at least 1");
    }
}

void check_amplitudes(AmplitudeRange amp)
{
    if (!(amp.low > 0.0 && amp.low <= amp.high)) {
        throw ArgumentError("debris amplitudes need 0 < low <= high");
    }
}

// Places k spikes on distinct pixels drawn from `free` (row-major indices)
// by a partial Fisher-Yates shuffle.
void scatter_debris(Image& img, std::vector<int> free, int k, AmplitudeRange amp, std::uint64_t seed)
{
    if (k > static_cast<int>(free.size())) {
        throw ArgumentError("not enough free pixels for " + std::to_string(k) + " debris spikes");
    }
    Rng rng(seed);
    for (int i = 0; i < k; ++i) {
        const auto j = i + static_cast<int>(rng.below(free.size() - i));
        std::swap(free[i], free[j]);
        img.data()[free[i]] = rng.uniform(amp.low, amp.high);
    }
}

} // namespace

Image satellite_support(int n, const SatelliteSpec& spec)
{
    check_side(n);
    Image mask = Image::Zero(n, n);
    for (const auto& r : spec.rects) {
        if (r.height < 1 || r.width < 1 || r.row < 0 || r.col < 0 || r.row + r.height > n ||
            r.col + r.width > n) {
            throw ArgumentError("satellite rectangle lies outside the grid");
        }
        mask.block(r.row, r.col, r.height, r.width).setOnes();
    }
    return mask;
}

Scene make_debris_phantom(int n, int k, AmplitudeRange amp, std::uint64_t seed)
{
    check_side(n);
    check_amplitudes(amp);
    if (k < 1 || k > n * n) {
        throw ArgumentError("debris count must be in [1, n²]");
    }
    Scene s{Image::Zero(n, n), k, SceneKind::Debris, seed};
    std::vector<int> all(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n * n; ++i) {
        all[i] = i;
    }
    scatter_debris(s.image, std::move(all), k, amp, seed);
    return s;
}

Scene make_satellite_phantom(int n, const SatelliteSpec& spec)
{
    check_side(n);
    satellite_support(n, spec); // bounds check
    Scene s{Image::Zero(n, n), 0, SceneKind::Satellite, 0};
    for (const auto& r : spec.rects) {
        if (!(r.amplitude >= 0.0)) {
            throw ArgumentError("satellite amplitude must be nonnegative");
        }
        auto blk = s.image.block(r.row, r.col, r.height, r.width);
        blk = blk.cwiseMax(r.amplitude);
    }
    s.sparsity_r = count_nonzero(s.image);
    return s;
}

Scene make_combined_phantom(int n, const SatelliteSpec& spec, int k_debris, AmplitudeRange amp,
                            std::uint64_t seed)
{
    check_amplitudes(amp);
    if (k_debris < 0) {
        throw ArgumentError("debris count must be nonnegative");
    }
    Scene s = make_satellite_phantom(n, spec);
    s.kind = SceneKind::Combined;
    s.seed = seed;
    const Image support = satellite_support(n, spec);
    std::vector<int> free;
    for (int i = 0; i < n * n; ++i) {
        if (support.data()[i] == 0.0) {
            free.push_back(i);
        }
    }
    scatter_debris(s.image, std::move(free), k_debris, amp, seed);
    s.sparsity_r = count_nonzero(s.image);
    return s;
}

} // namespace isar
