#include "dronetile/color.hpp"

#include <array>
#include <cmath>

namespace dronetile {

namespace {

constexpr double kWhiteX = 0.95047;
constexpr double kWhiteY = 1.00000;
constexpr double kWhiteZ = 1.08883;

const std::array<double, 256>& linear_table() {
    static const std::array<double, 256> table = [] {
        std::array<double, 256> t{};
        for (int i = 0; i < 256; ++i) {
            const double c = i / 255.0;
            t[static_cast<std::size_t>(i)] =
                c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
        }
        return t;
    }();
    return table;
}

double lab_f(double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

Lab srgb_to_lab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) noexcept {
    const auto& lin = linear_table();
    const double r = lin[r8], g = lin[g8], b = lin[b8];

    const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;

    const double fx = lab_f(x / kWhiteX);
    const double fy = lab_f(y / kWhiteY);
    const double fz = lab_f(z / kWhiteZ);

    Lab out;
    out.L = 116.0 * fy - 16.0;
    out.a = 500.0 * (fx - fy);
    out.b = 200.0 * (fy - fz);
    // 116 * 4/29 - 16 can round to a hair below zero for black.
    if (out.L < 0.0) out.L = 0.0;
    return out;
}

double delta_e(const Lab& c1, const Lab& c2) noexcept {
    const double dL = c1.L - c2.L;
    const double da = c1.a - c2.a;
    const double db = c1.b - c2.b;
    return std::sqrt(dL * dL + da * da + db * db);
}

}  // namespace dronetile
