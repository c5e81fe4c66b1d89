#pragma once

#include <cstdint>

namespace dronetile {

struct Lab {
    double L = 0.0;
    double a = 0.0;
    double b = 0.0;
};

/// 8-bit sRGB to CIELAB under D65 (piecewise sRGB decoding, IEC 61966-2-1 matrix).
Lab srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept;

/// CIE76: Euclidean distance in Lab.
double delta_e(const Lab& c1, const Lab& c2) noexcept;

}  // namespace dronetile
