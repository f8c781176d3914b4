#ifndef KERRSEL_UNITS_HPP
#define KERRSEL_UNITS_HPP

// All rates and frequencies inside the library are angular frequencies in
// rad/us. Configuration files and the CLI speak ordinary frequency in MHz
// (or kHz for decay rates); these helpers convert at the boundary.

namespace kerrsel {

inline constexpr double two_pi = 6.283185307179586476925286766559;

constexpr double from_mhz(double f_mhz) { return two_pi * f_mhz; }
constexpr double to_mhz(double w_rad_per_us) { return w_rad_per_us / two_pi; }

constexpr double from_khz(double f_khz) { return two_pi * 1e-3 * f_khz; }
constexpr double to_khz(double w_rad_per_us) { return 1e3 * w_rad_per_us / two_pi; }

}  // namespace kerrsel

#endif
