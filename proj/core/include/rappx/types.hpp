#pragma once

#include <cmath>
#include <compare>
#include <complex>
#include <span>
#include <vector>

namespace rappx {

/// One baseband IQ value in volts.
using Sample = std::complex<double>;
using Frame = std::vector<Sample>;

inline bool is_finite(Sample s) noexcept {
  return std::isfinite(s.real()) && std::isfinite(s.imag());
}

bool all_finite(std::span<const Sample> frame) noexcept;

/// Scalar Rapp parameters. gain is a linear voltage gain, vsat is the
/// input-referred saturation amplitude in volts.
struct RappParams {
  double gain = 1.0;
  double smoothness = 2.0;
  double vsat = 1.0;

  bool valid() const noexcept;
  /// Throws Error(Domain) unless all three are finite and positive.
  void validate() const;

  friend bool operator==(const RappParams&, const RappParams&) = default;
};

/// Supply voltage in volts, carrier frequency in GHz.
struct OperatingPoint {
  double vsup = 0.0;
  double freq = 0.0;

  bool valid() const noexcept {
    return std::isfinite(vsup) && std::isfinite(freq) && vsup > 0.0 && freq > 0.0;
  }
  void validate() const;

  friend auto operator<=>(const OperatingPoint&, const OperatingPoint&) = default;
};

}  // namespace rappx
