#include "rappx/rapp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rappx/error.hpp"

namespace rappx {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Domain: return "domain error";
    case ErrorCode::InsufficientData: return "insufficient data";
    case ErrorCode::DegenerateData: return "degenerate data";
    case ErrorCode::DegenerateGrid: return "degenerate grid";
    case ErrorCode::RankDeficient: return "rank deficient";
    case ErrorCode::NonConvergence: return "no convergence";
    case ErrorCode::EmptyFrame: return "empty frame";
    case ErrorCode::ZeroFrame: return "zero frame";
    case ErrorCode::LengthMismatch: return "length mismatch";
    case ErrorCode::MissingGridCell: return "missing grid cell";
    case ErrorCode::Format: return "format error";
    case ErrorCode::UnsupportedVersion: return "unsupported version";
    case ErrorCode::Io: return "I/O error";
  }
  return "unknown error";
}

bool all_finite(std::span<const Sample> frame) noexcept {
  return std::all_of(frame.begin(), frame.end(), [](Sample s) { return is_finite(s); });
}

bool RappParams::valid() const noexcept {
  return std::isfinite(gain) && std::isfinite(smoothness) && std::isfinite(vsat) &&
         gain > 0.0 && smoothness > 0.0 && vsat > 0.0;
}

void RappParams::validate() const {
  if (!valid()) {
    std::ostringstream msg;
    msg << "invalid Rapp parameters (G=" << gain << ", p=" << smoothness << ", Vsat=" << vsat
        << "); all must be finite and positive";
    throw Error(ErrorCode::Domain, msg.str());
  }
}

void OperatingPoint::validate() const {
  if (!valid()) {
    std::ostringstream msg;
    msg << "invalid operating point (vsup=" << vsup << " V, f=" << freq << " GHz)";
    throw Error(ErrorCode::Domain, msg.str());
  }
}

namespace {

// log(1 + exp(t)) without overflow.
double softplus(double t) noexcept {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

}  // namespace

double rapp_amplitude(const RappParams& params, double amplitude) noexcept {
  if (amplitude == 0.0) return 0.0;
  const double two_p = 2.0 * params.smoothness;
  const double t = two_p * std::log(amplitude / params.vsat);
  if (t <= 0.0) return params.gain * amplitude * std::exp(-softplus(t) / two_p);
  // Saturated side: same value written as G*Vsat times a factor <= 1, which
  // keeps the result monotone in the amplitude and never above G*Vsat.
  return params.gain * params.vsat * std::exp(-softplus(-t) / two_p);
}

Sample rapp_eval(const RappParams& params, Sample x) {
  params.validate();
  if (!is_finite(x)) throw Error(ErrorCode::Domain, "non-finite input sample");
  const double a = std::abs(x);
  if (a == 0.0) return {0.0, 0.0};
  return x * (rapp_amplitude(params, a) / a);
}

std::vector<double> am_am_curve(const RappParams& params, std::span<const double> amplitudes) {
  params.validate();
  std::vector<double> out;
  out.reserve(amplitudes.size());
  for (double a : amplitudes) {
    if (!std::isfinite(a) || a < 0.0) {
      throw Error(ErrorCode::Domain, "AM/AM amplitudes must be finite and nonnegative");
    }
    out.push_back(rapp_amplitude(params, a));
  }
  return out;
}

Frame apply_to_frame(const RappParams& params, std::span<const Sample> frame) {
  params.validate();
  if (!all_finite(frame)) throw Error(ErrorCode::Domain, "non-finite sample in frame");
  Frame out;
  out.reserve(frame.size());
  for (Sample x : frame) {
    const double a = std::abs(x);
    out.push_back(a == 0.0 ? Sample{} : x * (rapp_amplitude(params, a) / a));
  }
  return out;
}

}  // namespace rappx
