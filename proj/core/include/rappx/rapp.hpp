#pragma once

#include <span>
#include <vector>

#include "rappx/types.hpp"

namespace rappx {

/// Output amplitude of the Rapp nonlinearity for a nonnegative input
/// amplitude: G*a*(1 + (a/Vsat)^(2p))^(-1/(2p)). Evaluated in the log
/// domain so that large p or a >> Vsat cannot overflow.
double rapp_amplitude(const RappParams& params, double amplitude) noexcept;

/// Samplewise Rapp nonlinearity. Output phase equals input phase.
Sample rapp_eval(const RappParams& params, Sample x);

/// AM/AM characteristic sampled at the given input amplitudes.
std::vector<double> am_am_curve(const RappParams& params, std::span<const double> amplitudes);

Frame apply_to_frame(const RappParams& params, std::span<const Sample> frame);

}  // namespace rappx
