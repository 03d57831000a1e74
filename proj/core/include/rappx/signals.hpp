#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rappx/surface.hpp"
#include "rappx/types.hpp"

namespace rappx {

struct OfdmConfig {
  std::size_t fft_size = 4096;
  /// Signed subcarrier indices; bin k maps to FFT index k mod fft_size.
  std::vector<int> occupied_bins = default_occupied_bins();
  std::size_t n_symbols = 10;
  double target_rms = 0.35;
  std::uint64_t seed = 1;

  /// -300..-1 and 10..299: 590 bins.
  static std::vector<int> default_occupied_bins();
  void validate() const;
};

/// QPSK on the occupied bins, one inverse DFT per symbol, no cyclic prefix,
/// symbols concatenated and scaled to target_rms. Deterministic in seed.
Frame generate_ofdm(const OfdmConfig& config);

/// Peak-to-average power ratio in dB.
double papr_db(std::span<const Sample> frame);

double rms(std::span<const Sample> frame);

struct RecordMeta {
  long delay = 0;
  double phase = 0.0;
  /// Noise power relative to clean output power; -inf means noiseless.
  double noise_db = -std::numeric_limits<double>::infinity();
};

struct MeasurementRecord {
  OperatingPoint op;
  Frame input;
  Frame output;
  RecordMeta meta;
};

/// Stand-in for the lab capture: output = circular_shift(truth(frame), delay)
/// * exp(j*phase) + complex AWGN at noise_db below the clean output power.
MeasurementRecord simulate_measurement(const ExtendedRappModel& truth, const OperatingPoint& op,
                                       std::span<const Sample> frame, double noise_db,
                                       long delay, double phase, std::uint64_t noise_seed);

/// out[n] = in[(n - shift) mod N]
Frame circular_shift(std::span<const Sample> frame, long shift);

struct AlignmentEstimate {
  long delay = 0;
  double phase = 0.0;
};

/// Integer circular delay (in (-N/2, N/2]) of the output envelope relative to
/// the input envelope, then the constant phase of the delay-corrected output.
AlignmentEstimate estimate_alignment(const MeasurementRecord& record);

/// Removes the estimated delay and phase from the output frame.
MeasurementRecord align(const MeasurementRecord& record);

/// Input scaled by 10^((virtual_gain_db - cable_loss_in_db)/20), output by
/// 10^(cable_loss_out_db/20).
MeasurementRecord scale_record(const MeasurementRecord& record, double cable_loss_in_db,
                               double cable_loss_out_db, double virtual_gain_db);

struct Scaling {
  double cable_loss_in_db = 0.0;
  double cable_loss_out_db = 0.0;
  double virtual_gain_db = 0.0;

  bool is_identity() const noexcept {
    return cable_loss_in_db == 0.0 && cable_loss_out_db == 0.0 && virtual_gain_db == 0.0;
  }
};

struct Campaign {
  std::string amplifier_id;
  std::vector<double> vsup_grid;
  std::vector<double> freq_grid;
  std::map<OperatingPoint, MeasurementRecord> records;
  Scaling scaling;

  std::vector<OperatingPoint> grid() const;
  /// Throws Error(MissingGridCell) naming the first absent cell.
  void validate() const;
};

struct ImpairmentSpec {
  double noise_db = -50.0;
  /// Per-record delay drawn uniformly from [-max_delay, max_delay].
  long max_delay = 0;
  /// Per-record phase drawn uniformly from [-max_phase, max_phase] rad.
  double max_phase = 0.0;
  std::uint64_t seed = 7;
};

/// One simulated record per grid cell. The stimulus frame is shared; delay,
/// phase and noise seeds are derived per cell from impairments.seed.
Campaign synth_campaign(const ExtendedRappModel& truth, std::string amplifier_id,
                        std::span<const double> vsup_grid, std::span<const double> freq_grid,
                        const OfdmConfig& config, const ImpairmentSpec& impairments);

/// 2.4, 2.6, ..., 5.0 V (14 values).
std::vector<double> zx60_2534_vsup_grid();
/// 0.5, 1.0, ..., 2.5 GHz (5 values).
std::vector<double> zx60_2534_freq_grid();

/// Inclusive arithmetic grid; the count is rounded so that floating step
/// error cannot drop the last value.
std::vector<double> arithmetic_grid(double first, double step, double last);

}  // namespace rappx
