#include "rappx/signals.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "rappx/error.hpp"

namespace rappx {

namespace {

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const noexcept { fftw_destroy_plan(p); }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

// In-place complex DFT of `data`; sign is FFTW_FORWARD or FFTW_BACKWARD
// (unnormalized).
void dft_in_place(std::vector<Sample>& data, int sign) {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  Plan plan(fftw_plan_dft_1d(static_cast<int>(data.size()), buf, buf, sign, FFTW_ESTIMATE));
  if (!plan) throw Error(ErrorCode::Domain, "FFTW planning failed");
  fftw_execute(plan.get());
}

std::vector<Sample> envelope_spectrum(std::span<const Sample> frame) {
  std::vector<Sample> env(frame.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    env[i] = std::abs(frame[i]);
    mean += env[i].real();
  }
  mean /= static_cast<double>(frame.size());
  for (auto& e : env) e -= mean;
  dft_in_place(env, FFTW_FORWARD);
  return env;
}

double power(std::span<const Sample> frame) {
  double acc = 0.0;
  for (Sample s : frame) acc += std::norm(s);
  return acc / static_cast<double>(frame.size());
}

}  // namespace

std::vector<int> OfdmConfig::default_occupied_bins() {
  std::vector<int> bins;
  bins.reserve(590);
  for (int k = -300; k <= -1; ++k) bins.push_back(k);
  for (int k = 10; k < 300; ++k) bins.push_back(k);
  return bins;
}

void OfdmConfig::validate() const {
  if (fft_size < 2) throw Error(ErrorCode::Domain, "fft_size must be at least 2");
  if (n_symbols == 0) throw Error(ErrorCode::Domain, "n_symbols must be positive");
  if (!(target_rms > 0.0) || !std::isfinite(target_rms)) {
    throw Error(ErrorCode::Domain, "target_rms must be finite and positive");
  }
  if (occupied_bins.empty()) throw Error(ErrorCode::Domain, "no occupied bins");
  const long half = static_cast<long>(fft_size / 2);
  std::set<long> seen;
  for (int k : occupied_bins) {
    if (k < -half || k >= half) {
      throw Error(ErrorCode::Domain, "occupied bin " + std::to_string(k) + " outside +-fft_size/2");
    }
    if (!seen.insert(k).second) {
      throw Error(ErrorCode::Domain, "duplicate occupied bin " + std::to_string(k));
    }
  }
}

Frame generate_ofdm(const OfdmConfig& config) {
  config.validate();
  const std::size_t n = config.fft_size;
  std::mt19937_64 rng(config.seed);
  const double amp = 1.0 / std::numbers::sqrt2;

  Frame frame;
  frame.reserve(n * config.n_symbols);
  std::vector<Sample> symbol(n);
  for (std::size_t s = 0; s < config.n_symbols; ++s) {
    std::fill(symbol.begin(), symbol.end(), Sample{});
    for (int k : config.occupied_bins) {
      const auto bits = rng();
      const double re = (bits & 1u) ? amp : -amp;
      const double im = (bits & 2u) ? amp : -amp;
      const auto idx = static_cast<std::size_t>((k % static_cast<long>(n) + static_cast<long>(n)) %
                                                static_cast<long>(n));
      symbol[idx] = {re, im};
    }
    dft_in_place(symbol, FFTW_BACKWARD);
    frame.insert(frame.end(), symbol.begin(), symbol.end());
  }
  const double scale = config.target_rms / rms(frame);
  for (auto& x : frame) x *= scale;
  return frame;
}

double rms(std::span<const Sample> frame) {
  if (frame.empty()) throw Error(ErrorCode::EmptyFrame, "rms of empty frame");
  return std::sqrt(power(frame));
}

double papr_db(std::span<const Sample> frame) {
  if (frame.empty()) throw Error(ErrorCode::EmptyFrame, "PAPR of empty frame");
  double peak = 0.0;
  double sum = 0.0;
  for (Sample s : frame) {
    const double p = std::norm(s);
    peak = std::max(peak, p);
    sum += p;
  }
  if (peak == 0.0) throw Error(ErrorCode::ZeroFrame, "PAPR of all-zero frame");
  return 10.0 * std::log10(peak / (sum / static_cast<double>(frame.size())));
}

Frame circular_shift(std::span<const Sample> frame, long shift) {
  const long n = static_cast<long>(frame.size());
  Frame out(frame.size());
  if (n == 0) return out;
  const long s = ((shift % n) + n) % n;
  for (long i = 0; i < n; ++i) out[static_cast<std::size_t>((i + s) % n)] = frame[static_cast<std::size_t>(i)];
  return out;
}

MeasurementRecord simulate_measurement(const ExtendedRappModel& truth, const OperatingPoint& op,
                                       std::span<const Sample> frame, double noise_db,
                                       long delay, double phase, std::uint64_t noise_seed) {
  op.validate();
  if (frame.empty()) throw Error(ErrorCode::EmptyFrame, "cannot simulate an empty frame");
  if (std::abs(delay) >= static_cast<long>(frame.size())) {
    throw Error(ErrorCode::Domain, "|delay| must be smaller than the frame length");
  }
  if (!std::isfinite(phase) || std::isnan(noise_db) || noise_db == std::numeric_limits<double>::infinity()) {
    throw Error(ErrorCode::Domain, "phase must be finite and noise_db must be < +inf");
  }

  MeasurementRecord rec;
  rec.op = op;
  rec.input.assign(frame.begin(), frame.end());
  rec.meta = {delay, phase, noise_db};

  const Frame clean = extended_eval(truth, op, frame);
  rec.output = circular_shift(clean, delay);
  if (phase != 0.0) {
    const Sample rot = std::polar(1.0, phase);
    for (auto& y : rec.output) y *= rot;
  }
  if (std::isfinite(noise_db)) {
    const double sigma = std::sqrt(power(clean) * std::pow(10.0, noise_db / 10.0) / 2.0);
    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<double> normal(0.0, sigma);
    for (auto& y : rec.output) {
      const double re = normal(rng);
      const double im = normal(rng);
      y += Sample{re, im};
    }
  }
  return rec;
}

AlignmentEstimate estimate_alignment(const MeasurementRecord& record) {
  const auto n = record.input.size();
  if (n == 0) throw Error(ErrorCode::EmptyFrame, "cannot align an empty record");
  if (record.output.size() != n) {
    throw Error(ErrorCode::LengthMismatch, "input and output frames differ in length");
  }
  if (power(record.input) == 0.0) throw Error(ErrorCode::ZeroFrame, "input frame is all zero");
  if (power(record.output) == 0.0) throw Error(ErrorCode::ZeroFrame, "output frame is all zero");

  // Cyclic cross-correlation of mean-removed envelopes: c[d] = sum out[m] in[m-d].
  auto xc = envelope_spectrum(record.output);
  const auto in_spec = envelope_spectrum(record.input);
  for (std::size_t k = 0; k < n; ++k) xc[k] *= std::conj(in_spec[k]);
  dft_in_place(xc, FFTW_BACKWARD);

  std::size_t best = 0;
  for (std::size_t k = 1; k < n; ++k) {
    if (xc[k].real() > xc[best].real()) best = k;
  }
  AlignmentEstimate est;
  est.delay = static_cast<long>(best);
  if (est.delay > static_cast<long>(n / 2)) est.delay -= static_cast<long>(n);

  Sample inner{};
  const long ln = static_cast<long>(n);
  for (long m = 0; m < ln; ++m) {
    const auto src = static_cast<std::size_t>(((m + est.delay) % ln + ln) % ln);
    inner += record.output[src] * std::conj(record.input[static_cast<std::size_t>(m)]);
  }
  est.phase = std::arg(inner);
  return est;
}

MeasurementRecord align(const MeasurementRecord& record) {
  const auto est = estimate_alignment(record);
  MeasurementRecord out = record;
  out.output = circular_shift(record.output, -est.delay);
  if (est.phase != 0.0) {
    const Sample derot = std::polar(1.0, -est.phase);
    for (auto& y : out.output) y *= derot;
  }
  return out;
}

MeasurementRecord scale_record(const MeasurementRecord& record, double cable_loss_in_db,
                               double cable_loss_out_db, double virtual_gain_db) {
  if (!std::isfinite(cable_loss_in_db) || !std::isfinite(cable_loss_out_db) ||
      !std::isfinite(virtual_gain_db)) {
    throw Error(ErrorCode::Domain, "scaling values must be finite dB numbers");
  }
  MeasurementRecord out = record;
  const double in_scale = std::pow(10.0, (virtual_gain_db - cable_loss_in_db) / 20.0);
  const double out_scale = std::pow(10.0, cable_loss_out_db / 20.0);
  if (in_scale != 1.0) for (auto& x : out.input) x *= in_scale;
  if (out_scale != 1.0) for (auto& y : out.output) y *= out_scale;
  return out;
}

std::vector<OperatingPoint> Campaign::grid() const {
  std::vector<OperatingPoint> ops;
  ops.reserve(vsup_grid.size() * freq_grid.size());
  for (double v : vsup_grid)
    for (double f : freq_grid) ops.push_back({v, f});
  return ops;
}

void Campaign::validate() const {
  if (vsup_grid.empty() || freq_grid.empty()) {
    throw Error(ErrorCode::DegenerateGrid, "campaign grid is empty");
  }
  for (const auto& op : grid()) {
    op.validate();
    if (!records.contains(op)) {
      std::ostringstream msg;
      msg << "campaign '" << amplifier_id << "' has no record for grid cell (vsup=" << op.vsup
          << " V, f=" << op.freq << " GHz)";
      throw Error(ErrorCode::MissingGridCell, msg.str());
    }
  }
  if (records.size() != vsup_grid.size() * freq_grid.size()) {
    throw Error(ErrorCode::Format, "campaign holds records outside its grid");
  }
}

Campaign synth_campaign(const ExtendedRappModel& truth, std::string amplifier_id,
                        std::span<const double> vsup_grid, std::span<const double> freq_grid,
                        const OfdmConfig& config, const ImpairmentSpec& impairments) {
  if (vsup_grid.empty() || freq_grid.empty()) {
    throw Error(ErrorCode::DegenerateGrid, "synthetic campaign needs nonempty grids");
  }
  Campaign c;
  c.amplifier_id = std::move(amplifier_id);
  c.vsup_grid.assign(vsup_grid.begin(), vsup_grid.end());
  c.freq_grid.assign(freq_grid.begin(), freq_grid.end());

  const Frame stimulus = generate_ofdm(config);
  const long max_delay =
      std::min(impairments.max_delay, static_cast<long>(stimulus.size()) / 2 - 1);
  std::uint64_t cell = 0;
  for (const auto& op : c.grid()) {
    std::seed_seq seq{static_cast<std::uint32_t>(impairments.seed),
                      static_cast<std::uint32_t>(impairments.seed >> 32),
                      static_cast<std::uint32_t>(cell)};
    std::mt19937_64 rng(seq);
    long delay = 0;
    if (max_delay > 0) delay = std::uniform_int_distribution<long>(-max_delay, max_delay)(rng);
    double phase = 0.0;
    if (impairments.max_phase > 0.0) {
      phase = std::uniform_real_distribution<double>(-impairments.max_phase,
                                                     impairments.max_phase)(rng);
    }
    const std::uint64_t noise_seed = rng();
    c.records.emplace(op, simulate_measurement(truth, op, stimulus, impairments.noise_db, delay,
                                               phase, noise_seed));
    ++cell;
  }
  return c;
}

std::vector<double> arithmetic_grid(double first, double step, double last) {
  if (!(step > 0.0) || !(last >= first)) throw Error(ErrorCode::Domain, "bad grid specification");
  const auto count = static_cast<std::size_t>(std::floor((last - first) / step + 1e-9)) + 1;
  std::vector<double> grid;
  grid.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    grid.push_back(std::round((first + static_cast<double>(i) * step) * 1e9) / 1e9);
  }
  return grid;
}

std::vector<double> zx60_2534_vsup_grid() { return arithmetic_grid(2.4, 0.2, 5.0); }

std::vector<double> zx60_2534_freq_grid() { return arithmetic_grid(0.5, 0.5, 2.5); }

}  // namespace rappx
