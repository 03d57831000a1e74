#pragma once

#include <cstdint>
#include <filesystem>
#include <exception>
#include <ostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "rappx/error.hpp"
#include "rappx/fit.hpp"
#include "rappx/signals.hpp"

namespace rappx::cli {

namespace fs = std::filesystem;

/// "first:step:last" or a comma-separated list of values.
std::vector<double> parse_grid_spec(const std::string& spec);

/// "poly22", "poly33", "polyN", "poly:p10,p11,...", "logprod:D" or
/// "logprod:D:no-f2".
SurfaceForm parse_surface_form(const std::string& spec);

RappParam parse_param(const std::string& name);

/// "vsup:freq"
OperatingPoint parse_operating_point(const std::string& spec);

/// $RAPPX_OUT_DIR/name, or ./name when the variable is unset.
fs::path default_output(const std::string& name);

struct SynthArgs {
  std::optional<fs::path> truth;
  std::string amplifier_id;
  std::vector<double> vsup_grid;
  std::vector<double> freq_grid;
  double noise_db = -50.0;
  long max_delay = 64;
  double max_phase = std::numbers::pi;
  std::uint64_t seed = 1;
  double target_rms = 0.35;
  std::size_t n_symbols = 10;
  fs::path out;
};

struct FitArgs {
  fs::path campaign;
  fs::path out;
  bool basic = false;
  std::optional<std::string> gain_form;
  std::optional<std::string> p_form;
  std::optional<std::string> vsat_form;
};

struct SelectArgs {
  std::optional<fs::path> campaign;
  std::optional<fs::path> map_csv;
  RappParam param = RappParam::Vsat;
  unsigned max_degree = 3;
  std::optional<unsigned> start_degree;
  double plateau = 1.10;
  std::size_t min_terms = 1;
  fs::path out;
};

struct CompareArgs {
  fs::path campaign;
  std::optional<fs::path> model;
  std::optional<double> ref_freq;
  std::vector<std::string> variants{"basic", "extended", "extended_no_freq"};
  std::vector<OperatingPoint> overlays;
  std::size_t overlay_points = 2048;
  fs::path out;
};

struct HeatmapArgs {
  fs::path campaign;
  std::optional<fs::path> model;
  std::vector<RappParam> params{RappParam::Gain, RappParam::Smoothness, RappParam::Vsat};
  fs::path out;
};

// Each command writes its outputs atomically and removes partial outputs on
// failure. They throw rappx::Error; run_guarded() maps that to an exit code.
void cmd_synth(const SynthArgs& args, std::ostream& log);
void cmd_fit(const FitArgs& args, std::ostream& log);
void cmd_select(const SelectArgs& args, std::ostream& log);
void cmd_compare(const CompareArgs& args, std::ostream& log);
void cmd_export_heatmap(const HeatmapArgs& args, std::ostream& log);

/// Runs fn, printing any error to err. Returns the process exit code.
template <class Fn>
int run_guarded(Fn&& fn, std::ostream& err) {
  try {
    fn();
    return 0;
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace rappx::cli
