#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rappx/fit.hpp"
#include "rappx/signals.hpp"
#include "rappx/surface.hpp"

namespace rappx {

double rmse(std::span<const double> pred, std::span<const double> actual);

/// rmse(pred, measured) / RMS(measured).
double nrmse_amam(std::span<const double> pred, std::span<const double> measured);

/// Independent scalar parameters per grid cell (the stage-1 fits).
struct BasicVariant {
  std::map<OperatingPoint, RappParams> params;
};

struct ExtendedVariant {
  ExtendedRappModel model;
};

/// Surfaces of vsup only, fitted on the reference-frequency slice.
struct ExtendedNoFreqVariant {
  ExtendedRappModel model;
  double reference_freq = 0.0;
};

using ModelVariant = std::variant<BasicVariant, ExtendedVariant, ExtendedNoFreqVariant>;

std::string_view variant_name(const ModelVariant& variant) noexcept;

BasicVariant make_basic_variant(const PointFits& fits);

/// Middle grid frequency (lower middle for an even count).
double median_frequency(std::span<const double> freq_grid);

/// Fits ModelForm::canonical_without_frequency() on the stage-1 results at
/// reference_freq (default: median grid frequency).
ExtendedNoFreqVariant fit_no_freq_variant(const PointFits& fits,
                                          std::optional<double> reference_freq = std::nullopt);

/// Parameters a variant assigns to an operating point.
RappParams variant_params(const ModelVariant& variant, const OperatingPoint& op);

struct VariantScore {
  std::string name;
  double mean_nrmse = 0.0;
  std::map<OperatingPoint, double> per_point;
  std::optional<double> reference_freq;
};

struct ComparisonReport {
  std::string amplifier_id;
  /// How the NRMSE and its grid aggregate are defined.
  std::string normalization = "rms_of_measured_output_amplitude";
  std::string aggregation = "uniform_mean_over_grid";
  std::vector<VariantScore> variants;

  const VariantScore& at(std::string_view name) const;
};

/// Per grid cell: predicted output amplitudes on the conditioned record's
/// inputs against the conditioned record's output amplitudes.
ComparisonReport compare_variants(const Campaign& campaign, std::span<const ModelVariant> variants,
                                  bool align_records = true);

struct HeatmapRow {
  double vsup = 0.0;
  double freq = 0.0;
  double value = 0.0;
};

/// Row-major by vsup then freq. Throws Error(MissingGridCell).
std::vector<HeatmapRow> export_heatmap(const std::map<OperatingPoint, double>& values,
                                       std::span<const double> vsup_grid,
                                       std::span<const double> freq_grid);

/// A per-point parameter map from stage-1 fits, ready for export_heatmap.
std::map<OperatingPoint, double> parameter_grid(const PointFits& fits, RappParam which);

/// AM/AM overlay at one operating point: input amplitudes sorted ascending,
/// measured output amplitudes, and one predicted column per variant.
struct AmAmOverlay {
  OperatingPoint op;
  std::vector<std::string> variant_names;
  std::vector<double> input_amp;
  std::vector<double> measured_amp;
  std::vector<std::vector<double>> predicted;
};

/// At most max_points rows, evenly spaced in amplitude rank.
AmAmOverlay am_am_overlay(const Campaign& campaign, const OperatingPoint& op,
                          std::span<const ModelVariant> variants, std::size_t max_points = 2048,
                          bool align_records = true);

}  // namespace rappx
