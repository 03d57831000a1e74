#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rappx/signals.hpp"
#include "rappx/surface.hpp"
#include "rappx/types.hpp"

namespace rappx {

/// One sample of the AM/AM characteristic.
struct AmAmPoint {
  double input_amp = 0.0;
  double output_amp = 0.0;
};

/// |input|, |output| pairs of a record.
std::vector<AmAmPoint> amam_points(const MeasurementRecord& record);

template <class Result>
struct FitReport {
  Result result{};
  double rmse = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Residual 2-norm after the initial guess and after every accepted step.
  std::vector<double> residual_norm_history;
};

// ---------------------------------------------------------------------------
// Scalar Rapp fit at one operating point.

struct RappFitOptions {
  int max_iterations = 200;
  /// Stop when |J^T r|_inf <= gradient_tolerance * |J|_F * |y|.
  double gradient_tolerance = 1e-10;
  double initial_smoothness = 2.0;
};

/// Solver coordinates: (ln G, ln p, ln Vsat).
using LogRappParams = std::array<double, 3>;

LogRappParams to_log(const RappParams& params);
RappParams from_log(const LogRappParams& theta);

/// Residuals r_i = model(input_amp_i) - output_amp_i and, when `jacobian` is
/// nonempty, the analytic derivatives dr_i/dtheta. Both spans must be sized
/// like `points` (or jacobian empty).
void rapp_residuals(std::span<const AmAmPoint> points, const LogRappParams& theta,
                    std::span<double> residuals, std::span<std::array<double, 3>> jacobian);

/// Initial guess: G from a zero-intercept regression on the lowest-decile
/// input amplitudes, Vsat = max(output)/G, p = initial_smoothness.
RappParams initial_rapp_guess(std::span<const AmAmPoint> points,
                              const RappFitOptions& opts = {});

/// Levenberg-Marquardt on amplitude-domain least squares
/// sum (|model(a_i)| - y_i)^2 in log-parameter coordinates.
FitReport<RappParams> fit_rapp_point(std::span<const AmAmPoint> points,
                                     const RappFitOptions& opts = {});

// ---------------------------------------------------------------------------
// Surface fits over operating points.

struct SurfaceSample {
  OperatingPoint op;
  double value = 0.0;
};

/// Condition-number limit of the column-scaled design matrix.
inline constexpr double kMaxConditionNumber = 1e12;

/// Linear least squares in the given monomial basis. Columns are scaled to
/// unit RMS and solved with a Householder QR; rmse = sqrt(sum r^2 / n).
FitReport<PolynomialSurface> fit_surface_linear(std::span<const SurfaceSample> samples,
                                                std::span<const Monomial> basis);

/// Separable fit of (ln vsup + a) * h(f), h of degree freq_degree (<= 3), with
/// the f^2 coefficient pinned to zero when include_f2 is false. The offset is
/// found by grid scan over [-10, 10] followed by golden-section refinement of
/// the profiled objective; h is linear given a.
FitReport<LogProductSurface> fit_log_product(std::span<const SurfaceSample> samples,
                                             unsigned freq_degree, bool include_f2);

struct PolynomialForm {
  std::vector<Monomial> basis;
};

struct LogProductForm {
  unsigned freq_degree = 3;
  bool include_f2 = true;
};

using SurfaceForm = std::variant<PolynomialForm, LogProductForm>;

FitReport<ParamSurface> fit_surface(std::span<const SurfaceSample> samples,
                                    const SurfaceForm& form);

/// Surface forms for the three parameters.
struct ModelForm {
  SurfaceForm gain;
  SurfaceForm smoothness;
  SurfaceForm vsat;

  /// G: (ln vsup + a)(b f^3 + c f^2 + d f + e); p and Vsat: four-term
  /// polynomials of canonical_p_basis() / canonical_vsat_basis().
  static ModelForm canonical();
  /// The canonical forms with every frequency dependence removed; used for
  /// models fitted at a single reference frequency.
  static ModelForm canonical_without_frequency();
};

// ---------------------------------------------------------------------------
// Two-stage extended-model fit.

enum class RappParam { Gain, Smoothness, Vsat };

std::string_view to_string(RappParam param) noexcept;
double get(const RappParams& params, RappParam which) noexcept;

using PointFits = std::map<OperatingPoint, FitReport<RappParams>>;

struct CampaignFitOptions {
  RappFitOptions point;
  /// Run align() on every record before extracting AM/AM points.
  bool align_records = true;
};

/// Applies the campaign's scaling and, optionally, alignment to one record.
MeasurementRecord condition_record(const Campaign& campaign, const MeasurementRecord& record,
                                   bool align_records = true);

/// Stage 1: scalar fit at every grid cell. Errors are rethrown with the
/// failing operating point in the message.
PointFits fit_campaign_points(const Campaign& campaign, const CampaignFitOptions& opts = {});

/// One parameter of the stage-1 fits as surface samples, ordered by
/// operating point.
std::vector<SurfaceSample> parameter_map(const PointFits& fits, RappParam which);

struct ExtendedFitReport {
  ExtendedRappModel model;
  PointFits point_fits;
  /// Surface fits; their rmse is in parameter units over the grid.
  FitReport<ParamSurface> gain;
  FitReport<ParamSurface> smoothness;
  FitReport<ParamSurface> vsat;
};

/// Stage 2 only, from existing stage-1 results.
ExtendedFitReport fit_extended_from_points(PointFits point_fits, const ModelForm& form);

/// Stage 1 followed by stage 2. The grid must be at least 3x3.
ExtendedFitReport fit_extended_model(const Campaign& campaign,
                                     const ModelForm& form = ModelForm::canonical(),
                                     const CampaignFitOptions& opts = {});

}  // namespace rappx
