#include "rappx/fit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "rappx/error.hpp"
#include "rappx/rapp.hpp"

namespace rappx {

namespace {

double softplus(double t) noexcept {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) noexcept {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double norm2(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

std::string describe(const OperatingPoint& op) {
  std::ostringstream s;
  s << "(vsup=" << op.vsup << " V, f=" << op.freq << " GHz)";
  return s.str();
}

}  // namespace

std::vector<AmAmPoint> amam_points(const MeasurementRecord& record) {
  if (record.input.size() != record.output.size()) {
    throw Error(ErrorCode::LengthMismatch, "input and output frames differ in length");
  }
  std::vector<AmAmPoint> pts(record.input.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    pts[i] = {std::abs(record.input[i]), std::abs(record.output[i])};
  }
  return pts;
}

LogRappParams to_log(const RappParams& params) {
  params.validate();
  return {std::log(params.gain), std::log(params.smoothness), std::log(params.vsat)};
}

RappParams from_log(const LogRappParams& theta) {
  return {std::exp(theta[0]), std::exp(theta[1]), std::exp(theta[2])};
}

void rapp_residuals(std::span<const AmAmPoint> points, const LogRappParams& theta,
                    std::span<double> residuals, std::span<std::array<double, 3>> jacobian) {
  const double gain = std::exp(theta[0]);
  const double p = std::exp(theta[1]);
  const double log_vsat = theta[2];
  const double two_p = 2.0 * p;
  const bool want_jac = !jacobian.empty();

  for (std::size_t i = 0; i < points.size(); ++i) {
    const double a = points[i].input_amp;
    if (a <= 0.0) {
      residuals[i] = -points[i].output_amp;
      if (want_jac) jacobian[i] = {0.0, 0.0, 0.0};
      continue;
    }
    const double t = two_p * (std::log(a) - log_vsat);
    const double s = softplus(t);
    const double m = gain * a * std::exp(-s / two_p);
    residuals[i] = m - points[i].output_amp;
    if (want_jac) {
      const double sg = sigmoid(t);
      jacobian[i] = {m, m * (s - sg * t) / two_p, m * sg};
    }
  }
}

RappParams initial_rapp_guess(std::span<const AmAmPoint> points, const RappFitOptions& opts) {
  std::vector<double> amps;
  amps.reserve(points.size());
  for (const auto& pt : points)
    if (pt.input_amp > 0.0) amps.push_back(pt.input_amp);
  if (amps.empty()) throw Error(ErrorCode::DegenerateData, "all input amplitudes are zero");

  // Lowest decile among nonzero inputs, at least three points.
  const std::size_t k = std::max<std::size_t>(std::min<std::size_t>(3, amps.size()), amps.size() / 10);
  std::nth_element(amps.begin(), amps.begin() + static_cast<long>(k - 1), amps.end());
  const double cutoff = amps[k - 1];

  double sxy = 0.0;
  double sxx = 0.0;
  double ymax = 0.0;
  for (const auto& pt : points) {
    ymax = std::max(ymax, pt.output_amp);
    if (pt.input_amp > 0.0 && pt.input_amp <= cutoff) {
      sxy += pt.input_amp * pt.output_amp;
      sxx += pt.input_amp * pt.input_amp;
    }
  }
  const double gain = sxy / sxx;
  if (!(gain > 0.0) || !(ymax > 0.0)) {
    throw Error(ErrorCode::DegenerateData, "output amplitudes carry no positive gain");
  }
  return {gain, opts.initial_smoothness, ymax / gain};
}

FitReport<RappParams> fit_rapp_point(std::span<const AmAmPoint> points, const RappFitOptions& opts) {
  if (points.size() < 8) {
    throw Error(ErrorCode::InsufficientData,
                "scalar Rapp fit needs at least 8 points, got " + std::to_string(points.size()));
  }
  double amax = 0.0;
  std::set<double> distinct;
  for (const auto& pt : points) {
    if (!std::isfinite(pt.input_amp) || !std::isfinite(pt.output_amp) || pt.input_amp < 0.0 ||
        pt.output_amp < 0.0) {
      throw Error(ErrorCode::Domain, "AM/AM points must be finite and nonnegative");
    }
    amax = std::max(amax, pt.input_amp);
    if (distinct.size() < 3) distinct.insert(pt.input_amp);
  }
  if (!(amax > 0.0)) throw Error(ErrorCode::DegenerateData, "all input amplitudes are zero");
  if (distinct.size() < 3) {
    throw Error(ErrorCode::DegenerateData, "fewer than 3 distinct input amplitudes");
  }

  const std::size_t n = points.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = points[i].output_amp;
  const double y_norm = norm2(y);

  FitReport<RappParams> report;
  LogRappParams theta = to_log(initial_rapp_guess(points, opts));
  std::vector<double> r(n), r_trial(n);
  std::vector<std::array<double, 3>> jac(n);
  rapp_residuals(points, theta, r, jac);
  double cost = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
  report.residual_norm_history.push_back(std::sqrt(cost));

  double lambda = 1e-3;
  bool need_normal_eq = true;
  Eigen::Matrix3d jtj;
  Eigen::Vector3d jtr;
  double jac_norm = 0.0;

  while (report.iterations < opts.max_iterations) {
    if (need_normal_eq) {
      jtj.setZero();
      jtr.setZero();
      for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d row(jac[i][0], jac[i][1], jac[i][2]);
        jtj.noalias() += row * row.transpose();
        jtr.noalias() += row * r[i];
      }
      jac_norm = std::sqrt(jtj.trace());
      need_normal_eq = false;
    }
    if (jtr.cwiseAbs().maxCoeff() <= opts.gradient_tolerance * jac_norm * y_norm) {
      report.converged = true;
      break;
    }
    ++report.iterations;

    Eigen::Matrix3d damped = jtj;
    const double diag_floor = 1e-12 * jtj.diagonal().maxCoeff();
    for (int d = 0; d < 3; ++d) damped(d, d) += lambda * std::max(jtj(d, d), diag_floor);
    const Eigen::Vector3d step = damped.ldlt().solve(-jtr);

    LogRappParams trial{theta[0] + step[0], theta[1] + step[1], theta[2] + step[2]};
    double trial_cost = std::numeric_limits<double>::infinity();
    if (step.allFinite() && std::all_of(trial.begin(), trial.end(), [](double v) {
          return std::abs(v) < 700.0;
        })) {
      rapp_residuals(points, trial, r_trial, {});
      trial_cost = std::inner_product(r_trial.begin(), r_trial.end(), r_trial.begin(), 0.0);
    }

    if (trial_cost < cost) {
      theta = trial;
      cost = trial_cost;
      rapp_residuals(points, theta, r, jac);
      need_normal_eq = true;
      report.residual_norm_history.push_back(std::sqrt(cost));
      lambda = std::max(lambda / 3.0, 1e-15);
      const double rel_step =
          step.cwiseAbs().maxCoeff() /
          (1.0 + std::max({std::abs(theta[0]), std::abs(theta[1]), std::abs(theta[2])}));
      if (rel_step <= 1e-14) {
        report.converged = true;
        break;
      }
    } else {
      lambda *= 4.0;
      if (lambda > 1e16) {
        // No descent direction left at working precision.
        report.converged = true;
        break;
      }
    }
  }
  if (!report.converged) {
    throw Error(ErrorCode::NonConvergence, "scalar Rapp fit did not converge in " +
                                               std::to_string(opts.max_iterations) +
                                               " iterations");
  }
  report.result = from_log(theta);
  report.rmse = std::sqrt(cost / static_cast<double>(n));
  return report;
}

// ---------------------------------------------------------------------------

namespace {

struct LinearSolution {
  Eigen::VectorXd coefs;
  Eigen::VectorXd residuals;
};

// Column-scaled Householder QR solve of min |X c - y|.
LinearSolution solve_scaled(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                            bool check_condition) {
  const auto rows = design.rows();
  const auto cols = design.cols();
  Eigen::VectorXd scale(cols);
  Eigen::MatrixXd scaled = design;
  for (Eigen::Index j = 0; j < cols; ++j) {
    const double col_rms = design.col(j).norm() / std::sqrt(static_cast<double>(rows));
    if (!(col_rms > 0.0) || !std::isfinite(col_rms)) {
      throw Error(ErrorCode::RankDeficient, "design matrix has an all-zero column");
    }
    scale[j] = 1.0 / col_rms;
    scaled.col(j) *= scale[j];
  }
  if (check_condition) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled);
    const auto& sv = svd.singularValues();
    const double smin = sv[sv.size() - 1];
    if (!(smin > 0.0) || sv[0] / smin > kMaxConditionNumber) {
      std::ostringstream msg;
      msg << "design matrix condition number " << (smin > 0.0 ? sv[0] / smin : INFINITY)
          << " exceeds " << kMaxConditionNumber;
      throw Error(ErrorCode::RankDeficient, msg.str());
    }
  }
  LinearSolution out;
  out.coefs = scaled.householderQr().solve(y).cwiseProduct(scale);
  out.residuals = y - design * out.coefs;
  return out;
}

template <class Result>
void finish_linear(FitReport<Result>& rep, const Eigen::VectorXd& residuals) {
  const double rn = residuals.norm();
  rep.rmse = rn / std::sqrt(static_cast<double>(residuals.size()));
  rep.iterations = 1;
  rep.converged = true;
  rep.residual_norm_history = {rn};
}

}  // namespace

FitReport<PolynomialSurface> fit_surface_linear(std::span<const SurfaceSample> samples,
                                                std::span<const Monomial> basis) {
  if (basis.empty()) throw Error(ErrorCode::InsufficientData, "empty basis");
  if (samples.size() < basis.size()) {
    throw Error(ErrorCode::InsufficientData,
                std::to_string(samples.size()) + " samples cannot determine " +
                    std::to_string(basis.size()) + " coefficients");
  }
  const auto n = static_cast<Eigen::Index>(samples.size());
  const auto m = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd design(n, m);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    s.op.validate();
    y[i] = s.value;
    for (Eigen::Index j = 0; j < m; ++j) design(i, j) = basis[static_cast<std::size_t>(j)].eval(s.op);
  }
  const auto sol = solve_scaled(design, y, true);

  FitReport<PolynomialSurface> rep;
  rep.result = PolynomialSurface(basis, std::span<const double>(sol.coefs.data(), basis.size()));
  finish_linear(rep, sol.residuals);
  return rep;
}

namespace {

std::vector<unsigned> log_product_powers(unsigned freq_degree, bool include_f2) {
  std::vector<unsigned> powers;
  for (unsigned k = freq_degree + 1; k-- > 0;) {
    if (k == 2 && !include_f2) continue;
    powers.push_back(k);
  }
  return powers;
}

struct ProfilePoint {
  double cost;
  Eigen::VectorXd coefs;
};

class LogProductProfile {
 public:
  LogProductProfile(std::span<const SurfaceSample> samples, std::vector<unsigned> powers)
      : powers_(std::move(powers)),
        log_v_(static_cast<Eigen::Index>(samples.size())),
        fpow_(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(powers_.size())),
        y_(static_cast<Eigen::Index>(samples.size())) {
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      const auto& s = samples[static_cast<std::size_t>(i)];
      log_v_[i] = std::log(s.op.vsup);
      y_[i] = s.value;
      for (Eigen::Index j = 0; j < fpow_.cols(); ++j) {
        fpow_(i, j) = std::pow(s.op.freq, static_cast<double>(powers_[static_cast<std::size_t>(j)]));
      }
    }
  }

  ProfilePoint eval(double a) const {
    Eigen::MatrixXd design = fpow_;
    for (Eigen::Index i = 0; i < design.rows(); ++i) design.row(i) *= log_v_[i] + a;
    Eigen::VectorXd coefs = design.householderQr().solve(y_);
    const double cost = (y_ - design * coefs).squaredNorm();
    return {std::isfinite(cost) ? cost : std::numeric_limits<double>::infinity(), std::move(coefs)};
  }

  const Eigen::VectorXd& values() const { return y_; }
  const std::vector<unsigned>& powers() const { return powers_; }

 private:
  std::vector<unsigned> powers_;
  Eigen::VectorXd log_v_;
  Eigen::MatrixXd fpow_;
  Eigen::VectorXd y_;
};

}  // namespace

FitReport<LogProductSurface> fit_log_product(std::span<const SurfaceSample> samples,
                                             unsigned freq_degree, bool include_f2) {
  if (freq_degree > 3) throw Error(ErrorCode::Domain, "log-product frequency degree must be <= 3");
  if (samples.size() < freq_degree + 3) {
    throw Error(ErrorCode::InsufficientData,
                "log-product fit needs at least " + std::to_string(freq_degree + 3) + " samples");
  }
  std::set<double> vsups;
  std::set<double> freqs;
  for (const auto& s : samples) {
    s.op.validate();
    vsups.insert(s.op.vsup);
    freqs.insert(s.op.freq);
  }
  auto powers = log_product_powers(freq_degree, include_f2);
  // h(f) needs as many distinct frequencies as it has free coefficients.
  if (vsups.size() < 2 || freqs.size() < powers.size()) {
    throw Error(ErrorCode::DegenerateGrid,
                "log-product fit needs >= 2 distinct vsup and >= " +
                    std::to_string(powers.size()) + " distinct frequencies");
  }

  FitReport<LogProductSurface> rep;
  const LogProductProfile profile(samples, powers);

  auto assemble = [&](double a, const Eigen::VectorXd& coefs) {
    LogProductSurface s;
    s.offset = a;
    s.freq_coeffs.assign(freq_degree + 1, 0.0);
    for (std::size_t j = 0; j < powers.size(); ++j) {
      s.freq_coeffs[freq_degree - powers[j]] = coefs[static_cast<Eigen::Index>(j)];
    }
    return s;
  };

  if (profile.values().cwiseAbs().maxCoeff() == 0.0) {
    rep.result = assemble(0.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(powers.size())));
    finish_linear(rep, Eigen::VectorXd::Zero(profile.values().size()));
    return rep;
  }

  constexpr double kLo = -10.0;
  constexpr double kHi = 10.0;
  constexpr int kScan = 2000;
  constexpr double kStep = (kHi - kLo) / kScan;
  int best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  for (int k = 0; k <= kScan; ++k) {
    const double c = profile.eval(kLo + k * kStep).cost;
    ++evaluations;
    if (c < best_cost) {
      best_cost = c;
      best = k;
    }
  }

  // Golden-section search inside the bracket around the best scan point.
  double lo = kLo + std::max(best - 1, 0) * kStep;
  double hi = kLo + std::min(best + 1, kScan) * kStep;
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = profile.eval(x1).cost;
  double f2 = profile.eval(x2).cost;
  evaluations += 2;
  while (hi - lo > 1e-8) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = profile.eval(x1).cost;
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = profile.eval(x2).cost;
    }
    ++evaluations;
  }

  // Best of the refined midpoint and the scan optimum.
  double a = 0.5 * (lo + hi);
  ProfilePoint pt = profile.eval(a);
  const double scan_a = kLo + best * kStep;
  if (best_cost < pt.cost) {
    a = scan_a;
    pt = profile.eval(a);
  }

  rep.result = assemble(a, pt.coefs);
  Eigen::VectorXd residuals(profile.values().size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    residuals[static_cast<Eigen::Index>(i)] = samples[i].value - rep.result.eval(samples[i].op);
  }
  finish_linear(rep, residuals);
  rep.iterations = evaluations;
  return rep;
}

FitReport<ParamSurface> fit_surface(std::span<const SurfaceSample> samples, const SurfaceForm& form) {
  return std::visit(
      [&](const auto& f) -> FitReport<ParamSurface> {
        using F = std::decay_t<decltype(f)>;
        FitReport<ParamSurface> out;
        if constexpr (std::is_same_v<F, PolynomialForm>) {
          auto rep = fit_surface_linear(samples, f.basis);
          out.result = std::move(rep.result);
          out.rmse = rep.rmse;
          out.iterations = rep.iterations;
          out.converged = rep.converged;
          out.residual_norm_history = std::move(rep.residual_norm_history);
        } else {
          auto rep = fit_log_product(samples, f.freq_degree, f.include_f2);
          out.result = std::move(rep.result);
          out.rmse = rep.rmse;
          out.iterations = rep.iterations;
          out.converged = rep.converged;
          out.residual_norm_history = std::move(rep.residual_norm_history);
        }
        return out;
      },
      form);
}

ModelForm ModelForm::canonical() {
  return {LogProductForm{3, true}, PolynomialForm{canonical_p_basis()},
          PolynomialForm{canonical_vsat_basis()}};
}

ModelForm ModelForm::canonical_without_frequency() {
  return {LogProductForm{0, true}, PolynomialForm{{{0, 0}, {1, 0}, {2, 0}}},
          PolynomialForm{{{0, 0}, {1, 0}}}};
}

// ---------------------------------------------------------------------------

std::string_view to_string(RappParam param) noexcept {
  switch (param) {
    case RappParam::Gain: return "gain";
    case RappParam::Smoothness: return "smoothness";
    case RappParam::Vsat: return "vsat";
  }
  return "?";
}

double get(const RappParams& params, RappParam which) noexcept {
  switch (which) {
    case RappParam::Gain: return params.gain;
    case RappParam::Smoothness: return params.smoothness;
    case RappParam::Vsat: return params.vsat;
  }
  return 0.0;
}

MeasurementRecord condition_record(const Campaign& campaign, const MeasurementRecord& record,
                                   bool align_records) {
  MeasurementRecord out = campaign.scaling.is_identity()
                              ? record
                              : scale_record(record, campaign.scaling.cable_loss_in_db,
                                             campaign.scaling.cable_loss_out_db,
                                             campaign.scaling.virtual_gain_db);
  return align_records ? align(out) : out;
}

PointFits fit_campaign_points(const Campaign& campaign, const CampaignFitOptions& opts) {
  campaign.validate();
  PointFits fits;
  for (const auto& op : campaign.grid()) {
    try {
      const auto rec = condition_record(campaign, campaign.records.at(op), opts.align_records);
      fits.emplace(op, fit_rapp_point(amam_points(rec), opts.point));
    } catch (const Error& e) {
      throw Error(e.code(), "at operating point " + describe(op) + ": " + e.what());
    }
  }
  return fits;
}

std::vector<SurfaceSample> parameter_map(const PointFits& fits, RappParam which) {
  std::vector<SurfaceSample> out;
  out.reserve(fits.size());
  for (const auto& [op, rep] : fits) out.push_back({op, get(rep.result, which)});
  return out;
}

ExtendedFitReport fit_extended_from_points(PointFits point_fits, const ModelForm& form) {
  ExtendedFitReport rep;
  auto stage2 = [&](RappParam which, const SurfaceForm& f) {
    try {
      return fit_surface(parameter_map(point_fits, which), f);
    } catch (const Error& e) {
      throw Error(e.code(), std::string("fitting the ") + std::string(to_string(which)) +
                                " surface: " + e.what());
    }
  };
  rep.gain = stage2(RappParam::Gain, form.gain);
  rep.smoothness = stage2(RappParam::Smoothness, form.smoothness);
  rep.vsat = stage2(RappParam::Vsat, form.vsat);
  rep.model.gain = rep.gain.result;
  rep.model.smoothness = rep.smoothness.result;
  rep.model.vsat = rep.vsat.result;
  rep.point_fits = std::move(point_fits);
  return rep;
}

ExtendedFitReport fit_extended_model(const Campaign& campaign, const ModelForm& form,
                                     const CampaignFitOptions& opts) {
  if (campaign.vsup_grid.size() < 3 || campaign.freq_grid.size() < 3) {
    throw Error(ErrorCode::DegenerateGrid, "extended fit needs at least a 3x3 grid");
  }
  return fit_extended_from_points(fit_campaign_points(campaign, opts), form);
}

}  // namespace rappx
