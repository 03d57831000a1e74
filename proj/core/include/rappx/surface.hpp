#pragma once

#include <compare>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rappx/types.hpp"

namespace rappx {

/// vsup^vsup_power * f^freq_power.
struct Monomial {
  unsigned vsup_power = 0;
  unsigned freq_power = 0;

  unsigned total_degree() const noexcept { return vsup_power + freq_power; }
  double eval(const OperatingPoint& op) const noexcept;
  /// "p" + vsup_power + freq_power, e.g. "p12" for vsup*f^2.
  std::string name() const;

  friend bool operator==(const Monomial&, const Monomial&) = default;
};

/// Graded order: total degree ascending, then vsup_power descending, which
/// yields p00, p10, p01, p20, p11, p02, p30, ...
bool canonical_less(const Monomial& a, const Monomial& b) noexcept;

/// Every monomial with total degree <= max_degree, in canonical order.
std::vector<Monomial> full_basis(unsigned max_degree);
/// Number of monomials in full_basis(max_degree).
std::size_t full_basis_size(unsigned max_degree) noexcept;

/// {vsup, vsup*f, f^2, vsup*f^2}
std::vector<Monomial> canonical_vsat_basis();
/// {vsup, f, vsup^2, f^2}
std::vector<Monomial> canonical_p_basis();

struct Term {
  Monomial monomial;
  double coef = 0.0;
  friend bool operator==(const Term&, const Term&) = default;
};

/// Sparse bivariate polynomial. Terms are kept distinct and in canonical order.
class PolynomialSurface {
 public:
  PolynomialSurface() = default;
  /// Sorts into canonical order; throws Error(Domain) on duplicate monomials.
  explicit PolynomialSurface(std::vector<Term> terms);
  PolynomialSurface(std::span<const Monomial> basis, std::span<const double> coefs);

  static PolynomialSurface constant(double value);

  const std::vector<Term>& terms() const noexcept { return terms_; }
  std::vector<Monomial> basis() const;
  double eval(const OperatingPoint& op) const noexcept;

  friend bool operator==(const PolynomialSurface&, const PolynomialSurface&) = default;

 private:
  std::vector<Term> terms_;
};

/// (log(vsup) + offset) * h(f) with natural log and
/// h(f) = freq_coeffs[0] f^n + ... + freq_coeffs[n], n <= 3.
struct LogProductSurface {
  double offset = 0.0;
  std::vector<double> freq_coeffs;

  double h(double freq) const noexcept;
  double eval(const OperatingPoint& op) const noexcept;

  friend bool operator==(const LogProductSurface&, const LogProductSurface&) = default;
};

using ParamSurface = std::variant<PolynomialSurface, LogProductSurface>;

double surface_eval(const ParamSurface& surface, const OperatingPoint& op);

/// Rapp model whose G, p and Vsat are surfaces over (vsup [V], f [GHz]).
struct ExtendedRappModel {
  static constexpr double kDefaultClampFloor = 1e-3;

  ParamSurface gain;
  ParamSurface smoothness;
  ParamSurface vsat;
  double clamp_floor = kDefaultClampFloor;

  /// Model with constant surfaces; reduces exactly to the scalar model.
  static ExtendedRappModel constant(const RappParams& params);
};

struct ExtendedParams {
  RappParams params;
  bool clamped = false;
};

/// Evaluates the three surfaces at op. Values below clamp_floor (including
/// negative values) are raised to clamp_floor and flagged.
ExtendedParams extended_params(const ExtendedRappModel& model, const OperatingPoint& op);

Frame extended_eval(const ExtendedRappModel& model, const OperatingPoint& op,
                    std::span<const Sample> frame);

/// Ground-truth synthetic amplifier used by the simulator and the tests
/// ("SYNTH-2534"). Canonical surface forms; over vsup 2.4..5.0 V and
/// f 0.5..2.5 GHz, p stays within [1.3, 1.92], Vsat varies by more than 3x
/// and G grows with vsup.
ExtendedRappModel synth_2534_truth();
inline constexpr const char* kSynth2534Id = "SYNTH-2534";

}  // namespace rappx
