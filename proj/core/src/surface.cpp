#include "rappx/surface.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rappx/error.hpp"
#include "rappx/rapp.hpp"

namespace rappx {

namespace {

double ipow(double base, unsigned exp) noexcept {
  double r = 1.0;
  for (unsigned i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

double Monomial::eval(const OperatingPoint& op) const noexcept {
  return ipow(op.vsup, vsup_power) * ipow(op.freq, freq_power);
}

std::string Monomial::name() const {
  return "p" + std::to_string(vsup_power) + std::to_string(freq_power);
}

bool canonical_less(const Monomial& a, const Monomial& b) noexcept {
  if (a.total_degree() != b.total_degree()) return a.total_degree() < b.total_degree();
  return a.vsup_power > b.vsup_power;
}

std::vector<Monomial> full_basis(unsigned max_degree) {
  std::vector<Monomial> basis;
  basis.reserve(full_basis_size(max_degree));
  for (unsigned d = 0; d <= max_degree; ++d) {
    for (unsigned i = d + 1; i-- > 0;) basis.push_back({i, d - i});
  }
  return basis;
}

std::size_t full_basis_size(unsigned max_degree) noexcept {
  return static_cast<std::size_t>(max_degree + 1) * (max_degree + 2) / 2;
}

std::vector<Monomial> canonical_vsat_basis() { return {{1, 0}, {1, 1}, {0, 2}, {1, 2}}; }

std::vector<Monomial> canonical_p_basis() { return {{1, 0}, {0, 1}, {2, 0}, {0, 2}}; }

PolynomialSurface::PolynomialSurface(std::vector<Term> terms) : terms_(std::move(terms)) {
  std::stable_sort(terms_.begin(), terms_.end(), [](const Term& a, const Term& b) {
    return canonical_less(a.monomial, b.monomial);
  });
  for (std::size_t i = 1; i < terms_.size(); ++i) {
    if (terms_[i].monomial == terms_[i - 1].monomial) {
      throw Error(ErrorCode::Domain, "duplicate monomial " + terms_[i].monomial.name());
    }
  }
}

PolynomialSurface::PolynomialSurface(std::span<const Monomial> basis,
                                     std::span<const double> coefs)
    : PolynomialSurface([&] {
        if (basis.size() != coefs.size()) {
          throw Error(ErrorCode::LengthMismatch, "basis and coefficient counts differ");
        }
        std::vector<Term> terms;
        terms.reserve(basis.size());
        for (std::size_t i = 0; i < basis.size(); ++i) terms.push_back({basis[i], coefs[i]});
        return terms;
      }()) {}

PolynomialSurface PolynomialSurface::constant(double value) {
  return PolynomialSurface(std::vector<Term>{{{0, 0}, value}});
}

std::vector<Monomial> PolynomialSurface::basis() const {
  std::vector<Monomial> out;
  out.reserve(terms_.size());
  for (const auto& t : terms_) out.push_back(t.monomial);
  return out;
}

double PolynomialSurface::eval(const OperatingPoint& op) const noexcept {
  double sum = 0.0;
  for (const auto& t : terms_) sum += t.coef * t.monomial.eval(op);
  return sum;
}

double LogProductSurface::h(double freq) const noexcept {
  double acc = 0.0;
  for (double c : freq_coeffs) acc = acc * freq + c;
  return acc;
}

double LogProductSurface::eval(const OperatingPoint& op) const noexcept {
  return (std::log(op.vsup) + offset) * h(op.freq);
}

double surface_eval(const ParamSurface& surface, const OperatingPoint& op) {
  op.validate();
  return std::visit([&](const auto& s) { return s.eval(op); }, surface);
}

ExtendedRappModel ExtendedRappModel::constant(const RappParams& params) {
  return {PolynomialSurface::constant(params.gain),
          PolynomialSurface::constant(params.smoothness),
          PolynomialSurface::constant(params.vsat)};
}

ExtendedParams extended_params(const ExtendedRappModel& model, const OperatingPoint& op) {
  ExtendedParams out;
  auto clamp = [&](double v) {
    // NaN also takes the floor.
    if (!(v >= model.clamp_floor) || !std::isfinite(v)) {
      out.clamped = true;
      return model.clamp_floor;
    }
    return v;
  };
  out.params.gain = clamp(surface_eval(model.gain, op));
  out.params.smoothness = clamp(surface_eval(model.smoothness, op));
  out.params.vsat = clamp(surface_eval(model.vsat, op));
  return out;
}

Frame extended_eval(const ExtendedRappModel& model, const OperatingPoint& op,
                    std::span<const Sample> frame) {
  return apply_to_frame(extended_params(model, op).params, frame);
}

ExtendedRappModel synth_2534_truth() {
  ExtendedRappModel m;
  m.gain = LogProductSurface{0.5, {0.4, -1.5, 0.8, 4.5}};
  m.smoothness = PolynomialSurface(canonical_p_basis(), std::vector{0.6, 0.5, -0.06, -0.15});
  m.vsat = PolynomialSurface(canonical_vsat_basis(), std::vector{0.12, 0.05, -0.02, 0.004});
  return m;
}

}  // namespace rappx
