#include "rappx/selection.hpp"

#include <algorithm>
#include <cmath>

#include "rappx/error.hpp"

namespace rappx {

unsigned choose_initial_degree(std::span<const SurfaceSample> samples, unsigned max_degree_cap,
                               double improvement) {
  if (samples.empty()) throw Error(ErrorCode::InsufficientData, "no samples");
  double mean_sq = 0.0;
  for (const auto& s : samples) mean_sq += s.value * s.value;
  const double floor =
      kRmseFloor * std::max(1.0, std::sqrt(mean_sq / static_cast<double>(samples.size())));

  unsigned degree = 0;
  double current = fit_surface_linear(samples, full_basis(0)).rmse;
  while (degree < max_degree_cap && current > floor) {
    const unsigned next = degree + 1;
    if (full_basis_size(next) > samples.size()) break;
    double next_rmse = 0.0;
    try {
      next_rmse = fit_surface_linear(samples, full_basis(next)).rmse;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::RankDeficient) break;
      throw;
    }
    if (next_rmse >= (1.0 - improvement) * current) break;
    degree = next;
    current = next_rmse;
  }
  return degree;
}

std::string_view to_string(StopReason reason) noexcept {
  return reason == StopReason::PlateauExceeded ? "plateau-exceeded" : "min-terms-reached";
}

bool removal_preferred(const CandidateRemoval& a, const CandidateRemoval& b) noexcept {
  if (a.rmse_if_removed != b.rmse_if_removed) return a.rmse_if_removed < b.rmse_if_removed;
  if (a.monomial.total_degree() != b.monomial.total_degree()) {
    return a.monomial.total_degree() > b.monomial.total_degree();
  }
  return a.monomial.freq_power > b.monomial.freq_power;
}

EliminationTrace eliminate(std::span<const SurfaceSample> samples,
                           std::span<const Monomial> initial_basis, double plateau_factor,
                           std::size_t min_terms) {
  if (!(plateau_factor > 1.0)) throw Error(ErrorCode::Domain, "plateau factor must exceed 1");
  if (min_terms < 1) throw Error(ErrorCode::Domain, "min_terms must be at least 1");

  EliminationTrace trace;
  trace.initial_basis.assign(initial_basis.begin(), initial_basis.end());
  trace.initial_rmse = fit_surface_linear(samples, trace.initial_basis).rmse;
  trace.rmse_limit = plateau_factor * std::max(trace.initial_rmse, kRmseFloor);

  std::vector<Monomial> basis = trace.initial_basis;
  trace.stop_reason = StopReason::MinTermsReached;
  while (basis.size() > min_terms) {
    EliminationStep step;
    step.considered.reserve(basis.size());
    for (std::size_t drop = 0; drop < basis.size(); ++drop) {
      std::vector<Monomial> reduced;
      reduced.reserve(basis.size() - 1);
      for (std::size_t j = 0; j < basis.size(); ++j)
        if (j != drop) reduced.push_back(basis[j]);
      step.considered.push_back({basis[drop], fit_surface_linear(samples, reduced).rmse});
    }
    const auto best = *std::min_element(step.considered.begin(), step.considered.end(),
                                        removal_preferred);
    if (best.rmse_if_removed > trace.rmse_limit) {
      trace.stop_reason = StopReason::PlateauExceeded;
      trace.rejected = best;
      break;
    }
    step.removed = best.monomial;
    step.rmse_after = best.rmse_if_removed;
    std::erase(basis, best.monomial);
    trace.steps.push_back(std::move(step));
  }
  trace.selected_basis = std::move(basis);
  return trace;
}

std::vector<TraceRow> export_trace(const EliminationTrace& trace) {
  std::vector<TraceRow> rows;
  rows.reserve(trace.steps.size() + 1);
  rows.push_back({trace.initial_basis.size(), trace.initial_rmse, std::nullopt});
  std::size_t terms = trace.initial_basis.size();
  for (const auto& step : trace.steps) rows.push_back({--terms, step.rmse_after, step.removed});
  return rows;
}

}  // namespace rappx
