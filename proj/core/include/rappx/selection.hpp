#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rappx/fit.hpp"
#include "rappx/surface.hpp"

namespace rappx {

/// Smallest N whose full total-degree-N basis cannot be improved by more than
/// `improvement` (relative rmse) by going to N+1. N is further capped by
/// max_degree_cap, by the number of samples, and by the highest degree the
/// grid can support without rank deficiency.
unsigned choose_initial_degree(std::span<const SurfaceSample> samples, unsigned max_degree_cap,
                               double improvement = 0.01);

struct CandidateRemoval {
  Monomial monomial;
  double rmse_if_removed = 0.0;
};

struct EliminationStep {
  Monomial removed;
  double rmse_after = 0.0;
  std::vector<CandidateRemoval> considered;
};

enum class StopReason { PlateauExceeded, MinTermsReached };

std::string_view to_string(StopReason reason) noexcept;

struct EliminationTrace {
  std::vector<Monomial> initial_basis;
  double initial_rmse = 0.0;
  /// plateau_factor * max(initial_rmse, kRmseFloor).
  double rmse_limit = 0.0;
  std::vector<EliminationStep> steps;
  std::vector<Monomial> selected_basis;
  StopReason stop_reason = StopReason::MinTermsReached;
  /// The best candidate of the step that was not committed, if any.
  std::optional<CandidateRemoval> rejected;
};

inline constexpr double kDefaultPlateauFactor = 1.10;
inline constexpr double kRmseFloor = 1e-12;

/// Candidate order: lower rmse first; on equal rmse the higher total degree,
/// then the higher frequency power, is removed first.
bool removal_preferred(const CandidateRemoval& a, const CandidateRemoval& b) noexcept;

/// Greedy backward elimination. Each step refits with every remaining
/// monomial left out in turn and permanently drops the one whose removal
/// raises the rmse least. Stops before a removal would exceed the rmse limit
/// or once min_terms monomials remain.
EliminationTrace eliminate(std::span<const SurfaceSample> samples,
                           std::span<const Monomial> initial_basis,
                           double plateau_factor = kDefaultPlateauFactor,
                           std::size_t min_terms = 1);

struct TraceRow {
  std::size_t terms_count = 0;
  double rmse = 0.0;
  /// Empty for the full-basis row.
  std::optional<Monomial> removed;
};

/// One row per basis size from |initial| down to |selected|.
std::vector<TraceRow> export_trace(const EliminationTrace& trace);

}  // namespace rappx
