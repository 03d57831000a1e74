#include "rappx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rappx/error.hpp"
#include "rappx/rapp.hpp"

namespace rappx {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyFrame, "empty vector");
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch, "vectors differ in length (" + std::to_string(a.size()) +
                                               " vs " + std::to_string(b.size()) + ")");
  }
}

std::vector<double> amplitudes(std::span<const Sample> frame) {
  std::vector<double> out(frame.size());
  std::transform(frame.begin(), frame.end(), out.begin(), [](Sample s) { return std::abs(s); });
  return out;
}

std::vector<double> predicted_amplitudes(const RappParams& params, std::span<const Sample> input) {
  std::vector<double> out(input.size());
  std::transform(input.begin(), input.end(), out.begin(),
                 [&](Sample s) { return rapp_amplitude(params, std::abs(s)); });
  return out;
}

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> actual) {
  check_pair(pred, actual);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - actual[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

double nrmse_amam(std::span<const double> pred, std::span<const double> measured) {
  check_pair(pred, measured);
  const double ref = std::sqrt(
      std::inner_product(measured.begin(), measured.end(), measured.begin(), 0.0) /
      static_cast<double>(measured.size()));
  if (!(ref > 0.0)) throw Error(ErrorCode::ZeroFrame, "measured AM/AM vector has zero norm");
  return rmse(pred, measured) / ref;
}

std::string_view variant_name(const ModelVariant& variant) noexcept {
  switch (variant.index()) {
    case 0: return "basic";
    case 1: return "extended";
    default: return "extended_no_freq";
  }
}

BasicVariant make_basic_variant(const PointFits& fits) {
  BasicVariant v;
  for (const auto& [op, rep] : fits) v.params.emplace(op, rep.result);
  return v;
}

double median_frequency(std::span<const double> freq_grid) {
  if (freq_grid.empty()) throw Error(ErrorCode::DegenerateGrid, "empty frequency grid");
  std::vector<double> sorted(freq_grid.begin(), freq_grid.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted[(sorted.size() - 1) / 2];
}

ExtendedNoFreqVariant fit_no_freq_variant(const PointFits& fits,
                                          std::optional<double> reference_freq) {
  std::vector<double> freqs;
  for (const auto& [op, rep] : fits) freqs.push_back(op.freq);
  const double ref = reference_freq.value_or(median_frequency(freqs));

  PointFits slice;
  for (const auto& [op, rep] : fits)
    if (op.freq == ref) slice.emplace(op, rep);
  if (slice.empty()) {
    std::ostringstream msg;
    msg << "reference frequency " << ref << " GHz is not on the campaign grid";
    throw Error(ErrorCode::MissingGridCell, msg.str());
  }
  ExtendedNoFreqVariant v;
  v.model = fit_extended_from_points(std::move(slice), ModelForm::canonical_without_frequency()).model;
  v.reference_freq = ref;
  return v;
}

RappParams variant_params(const ModelVariant& variant, const OperatingPoint& op) {
  return std::visit(
      [&](const auto& v) -> RappParams {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, BasicVariant>) {
          const auto it = v.params.find(op);
          if (it == v.params.end()) {
            std::ostringstream msg;
            msg << "basic variant has no parameters for (vsup=" << op.vsup << " V, f=" << op.freq
                << " GHz)";
            throw Error(ErrorCode::MissingGridCell, msg.str());
          }
          return it->second;
        } else {
          return extended_params(v.model, op).params;
        }
      },
      variant);
}

const VariantScore& ComparisonReport::at(std::string_view name) const {
  for (const auto& v : variants)
    if (v.name == name) return v;
  throw Error(ErrorCode::Domain, "no variant named " + std::string(name));
}

ComparisonReport compare_variants(const Campaign& campaign, std::span<const ModelVariant> variants,
                                  bool align_records) {
  campaign.validate();
  ComparisonReport report;
  report.amplifier_id = campaign.amplifier_id;
  for (const auto& v : variants) {
    VariantScore score;
    score.name = std::string(variant_name(v));
    if (const auto* nf = std::get_if<ExtendedNoFreqVariant>(&v)) score.reference_freq = nf->reference_freq;
    report.variants.push_back(std::move(score));
  }
  for (const auto& op : campaign.grid()) {
    const auto rec = condition_record(campaign, campaign.records.at(op), align_records);
    const auto measured = amplitudes(rec.output);
    for (std::size_t k = 0; k < variants.size(); ++k) {
      const auto pred = predicted_amplitudes(variant_params(variants[k], op), rec.input);
      report.variants[k].per_point.emplace(op, nrmse_amam(pred, measured));
    }
  }
  for (auto& score : report.variants) {
    double sum = 0.0;
    for (const auto& [op, value] : score.per_point) sum += value;
    score.mean_nrmse = sum / static_cast<double>(score.per_point.size());
  }
  return report;
}

std::vector<HeatmapRow> export_heatmap(const std::map<OperatingPoint, double>& values,
                                       std::span<const double> vsup_grid,
                                       std::span<const double> freq_grid) {
  std::vector<HeatmapRow> rows;
  rows.reserve(vsup_grid.size() * freq_grid.size());
  for (double v : vsup_grid) {
    for (double f : freq_grid) {
      const auto it = values.find({v, f});
      if (it == values.end()) {
        std::ostringstream msg;
        msg << "heatmap has no value for grid cell (vsup=" << v << " V, f=" << f << " GHz)";
        throw Error(ErrorCode::MissingGridCell, msg.str());
      }
      rows.push_back({v, f, it->second});
    }
  }
  return rows;
}

std::map<OperatingPoint, double> parameter_grid(const PointFits& fits, RappParam which) {
  std::map<OperatingPoint, double> out;
  for (const auto& [op, rep] : fits) out.emplace(op, get(rep.result, which));
  return out;
}

AmAmOverlay am_am_overlay(const Campaign& campaign, const OperatingPoint& op,
                          std::span<const ModelVariant> variants, std::size_t max_points,
                          bool align_records) {
  const auto it = campaign.records.find(op);
  if (it == campaign.records.end()) {
    std::ostringstream msg;
    msg << "campaign has no record at (vsup=" << op.vsup << " V, f=" << op.freq << " GHz)";
    throw Error(ErrorCode::MissingGridCell, msg.str());
  }
  const auto rec = condition_record(campaign, it->second, align_records);
  const std::size_t n = rec.input.size();
  if (n == 0) throw Error(ErrorCode::EmptyFrame, "record is empty");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(rec.input[a]) < std::abs(rec.input[b]);
  });
  const std::size_t rows = std::max<std::size_t>(1, std::min(max_points, n));
  std::vector<std::size_t> picked(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    picked[r] = order[rows == 1 ? n - 1 : r * (n - 1) / (rows - 1)];
  }

  AmAmOverlay out;
  out.op = op;
  for (std::size_t idx : picked) {
    out.input_amp.push_back(std::abs(rec.input[idx]));
    out.measured_amp.push_back(std::abs(rec.output[idx]));
  }
  for (const auto& v : variants) {
    out.variant_names.emplace_back(variant_name(v));
    out.predicted.push_back(am_am_curve(variant_params(v, op), out.input_amp));
  }
  return out;
}

}  // namespace rappx
