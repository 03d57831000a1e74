#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "rappx/error.hpp"
#include "rappx/io.hpp"
#include "rappx/metrics.hpp"
#include "rappx/selection.hpp"

namespace rappx::cli {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string grid_summary(std::span<const double> grid) {
  std::ostringstream s;
  s << grid.size() << " values";
  if (!grid.empty()) s << " [" << grid.front() << " .. " << grid.back() << "]";
  return s.str();
}

std::string cell_tag(const OperatingPoint& op) {
  return io::format_fixed(op.vsup) + "V_" + io::format_fixed(op.freq) + "GHz";
}

void write_param_heatmaps(const std::map<RappParam, std::map<OperatingPoint, double>>& maps,
                          const Campaign& campaign, const fs::path& dir, io::OutputTransaction& tx,
                          std::ostream& log) {
  tx.create_directories(dir);
  for (const auto& [param, values] : maps) {
    const auto path = dir / (std::string(to_string(param)) + ".csv");
    tx.write(path, io::heatmap_csv(export_heatmap(values, campaign.vsup_grid, campaign.freq_grid)));
    log << "wrote " << path.string() << '\n';
  }
}

}  // namespace

std::vector<double> parse_grid_spec(const std::string& spec) {
  if (spec.find(':') != std::string::npos) {
    const auto parts = split(spec, ':');
    if (parts.size() != 3) throw Error(ErrorCode::Domain, "grid spec must be first:step:last");
    return arithmetic_grid(io::parse_double(parts[0]), io::parse_double(parts[1]),
                           io::parse_double(parts[2]));
  }
  std::vector<double> grid;
  for (const auto& p : split(spec, ',')) grid.push_back(io::parse_double(p));
  if (grid.empty()) throw Error(ErrorCode::DegenerateGrid, "empty grid spec");
  return grid;
}

SurfaceForm parse_surface_form(const std::string& spec) {
  if (spec.rfind("logprod:", 0) == 0) {
    const auto parts = split(spec.substr(8), ':');
    LogProductForm form;
    form.freq_degree = static_cast<unsigned>(std::stoul(parts.at(0)));
    if (parts.size() > 1) {
      if (parts[1] != "no-f2") throw Error(ErrorCode::Domain, "unknown log-product option " + parts[1]);
      form.include_f2 = false;
    }
    return form;
  }
  if (spec.rfind("poly:", 0) == 0) {
    PolynomialForm form;
    for (const auto& name : split(spec.substr(5), ',')) form.basis.push_back(io::parse_monomial(name));
    return form;
  }
  if (spec.rfind("poly", 0) == 0 && spec.size() == 6 && spec[4] == spec[5] &&
      std::isdigit(static_cast<unsigned char>(spec[4]))) {
    return PolynomialForm{full_basis(static_cast<unsigned>(spec[4] - '0'))};
  }
  if (spec == "canonical-vsat") return PolynomialForm{canonical_vsat_basis()};
  if (spec == "canonical-p") return PolynomialForm{canonical_p_basis()};
  throw Error(ErrorCode::Domain, "unknown surface form '" + spec + "'");
}

RappParam parse_param(const std::string& name) {
  if (name == "gain" || name == "G") return RappParam::Gain;
  if (name == "smoothness" || name == "p") return RappParam::Smoothness;
  if (name == "vsat" || name == "Vsat") return RappParam::Vsat;
  throw Error(ErrorCode::Domain, "unknown parameter '" + name + "' (gain, smoothness, vsat)");
}

OperatingPoint parse_operating_point(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.size() != 2) throw Error(ErrorCode::Domain, "operating point must be vsup:freq");
  OperatingPoint op{io::parse_double(parts[0]), io::parse_double(parts[1])};
  op.validate();
  return op;
}

fs::path default_output(const std::string& name) {
  const char* env = std::getenv("RAPPX_OUT_DIR");
  return (env && *env) ? fs::path(env) / name : fs::path(".") / name;
}

// ---------------------------------------------------------------------------

void cmd_synth(const SynthArgs& args, std::ostream& log) {
  ExtendedRappModel truth = synth_2534_truth();
  std::string id = args.amplifier_id.empty() ? kSynth2534Id : args.amplifier_id;
  if (args.truth) {
    const auto file = io::load_model(*args.truth);
    truth = file.model;
    if (args.amplifier_id.empty()) id = file.amplifier_id;
  }
  const auto vsup = args.vsup_grid.empty() ? zx60_2534_vsup_grid() : args.vsup_grid;
  const auto freq = args.freq_grid.empty() ? zx60_2534_freq_grid() : args.freq_grid;

  OfdmConfig ofdm;
  ofdm.seed = args.seed;
  ofdm.target_rms = args.target_rms;
  ofdm.n_symbols = args.n_symbols;
  ImpairmentSpec imp;
  imp.noise_db = args.noise_db;
  imp.max_delay = args.max_delay;
  imp.max_phase = args.max_phase;
  imp.seed = args.seed;

  const auto campaign = synth_campaign(truth, id, vsup, freq, ofdm, imp);
  io::OutputTransaction tx;
  io::save_campaign(campaign, args.out, tx);
  tx.commit();

  log << "campaign " << id << " -> " << args.out.string() << '\n'
      << "  vsup grid: " << grid_summary(vsup) << " V\n"
      << "  freq grid: " << grid_summary(freq) << " GHz\n"
      << "  records:   " << campaign.records.size() << " x " << ofdm.fft_size * ofdm.n_symbols
      << " samples\n"
      << "  noise:     " << args.noise_db << " dB\n";
}

void cmd_fit(const FitArgs& args, std::ostream& log) {
  const auto campaign = io::load_campaign(args.campaign);
  io::OutputTransaction tx;

  if (args.basic) {
    const auto fits = fit_campaign_points(campaign);
    std::map<RappParam, std::map<OperatingPoint, double>> maps;
    for (auto p : {RappParam::Gain, RappParam::Smoothness, RappParam::Vsat}) {
      maps[p] = parameter_grid(fits, p);
    }
    write_param_heatmaps(maps, campaign, args.out, tx, log);
    tx.commit();
    return;
  }

  ModelForm form = ModelForm::canonical();
  if (args.gain_form) form.gain = parse_surface_form(*args.gain_form);
  if (args.p_form) form.smoothness = parse_surface_form(*args.p_form);
  if (args.vsat_form) form.vsat = parse_surface_form(*args.vsat_form);

  const auto rep = fit_extended_model(campaign, form);
  io::ModelFile file;
  file.amplifier_id = campaign.amplifier_id;
  file.model = rep.model;
  file.fit_rmse = {rep.gain.rmse, rep.smoothness.rmse, rep.vsat.rmse};
  file.provenance = {io::campaign_hash(campaign), io::current_timestamp(), io::tool_version()};

  if (args.out.has_parent_path() && !args.out.parent_path().empty()) {
    tx.create_directories(args.out.parent_path());
  }
  tx.write(args.out, io::serialize_model(file));
  tx.commit();

  double worst_rmse = 0.0;
  OperatingPoint worst{};
  for (const auto& [op, f] : rep.point_fits) {
    if (f.rmse >= worst_rmse) {
      worst_rmse = f.rmse;
      worst = op;
    }
  }
  log << "fitted " << rep.point_fits.size() << " operating points of " << campaign.amplifier_id
      << '\n'
      << "  largest scalar-fit amplitude rmse: " << worst_rmse << " V at (" << worst.vsup << " V, "
      << worst.freq << " GHz)\n"
      << "surface rmse (parameter units over the grid):\n"
      << "  gain        " << rep.gain.rmse << '\n'
      << "  smoothness  " << rep.smoothness.rmse << '\n'
      << "  vsat        " << rep.vsat.rmse << " V\n"
      << "wrote " << args.out.string() << '\n';
}

void cmd_select(const SelectArgs& args, std::ostream& log) {
  std::vector<SurfaceSample> samples;
  if (args.map_csv) {
    for (const auto& row : io::parse_heatmap_csv(io::read_text(*args.map_csv))) {
      samples.push_back({{row.vsup, row.freq}, row.value});
    }
  } else if (args.campaign) {
    samples = parameter_map(fit_campaign_points(io::load_campaign(*args.campaign)), args.param);
  } else {
    throw Error(ErrorCode::Domain, "select needs a campaign directory or a parameter-map CSV");
  }

  const unsigned degree = args.start_degree ? *args.start_degree
                                            : choose_initial_degree(samples, args.max_degree);
  const auto trace = eliminate(samples, full_basis(degree), args.plateau, args.min_terms);

  io::OutputTransaction tx;
  if (args.out.has_parent_path() && !args.out.parent_path().empty()) {
    tx.create_directories(args.out.parent_path());
  }
  tx.write(args.out, io::trace_csv(export_trace(trace)));
  tx.commit();

  log << "parameter " << to_string(args.param) << ": start degree " << degree << " ("
      << trace.initial_basis.size() << " terms, rmse " << trace.initial_rmse << ")\n"
      << "stopped: " << to_string(trace.stop_reason) << " after " << trace.steps.size()
      << " removals\nselected:";
  for (const auto& m : trace.selected_basis) log << ' ' << m.name();
  log << "\nwrote " << args.out.string() << '\n';
}

void cmd_compare(const CompareArgs& args, std::ostream& log) {
  const auto campaign = io::load_campaign(args.campaign);
  const auto fits = fit_campaign_points(campaign);

  std::vector<ModelVariant> variants;
  for (const auto& name : args.variants) {
    if (name == "basic") {
      variants.emplace_back(make_basic_variant(fits));
    } else if (name == "extended") {
      ExtendedRappModel model = args.model ? io::load_model(*args.model).model
                                           : fit_extended_from_points(fits, ModelForm::canonical()).model;
      variants.emplace_back(ExtendedVariant{std::move(model)});
    } else if (name == "extended_no_freq") {
      variants.emplace_back(fit_no_freq_variant(fits, args.ref_freq));
    } else {
      throw Error(ErrorCode::Domain, "unknown variant '" + name + "'");
    }
  }

  const auto report = compare_variants(campaign, variants);

  auto overlays = args.overlays;
  if (overlays.empty()) {
    const auto& vg = campaign.vsup_grid;
    // Middle-supply slice at the lowest, middle and highest frequency.
    const double vsup = std::find(vg.begin(), vg.end(), 3.6) != vg.end() ? 3.6 : median_frequency(vg);
    auto fg = campaign.freq_grid;
    std::sort(fg.begin(), fg.end());
    std::vector<double> picks{fg.front(), median_frequency(fg), fg.back()};
    picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
    for (double f : picks) overlays.push_back({vsup, f});
  }

  io::OutputTransaction tx;
  tx.create_directories(args.out);

  std::string summary = "variant,mean_nrmse,reference_freq,normalization,aggregation\n";
  for (const auto& v : report.variants) {
    summary += v.name + "," + io::format_double(v.mean_nrmse) + "," +
               (v.reference_freq ? io::format_double(*v.reference_freq) : std::string()) + "," +
               report.normalization + "," + report.aggregation + "\n";
    tx.write(args.out / ("nrmse_" + v.name + ".csv"),
             io::heatmap_csv(export_heatmap(v.per_point, campaign.vsup_grid, campaign.freq_grid)));
  }
  tx.write(args.out / "summary.csv", summary);

  for (const auto& op : overlays) {
    const auto ov = am_am_overlay(campaign, op, variants, args.overlay_points);
    std::string csv = "input_amp,measured";
    for (const auto& n : ov.variant_names) csv += "," + n;
    csv += '\n';
    for (std::size_t i = 0; i < ov.input_amp.size(); ++i) {
      csv += io::format_double(ov.input_amp[i]) + "," + io::format_double(ov.measured_amp[i]);
      for (const auto& col : ov.predicted) csv += "," + io::format_double(col[i]);
      csv += '\n';
    }
    tx.write(args.out / ("amam_" + cell_tag(op) + ".csv"), csv);
  }
  tx.commit();

  log << "mean AM/AM NRMSE over " << campaign.records.size() << " grid points ("
      << report.normalization << "):\n";
  for (const auto& v : report.variants) {
    log << "  " << std::left << std::setw(18) << v.name << v.mean_nrmse;
    if (v.reference_freq) log << "  (reference " << *v.reference_freq << " GHz)";
    log << '\n';
  }
  log << "wrote " << args.out.string() << '\n';
}

void cmd_export_heatmap(const HeatmapArgs& args, std::ostream& log) {
  const auto campaign = io::load_campaign(args.campaign);
  std::map<RappParam, std::map<OperatingPoint, double>> maps;
  if (args.model) {
    const auto model = io::load_model(*args.model).model;
    for (auto p : args.params) {
      for (const auto& op : campaign.grid()) maps[p][op] = get(extended_params(model, op).params, p);
    }
  } else {
    const auto fits = fit_campaign_points(campaign);
    for (auto p : args.params) maps[p] = parameter_grid(fits, p);
  }
  io::OutputTransaction tx;
  write_param_heatmaps(maps, campaign, args.out, tx, log);
  tx.commit();
}

}  // namespace rappx::cli
