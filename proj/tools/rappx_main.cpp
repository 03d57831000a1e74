// rappx: fit, select and compare extended Rapp power-amplifier models.

#include <CLI11.hpp>

#include <iostream>
#include <limits>

#include "commands.hpp"
#include "rappx/io.hpp"

namespace cli = rappx::cli;

namespace {

double parse_db(const std::string& text) { return rappx::io::parse_double(text); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extended Rapp model toolkit: synthetic campaigns, two-stage fitting, "
               "monomial elimination and model comparison"};
  app.set_version_flag("--version", rappx::io::tool_version());
  app.require_subcommand(1);

  // synth
  cli::SynthArgs synth;
  std::string synth_vsup, synth_freq, synth_noise = "-50";
  auto* s = app.add_subcommand("synth", "Simulate a measurement campaign from a truth model");
  s->add_option("--truth", synth.truth, "Truth model file (default: built-in SYNTH-2534)")
      ->check(CLI::ExistingFile);
  s->add_option("--id", synth.amplifier_id, "Amplifier id written to the manifest");
  s->add_option("--vsup-grid", synth_vsup, "first:step:last or list, volts (default 2.4:0.2:5.0)");
  s->add_option("--freq-grid", synth_freq, "first:step:last or list, GHz (default 0.5:0.5:2.5)");
  s->add_option("--noise", synth_noise, "Noise power relative to output power in dB, or -inf")
      ->capture_default_str();
  s->add_option("--max-delay", synth.max_delay, "Largest injected circular delay in samples")
      ->capture_default_str();
  s->add_option("--max-phase", synth.max_phase, "Largest injected phase offset in rad")
      ->capture_default_str();
  s->add_option("--rms", synth.target_rms, "Stimulus RMS amplitude in volts")->capture_default_str();
  s->add_option("--symbols", synth.n_symbols, "OFDM symbols per frame")->capture_default_str();
  s->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  s->add_option("--out", synth.out, "Campaign output directory");

  // fit
  cli::FitArgs fit;
  auto* f = app.add_subcommand("fit", "Two-stage extended model fit of a campaign");
  f->add_option("campaign", fit.campaign, "Campaign directory")->required()->check(CLI::ExistingDirectory);
  f->add_option("--out", fit.out, "Model file (or heatmap directory with --basic)");
  f->add_flag("--basic", fit.basic, "Only run the per-point fits and write parameter heatmaps");
  f->add_option("--gain-form", fit.gain_form, "Surface form for G (default logprod:3)");
  f->add_option("--p-form", fit.p_form, "Surface form for p (default canonical-p)");
  f->add_option("--vsat-form", fit.vsat_form, "Surface form for Vsat (default canonical-vsat)");

  // select
  cli::SelectArgs sel;
  std::string sel_param = "vsat";
  auto* se = app.add_subcommand("select", "Greedy backward monomial elimination");
  auto* sel_campaign = se->add_option("--campaign", sel.campaign, "Campaign directory")
                           ->check(CLI::ExistingDirectory);
  auto* sel_map = se->add_option("--map", sel.map_csv, "Parameter heatmap CSV (vsup,freq,value)")
                      ->check(CLI::ExistingFile);
  sel_campaign->excludes(sel_map);
  se->add_option("--param", sel_param, "gain, smoothness or vsat")->capture_default_str();
  se->add_option("--max-degree", sel.max_degree, "Cap for the automatic start degree")
      ->capture_default_str();
  se->add_option("--start-degree", sel.start_degree, "Skip the degree search and start here");
  se->add_option("--plateau", sel.plateau, "Allowed rmse growth factor over the full basis")
      ->capture_default_str();
  se->add_option("--min-terms", sel.min_terms, "Never go below this many terms")->capture_default_str();
  se->add_option("--out", sel.out, "Trace CSV path");

  // compare
  cli::CompareArgs cmp;
  std::vector<std::string> cmp_overlays;
  auto* c = app.add_subcommand("compare", "AM/AM NRMSE comparison of model variants");
  c->add_option("campaign", cmp.campaign, "Campaign directory")->required()->check(CLI::ExistingDirectory);
  c->add_option("--model", cmp.model, "Extended model file (default: fit the campaign)")
      ->check(CLI::ExistingFile);
  c->add_option("--ref-freq", cmp.ref_freq, "Reference frequency of extended_no_freq in GHz");
  c->add_option("--variants", cmp.variants, "Subset of basic, extended, extended_no_freq");
  c->add_option("--overlay", cmp_overlays, "vsup:freq of AM/AM overlay exports");
  c->add_option("--overlay-points", cmp.overlay_points, "Rows per overlay CSV")->capture_default_str();
  c->add_option("--out", cmp.out, "Output directory");

  // export-heatmap
  cli::HeatmapArgs hm;
  std::vector<std::string> hm_params;
  auto* h = app.add_subcommand("export-heatmap", "Per-point parameter maps as CSV");
  h->add_option("campaign", hm.campaign, "Campaign directory")->required()->check(CLI::ExistingDirectory);
  h->add_option("--model", hm.model, "Evaluate this model on the grid instead of refitting")
      ->check(CLI::ExistingFile);
  h->add_option("--param", hm_params, "gain, smoothness, vsat (default: all)");
  h->add_option("--out", hm.out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  return cli::run_guarded(
      [&] {
        if (s->parsed()) {
          if (!synth_vsup.empty()) synth.vsup_grid = cli::parse_grid_spec(synth_vsup);
          if (!synth_freq.empty()) synth.freq_grid = cli::parse_grid_spec(synth_freq);
          synth.noise_db = parse_db(synth_noise);
          if (synth.out.empty()) synth.out = cli::default_output("campaign");
          cli::cmd_synth(synth, std::cout);
        } else if (f->parsed()) {
          if (fit.out.empty()) fit.out = cli::default_output(fit.basic ? "heatmaps" : "model.json");
          cli::cmd_fit(fit, std::cout);
        } else if (se->parsed()) {
          sel.param = cli::parse_param(sel_param);
          if (sel.out.empty()) sel.out = cli::default_output("trace.csv");
          cli::cmd_select(sel, std::cout);
        } else if (c->parsed()) {
          for (const auto& o : cmp_overlays) cmp.overlays.push_back(cli::parse_operating_point(o));
          if (cmp.out.empty()) cmp.out = cli::default_output("compare");
          cli::cmd_compare(cmp, std::cout);
        } else if (h->parsed()) {
          if (!hm_params.empty()) {
            hm.params.clear();
            for (const auto& p : hm_params) hm.params.push_back(cli::parse_param(p));
          }
          if (hm.out.empty()) hm.out = cli::default_output("heatmaps");
          cli::cmd_export_heatmap(hm, std::cout);
        }
      },
      std::cerr);
}
