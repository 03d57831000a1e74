// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rappx/error.hpp"
#include "rappx/fit.hpp"
#include "rappx/io.hpp"
#include "rappx/metrics.hpp"
#include "rappx/rapp.hpp"
#include "rappx/selection.hpp"
#include "rappx/signals.hpp"
#include "../test_support.hpp"

namespace {

using namespace rappx;
using testing::grid_samples;
using testing::oracle_rapp;
using testing::relative_error;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;
  std::function<void(Outcome&)> body;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void rapp_closed_form(Outcome& out) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> lg(std::log(1e-2), std::log(1e3));
  std::uniform_real_distribution<double> lp(std::log(0.1), std::log(50.0));
  std::uniform_real_distribution<double> lv(std::log(1e-3), std::log(1e2));
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const RappParams prm{std::exp(lg(rng)), std::exp(lp(rng)), std::exp(lv(rng))};
    const double got = rapp_amplitude(prm, prm.vsat);
    const double want = prm.gain * prm.vsat * std::pow(2.0, -1.0 / (2.0 * prm.smoothness));
    worst = std::max(worst, relative_error(got, want));
  }
  out.detail << "max rel err " << worst << " over 1000 triples";
  out.check(worst <= 1e-12, "relative error > 1e-12");
}

void scalar_fit(Outcome& out) {
  const RappParams truth{1.0, 1.0, 1.7};
  const auto clean = testing::sampled_curve(truth, 3.0, 2000);
  const auto rep = fit_rapp_point(clean);
  const double e0 = std::max({relative_error(rep.result.gain, truth.gain),
                              relative_error(rep.result.smoothness, truth.smoothness),
                              relative_error(rep.result.vsat, truth.vsat)});
  out.check(e0 <= 1e-6, "noiseless recovery");

  double power = 0.0;
  for (const auto& p : clean) power += p.output_amp * p.output_amp;
  const double sigma = std::sqrt(power / clean.size() * std::pow(10.0, -40.0 / 10.0));
  std::vector<double> eg, ep, ev;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sigma);
    auto pts = clean;
    for (auto& p : pts) p.output_amp = std::max(0.0, p.output_amp + n(rng));
    const auto r = fit_rapp_point(pts).result;
    eg.push_back(relative_error(r.gain, truth.gain));
    ep.push_back(relative_error(r.smoothness, truth.smoothness));
    ev.push_back(relative_error(r.vsat, truth.vsat));
  }
  const double mg = median(eg), mp = median(ep), mv = median(ev);
  out.detail << "noiseless max rel err " << e0 << "; -40 dB median rel err G " << mg << " p " << mp
             << " Vsat " << mv;
  out.check(mg <= 0.05 && mp <= 0.05 && mv <= 0.05, "noisy median > 5%");
}

void surface_exactness(Outcome& out) {
  const auto vg = zx60_2534_vsup_grid();
  const auto fg = zx60_2534_freq_grid();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> c(0.5, 2.0);
  for (unsigned deg : {2u, 3u}) {
    const auto basis = full_basis(deg);
    std::vector<double> coefs;
    for (std::size_t j = 0; j < basis.size(); ++j) coefs.push_back((j % 2 ? -1.0 : 1.0) * c(rng));
    const auto rep = fit_surface_linear(grid_samples(PolynomialSurface(basis, coefs), vg, fg), basis);
    double worst = 0.0;
    for (std::size_t j = 0; j < basis.size(); ++j) {
      worst = std::max(worst, relative_error(rep.result.terms()[j].coef, coefs[j]));
    }
    out.detail << "poly" << deg << deg << " max rel err " << worst << " rmse " << rep.rmse << "; ";
    out.check(worst <= 1e-9, "coefficient error");
    out.check(rep.rmse <= 1e-12, "rmse");
  }
}

void sparse_recovery(Outcome& out) {
  const std::vector<double> coefs{0.12, 0.05, -0.02, 0.004};
  const auto samples = grid_samples(PolynomialSurface(canonical_vsat_basis(), coefs),
                                    zx60_2534_vsup_grid(), zx60_2534_freq_grid());
  const auto trace = eliminate(samples, full_basis(3));
  auto selected = trace.selected_basis;
  auto want = canonical_vsat_basis();
  std::sort(selected.begin(), selected.end(), canonical_less);
  std::sort(want.begin(), want.end(), canonical_less);
  double worst = trace.initial_rmse;
  for (const auto& s : trace.steps) worst = std::max(worst, s.rmse_after);
  out.detail << "selected";
  for (const auto& m : trace.selected_basis) out.detail << ' ' << m.name();
  out.detail << " after " << trace.steps.size() << " removals, max rmse " << worst;
  out.check(selected == want, "selected basis");
  out.check(worst <= 1e-9, "rmse along the trace");
}

void log_product(Outcome& out) {
  const LogProductSurface truth{1.0, {2.0, 0.0, 1.0, 0.5}};
  const auto rep = fit_log_product(grid_samples(truth, zx60_2534_vsup_grid(), zx60_2534_freq_grid()), 3, true);
  double worst = relative_error(rep.result.offset, truth.offset);
  for (std::size_t j = 0; j < 4; ++j) {
    const double want = truth.freq_coeffs[j];
    const double err = want == 0.0 ? std::abs(rep.result.freq_coeffs[j]) : relative_error(rep.result.freq_coeffs[j], want);
    worst = std::max(worst, err);
  }
  const auto g0 = std::get<LogProductSurface>(synth_2534_truth().gain);
  const auto rep2 = fit_log_product(grid_samples(g0, zx60_2534_vsup_grid(), zx60_2534_freq_grid()), 3, true);
  double worst2 = relative_error(rep2.result.offset, g0.offset);
  for (std::size_t j = 0; j < 4; ++j) worst2 = std::max(worst2, relative_error(rep2.result.freq_coeffs[j], g0.freq_coeffs[j]));
  out.detail << "a=1, h=2f^3+f+0.5: max err " << worst << "; SYNTH-2534 gain: max rel err " << worst2;
  out.check(worst <= 1e-6 && worst2 <= 1e-6, "coefficient error");
}

void end_to_end(Outcome& out) {
  ImpairmentSpec imp;
  imp.max_delay = 64;
  imp.max_phase = std::numbers::pi;
  const auto camp = synth_campaign(synth_2534_truth(), kSynth2534Id, zx60_2534_vsup_grid(),
                                   zx60_2534_freq_grid(), OfdmConfig{}, imp);
  const auto fit = fit_extended_model(camp);
  const auto nof = fit_no_freq_variant(fit.point_fits);
  const std::vector<ModelVariant> variants{make_basic_variant(fit.point_fits), ExtendedVariant{fit.model}, nof};
  const auto report = compare_variants(camp, variants);
  const auto& b = report.at("basic");
  const auto& e = report.at("extended");
  const auto& n = report.at("extended_no_freq");
  double best_ratio = 0.0;
  for (const auto& [op, x] : n.per_point) {
    if (op.freq != nof.reference_freq) best_ratio = std::max(best_ratio, x / e.per_point.at(op));
  }
  out.detail << camp.records.size() << " points; mean NRMSE basic " << b.mean_nrmse << " extended "
             << e.mean_nrmse << " extended_no_freq " << n.mean_nrmse << " (ref " << nof.reference_freq
             << " GHz); max no_freq/extended off-reference " << best_ratio;
  out.check(camp.records.size() == 70, "grid size");
  out.check(b.mean_nrmse <= 0.01, "basic <= 0.01");
  out.check(e.mean_nrmse <= 0.12, "extended <= 0.12");
  out.check(e.mean_nrmse <= n.mean_nrmse, "extended <= extended_no_freq");
  out.check(best_ratio >= 2.0, "no_freq >= 2x extended somewhere");
}

void alignment(Outcome& out) {
  const auto truth = synth_2534_truth();
  OfdmConfig cfg;
  cfg.n_symbols = 2;
  double worst_phase = 0.0;
  int delay_misses = 0;
  int trials = 0;
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<long> dd(-4000, 4000);
  std::uniform_real_distribution<double> dp(-std::numbers::pi, std::numbers::pi);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    cfg.seed = seed;
    const auto frame = generate_ofdm(cfg);
    const long d = dd(rng);
    const double ph = dp(rng);
    const auto clean = simulate_measurement(truth, {3.6, 1.5}, frame, -std::numeric_limits<double>::infinity(), d, ph, seed);
    const auto est = estimate_alignment(clean);
    ++trials;
    if (est.delay != d) ++delay_misses;
    worst_phase = std::max(worst_phase, std::abs(std::remainder(est.phase - ph, 2 * std::numbers::pi)));
    const auto noisy = simulate_measurement(truth, {3.6, 1.5}, frame, -30.0, 12, ph, seed);
    ++trials;
    if (estimate_alignment(noisy).delay != 12) ++delay_misses;
  }
  out.detail << "delay misses " << delay_misses << "/" << trials << "; max noiseless phase err " << worst_phase
             << " rad";
  out.check(delay_misses == 0, "delay");
  out.check(worst_phase <= 1e-6, "phase");
}

void ofdm(Outcome& out) {
  const OfdmConfig def;
  const auto frame = generate_ofdm(def);
  out.check(frame.size() == 40960, "frame length");
  out.check(def.occupied_bins.size() == 590 &&
                std::set<int>(def.occupied_bins.begin(), def.occupied_bins.end()).size() == 590,
            "occupied bin count");
  std::set<std::size_t> occ;
  for (int b : def.occupied_bins) occ.insert(static_cast<std::size_t>((b + 4096) % 4096));
  double worst_leak = -std::numeric_limits<double>::infinity();
  std::size_t energetic = 0;
  {
    const auto spec = testing::naive_dft(std::span(frame).subspan(0, 4096));
    double in_min = std::numeric_limits<double>::infinity(), out_max = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k) {
      const double p = std::norm(spec[k]);
      if (occ.count(k)) in_min = std::min(in_min, p);
      else out_max = std::max(out_max, p);
    }
    worst_leak = 10.0 * std::log10(std::max(out_max, 1e-300) / in_min);
    for (const auto& s : spec)
      if (10.0 * std::log10(std::max(std::norm(s), 1e-300) / in_min) > -100.0) ++energetic;
  }
  double pmin = 1e300, pmax = -1e300;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    OfdmConfig cfg;
    cfg.seed = seed;
    const double p = papr_db(generate_ofdm(cfg));
    pmin = std::min(pmin, p);
    pmax = std::max(pmax, p);
  }
  out.detail << "length " << frame.size() << ", " << energetic << " bins above -100 dB, leakage "
             << worst_leak << " dB, PAPR " << pmin << ".." << pmax << " dB over 20 seeds";
  out.check(energetic == 590, "energetic bins");
  out.check(worst_leak <= -100.0, "leakage");
  out.check(pmin >= 9.0 && pmax <= 13.0, "PAPR range");
}

void solver_soundness(Outcome& out) {
  std::mt19937_64 rng(555);
  std::uniform_real_distribution<double> lg(std::log(0.3), std::log(30.0));
  std::uniform_real_distribution<double> lp(std::log(0.3), std::log(8.0));
  std::uniform_real_distribution<double> lv(std::log(0.1), std::log(3.0));
  std::uniform_real_distribution<double> amp(0.01, 4.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const LogRappParams th{lg(rng), lp(rng), lv(rng)};
    const double a = amp(rng) * std::exp(th[2]);
    const std::vector<AmAmPoint> pt{{a, 0.0}};
    std::vector<double> r(1);
    std::vector<std::array<double, 3>> jac(1);
    rapp_residuals(pt, th, r, jac);
    for (int k = 0; k < 3; ++k) {
      const double fd = testing::oracle_rapp_log_derivative(th, a, k);
      worst = std::max(worst, std::abs(jac[0][k] - fd) / std::abs(fd));
    }
  }
  double worst_orth = 0.0;
  std::uniform_real_distribution<double> v(2.4, 5.0), f(0.5, 2.5), y(-1.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    std::vector<SurfaceSample> samples;
    for (int i = 0; i < 70; ++i) samples.push_back({{v(rng), f(rng)}, y(rng)});
    const auto basis = full_basis(3);
    const auto fit = fit_surface_linear(samples, basis).result;
    std::vector<double> res;
    double rn = 0.0;
    for (const auto& s : samples) {
      res.push_back(s.value - fit.eval(s.op));
      rn += res.back() * res.back();
    }
    for (const auto& m : basis) {
      double dot = 0.0, cn = 0.0;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        dot += m.eval(samples[i].op) * res[i];
        cn += m.eval(samples[i].op) * m.eval(samples[i].op);
      }
      worst_orth = std::max(worst_orth, std::abs(dot) / (std::sqrt(cn) * std::sqrt(rn)));
    }
  }
  out.detail << "max Jacobian rel err " << worst << " over 100 points; max normalized residual/column inner product "
             << worst_orth;
  out.check(worst <= 1e-6, "Jacobian");
  out.check(worst_orth <= 1e-8, "orthogonality");
}

void persistence(Outcome& out) {
  testing::TempDir dir;
  OfdmConfig cfg;
  cfg.n_symbols = 1;
  ImpairmentSpec imp;
  imp.max_delay = 32;
  imp.max_phase = 2.0;
  const std::vector<double> vg{2.4, 3.2, 4.0, 4.8};
  const auto fg = zx60_2534_freq_grid();
  const auto camp = synth_campaign(synth_2534_truth(), kSynth2534Id, vg, fg, cfg, imp);
  {
    io::OutputTransaction tx;
    io::save_campaign(camp, dir / "camp", tx);
    tx.commit();
  }
  const auto loaded = io::load_campaign(dir / "camp");
  const auto fit = fit_extended_model(camp);
  io::ModelFile mf;
  mf.amplifier_id = camp.amplifier_id;
  mf.model = fit.model;
  mf.provenance = {io::campaign_hash(camp), "1970-01-01T00:00:00Z", io::tool_version()};
  const auto back = io::parse_model(io::serialize_model(mf));

  double worst = 0.0;
  for (const auto& op : camp.grid()) {
    const auto& a = camp.records.at(op);
    const auto& b = loaded.records.at(op);
    const auto pa = extended_eval(fit.model, op, a.input);
    const auto pb = extended_eval(back.model, op, b.input);
    for (std::size_t i = 0; i < pa.size(); ++i) {
      if (pa[i] != Sample{}) worst = std::max(worst, std::abs(pb[i] - pa[i]) / std::abs(pa[i]));
    }
    for (std::size_t i = 0; i < a.output.size(); ++i) {
      if (a.output[i] != Sample{}) worst = std::max(worst, std::abs(b.output[i] - a.output[i]) / std::abs(a.output[i]));
    }
  }

  const auto camp2 = synth_campaign(synth_2534_truth(), kSynth2534Id, vg, fg, cfg, imp);
  {
    io::OutputTransaction tx;
    io::save_campaign(camp2, dir / "camp2", tx);
    tx.commit();
  }
  bool identical = io::read_text(dir / "camp" / "manifest.json") == io::read_text(dir / "camp2" / "manifest.json");
  for (const auto& e : std::filesystem::directory_iterator(dir / "camp" / "records")) {
    identical = identical && io::read_text(e.path()) == io::read_text(dir / "camp2" / "records" / e.path().filename());
  }
  io::ModelFile mf2 = mf;
  mf2.model = fit_extended_model(loaded).model;
  identical = identical && io::serialize_model(mf2) == io::serialize_model(mf);

  out.detail << "max rel prediction/sample change after round trip " << worst << "; reruns byte-identical: "
             << (identical ? "yes" : "no");
  out.check(worst <= 1e-15, "round-trip precision");
  out.check(identical, "byte-identical reruns");
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "Rapp closed form at |x| = Vsat", 1.0, rapp_closed_form},
      {2, "Scalar fit recovery", 30.0, scalar_fit},
      {3, "Surface fit exactness", 5.0, surface_exactness},
      {4, "Sparse recovery by elimination", 10.0, sparse_recovery},
      {5, "Log-product fit", 5.0, log_product},
      {6, "SYNTH-2534 end-to-end comparison", 300.0, end_to_end},
      {7, "Alignment", 30.0, alignment},
      {8, "OFDM stimulus", 10.0, ofdm},
      {9, "Solver soundness", 10.0, solver_soundness},
      {10, "Persistence and determinism", 10.0, persistence},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(out);
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << "[exception: " << e.what() << "] ";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.time_limit_s) {
      out.pass = false;
      out.detail << " [over time limit " << c.time_limit_s << " s]";
    }
    if (!out.pass) ++failures;
    std::printf("%s criterion %d: %s: %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", c.id, c.name,
                out.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
