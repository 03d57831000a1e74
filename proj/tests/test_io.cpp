#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "rappx/error.hpp"
#include "rappx/io.hpp"
#include "test_support.hpp"

namespace rappx {
namespace {

using testing::TempDir;

ExtendedRappModel random_model(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> pc, vc;
  for (int i = 0; i < 4; ++i) pc.push_back(u(rng) / 3.0);
  for (int i = 0; i < 10; ++i) vc.push_back(u(rng) / 7.0);
  ExtendedRappModel m;
  m.gain = LogProductSurface{u(rng), {u(rng), u(rng), u(rng), 5.0 + u(rng)}};
  m.smoothness = PolynomialSurface(canonical_p_basis(), pc);
  m.vsat = PolynomialSurface(full_basis(3), vc);
  return m;
}

TEST(Numbers, FormatAndParse) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    EXPECT_EQ(io::parse_double(io::format_double(v)), v);
  }
  EXPECT_EQ(io::parse_double("-inf"), -std::numeric_limits<double>::infinity());
  EXPECT_TRUE(std::isnan(io::parse_double("nan")));
  EXPECT_THROW(io::parse_double("1.5x"), Error);
  EXPECT_EQ(io::format_fixed(1e-7).find('e'), std::string::npos);
  EXPECT_EQ(io::parse_monomial("p12"), (Monomial{1, 2}));
  EXPECT_THROW(io::parse_monomial("q12"), Error);
}

TEST(ModelFile, RoundTripPreservesPredictions) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    io::ModelFile file;
    file.amplifier_id = "AMP-" + std::to_string(seed);
    file.model = random_model(seed);
    file.fit_rmse = {0.25, std::nullopt, 1e-13};
    file.provenance = {"0123456789abcdef", "1970-01-01T00:00:00Z", "test"};
    const std::string text = io::serialize_model(file);
    const auto back = io::parse_model(text);
    EXPECT_EQ(back.amplifier_id, file.amplifier_id);
    EXPECT_EQ(back.fit_rmse, file.fit_rmse);
    EXPECT_EQ(back.provenance.campaign_hash, file.provenance.campaign_hash);
    EXPECT_TRUE(back.model.gain == file.model.gain);
    EXPECT_TRUE(back.model.smoothness == file.model.smoothness);
    EXPECT_TRUE(back.model.vsat == file.model.vsat);
    EXPECT_EQ(io::serialize_model(back), text);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> v(2.4, 5.0), f(0.5, 2.5);
    for (int i = 0; i < 1000; ++i) {
      const OperatingPoint op{v(rng), f(rng)};
      for (auto [a, b] : {std::pair{&file.model.gain, &back.model.gain},
                          std::pair{&file.model.smoothness, &back.model.smoothness},
                          std::pair{&file.model.vsat, &back.model.vsat}}) {
        const double want = surface_eval(*a, op);
        EXPECT_LE(std::abs(surface_eval(*b, op) - want), 1e-15 * std::abs(want));
      }
    }
  }
}

TEST(ModelFile, UnsupportedVersion) {
  io::ModelFile file;
  file.model = synth_2534_truth();
  std::string text = io::serialize_model(file);
  const auto pos = text.find("\"version\": 1");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 12, "\"version\": 99");
  try {
    io::parse_model(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedVersion);
    EXPECT_NE(std::string(e.what()).find("99"), std::string::npos);
  }
  EXPECT_THROW(io::parse_model("{\"format\": \"something else\"}"), Error);
  EXPECT_THROW(io::parse_model("not json"), Error);
}

TEST(ModelFile, FixtureMatchesBuiltInTruth) {
  const auto file = io::load_model(std::filesystem::path(RAPPX_DATA_DIR) / "synth_2534.json");
  const auto truth = synth_2534_truth();
  EXPECT_EQ(file.amplifier_id, kSynth2534Id);
  EXPECT_TRUE(file.model.gain == truth.gain);
  EXPECT_TRUE(file.model.smoothness == truth.smoothness);
  EXPECT_TRUE(file.model.vsat == truth.vsat);
  EXPECT_EQ(file.model.clamp_floor, truth.clamp_floor);
}

TEST(HeatmapCsv, RoundTrip) {
  std::vector<HeatmapRow> rows;
  for (double v : zx60_2534_vsup_grid())
    for (double f : zx60_2534_freq_grid()) rows.push_back({v, f, 0.1 * v - 0.03 * f * f});
  const auto text = io::heatmap_csv(rows);
  EXPECT_EQ(text.substr(0, text.find('\n')), "vsup,freq,value");
  const auto back = io::parse_heatmap_csv(text);
  ASSERT_EQ(back.size(), 70u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_NEAR(back[i].vsup, rows[i].vsup, 1e-12);
    EXPECT_NEAR(back[i].freq, rows[i].freq, 1e-12);
    EXPECT_NEAR(back[i].value, rows[i].value, 1e-12);
  }
}

TEST(TraceCsv, RoundTrip) {
  const std::vector<TraceRow> rows{{10, 1e-14, std::nullopt}, {9, 2e-14, Monomial{2, 0}},
                                   {8, 0.25, Monomial{0, 3}}};
  const auto text = io::trace_csv(rows);
  EXPECT_EQ(text.substr(0, text.find('\n')), "terms_count,rmse,removed_monomial");
  const auto back = io::parse_trace_csv(text);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].terms_count, rows[i].terms_count);
    EXPECT_EQ(back[i].rmse, rows[i].rmse);
    EXPECT_EQ(back[i].removed, rows[i].removed);
  }
}

TEST(Csv, ParsesCrLf) {
  const auto t = io::parse_csv("a,b\r\n1,2\r\n3,4\n");
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][1], "4");
}

Campaign tiny_campaign() {
  OfdmConfig cfg;
  cfg.n_symbols = 1;
  ImpairmentSpec imp;
  imp.max_delay = 20;
  imp.max_phase = 1.0;
  auto c = synth_campaign(synth_2534_truth(), "TINY", std::vector<double>{3.0, 4.0},
                          std::vector<double>{1.0, 2.0}, cfg, imp);
  c.scaling = {1.5, 40.0, 3.0};
  return c;
}

TEST(CampaignStore, RoundTrip) {
  TempDir dir;
  const auto c = tiny_campaign();
  {
    io::OutputTransaction tx;
    io::save_campaign(c, dir / "camp", tx);
    tx.commit();
  }
  const auto back = io::load_campaign(dir / "camp");
  EXPECT_EQ(back.amplifier_id, c.amplifier_id);
  EXPECT_EQ(back.vsup_grid, c.vsup_grid);
  EXPECT_EQ(back.freq_grid, c.freq_grid);
  EXPECT_EQ(back.scaling.cable_loss_out_db, 40.0);
  ASSERT_EQ(back.records.size(), c.records.size());
  for (const auto& [op, rec] : c.records) {
    const auto& r = back.records.at(op);
    EXPECT_EQ(r.input, rec.input);
    EXPECT_EQ(r.output, rec.output);
    EXPECT_EQ(r.meta.delay, rec.meta.delay);
    EXPECT_EQ(r.meta.phase, rec.meta.phase);
    EXPECT_EQ(r.meta.noise_db, rec.meta.noise_db);
  }
  EXPECT_EQ(io::campaign_hash(back), io::campaign_hash(c));
  EXPECT_EQ(io::campaign_hash(c).size(), 16u);
}

TEST(CampaignStore, MissingRecordNamesCell) {
  TempDir dir;
  const auto c = tiny_campaign();
  {
    io::OutputTransaction tx;
    io::save_campaign(c, dir / "camp", tx);
    tx.commit();
  }
  std::filesystem::remove(dir / "camp" / "records" / io::record_file_name(1, 0));
  try {
    io::load_campaign(dir / "camp");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingGridCell);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("vsup=4"), std::string::npos) << msg;
    EXPECT_NE(msg.find(io::record_file_name(1, 0)), std::string::npos) << msg;
  }
}

TEST(CampaignStore, HashChangesWithContent) {
  auto c = tiny_campaign();
  const auto h = io::campaign_hash(c);
  c.records.begin()->second.output[3] += Sample{1e-12, 0.0};
  EXPECT_NE(io::campaign_hash(c), h);
}

TEST(OutputTransaction, RollsBackUnlessCommitted) {
  TempDir dir;
  {
    io::OutputTransaction tx;
    tx.create_directories(dir / "a" / "b");
    tx.write(dir / "a" / "b" / "x.txt", "hello");
    EXPECT_TRUE(std::filesystem::exists(dir / "a" / "b" / "x.txt"));
  }
  EXPECT_FALSE(std::filesystem::exists(dir / "a"));
  {
    io::OutputTransaction tx;
    tx.write(dir / "y.txt", "kept");
    tx.commit();
  }
  EXPECT_EQ(io::read_text(dir / "y.txt"), "kept");
}

TEST(Timestamp, HonorsSourceDateEpoch) {
  ::setenv("SOURCE_DATE_EPOCH", "86400", 1);
  EXPECT_EQ(io::current_timestamp(), "1970-01-02T00:00:00Z");
  ::unsetenv("SOURCE_DATE_EPOCH");
}

}  // namespace
}  // namespace rappx
