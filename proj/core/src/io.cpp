#include "rappx/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rappx/error.hpp"

#ifndef RAPPX_VERSION
#define RAPPX_VERSION "0.0.0"
#endif

namespace rappx::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

std::string format_with(double v, std::chars_format fmt) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  // Fixed notation of the largest doubles needs ~330 characters.
  char buf[400];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, fmt);
  return std::string(buf, res.ptr);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Calls fn(line) for every nonempty line, stripping a trailing '\r'.
template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) fn(line);
    start = end + 1;
  }
}

void expect_header(const CsvTable& table, std::initializer_list<std::string_view> names,
                   std::string_view what) {
  bool ok = table.header.size() == names.size();
  if (ok) {
    std::size_t i = 0;
    for (auto n : names) ok = ok && table.header[i++] == n;
  }
  if (!ok) throw Error(ErrorCode::Format, std::string(what) + ": unexpected CSV header");
}

std::string describe_cell(double vsup, double freq) {
  std::ostringstream s;
  s << "(vsup=" << vsup << " V, f=" << freq << " GHz)";
  return s.str();
}

}  // namespace

std::string format_double(double v) { return format_with(v, std::chars_format::general); }

std::string format_fixed(double v) { return format_with(v, std::chars_format::fixed); }

double parse_double(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::Format, "not a number: '" + std::string(text) + "'");
  }
  return v;
}

Monomial parse_monomial(std::string_view name) {
  if (name.size() != 3 || name[0] != 'p' || name[1] < '0' || name[1] > '9' || name[2] < '0' ||
      name[2] > '9') {
    throw Error(ErrorCode::Format, "bad monomial name '" + std::string(name) + "'");
  }
  return {static_cast<unsigned>(name[1] - '0'), static_cast<unsigned>(name[2] - '0')};
}

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  bool first = true;
  for_each_line(text, [&](std::string_view line) {
    std::vector<std::string> cells;
    for (auto c : split(line, ',')) cells.emplace_back(c);
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != table.header.size()) {
        throw Error(ErrorCode::Format, "CSV row has " + std::to_string(cells.size()) +
                                           " cells, header has " +
                                           std::to_string(table.header.size()));
      }
      table.rows.push_back(std::move(cells));
    }
  });
  if (first) throw Error(ErrorCode::Format, "CSV text has no header");
  return table;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorCode::Io, "write failed for " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::Io, "cannot move temporary file into " + path.string());
  }
}

OutputTransaction::~OutputTransaction() {
  if (committed_) return;
  std::error_code ec;
  for (auto it = files_.rbegin(); it != files_.rend(); ++it) fs::remove(*it, ec);
  for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it) fs::remove(*it, ec);
}

void OutputTransaction::create_directories(const fs::path& dir) {
  std::vector<fs::path> missing;
  for (fs::path p = dir; !p.empty() && !fs::exists(p); p = p.parent_path()) {
    missing.push_back(p);
    if (p == p.parent_path()) break;
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::Io, "cannot create directory " + dir.string() +
                                   (ec ? ": " + ec.message() : std::string()));
  }
  dirs_.insert(dirs_.end(), missing.rbegin(), missing.rend());
}

void OutputTransaction::write(const fs::path& path, std::string_view content) {
  write_file_atomic(path, content);
  files_.push_back(path);
}

// ---------------------------------------------------------------------------

std::string heatmap_csv(std::span<const HeatmapRow> rows) {
  std::string out = "vsup,freq,value\n";
  for (const auto& r : rows) {
    out += format_fixed(r.vsup);
    out += ',';
    out += format_fixed(r.freq);
    out += ',';
    out += format_fixed(r.value);
    out += '\n';
  }
  return out;
}

std::vector<HeatmapRow> parse_heatmap_csv(std::string_view text) {
  const auto table = parse_csv(text);
  expect_header(table, {"vsup", "freq", "value"}, "heatmap");
  std::vector<HeatmapRow> rows;
  rows.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    rows.push_back({parse_double(r[0]), parse_double(r[1]), parse_double(r[2])});
  }
  return rows;
}

std::string trace_csv(std::span<const TraceRow> rows) {
  std::string out = "terms_count,rmse,removed_monomial\n";
  for (const auto& r : rows) {
    out += std::to_string(r.terms_count);
    out += ',';
    out += format_double(r.rmse);
    out += ',';
    if (r.removed) out += r.removed->name();
    out += '\n';
  }
  return out;
}

std::vector<TraceRow> parse_trace_csv(std::string_view text) {
  const auto table = parse_csv(text);
  expect_header(table, {"terms_count", "rmse", "removed_monomial"}, "trace");
  std::vector<TraceRow> rows;
  for (const auto& r : table.rows) {
    TraceRow row;
    row.terms_count = static_cast<std::size_t>(parse_double(r[0]));
    row.rmse = parse_double(r[1]);
    if (!r[2].empty()) row.removed = parse_monomial(r[2]);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------

namespace {

Json surface_to_json(const ParamSurface& surface, const std::optional<double>& rmse) {
  Json j = std::visit(
      [](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        Json out;
        if constexpr (std::is_same_v<S, PolynomialSurface>) {
          out["form"] = "polynomial";
          out["terms"] = Json::array();
          for (const auto& t : s.terms()) {
            out["terms"].push_back({{"name", t.monomial.name()},
                                    {"vsup_power", t.monomial.vsup_power},
                                    {"freq_power", t.monomial.freq_power},
                                    {"coef", t.coef}});
          }
        } else {
          out["form"] = "log_product";
          out["offset"] = s.offset;
          out["freq_coeffs"] = s.freq_coeffs;
        }
        return out;
      },
      surface);
  j["fit_rmse"] = rmse ? Json(*rmse) : Json(nullptr);
  return j;
}

ParamSurface surface_from_json(const Json& j) {
  const auto form = j.at("form").get<std::string>();
  if (form == "polynomial") {
    std::vector<Term> terms;
    for (const auto& t : j.at("terms")) {
      terms.push_back({{t.at("vsup_power").get<unsigned>(), t.at("freq_power").get<unsigned>()},
                       t.at("coef").get<double>()});
    }
    return PolynomialSurface(std::move(terms));
  }
  if (form == "log_product") {
    LogProductSurface s;
    s.offset = j.at("offset").get<double>();
    s.freq_coeffs = j.at("freq_coeffs").get<std::vector<double>>();
    if (s.freq_coeffs.empty() || s.freq_coeffs.size() > 4) {
      throw Error(ErrorCode::Format, "log_product surface needs 1 to 4 frequency coefficients");
    }
    return s;
  }
  throw Error(ErrorCode::Format, "unknown surface form '" + form + "'");
}

constexpr std::array<const char*, 3> kParamKeys{"gain", "smoothness", "vsat"};

}  // namespace

std::string serialize_model(const ModelFile& file) {
  Json j;
  j["format"] = "rappx-model";
  j["version"] = file.version;
  j["amplifier_id"] = file.amplifier_id;
  j["units"] = {{"vsup", "V"}, {"freq", "GHz"}, {"log", "natural"}, {"amplitude", "V"}};
  j["clamp_floor"] = file.model.clamp_floor;
  Json params;
  params[kParamKeys[0]] = surface_to_json(file.model.gain, file.fit_rmse[0]);
  params[kParamKeys[1]] = surface_to_json(file.model.smoothness, file.fit_rmse[1]);
  params[kParamKeys[2]] = surface_to_json(file.model.vsat, file.fit_rmse[2]);
  j["parameters"] = std::move(params);
  j["provenance"] = {{"campaign_hash", file.provenance.campaign_hash},
                     {"timestamp", file.provenance.timestamp},
                     {"tool_version", file.provenance.tool_version}};
  return j.dump(2) + "\n";
}

ModelFile parse_model(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Format, std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", std::string()) != "rappx-model") {
      throw Error(ErrorCode::Format, "not a rappx model file");
    }
    ModelFile file;
    file.version = j.at("version").get<int>();
    if (file.version != kModelFormatVersion) {
      throw Error(ErrorCode::UnsupportedVersion,
                  "model file version " + std::to_string(file.version) +
                      " is not supported (supported: " + std::to_string(kModelFormatVersion) + ")");
    }
    const auto& units = j.at("units");
    if (units.at("vsup") != "V" || units.at("freq") != "GHz" || units.at("log") != "natural") {
      throw Error(ErrorCode::Format, "model file units must be V, GHz and natural log");
    }
    file.amplifier_id = j.at("amplifier_id").get<std::string>();
    file.model.clamp_floor = j.at("clamp_floor").get<double>();
    const auto& params = j.at("parameters");
    ParamSurface* targets[3] = {&file.model.gain, &file.model.smoothness, &file.model.vsat};
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& p = params.at(kParamKeys[k]);
      *targets[k] = surface_from_json(p);
      if (p.contains("fit_rmse") && !p.at("fit_rmse").is_null()) {
        file.fit_rmse[k] = p.at("fit_rmse").get<double>();
      }
    }
    if (j.contains("provenance")) {
      const auto& prov = j.at("provenance");
      file.provenance.campaign_hash = prov.value("campaign_hash", std::string());
      file.provenance.timestamp = prov.value("timestamp", std::string());
      file.provenance.tool_version = prov.value("tool_version", std::string());
    }
    return file;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Format, std::string("malformed model file: ") + e.what());
  }
}

ModelFile load_model(const fs::path& path) {
  try {
    return parse_model(read_text(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string current_timestamp() {
  std::time_t t = 0;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string tool_version() { return RAPPX_VERSION; }

// ---------------------------------------------------------------------------

std::string record_csv(const MeasurementRecord& record) {
  if (record.input.size() != record.output.size()) {
    throw Error(ErrorCode::LengthMismatch, "record input and output differ in length");
  }
  std::string out = "index,in_re,in_im,out_re,out_im\n";
  out.reserve(out.size() + record.input.size() * 96);
  char buf[64];
  auto put = [&](double v) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
  };
  for (std::size_t i = 0; i < record.input.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    put(record.input[i].real());
    out += ',';
    put(record.input[i].imag());
    out += ',';
    put(record.output[i].real());
    out += ',';
    put(record.output[i].imag());
    out += '\n';
  }
  return out;
}

void parse_record_csv(std::string_view text, MeasurementRecord& record) {
  record.input.clear();
  record.output.clear();
  bool header = true;
  for_each_line(text, [&](std::string_view line) {
    if (header) {
      if (line != "index,in_re,in_im,out_re,out_im") {
        throw Error(ErrorCode::Format, "record CSV: unexpected header '" + std::string(line) + "'");
      }
      header = false;
      return;
    }
    const auto cells = split(line, ',');
    if (cells.size() != 5) throw Error(ErrorCode::Format, "record CSV row needs 5 cells");
    if (parse_double(cells[0]) != static_cast<double>(record.input.size())) {
      throw Error(ErrorCode::Format, "record CSV indices must run 0, 1, 2, ...");
    }
    record.input.emplace_back(parse_double(cells[1]), parse_double(cells[2]));
    record.output.emplace_back(parse_double(cells[3]), parse_double(cells[4]));
  });
  if (header) throw Error(ErrorCode::Format, "record CSV is empty");
}

std::string record_file_name(std::size_t vsup_index, std::size_t freq_index) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "rec_v%03zu_f%03zu.csv", vsup_index, freq_index);
  return buf;
}

namespace {

Json noise_json(double noise_db) { return std::isfinite(noise_db) ? Json(noise_db) : Json(nullptr); }

}  // namespace

void save_campaign(const Campaign& campaign, const fs::path& dir, OutputTransaction& tx) {
  campaign.validate();
  tx.create_directories(dir / "records");

  Json manifest;
  manifest["format"] = "rappx-campaign";
  manifest["version"] = kCampaignFormatVersion;
  manifest["amplifier_id"] = campaign.amplifier_id;
  manifest["units"] = {{"vsup", "V"}, {"freq", "GHz"}, {"samples", "V"}};
  manifest["vsup_grid"] = campaign.vsup_grid;
  manifest["freq_grid"] = campaign.freq_grid;
  manifest["scaling"] = {{"cable_loss_in_db", campaign.scaling.cable_loss_in_db},
                         {"cable_loss_out_db", campaign.scaling.cable_loss_out_db},
                         {"virtual_gain_db", campaign.scaling.virtual_gain_db}};
  manifest["records"] = Json::array();
  for (std::size_t i = 0; i < campaign.vsup_grid.size(); ++i) {
    for (std::size_t k = 0; k < campaign.freq_grid.size(); ++k) {
      const auto& rec = campaign.records.at({campaign.vsup_grid[i], campaign.freq_grid[k]});
      const auto name = record_file_name(i, k);
      tx.write(dir / "records" / name, record_csv(rec));
      manifest["records"].push_back({{"vsup", rec.op.vsup},
                                     {"freq", rec.op.freq},
                                     {"file", "records/" + name},
                                     {"delay", rec.meta.delay},
                                     {"phase", rec.meta.phase},
                                     {"noise_db", noise_json(rec.meta.noise_db)}});
    }
  }
  manifest["campaign_hash"] = campaign_hash(campaign);
  tx.write(dir / "manifest.json", manifest.dump(2) + "\n");
}

Campaign load_campaign(const fs::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    throw Error(ErrorCode::Io, "no campaign manifest at " + manifest_path.string());
  }
  Json manifest;
  try {
    manifest = Json::parse(read_text(manifest_path));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Format, manifest_path.string() + ": " + e.what());
  }
  try {
    if (manifest.value("format", std::string()) != "rappx-campaign") {
      throw Error(ErrorCode::Format, manifest_path.string() + " is not a rappx campaign manifest");
    }
    const int version = manifest.at("version").get<int>();
    if (version != kCampaignFormatVersion) {
      throw Error(ErrorCode::UnsupportedVersion,
                  "campaign version " + std::to_string(version) + " is not supported (supported: " +
                      std::to_string(kCampaignFormatVersion) + ")");
    }
    Campaign c;
    c.amplifier_id = manifest.at("amplifier_id").get<std::string>();
    c.vsup_grid = manifest.at("vsup_grid").get<std::vector<double>>();
    c.freq_grid = manifest.at("freq_grid").get<std::vector<double>>();
    if (c.vsup_grid.empty() || c.freq_grid.empty()) {
      throw Error(ErrorCode::DegenerateGrid, "campaign manifest has an empty grid");
    }
    if (manifest.contains("scaling")) {
      const auto& s = manifest.at("scaling");
      c.scaling = {s.value("cable_loss_in_db", 0.0), s.value("cable_loss_out_db", 0.0),
                   s.value("virtual_gain_db", 0.0)};
    }

    std::map<OperatingPoint, const Json*> entries;
    for (const auto& r : manifest.at("records")) {
      entries[{r.at("vsup").get<double>(), r.at("freq").get<double>()}] = &r;
    }
    for (std::size_t i = 0; i < c.vsup_grid.size(); ++i) {
      for (std::size_t k = 0; k < c.freq_grid.size(); ++k) {
        const OperatingPoint op{c.vsup_grid[i], c.freq_grid[k]};
        const auto it = entries.find(op);
        const fs::path file =
            dir / (it != entries.end() ? it->second->at("file").get<std::string>()
                                       : "records/" + record_file_name(i, k));
        if (!fs::exists(file)) {
          throw Error(ErrorCode::MissingGridCell, "campaign " + dir.string() +
                                                      " is missing the record for grid cell " +
                                                      describe_cell(op.vsup, op.freq) + " (" +
                                                      file.string() + ")");
        }
        MeasurementRecord rec;
        rec.op = op;
        if (it != entries.end()) {
          const auto& e = *it->second;
          rec.meta.delay = e.value("delay", 0L);
          rec.meta.phase = e.value("phase", 0.0);
          rec.meta.noise_db = e.contains("noise_db") && !e.at("noise_db").is_null()
                                  ? e.at("noise_db").get<double>()
                                  : -std::numeric_limits<double>::infinity();
        }
        try {
          parse_record_csv(read_text(file), rec);
        } catch (const Error& err) {
          throw Error(err.code(), file.string() + ": " + err.what());
        }
        c.records.emplace(op, std::move(rec));
      }
    }
    if (entries.size() > c.records.size()) {
      throw Error(ErrorCode::Format, "campaign manifest lists records outside its grid");
    }
    return c;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Format, manifest_path.string() + ": " + e.what());
  }
}

std::string campaign_hash(const Campaign& campaign) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::string_view s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ull;
    }
  };
  for (double v : campaign.vsup_grid) mix(format_double(v) + ";");
  mix("|");
  for (double f : campaign.freq_grid) mix(format_double(f) + ";");
  mix("|" + format_double(campaign.scaling.cable_loss_in_db) + ";" +
      format_double(campaign.scaling.cable_loss_out_db) + ";" +
      format_double(campaign.scaling.virtual_gain_db) + "|");
  for (const auto& [op, rec] : campaign.records) mix(record_csv(rec));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rappx::io
