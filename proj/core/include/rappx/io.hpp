#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rappx/metrics.hpp"
#include "rappx/selection.hpp"
#include "rappx/signals.hpp"
#include "rappx/surface.hpp"

namespace rappx::io {

/// Shortest text that parses back to the same double; '.' decimal point.
std::string format_double(double v);
/// As format_double but never in exponent notation.
std::string format_fixed(double v);
/// Accepts "inf", "-inf" and "nan" besides ordinary numbers.
double parse_double(std::string_view text);

/// Monomial names follow the coefficient naming pNM, vsup^N * f^M.
Monomial parse_monomial(std::string_view name);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Minimal CSV: comma separated, no quoting, '\n' or "\r\n" line ends.
CsvTable parse_csv(std::string_view text);
std::string read_text(const std::filesystem::path& path);

/// Writes via a temporary sibling file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Tracks files written by a command. Unless commit() is called, the
/// destructor removes every file (and created directory) again.
class OutputTransaction {
 public:
  OutputTransaction() = default;
  OutputTransaction(const OutputTransaction&) = delete;
  OutputTransaction& operator=(const OutputTransaction&) = delete;
  ~OutputTransaction();

  void create_directories(const std::filesystem::path& dir);
  void write(const std::filesystem::path& path, std::string_view content);
  void commit() noexcept { committed_ = true; }
  const std::vector<std::filesystem::path>& written() const noexcept { return files_; }

 private:
  std::vector<std::filesystem::path> files_;
  std::vector<std::filesystem::path> dirs_;
  bool committed_ = false;
};

// Heatmap CSV: header "vsup,freq,value".
std::string heatmap_csv(std::span<const HeatmapRow> rows);
std::vector<HeatmapRow> parse_heatmap_csv(std::string_view text);

// Elimination trace CSV: header "terms_count,rmse,removed_monomial".
std::string trace_csv(std::span<const TraceRow> rows);
std::vector<TraceRow> parse_trace_csv(std::string_view text);

// ---------------------------------------------------------------------------
// Model file

inline constexpr int kModelFormatVersion = 1;

struct Provenance {
  std::string campaign_hash;
  std::string timestamp;
  std::string tool_version;
};

struct ModelFile {
  int version = kModelFormatVersion;
  std::string amplifier_id;
  ExtendedRappModel model;
  /// Surface fit rmse (parameter units) for gain, smoothness, vsat.
  std::array<std::optional<double>, 3> fit_rmse;
  Provenance provenance;
};

std::string serialize_model(const ModelFile& file);
/// Throws Error(UnsupportedVersion) or Error(Format).
ModelFile parse_model(std::string_view text);
ModelFile load_model(const std::filesystem::path& path);

/// UTC ISO-8601 time; SOURCE_DATE_EPOCH overrides the clock when set.
std::string current_timestamp();
std::string tool_version();

// ---------------------------------------------------------------------------
// Campaign store: <dir>/manifest.json plus <dir>/records/*.csv with header
// "index,in_re,in_im,out_re,out_im".

inline constexpr int kCampaignFormatVersion = 1;

std::string record_csv(const MeasurementRecord& record);
/// Fills input/output frames; op and meta stay untouched.
void parse_record_csv(std::string_view text, MeasurementRecord& record);

/// File name of the record at grid indices (i, j).
std::string record_file_name(std::size_t vsup_index, std::size_t freq_index);

void save_campaign(const Campaign& campaign, const std::filesystem::path& dir,
                   OutputTransaction& tx);
/// Throws Error(MissingGridCell) naming the cell whose record file is absent.
Campaign load_campaign(const std::filesystem::path& dir);

/// FNV-1a 64 over grid, scaling and record contents, as 16 hex digits.
std::string campaign_hash(const Campaign& campaign);

}  // namespace rappx::io
