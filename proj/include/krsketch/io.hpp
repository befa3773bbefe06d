#pragma once

// Versioned CSV / JSON artifacts shared with the plotting tool.
//
// Every CSV starts with one comment line "# <schema> v<version>" followed by
// a fixed header. Readers refuse any other schema or version.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "krsketch/synthbench.hpp"
#include "krsketch/tensor.hpp"

namespace krs::io {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kSweepSchema = "krsketch-sweep";
inline constexpr std::string_view kEitSchema = "krsketch-eit-sweep";
inline constexpr std::string_view kGridSchema = "krsketch-grid";
inline constexpr std::string_view kSummarySchema = "krsketch-summary";

inline constexpr std::string_view kSweepHeader = "strategy,r,r1,r2,n1,n2,p,trial,rel_error,wall_time_ms";
inline constexpr std::string_view kEitExtraHeader = "nx,sigma_star,noise_sd";
inline constexpr std::string_view kGridHeader = "cell_i,cell_j,sigma_hat";

struct EitMeta {
  Index nx = 0;
  double sigma_star = 0.0;
  double noise_sd = 0.0;
};

// Shortest representation that parses back to the same double.
std::string format_double(double v);

std::string sweep_csv(const std::vector<SweepRecord>& records);
std::string eit_csv(const std::vector<SweepRecord>& records, const EitMeta& meta);
// nx * nx rows; cell (i, j) holds field[j * nx + i].
std::string grid_csv(Index nx, const DenseVector& field);

struct ParsedSweep {
  std::vector<SweepRecord> records;
  std::optional<EitMeta> eit;  // present for EIT sweep files
};

// Accepts either sweep schema. Throws SchemaError.
ParsedSweep parse_sweep_csv(std::string_view text);

struct GridCell {
  Index i = 0;
  Index j = 0;
  double value = 0.0;
};
std::vector<GridCell> parse_grid_csv(std::string_view text);

// Medians per grid point plus run metadata.
nlohmann::json summary_json(std::string_view kind, const std::vector<SweepRecord>& records,
                            const nlohmann::json& metadata);
nlohmann::json records_json(const std::vector<SweepRecord>& records);

// Writes to a sibling temporary file and renames it over path, so readers
// never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace krs::io
