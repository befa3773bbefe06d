#include "krsketch/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "krsketch/error.hpp"

namespace krs::io {

namespace {

std::string schema_line(std::string_view schema) {
  return "# " + std::string(schema) + " v" + std::to_string(kSchemaVersion) + "\n";
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto l : split(text, '\n')) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    out.push_back(l);
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

template <class T>
T parse_number(std::string_view s, std::string_view what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw SchemaError("malformed " + std::string(what) + " field '" + std::string(s) + "'");
  }
  return v;
}

std::string optional_count(Index v) { return v > 0 ? std::to_string(v) : std::string(); }

void append_record(std::string& out, const SweepRecord& r) {
  out += r.strategy;
  out += ',' + std::to_string(r.r);
  out += ',' + optional_count(r.r1);
  out += ',' + optional_count(r.r2);
  out += ',' + std::to_string(r.n1);
  out += ',' + std::to_string(r.n2);
  out += ',' + std::to_string(r.p);
  out += ',' + std::to_string(r.trial);
  out += ',' + format_double(r.rel_error);
  out += ',' + (r.wall_time_ms ? format_double(*r.wall_time_ms) : std::string());
}

// Returns the schema name after checking the version.
std::string_view check_schema(std::string_view first) {
  if (first.size() < 2 || first.substr(0, 2) != "# ") throw SchemaError("missing schema header line");
  const std::string_view rest = first.substr(2);
  const std::size_t sp = rest.rfind(" v");
  if (sp == std::string_view::npos) throw SchemaError("schema header lacks a version");
  const std::string_view name = rest.substr(0, sp);
  const int version = parse_number<int>(rest.substr(sp + 2), "schema version");
  if (version != kSchemaVersion) {
    throw SchemaError("schema version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kSchemaVersion) + ")");
  }
  return name;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string sweep_csv(const std::vector<SweepRecord>& records) {
  std::string out = schema_line(kSweepSchema);
  out += kSweepHeader;
  out += '\n';
  for (const auto& r : records) {
    append_record(out, r);
    out += '\n';
  }
  return out;
}

std::string eit_csv(const std::vector<SweepRecord>& records, const EitMeta& meta) {
  std::string out = schema_line(kEitSchema);
  out += kSweepHeader;
  out += ',';
  out += kEitExtraHeader;
  out += '\n';
  const std::string extra = ',' + std::to_string(meta.nx) + ',' + format_double(meta.sigma_star) + ',' +
                            format_double(meta.noise_sd) + '\n';
  for (const auto& r : records) {
    append_record(out, r);
    out += extra;
  }
  return out;
}

std::string grid_csv(Index nx, const DenseVector& field) {
  if (nx < 1 || field.size() != nx * nx) throw DimensionError("grid_csv: field length != nx^2");
  std::string out = schema_line(kGridSchema);
  out += kGridHeader;
  out += '\n';
  for (Index j = 0; j < nx; ++j) {
    for (Index i = 0; i < nx; ++i) {
      out += std::to_string(i) + ',' + std::to_string(j) + ',' + format_double(field[j * nx + i]) + '\n';
    }
  }
  return out;
}

ParsedSweep parse_sweep_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.size() < 2) throw SchemaError("sweep CSV needs a schema line and a header");
  const std::string_view schema = check_schema(lines[0]);
  ParsedSweep out;
  std::string header(kSweepHeader);
  if (schema == kEitSchema) {
    header += ',';
    header += kEitExtraHeader;
  } else if (schema != kSweepSchema) {
    throw SchemaError("unexpected schema '" + std::string(schema) + "'");
  }
  if (lines[1] != header) throw SchemaError("unexpected header '" + std::string(lines[1]) + "'");
  const std::size_t ncols = split(header, ',').size();
  for (std::size_t k = 2; k < lines.size(); ++k) {
    const auto f = split(lines[k], ',');
    if (f.size() != ncols) throw SchemaError("row " + std::to_string(k + 1) + " has the wrong column count");
    SweepRecord r;
    r.strategy = std::string(f[0]);
    r.r = parse_number<Index>(f[1], "r");
    r.r1 = f[2].empty() ? 0 : parse_number<Index>(f[2], "r1");
    r.r2 = f[3].empty() ? 0 : parse_number<Index>(f[3], "r2");
    r.n1 = parse_number<Index>(f[4], "n1");
    r.n2 = parse_number<Index>(f[5], "n2");
    r.p = parse_number<Index>(f[6], "p");
    r.trial = parse_number<std::uint64_t>(f[7], "trial");
    r.rel_error = parse_number<double>(f[8], "rel_error");
    r.rel_error_raw = r.rel_error;
    if (!f[9].empty()) r.wall_time_ms = parse_number<double>(f[9], "wall_time_ms");
    if (schema == kEitSchema) {
      EitMeta m{parse_number<Index>(f[10], "nx"), parse_number<double>(f[11], "sigma_star"),
                parse_number<double>(f[12], "noise_sd")};
      out.eit = m;
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

std::vector<GridCell> parse_grid_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.size() < 2) throw SchemaError("grid CSV needs a schema line and a header");
  if (check_schema(lines[0]) != kGridSchema) throw SchemaError("not a grid CSV");
  if (lines[1] != kGridHeader) throw SchemaError("unexpected grid header");
  std::vector<GridCell> out;
  for (std::size_t k = 2; k < lines.size(); ++k) {
    const auto f = split(lines[k], ',');
    if (f.size() != 3) throw SchemaError("grid row " + std::to_string(k + 1) + " has the wrong column count");
    out.push_back({parse_number<Index>(f[0], "cell_i"), parse_number<Index>(f[1], "cell_j"),
                   parse_number<double>(f[2], "sigma_hat")});
  }
  return out;
}

nlohmann::json records_json(const std::vector<SweepRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json j{{"strategy", r.strategy}, {"r", r.r},       {"n1", r.n1},
                     {"n2", r.n2},             {"p", r.p},       {"trial", r.trial},
                     {"rel_error", r.rel_error}, {"rel_error_raw", r.rel_error_raw}};
    j["r1"] = r.r1 > 0 ? nlohmann::json(r.r1) : nlohmann::json(nullptr);
    j["r2"] = r.r2 > 0 ? nlohmann::json(r.r2) : nlohmann::json(nullptr);
    j["wall_time_ms"] = r.wall_time_ms ? nlohmann::json(*r.wall_time_ms) : nlohmann::json(nullptr);
    arr.push_back(std::move(j));
  }
  return arr;
}

nlohmann::json summary_json(std::string_view kind, const std::vector<SweepRecord>& records,
                            const nlohmann::json& metadata) {
  nlohmann::json medians = nlohmann::json::array();
  for (const auto& m : summarize(records)) {
    medians.push_back({{"strategy", m.strategy},
                       {"r", m.r},
                       {"n1", m.n1},
                       {"n2", m.n2},
                       {"p", m.p},
                       {"median_rel_error", m.median_rel_error},
                       {"trials", m.trials}});
  }
  return {{"schema", kSummarySchema},
          {"schema_version", kSchemaVersion},
          {"kind", kind},
          {"metadata", metadata},
          {"medians", medians}};
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  if (!fs::exists(dir)) fs::create_directories(dir);
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) {
      f.close();
      fs::remove(tmp);
      throw std::runtime_error("write to " + tmp.string() + " failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace krs::io
