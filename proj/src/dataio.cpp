#include "toaloc/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "toaloc/errors.hpp"

namespace toaloc {
namespace {

using json = nlohmann::json;

struct CsvLine {
  int number = 0;  // 1-based line number in the file
  std::vector<std::string> fields;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

// Splits into non-empty lines; the first line must be one of `headers`.
// Returns the index of the matched header.
std::size_t read_csv(const std::string& text, const std::vector<std::string>& headers, const std::string& what,
                     std::vector<CsvLine>& rows) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  std::size_t matched = headers.size();
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) {
      continue;
    }
    if (matched == headers.size()) {
      const auto it = std::find(headers.begin(), headers.end(), line);
      if (it == headers.end()) {
        throw DataError(what + ": line " + std::to_string(number) + ": unexpected header '" + line + "'");
      }
      matched = static_cast<std::size_t>(it - headers.begin());
      continue;
    }
    rows.push_back({number, split_fields(line)});
  }
  if (matched == headers.size()) {
    throw DataError(what + ": missing header");
  }
  return matched;
}

[[noreturn]] void fail_line(const std::string& what, int line, const std::string& msg) {
  throw DataError(what + ": line " + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& s, const std::string& what, int line) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty() || !std::isfinite(v)) {
    fail_line(what, line, "invalid number '" + s + "'");
  }
  return v;
}

int parse_int(const std::string& s, const std::string& what, int line) {
  int v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty()) {
    fail_line(what, line, "invalid integer '" + s + "'");
  }
  return v;
}

// Rows of "id,x,y[,z]"; returns (id, position) pairs.
std::vector<std::pair<int, Eigen::VectorXd>> load_positions(const std::filesystem::path& path,
                                                            const std::string& id_column, const std::string& what) {
  std::vector<CsvLine> rows;
  const std::size_t header =
      read_csv(read_file(path), {id_column + ",x,y", id_column + ",x,y,z"}, what + " " + path.string(), rows);
  const int dim = header == 0 ? 2 : 3;
  const std::string where = what + " " + path.string();

  std::vector<std::pair<int, Eigen::VectorXd>> out;
  for (const CsvLine& row : rows) {
    if (static_cast<int>(row.fields.size()) != dim + 1) {
      fail_line(where, row.number,
                "expected " + std::to_string(dim) + " coordinates, got " + std::to_string(row.fields.size() - 1) +
                    " (dimension mismatch)");
    }
    Eigen::VectorXd pos(dim);
    for (int j = 0; j < dim; ++j) {
      pos(j) = parse_double(row.fields[j + 1], where, row.number);
    }
    out.emplace_back(parse_int(row.fields[0], where, row.number), pos);
  }
  return out;
}

std::string format_csv(const ResultTable& table) {
  std::string out = std::string(kResultHeader) + "\n";
  for (const ResultRow& r : table.rows) {
    out += format_number(r.param) + "," + r.estimator + "," + format_number(r.rmse) + "," +
           (r.crlb_rmse ? format_number(*r.crlb_rmse) : std::string()) + "," + format_number(r.mean_fix_time) + "," +
           std::to_string(r.trials) + "," + std::to_string(r.excluded) + "\n";
  }
  return out;
}

// Value as it reads back from its 9-digit decimal form.
double rounded(double v) {
  return std::stod(format_number(v));
}

std::string format_json(const ResultTable& table) {
  json rows = json::array();
  for (const ResultRow& r : table.rows) {
    rows.push_back({{"param", rounded(r.param)},
                    {"estimator", r.estimator},
                    {"rmse_m", rounded(r.rmse)},
                    {"crlb_rmse_m", r.crlb_rmse ? json(rounded(*r.crlb_rmse)) : json(nullptr)},
                    {"mean_fix_time_s", rounded(r.mean_fix_time)},
                    {"trials", r.trials},
                    {"excluded", r.excluded}});
  }
  json doc = {{"parameter", table.parameter}, {"rows", rows}};
  return doc.dump(2) + "\n";
}

ResultTable parse_csv_results(const std::string& text) {
  const std::string what = "result file";
  std::vector<CsvLine> rows;
  read_csv(text, {kResultHeader}, what, rows);
  ResultTable table;
  for (const CsvLine& line : rows) {
    if (line.fields.size() != 7) {
      fail_line(what, line.number, "expected 7 fields");
    }
    ResultRow r;
    r.param = parse_double(line.fields[0], what, line.number);
    r.estimator = line.fields[1];
    r.rmse = parse_double(line.fields[2], what, line.number);
    if (!line.fields[3].empty()) {
      r.crlb_rmse = parse_double(line.fields[3], what, line.number);
    }
    r.mean_fix_time = parse_double(line.fields[4], what, line.number);
    r.trials = parse_int(line.fields[5], what, line.number);
    r.excluded = parse_int(line.fields[6], what, line.number);
    table.rows.push_back(std::move(r));
  }
  return table;
}

ResultTable parse_json_results(const std::string& text) {
  ResultTable table;
  try {
    const json doc = json::parse(text);
    table.parameter = doc.at("parameter").get<std::string>();
    for (const json& j : doc.at("rows")) {
      ResultRow r;
      r.param = j.at("param").get<double>();
      r.estimator = j.at("estimator").get<std::string>();
      r.rmse = j.at("rmse_m").get<double>();
      if (!j.at("crlb_rmse_m").is_null()) {
        r.crlb_rmse = j.at("crlb_rmse_m").get<double>();
      }
      r.mean_fix_time = j.at("mean_fix_time_s").get<double>();
      r.trials = j.at("trials").get<int>();
      r.excluded = j.at("excluded").get<int>();
      table.rows.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("result file: ") + e.what());
  }
  return table;
}

}  // namespace

ResultFormat parse_format(const std::string& name) {
  if (name == "csv") return ResultFormat::kCsv;
  if (name == "json") return ResultFormat::kJson;
  throw ConfigError("unknown output format '" + name + "' (expected csv or json)");
}

Eigen::MatrixXd load_sensors(const std::filesystem::path& path) {
  auto entries = load_positions(path, "id", "sensor file");
  const std::string where = "sensor file " + path.string();
  if (entries.empty()) {
    throw DataError(where + ": no sensors");
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0 && entries[i].first == entries[i - 1].first) {
      throw DataError(where + ": duplicate sensor id " + std::to_string(entries[i].first));
    }
    if (entries[i].first != static_cast<int>(i) + 1) {
      throw DataError(where + ": sensor ids must be contiguous from 1 (missing " + std::to_string(i + 1) + ")");
    }
  }
  const auto dim = entries.front().second.size();
  Eigen::MatrixXd sensors(static_cast<Eigen::Index>(entries.size()), dim);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    sensors.row(static_cast<Eigen::Index>(i)) = entries[i].second.transpose();
  }
  return sensors;
}

void write_sensors(const std::filesystem::path& path, const Eigen::MatrixXd& sensors) {
  std::string out = sensors.cols() == 3 ? "id,x,y,z\n" : "id,x,y\n";
  for (Eigen::Index i = 0; i < sensors.rows(); ++i) {
    out += std::to_string(i + 1);
    for (Eigen::Index j = 0; j < sensors.cols(); ++j) {
      out += "," + format_number(sensors(i, j));
    }
    out += "\n";
  }
  write_text_atomic(path, out);
}

std::map<int, Eigen::VectorXd> load_reference_points(const std::filesystem::path& path) {
  std::map<int, Eigen::VectorXd> out;
  for (auto& [id, pos] : load_positions(path, "fix_id", "reference file")) {
    if (!out.emplace(id, pos).second) {
      throw DataError("reference file " + path.string() + ": duplicate fix id " + std::to_string(id));
    }
  }
  return out;
}

RangeLog load_range_log(const std::filesystem::path& path, int sensor_count, int dim) {
  const std::string where = "range log " + path.string();
  std::vector<CsvLine> rows;
  read_csv(read_file(path), {kRangeLogHeader}, where, rows);

  // fix_id -> sensor_id -> range
  std::map<int, std::map<int, double>> grouped;
  for (const CsvLine& row : rows) {
    if (row.fields.size() != 3) {
      fail_line(where, row.number, "expected 3 fields");
    }
    const int fix = parse_int(row.fields[0], where, row.number);
    const int sensor = parse_int(row.fields[1], where, row.number);
    const double range = parse_double(row.fields[2], where, row.number);
    if (sensor < 1 || sensor > sensor_count) {
      fail_line(where, row.number, "unknown sensor id " + std::to_string(sensor));
    }
    if (range < 0.0) {
      fail_line(where, row.number, "negative range");
    }
    if (!grouped[fix].emplace(sensor, range).second) {
      fail_line(where, row.number,
                "fix " + std::to_string(fix) + " references sensor " + std::to_string(sensor) + " twice");
    }
  }

  RangeLog log;
  for (const auto& [fix, by_sensor] : grouped) {
    if (static_cast<int>(by_sensor.size()) < dim + 1) {
      log.rejected.push_back({fix, "only " + std::to_string(by_sensor.size()) + " ranges, need at least " +
                                       std::to_string(dim + 1)});
      continue;
    }
    RangeFix f;
    f.fix_id = fix;
    f.ranges.resize(static_cast<Eigen::Index>(by_sensor.size()));
    Eigen::Index k = 0;
    for (const auto& [sensor, range] : by_sensor) {
      f.sensor_index.push_back(sensor - 1);
      f.ranges(k++) = range;
    }
    log.fixes.push_back(std::move(f));
  }
  return log;
}

void write_range_log(const std::filesystem::path& path, const std::vector<RangeFix>& fixes) {
  std::string out = std::string(kRangeLogHeader) + "\n";
  for (const RangeFix& f : fixes) {
    for (std::size_t k = 0; k < f.sensor_index.size(); ++k) {
      out += std::to_string(f.fix_id) + "," + std::to_string(f.sensor_index[k] + 1) + "," +
             format_number(f.ranges(static_cast<Eigen::Index>(k))) + "\n";
    }
  }
  write_text_atomic(path, out);
}

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

std::string format_results(const ResultTable& table, ResultFormat format) {
  return format == ResultFormat::kCsv ? format_csv(table) : format_json(table);
}

ResultTable parse_results(const std::string& text, ResultFormat format) {
  return format == ResultFormat::kCsv ? parse_csv_results(text) : parse_json_results(text);
}

void write_results(const ResultTable& table, const std::filesystem::path& path, ResultFormat format) {
  if (table.rows.empty()) {
    throw DataError("refusing to write an empty result table");
  }
  write_text_atomic(path, format_results(table, format));
}

ResultTable read_results(const std::filesystem::path& path, ResultFormat format) {
  return parse_results(read_file(path), format);
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw DataError("cannot write " + path.string());
    }
    out << content;
    if (!out.flush()) {
      throw DataError("failed writing " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot write " + path.string());
  }
}

}  // namespace toaloc
