#pragma once

// Plain-text interchange formats (UTF-8, LF, '.' decimal separator, mandatory
// header row):
//
//   sensors     id,x,y[,z]               ids unique and contiguous from 1
//   references  fix_id,x,y[,z]           optional ground truth per fix
//   range log   fix_id,sensor_id,range_m one row per (fix, sensor) pair
//   results     param,estimator,rmse_m,crlb_rmse_m,mean_fix_time_s,trials,excluded
//
// Loaders reject malformed input with a DataError naming the line number.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "toaloc/eval.hpp"

namespace toaloc {

inline constexpr const char* kResultHeader = "param,estimator,rmse_m,crlb_rmse_m,mean_fix_time_s,trials,excluded";
inline constexpr const char* kRangeLogHeader = "fix_id,sensor_id,range_m";

/// One localization fix: the sensors (0-based row indices) that ranged and
/// their ranges, in ascending sensor order.
struct RangeFix {
  int fix_id = 0;
  std::vector<int> sensor_index;
  Eigen::VectorXd ranges;
};

struct RejectedFix {
  int fix_id = 0;
  std::string reason;
};

struct RangeLog {
  std::vector<RangeFix> fixes;  ///< ordered by fix_id
  std::vector<RejectedFix> rejected;
};

enum class ResultFormat { kCsv, kJson };

/// Throws ConfigError for anything but "csv" / "json".
ResultFormat parse_format(const std::string& name);

/// Sensor positions ordered by id, one per row (L x d).
Eigen::MatrixXd load_sensors(const std::filesystem::path& path);
void write_sensors(const std::filesystem::path& path, const Eigen::MatrixXd& sensors);

/// Reference positions keyed by fix id.
std::map<int, Eigen::VectorXd> load_reference_points(const std::filesystem::path& path);

/// `sensor_count` bounds the valid sensor ids; fixes with fewer than dim+1
/// ranges are moved to `rejected`.
RangeLog load_range_log(const std::filesystem::path& path, int sensor_count, int dim);
void write_range_log(const std::filesystem::path& path, const std::vector<RangeFix>& fixes);

/// 9 significant digits, "%.9g".
std::string format_number(double value);

std::string format_results(const ResultTable& table, ResultFormat format);
ResultTable parse_results(const std::string& text, ResultFormat format);

/// Writes atomically (temporary file, then rename). Throws DataError when the
/// path is unwritable or the table is empty.
void write_results(const ResultTable& table, const std::filesystem::path& path, ResultFormat format);
ResultTable read_results(const std::filesystem::path& path, ResultFormat format);

/// Atomic whole-file write. Throws DataError on failure.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace toaloc
