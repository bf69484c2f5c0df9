#pragma once

#include <filesystem>
#include <string>

#include "wirecal/designer.hpp"
#include "wirecal/encoder.hpp"
#include "wirecal/identifier.hpp"
#include "wirecal/validator.hpp"

namespace wirecal::io {

namespace fs = std::filesystem;

std::string read_text(const fs::path& p);

/// Writes to a temporary sibling, then renames over the target.
void write_atomic(const fs::path& p, const std::string& content);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const fs::path& p);
std::string sha256_hex(const std::string& bytes);

RobotModel parse_robot_model(const std::string& json_text, const std::string& origin = "<model>");
RobotModel load_robot_model(const fs::path& p);
std::string robot_model_json(const RobotModel& m);

ErrorModel parse_error_model(const std::string& json_text, const std::string& origin = "<errors>");
ErrorModel load_error_model(const fs::path& p);
std::string error_model_json(const ErrorModel& m);

/// {"name": value, ...} keyed by parameter name; missing names are zero.
ErrorVector parse_error_values(const std::string& json_text, const ErrorModel& em,
                               const std::string& origin = "<values>");
ErrorVector load_error_values(const fs::path& p, const ErrorModel& em);
std::string error_values_json(const ErrorVector& ev);

CalibrationPlan parse_plan(const std::string& json_text, const std::string& origin = "<plan>");
CalibrationPlan load_plan(const fs::path& p);
std::string plan_json(const CalibrationPlan& plan);

MeasurementLog parse_log_csv(const std::string& csv_text, const std::string& origin = "<log>");
MeasurementLog load_log_csv(const fs::path& p);
std::string log_csv(const MeasurementLog& log);

/// Columns: step, param, theta1..thetan, then Psi in plan order.
std::string psi_table_csv(const CalibrationPlan& plan, const ErrorModel& ordered);

/// Counts of |v| in bins of the given width.
std::string histogram_csv(const std::vector<double>& values, double bin_width);

}  // namespace wirecal::io
