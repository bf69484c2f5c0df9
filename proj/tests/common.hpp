#pragma once

#include <string>

#include "wirecal/io.hpp"

namespace wirecal::testing {

inline std::string data(const std::string& name) { return std::string(WIRECAL_DATA_DIR) + "/" + name; }

inline RobotModel viper() { return io::load_robot_model(data("viper_s650.json")); }
inline ErrorModel viper_errors() { return io::load_error_model(data("viper_s650_errors.json")); }
inline ErrorVector table4() { return io::load_error_values(data("table4_offsets.json"), viper_errors()); }
inline RobotModel planar() { return io::load_robot_model(data("planar_2dof.json")); }
inline ErrorModel planar_errors() { return io::load_error_model(data("planar_2dof_errors.json")); }

inline JointConfig q(std::initializer_list<double> v)
{
  JointConfig out(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline JointConfig anchor() { return q({0, -90, 210, -90, 0, -90}); }

}  // namespace wirecal::testing
