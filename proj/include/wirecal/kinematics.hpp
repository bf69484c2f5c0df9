#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace wirecal {

using Point3 = Eigen::Vector3d;
using Pose = Eigen::Isometry3d;
using JointConfig = Eigen::VectorXd;  // degrees

/// One modified-DH row: Rx(alpha_prev) Tx(a_prev) Rz(theta + theta_offset) Tz(d).
struct DHRow {
  double alpha_prev = 0.0;    // deg
  double a_prev = 0.0;        // mm
  double theta_offset = 0.0;  // deg
  double d = 0.0;             // mm

  bool operator==(const DHRow&) const = default;
};

struct JointInterval {
  double lower = -180.0;
  double upper = 180.0;

  bool contains(double v) const { return v >= lower && v <= upper; }
  bool operator==(const JointInterval&) const = default;
};

struct RobotModel {
  std::string name;
  std::vector<DHRow> rows;
  std::vector<JointInterval> joint_limits;
  Point3 tool = Point3::Zero();  // tool point in the last link frame, mm

  int dof() const { return static_cast<int>(rows.size()); }

  /// Throws StructuralError / NumericError on a malformed table.
  void check() const;

  bool within_limits(const JointConfig& q) const;
};

enum class ErrorKind { Theta, A, D, Alpha };

/// One error parameter. `joint` is the DH row it addresses (1..n); for
/// Alpha and A this is the row holding alpha_{joint-1} / a_{joint-1}.
struct ErrorParam {
  ErrorKind kind = ErrorKind::Theta;
  int joint = 1;
  double bound = 1.5;

  bool angular() const { return kind == ErrorKind::Theta || kind == ErrorKind::Alpha; }
  std::string unit() const { return angular() ? "deg" : "mm"; }

  /// "theta6", "d4", "a3" (= a_prev of row 4), "alpha2".
  std::string name() const;

  bool operator==(const ErrorParam&) const = default;
};

std::string to_string(ErrorKind k);
ErrorKind error_kind_from_string(const std::string& s);

struct ErrorModel {
  std::vector<ErrorParam> params;
  std::vector<int> protected_twist_rows;

  int size() const { return static_cast<int>(params.size()); }
  int index_of(const std::string& name) const;  // -1 if absent
  std::vector<std::string> names() const;

  /// Same parameters, permuted: result.params[k] = params[perm[k]].
  ErrorModel reordered(const std::vector<int>& perm) const;
};

struct ErrorVector {
  ErrorModel model;
  Eigen::VectorXd values;

  static ErrorVector zero(const ErrorModel& m);
  bool admissible() const;
  double value(const std::string& name) const;
};

enum class AngleUnit { Degree, Radian };

inline constexpr double kDeg = 0.017453292519943295;

template <typename Scalar>
Eigen::Matrix<Scalar, 4, 4> dh_transform(Scalar alpha, Scalar a, Scalar theta, Scalar d)
{
  using std::cos;
  using std::sin;
  const Scalar ca = cos(alpha), sa = sin(alpha);
  const Scalar ct = cos(theta), st = sin(theta);
  Eigen::Matrix<Scalar, 4, 4> T;
  T << ct, -st, Scalar(0), a,
       st * ca, ct * ca, -sa, -sa * d,
       st * sa, ct * sa, ca, ca * d,
       Scalar(0), Scalar(0), Scalar(0), Scalar(1);
  return T;
}

/// Adds ev to the addressed DH cells. The input model is left untouched.
RobotModel apply_errors(const RobotModel& model, const ErrorVector& ev);

/// Link frames 0..n in the base frame (frame 0 is identity).
std::vector<Pose> link_frames(const RobotModel& model, const JointConfig& q);

Pose forward_kinematics(const RobotModel& model, const JointConfig& q);
Pose forward_kinematics(const RobotModel& model, const JointConfig& q, const ErrorVector& ev);

Point3 tcp_position(const RobotModel& model, const JointConfig& q);
Point3 tcp_position(const RobotModel& model, const JointConfig& q, const ErrorVector& ev);

/// d(tcp)/d(e_j) at nominal; angular columns per `unit`.
Eigen::Matrix3Xd position_partials(const RobotModel& model, const JointConfig& q,
                                   const ErrorModel& params,
                                   AngleUnit unit = AngleUnit::Degree);

/// Wraps an angle in degrees into (-180, 180].
double wrap_deg(double a);

}  // namespace wirecal
