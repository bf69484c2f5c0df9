#pragma once

#include "wirecal/kinematics.hpp"

namespace wirecal {

inline constexpr double kDefaultWireEps = 1.0;  // mm

struct WireGeometry {
  Point3 nu;
  Eigen::Vector3d nu_hat;
  double length = 0.0;
};

struct SensitivityRow {
  Eigen::VectorXd values;  // one entry per error parameter, model order
  JointConfig point;
  JointConfig anchor;
};

/// nu = tcp(qi) - tcp(q0) under the nominal model.
WireGeometry wire_geometry(const RobotModel& model, const JointConfig& qi, const JointConfig& q0,
                           double eps_wire = kDefaultWireEps);

/// Projection of (Phi(qi) - Phi(q0)) onto the wire direction.
SensitivityRow sensitivity_row(const RobotModel& model, const JointConfig& qi, const JointConfig& q0,
                               const ErrorModel& em, AngleUnit unit = AngleUnit::Degree,
                               double eps_wire = kDefaultWireEps);

/// Wire length when both endpoints carry the same error vector.
double predicted_distance(const RobotModel& model, const JointConfig& qi, const JointConfig& q0,
                          const ErrorVector& ev);

/// Same, for a model that already has the errors folded in.
double predicted_distance(const RobotModel& perturbed, const JointConfig& qi, const JointConfig& q0);

/// Sensitivity of every point against a fixed anchor, reusing the anchor partials.
class SensitivityEvaluator {
 public:
  SensitivityEvaluator(const RobotModel& model, const JointConfig& q0, const ErrorModel& em,
                       double eps_wire = kDefaultWireEps);

  /// Returns false when the wire is degenerate; `length` is set either way.
  bool evaluate(const JointConfig& qi, Eigen::VectorXd& psi, double& length) const;

  const RobotModel& model() const { return model_; }
  const ErrorModel& error_model() const { return em_; }

 private:
  RobotModel model_;
  JointConfig q0_;
  ErrorModel em_;
  double eps_wire_;
  Point3 p0_;
  Eigen::Matrix3Xd phi0_;
};

}  // namespace wirecal
