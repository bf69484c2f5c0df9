#include "wirecal/sensitivity.hpp"

#include "wirecal/errors.hpp"

namespace wirecal {

WireGeometry wire_geometry(const RobotModel& model, const JointConfig& qi, const JointConfig& q0,
                           double eps_wire)
{
  WireGeometry g;
  g.nu = tcp_position(model, qi) - tcp_position(model, q0);
  g.length = g.nu.norm();
  if (!(g.length >= eps_wire))
    throw DegenerateDirectionError("wire length " + std::to_string(g.length) + " mm is below " +
                                   std::to_string(eps_wire) + " mm; direction undefined");
  g.nu_hat = g.nu / g.length;
  return g;
}

SensitivityRow sensitivity_row(const RobotModel& model, const JointConfig& qi, const JointConfig& q0,
                               const ErrorModel& em, AngleUnit unit, double eps_wire)
{
  const WireGeometry g = wire_geometry(model, qi, q0, eps_wire);
  const Eigen::Matrix3Xd dPhi = position_partials(model, qi, em, unit) - position_partials(model, q0, em, unit);
  return SensitivityRow{dPhi.transpose() * g.nu_hat, qi, q0};
}

double predicted_distance(const RobotModel& model, const JointConfig& qi, const JointConfig& q0,
                          const ErrorVector& ev)
{
  return predicted_distance(apply_errors(model, ev), qi, q0);
}

double predicted_distance(const RobotModel& perturbed, const JointConfig& qi, const JointConfig& q0)
{
  return (tcp_position(perturbed, qi) - tcp_position(perturbed, q0)).norm();
}

SensitivityEvaluator::SensitivityEvaluator(const RobotModel& model, const JointConfig& q0, const ErrorModel& em,
                                           double eps_wire)
    : model_(model), q0_(q0), em_(em), eps_wire_(eps_wire)
{
  p0_ = tcp_position(model_, q0_);
  phi0_ = position_partials(model_, q0_, em_);
}

bool SensitivityEvaluator::evaluate(const JointConfig& qi, Eigen::VectorXd& psi, double& length) const
{
  const Point3 nu = tcp_position(model_, qi) - p0_;
  length = nu.norm();
  if (!(length >= eps_wire_)) return false;
  psi = (position_partials(model_, qi, em_) - phi0_).transpose() * (nu / length);
  return true;
}

}  // namespace wirecal
