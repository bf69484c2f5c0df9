#include "wirecal/kinematics.hpp"

#include <algorithm>
#include <cmath>

#include "wirecal/errors.hpp"

namespace wirecal {

namespace {

void check_finite(const JointConfig& q)
{
  if (!q.allFinite()) throw NumericError("non-finite joint value");
}

void check_size(const RobotModel& model, const JointConfig& q)
{
  if (q.size() != model.dof())
    throw StructuralError("joint vector has " + std::to_string(q.size()) + " entries, model has " +
                          std::to_string(model.dof()) + " joints");
}

}  // namespace

void RobotModel::check() const
{
  if (rows.size() < 2) throw StructuralError("robot model needs at least 2 joints");
  if (joint_limits.size() != rows.size())
    throw StructuralError("joint_limits must have one interval per row");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const DHRow& r = rows[i];
    if (!std::isfinite(r.alpha_prev) || !std::isfinite(r.a_prev) || !std::isfinite(r.theta_offset) ||
        !std::isfinite(r.d))
      throw NumericError("row " + std::to_string(i + 1) + " has a non-finite entry");
    if (!(joint_limits[i].lower < joint_limits[i].upper))
      throw StructuralError("joint " + std::to_string(i + 1) + " limits are empty");
  }
  if (!tool.allFinite()) throw NumericError("tool offset is not finite");
}

bool RobotModel::within_limits(const JointConfig& q) const
{
  if (q.size() != dof()) return false;
  for (int i = 0; i < dof(); ++i)
    if (!joint_limits[i].contains(q[i])) return false;
  return true;
}

std::string to_string(ErrorKind k)
{
  switch (k) {
    case ErrorKind::Theta: return "theta";
    case ErrorKind::A: return "a";
    case ErrorKind::D: return "d";
    case ErrorKind::Alpha: return "alpha";
  }
  return "?";
}

ErrorKind error_kind_from_string(const std::string& s)
{
  if (s == "theta") return ErrorKind::Theta;
  if (s == "a") return ErrorKind::A;
  if (s == "d") return ErrorKind::D;
  if (s == "alpha") return ErrorKind::Alpha;
  throw StructuralError("unknown error kind '" + s + "'");
}

std::string ErrorParam::name() const
{
  switch (kind) {
    case ErrorKind::Theta: return "theta" + std::to_string(joint);
    case ErrorKind::D: return "d" + std::to_string(joint);
    case ErrorKind::A: return "a" + std::to_string(joint - 1);
    case ErrorKind::Alpha: return "alpha" + std::to_string(joint - 1);
  }
  return "?";
}

int ErrorModel::index_of(const std::string& name) const
{
  for (int i = 0; i < size(); ++i)
    if (params[i].name() == name) return i;
  return -1;
}

std::vector<std::string> ErrorModel::names() const
{
  std::vector<std::string> out;
  for (const auto& p : params) out.push_back(p.name());
  return out;
}

ErrorModel ErrorModel::reordered(const std::vector<int>& perm) const
{
  if (static_cast<int>(perm.size()) != size()) throw StructuralError("permutation size mismatch");
  std::vector<bool> seen(params.size(), false);
  ErrorModel out;
  out.protected_twist_rows = protected_twist_rows;
  for (int p : perm) {
    if (p < 0 || p >= size() || seen[p]) throw StructuralError("not a permutation");
    seen[p] = true;
    out.params.push_back(params[p]);
  }
  return out;
}

ErrorVector ErrorVector::zero(const ErrorModel& m)
{
  return ErrorVector{m, Eigen::VectorXd::Zero(m.size())};
}

bool ErrorVector::admissible() const
{
  if (values.size() != model.size()) return false;
  for (int j = 0; j < model.size(); ++j)
    if (std::abs(values[j]) > model.params[j].bound) return false;
  return true;
}

double ErrorVector::value(const std::string& name) const
{
  int j = model.index_of(name);
  if (j < 0) throw StructuralError("no error parameter '" + name + "'");
  return values[j];
}

RobotModel apply_errors(const RobotModel& model, const ErrorVector& ev)
{
  if (ev.values.size() != ev.model.size())
    throw StructuralError("error vector has " + std::to_string(ev.values.size()) + " values for " +
                          std::to_string(ev.model.size()) + " parameters");
  if (!ev.values.allFinite()) throw NumericError("non-finite error value");
  RobotModel out = model;
  for (int j = 0; j < ev.model.size(); ++j) {
    const ErrorParam& p = ev.model.params[j];
    if (p.joint < 1 || p.joint > model.dof())
      throw StructuralError("error parameter " + p.name() + " addresses joint " + std::to_string(p.joint) +
                            " of a " + std::to_string(model.dof()) + "-joint model");
    DHRow& row = out.rows[p.joint - 1];
    const double v = ev.values[j];
    switch (p.kind) {
      case ErrorKind::Theta: row.theta_offset += v; break;
      case ErrorKind::A: row.a_prev += v; break;
      case ErrorKind::D: row.d += v; break;
      case ErrorKind::Alpha: {
        const auto& prot = ev.model.protected_twist_rows;
        if (std::find(prot.begin(), prot.end(), p.joint) != prot.end())
          throw StructuralError("twist of row " + std::to_string(p.joint) +
                                " is continuity-protected and may not be perturbed");
        row.alpha_prev += v;
        break;
      }
    }
  }
  return out;
}

std::vector<Pose> link_frames(const RobotModel& model, const JointConfig& q)
{
  check_size(model, q);
  check_finite(q);
  std::vector<Pose> frames;
  frames.reserve(model.rows.size() + 1);
  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  frames.emplace_back(T);
  for (int i = 0; i < model.dof(); ++i) {
    const DHRow& r = model.rows[i];
    T = T * dh_transform(r.alpha_prev * kDeg, r.a_prev, (q[i] + r.theta_offset) * kDeg, r.d);
    frames.emplace_back(T);
  }
  return frames;
}

Pose forward_kinematics(const RobotModel& model, const JointConfig& q)
{
  Pose T = link_frames(model, q).back();
  T.translation() = T * model.tool;
  return T;
}

Pose forward_kinematics(const RobotModel& model, const JointConfig& q, const ErrorVector& ev)
{
  return forward_kinematics(apply_errors(model, ev), q);
}

Point3 tcp_position(const RobotModel& model, const JointConfig& q)
{
  return forward_kinematics(model, q).translation();
}

Point3 tcp_position(const RobotModel& model, const JointConfig& q, const ErrorVector& ev)
{
  return forward_kinematics(model, q, ev).translation();
}

Eigen::Matrix3Xd position_partials(const RobotModel& model, const JointConfig& q, const ErrorModel& params,
                                   AngleUnit unit)
{
  const std::vector<Pose> T = link_frames(model, q);
  const Point3 p = T.back() * model.tool;
  const double ang = unit == AngleUnit::Degree ? kDeg : 1.0;

  Eigen::Matrix3Xd Phi(3, params.size());
  for (int j = 0; j < params.size(); ++j) {
    const ErrorParam& e = params.params[j];
    if (e.joint < 1 || e.joint > model.dof())
      throw StructuralError("error parameter " + e.name() + " addresses a nonexistent joint");
    const Pose& prev = T[e.joint - 1];
    const DHRow& r = model.rows[e.joint - 1];
    // frame i before its z-screw
    const Eigen::Matrix3d Rx = Eigen::AngleAxisd(r.alpha_prev * kDeg, Eigen::Vector3d::UnitX()).matrix();
    const Eigen::Vector3d zi = prev.linear() * Rx.col(2);
    const Point3 oi = prev * Point3(r.a_prev, 0, 0);
    const Eigen::Vector3d xp = prev.linear().col(0);
    switch (e.kind) {
      case ErrorKind::Theta: Phi.col(j) = ang * zi.cross(p - oi); break;
      case ErrorKind::D: Phi.col(j) = zi; break;
      case ErrorKind::A: Phi.col(j) = xp; break;
      case ErrorKind::Alpha: Phi.col(j) = ang * xp.cross(p - prev.translation()); break;
    }
  }
  return Phi;
}

double wrap_deg(double a)
{
  double r = std::fmod(a + 180.0, 360.0);
  if (r <= 0) r += 360.0;
  return r - 180.0;
}

}  // namespace wirecal
