#include "wirecal/validator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "wirecal/errors.hpp"

namespace wirecal {

namespace {

constexpr double kStructTol = 1e-9;

void check_viper_layout(const RobotModel& m)
{
  static const double alpha[6] = {0, -90, 0, 90, -90, 90};
  if (m.dof() != 6) throw StructuralError("inverse kinematics needs a 6-joint model");
  for (int i = 0; i < 6; ++i)
    if (std::abs(m.rows[i].alpha_prev - alpha[i]) > kStructTol)
      throw StructuralError("inverse kinematics: twist of row " + std::to_string(i + 1) +
                            " does not match the spherical-wrist layout");
  const bool zeros = std::abs(m.rows[0].a_prev) < kStructTol && std::abs(m.rows[1].d) < kStructTol &&
                     std::abs(m.rows[2].d) < kStructTol && std::abs(m.rows[4].a_prev) < kStructTol &&
                     std::abs(m.rows[5].a_prev) < kStructTol && std::abs(m.rows[4].d) < kStructTol;
  if (!zeros) throw StructuralError("inverse kinematics: model has no spherical wrist / zero shoulder offset");
  if (std::abs(m.rows[2].a_prev) < kStructTol) throw StructuralError("inverse kinematics: a2 must be nonzero");
}

// Shift each joint by multiples of 360 into its limits.
std::optional<JointConfig> fit_to_limits(const RobotModel& m, JointConfig q)
{
  for (int i = 0; i < q.size(); ++i) {
    const auto& lim = m.joint_limits[i];
    bool ok = false;
    for (double s : {0.0, 360.0, -360.0, 720.0, -720.0}) {
      if (lim.contains(q[i] + s)) {
        q[i] += s;
        ok = true;
        break;
      }
    }
    if (!ok) return std::nullopt;
  }
  return q;
}

double uniform01(std::mt19937_64& rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

std::string BranchFlags::label() const
{
  return std::string(lefty ? "lefty" : "righty") + "/" + (above ? "above" : "below") + "/" +
         (flip ? "flip" : "noflip");
}

std::vector<BranchFlags> BranchFlags::all()
{
  std::vector<BranchFlags> out;
  for (bool l : {false, true})
    for (bool a : {true, false})
      for (bool f : {false, true}) out.push_back({l, a, f});
  return out;
}

std::optional<IkSolution> inverse_kinematics(const RobotModel& model, const Pose& pose, const BranchFlags& flags)
{
  check_viper_layout(model);
  const auto& r = model.rows;
  const double a1 = r[1].a_prev, a2 = r[2].a_prev, a3 = r[3].a_prev;
  const double d1 = r[0].d, d4 = r[3].d, d6 = r[5].d;

  const Eigen::Matrix3d R = pose.linear();
  const Point3 flange = pose.translation() - R * model.tool;
  const Point3 w = flange - d6 * R.col(2) - Point3(0, 0, d1);

  double t1 = std::atan2(w.y(), w.x());
  double rr = std::hypot(w.x(), w.y());
  if (flags.lefty) {
    t1 += M_PI;
    rr = -rr;
  }
  const double rho = rr - a1;
  const double z = w.z();
  const double K = (rho * rho + z * z - a2 * a2 - a3 * a3 - d4 * d4) / (2.0 * a2);
  const double L = std::hypot(a3, d4);
  if (std::abs(K) > L * (1 + 1e-12)) return std::nullopt;
  const double acs = std::acos(std::clamp(K / L, -1.0, 1.0));
  const double t3 = std::atan2(d4, a3) + (flags.above ? acs : -acs);
  const double X = a2 + std::cos(t3) * a3 + std::sin(t3) * d4;
  const double Y = std::sin(t3) * a3 - std::cos(t3) * d4;
  const double t2 = std::atan2(-z, rho) - std::atan2(Y, X);

  Eigen::Matrix4d T03 = Eigen::Matrix4d::Identity();
  const double th[3] = {t1, t2, t3};
  for (int i = 0; i < 3; ++i) T03 = T03 * dh_transform(r[i].alpha_prev * kDeg, r[i].a_prev, th[i], r[i].d);
  const Eigen::Matrix3d Rx90 = Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitX()).matrix();
  const Eigen::Matrix3d M = Rx90.transpose() * T03.topLeftCorner<3, 3>().transpose() * R;

  IkSolution sol;
  double t4 = 0, t5 = 0, t6 = 0;
  const double s5abs = std::hypot(M(0, 2), M(1, 2));
  if (s5abs < 1e-10) {
    sol.singular = true;
    t5 = M(2, 2) > 0 ? 0.0 : M_PI;
    const Eigen::Matrix3d N = Eigen::AngleAxisd(t5, Eigen::Vector3d::UnitY()).matrix().transpose() * M;
    t6 = std::atan2(N(1, 0), N(0, 0));
  } else {
    t5 = std::atan2(flags.flip ? -s5abs : s5abs, M(2, 2));
    const double s5 = std::sin(t5);
    t4 = std::atan2(M(1, 2) / s5, M(0, 2) / s5);
    t6 = std::atan2(M(2, 1) / s5, -M(2, 0) / s5);
  }

  const double all[6] = {t1, t2, t3, t4, t5, t6};
  sol.q.resize(6);
  for (int i = 0; i < 6; ++i) sol.q[i] = wrap_deg(all[i] / kDeg - r[i].theta_offset);
  return sol;
}

PlaneFit fit_plane(const std::vector<Point3>& points)
{
  const int n = static_cast<int>(points.size());
  if (n < 3) throw RankDeficiencyError("plane fit needs at least 3 points");
  // centered design matrix
  Point3 mean = Point3::Zero();
  for (const auto& p : points) mean += p;
  mean /= n;
  Eigen::MatrixXd U(n, 3);
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) {
    U.row(i) << points[i].x() - mean.x(), points[i].y() - mean.y(), 1.0;
    z[i] = points[i].z() - mean.z();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(U);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) throw RankDeficiencyError("points are collinear; plane is undetermined");
  const Eigen::Vector3d abc = qr.solve(z);

  PlaneFit fit;
  fit.a = abc[0];
  fit.b = abc[1];
  fit.c = abc[2] + mean.z() - abc[0] * mean.x() - abc[1] * mean.y();
  fit.residuals = U * abc - z;
  std::vector<double> mag(fit.residuals.data(), fit.residuals.data() + n);
  for (auto& v : mag) v = std::abs(v);
  const Summary s = summarize(mag);
  fit.mean = s.mean;
  fit.std = s.std;
  fit.max = s.max;
  return fit;
}

Summary summarize(const std::vector<double>& v)
{
  Summary s;
  s.count = static_cast<int>(v.size());
  if (v.empty()) return s;
  double sum = 0;
  for (double x : v) {
    sum += x;
    s.max = std::max(s.max, x);
  }
  s.mean = sum / s.count;
  double ss = 0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = s.count > 1 ? std::sqrt(ss / (s.count - 1)) : 0.0;
  return s;
}

DiscrepancyResult configuration_discrepancy(const RobotModel& commanded, const RobotModel& actual,
                                            const std::vector<Pose>& poses, const Point3& anchor,
                                            const std::vector<BranchFlags>& branches)
{
  DiscrepancyResult out;
  std::vector<double> values;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    DiscrepancyRecord rec;
    rec.pose_id = static_cast<int>(i);
    for (const auto& b : branches) {
      const auto ik = inverse_kinematics(commanded, poses[i], b);
      if (!ik) continue;
      const auto q = fit_to_limits(commanded, ik->q);
      if (!q) continue;
      rec.branches.push_back(b);
      rec.joints.push_back(*q);
      rec.distances.push_back((tcp_position(actual, *q) - anchor).norm());
    }
    if (rec.distances.size() < 2) {
      out.notices.push_back("pose " + std::to_string(i) + " skipped: fewer than 2 reachable branches");
      continue;
    }
    const auto [lo, hi] = std::minmax_element(rec.distances.begin(), rec.distances.end());
    rec.discrepancy = *hi - *lo;
    values.push_back(rec.discrepancy);
    out.records.push_back(std::move(rec));
  }
  out.summary = summarize(values);
  return out;
}

std::vector<Pose> sample_validation_poses(const RobotModel& model, int count, std::uint64_t seed,
                                          const std::vector<BranchFlags>& branches)
{
  std::mt19937_64 rng(seed);
  std::vector<Pose> poses;
  const long max_tries = 200000L * std::max(count, 1);
  for (long tries = 0; static_cast<int>(poses.size()) < count; ++tries) {
    if (tries > max_tries) throw NumericError("could not sample enough reachable validation poses");
    const Point3 p(200.0 + 300.0 * uniform01(rng), -250.0 + 500.0 * uniform01(rng),
                   -150.0 + 400.0 * uniform01(rng));
    // uniform random rotation
    const double u1 = uniform01(rng), u2 = 2 * M_PI * uniform01(rng), u3 = 2 * M_PI * uniform01(rng);
    const Eigen::Quaterniond qr(std::sqrt(u1) * std::cos(u3), std::sqrt(1 - u1) * std::sin(u2),
                                std::sqrt(1 - u1) * std::cos(u2), std::sqrt(u1) * std::sin(u3));
    Pose T = Pose::Identity();
    T.linear() = qr.normalized().toRotationMatrix();
    T.translation() = p;
    const bool ok = std::all_of(branches.begin(), branches.end(), [&](const BranchFlags& b) {
      const auto ik = inverse_kinematics(model, T, b);
      return ik && !ik->singular && fit_to_limits(model, ik->q).has_value();
    });
    if (ok) poses.push_back(T);
  }
  return poses;
}

ProbeResult simulate_probe_grid(const RobotModel& commanded, const RobotModel& actual, const Plate& plate,
                                const BranchFlags& branch)
{
  ProbeResult out;
  Eigen::Matrix3d down = Eigen::Vector3d(1, -1, -1).asDiagonal();
  for (int ix = 0; ix < plate.nx; ++ix) {
    for (int iy = 0; iy < plate.ny; ++iy) {
      const double x = plate.center.x() - plate.size_x / 2 + plate.size_x * ix / std::max(plate.nx - 1, 1);
      const double y = plate.center.y() - plate.size_y / 2 + plate.size_y * iy / std::max(plate.ny - 1, 1);
      auto joints_at = [&](double s) -> std::optional<JointConfig> {
        Pose T = Pose::Identity();
        T.linear() = down;
        T.translation() = Point3(x, y, plate.height(x, y) + s);
        const auto ik = inverse_kinematics(commanded, T, branch);
        if (!ik) return std::nullopt;
        return fit_to_limits(commanded, ik->q);
      };
      auto gap = [&](const JointConfig& q) {
        const Point3 tip = tcp_position(actual, q);
        return tip.z() - plate.height(tip.x(), tip.y());
      };
      double lo = -20.0, hi = 20.0;
      auto qlo = joints_at(lo), qhi = joints_at(hi);
      const std::string cell = "cell (" + std::to_string(ix) + "," + std::to_string(iy) + ")";
      if (!qlo || !qhi) {
        out.notices.push_back(cell + " unreachable, skipped");
        continue;
      }
      if (gap(*qlo) > 0 || gap(*qhi) < 0) {
        out.notices.push_back(cell + ": no contact within the approach stroke, skipped");
        continue;
      }
      std::optional<JointConfig> q;
      for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        q = joints_at(mid);
        if (!q) break;
        if (gap(*q) > 0) hi = mid; else lo = mid;
      }
      q = joints_at(0.5 * (lo + hi));
      if (!q) {
        out.notices.push_back(cell + " left the reachable region during approach, skipped");
        continue;
      }
      out.points.push_back(tcp_position(commanded, *q));
    }
  }
  return out;
}

}  // namespace wirecal
