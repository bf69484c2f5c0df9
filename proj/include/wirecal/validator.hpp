#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wirecal/kinematics.hpp"

namespace wirecal {

/// lefty: theta1 points away from the wrist center (reach over the back).
/// above: elbow-up solution of the planar two-link problem.
/// flip: theta5 negative.
struct BranchFlags {
  bool lefty = false;
  bool above = true;
  bool flip = false;

  std::string label() const;
  static std::vector<BranchFlags> all();
  bool operator==(const BranchFlags&) const = default;
};

struct IkSolution {
  JointConfig q;
  bool singular = false;  // wrist singularity, theta4 set to 0
};

/// Closed form for a 6R arm with a spherical wrist (Viper layout). Angles are
/// wrapped to (-180, 180]; joint limits are not applied.
std::optional<IkSolution> inverse_kinematics(const RobotModel& model, const Pose& pose, const BranchFlags& flags);

struct PlaneFit {
  double a = 0, b = 0, c = 0;  // z = a x + b y + c
  Eigen::VectorXd residuals;   // a x + b y + c - z
  double mean = 0;             // mean |residual|
  double std = 0;              // std of |residual|
  double max = 0;
};

PlaneFit fit_plane(const std::vector<Point3>& points);

struct Summary {
  double mean = 0, std = 0, max = 0;
  int count = 0;
};

Summary summarize(const std::vector<double>& v);

struct DiscrepancyRecord {
  int pose_id = 0;
  std::vector<BranchFlags> branches;
  std::vector<JointConfig> joints;
  std::vector<double> distances;
  double discrepancy = 0;
};

struct DiscrepancyResult {
  std::vector<DiscrepancyRecord> records;
  std::vector<std::string> notices;
  Summary summary;
};

/// For every pose and branch: joints from IK of the commanded model, tip from the
/// actual model, distance to the anchor point. Branches outside the joint limits
/// of the commanded model are dropped; poses with fewer than two are skipped.
DiscrepancyResult configuration_discrepancy(const RobotModel& commanded, const RobotModel& actual,
                                            const std::vector<Pose>& poses, const Point3& anchor,
                                            const std::vector<BranchFlags>& branches);

/// Poses with every requested branch inside the joint limits of `model`.
std::vector<Pose> sample_validation_poses(const RobotModel& model, int count, std::uint64_t seed,
                                          const std::vector<BranchFlags>& branches);

struct Plate {
  Point3 center = Point3(350.0, 0.0, 0.0);
  double a = 0.0, b = 0.0;  // surface slope: z = center.z + a (x - cx) + b (y - cy)
  double size_x = 400.0;
  double size_y = 250.0;
  int nx = 19;
  int ny = 11;

  double height(double x, double y) const { return center.z() + a * (x - center.x()) + b * (y - center.y()); }
};

struct ProbeResult {
  std::vector<Point3> points;  // controller-believed contact points
  std::vector<std::string> notices;
};

/// Probe descends along the commanded -z until the actual tip touches the plate.
ProbeResult simulate_probe_grid(const RobotModel& commanded, const RobotModel& actual, const Plate& plate,
                                const BranchFlags& branch = {});

}  // namespace wirecal
