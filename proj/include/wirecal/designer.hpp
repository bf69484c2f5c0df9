#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wirecal/sensitivity.hpp"

namespace wirecal {

struct CalibrationSet {
  int step = 0;  // 1-based position in the identification order
  std::string param;
  std::vector<JointConfig> points;
  std::vector<Eigen::VectorXd> psi;  // per point, in plan order
  std::optional<double> eps_null;    // per-set override of the off-target threshold
  bool sub_quality = false;

  double min_target() const;      // min over points of |psi_j|
  double max_off_target() const;  // max over points and t > j of |psi_t|
};

struct CalibrationPlan {
  JointConfig anchor;
  std::vector<std::string> order;
  std::vector<CalibrationSet> sets;

  int point_count() const;
};

struct DesignOptions {
  double eps_null = 0.05;
  double psi_min = 0.2;
  double lambda = 100.0;
  int multistarts = 64;
  int set_size = 6;
  double min_separation = 2.0;  // deg, joint-space distance between points
  double eps_wire = kDefaultWireEps;
  double max_length = 1250.0;
  int order_samples = 3000;  // Halton samples per joint subset in determine_order
  int refine_passes = 6;
  std::uint64_t seed = 1;
  std::map<int, double> eps_null_override;  // step -> relaxed threshold

  double eps_null_for(int step) const;
};

/// Greedy distal-to-proximal identification order, as a permutation of em.
std::vector<int> determine_order(const RobotModel& model, const JointConfig& q0, const ErrorModel& em,
                                 const DesignOptions& opt = {});

/// Points isolating parameter j (1-based) of the already-ordered error model.
CalibrationSet find_calibration_set(const RobotModel& model, const JointConfig& q0, int j,
                                    const ErrorModel& ordered, const DesignOptions& opt = {});

/// determine_order followed by find_calibration_set for every step.
CalibrationPlan design_plan(const RobotModel& model, const JointConfig& q0, const ErrorModel& em,
                            const DesignOptions& opt = {});

struct SetReport {
  int step = 0;
  std::string param;
  int points = 0;
  double min_target = 0;
  double rms_target = 0;
  double max_off_target = 0;
  double eps_null = 0;
  double min_length = 0;
  double max_length = 0;
  double min_separation = 0;
  bool pass = false;
  std::vector<std::string> problems;
};

struct PlanReport {
  std::vector<SetReport> sets;
  std::vector<std::string> missing;
  bool pass = false;
};

/// Recomputes every Psi from scratch and checks the plan against the thresholds.
PlanReport validate_plan(const CalibrationPlan& plan, const RobotModel& model, const ErrorModel& em,
                         const DesignOptions& opt = {});

/// Recomputes and stores psi for every point of the plan (in plan order).
void fill_psi(CalibrationPlan& plan, const RobotModel& model, const ErrorModel& em,
              double eps_wire = kDefaultWireEps);

/// The error model permuted to match plan.order.
ErrorModel plan_error_model(const CalibrationPlan& plan, const ErrorModel& em);

}  // namespace wirecal
