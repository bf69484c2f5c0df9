#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wirecal/encoder.hpp"

namespace wirecal {

struct ScalarMinimum {
  double x = 0;
  double fx = 0;
  int evaluations = 0;
};

/// Bounded Brent minimization (golden section with parabolic steps).
/// Never evaluates f outside [lo, hi].
ScalarMinimum minimize_scalar(const std::function<double(double)>& f, double lo, double hi, double tol);

struct IdentifyOptions {
  double tol = 1e-6;
  int refine = 0;  // extra full passes after the first
  double boundary_margin = 1e-4;
};

struct StepResult {
  int step = 0;
  std::string param;
  std::string unit;
  double value = 0;
  double cost_before = 0;
  double cost_after = 0;
  int iterations = 0;
  double lower = 0;
  double upper = 0;
  bool boundary_hit = false;
  double rms_before = 0;
  double rms_after = 0;
};

struct IdentificationReport {
  std::vector<StepResult> steps;
  ErrorVector estimate;
  std::vector<std::string> warnings;
};

/// Sum of squared residuals over one set with slot j of `current` replaced.
double step_cost(const std::vector<Measurement>& set, const RobotModel& model, const JointConfig& q0,
                 const ErrorVector& current, int slot, double candidate);

/// Minimizes step_cost for slot j over its bound and writes the result into `current`.
StepResult identify_parameter(int slot, const std::vector<Measurement>& set, const RobotModel& model,
                              const JointConfig& q0, ErrorVector& current, const IdentifyOptions& opt = {});

/// Runs the sets in plan order. `em` may be in any order; the estimate is reported
/// in plan order.
IdentificationReport run_calibration(const CalibrationPlan& plan, const MeasurementLog& log,
                                     const RobotModel& model, const ErrorModel& em,
                                     const IdentifyOptions& opt = {});

}  // namespace wirecal
