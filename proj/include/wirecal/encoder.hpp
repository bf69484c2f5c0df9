#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "wirecal/designer.hpp"

namespace wirecal {

struct EncoderSpec {
  double resolution = 0.025488;  // mm per count
  double max_length = 1250.0;    // mm
  double noise_sigma = 0.0;      // mm
  std::uint64_t seed = 0;
  bool quantize = true;

  void check() const;
};

/// Nearest whole count times the resolution.
double quantize(double x, double resolution);

struct Measurement {
  int step = 0;
  std::string param;
  JointConfig point;
  double measured = 0.0;
  double true_distance = 0.0;  // NaN for ingested logs
};

struct MeasurementLog {
  std::vector<Measurement> measurements;
  std::vector<double> anchor_checks;  // measured length at the anchor before each step

  std::vector<Measurement> for_step(int step) const;
};

Measurement simulate_measurement(const RobotModel& truth_model, const JointConfig& qi, const JointConfig& q0,
                                 const EncoderSpec& spec, std::mt19937_64& rng);

Measurement simulate_measurement(const RobotModel& model, const JointConfig& qi, const JointConfig& q0,
                                 const ErrorVector& truth, const EncoderSpec& spec, std::mt19937_64& rng);

/// One measurement per plan point, in plan order; deterministic under spec.seed.
MeasurementLog run_campaign(const CalibrationPlan& plan, const RobotModel& model, const ErrorVector& truth,
                            const EncoderSpec& spec);

}  // namespace wirecal
