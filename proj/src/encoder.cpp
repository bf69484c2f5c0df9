#include "wirecal/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wirecal/errors.hpp"

namespace wirecal {

void EncoderSpec::check() const
{
  if (!(resolution > 0)) throw StructuralError("encoder resolution must be positive");
  if (!(max_length > 0)) throw StructuralError("encoder max length must be positive");
  if (!(noise_sigma >= 0)) throw StructuralError("noise sigma must be non-negative");
}

double quantize(double x, double resolution)
{
  return std::round(x / resolution) * resolution;
}

std::vector<Measurement> MeasurementLog::for_step(int step) const
{
  std::vector<Measurement> out;
  for (const auto& m : measurements)
    if (m.step == step) out.push_back(m);
  return out;
}

Measurement simulate_measurement(const RobotModel& truth_model, const JointConfig& qi, const JointConfig& q0,
                                 const EncoderSpec& spec, std::mt19937_64& rng)
{
  spec.check();
  Measurement m;
  m.point = qi;
  m.true_distance = predicted_distance(truth_model, qi, q0);
  if (m.true_distance + 4 * spec.noise_sigma > spec.max_length)
    throw RangeError("wire length " + std::to_string(m.true_distance) + " mm exceeds encoder range " +
                     std::to_string(spec.max_length) + " mm");
  double x = m.true_distance;
  if (spec.noise_sigma > 0 && m.true_distance > 0) {
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    x += noise(rng);
  }
  if (spec.quantize) x = quantize(x, spec.resolution);
  m.measured = std::max(0.0, x);
  return m;
}

Measurement simulate_measurement(const RobotModel& model, const JointConfig& qi, const JointConfig& q0,
                                 const ErrorVector& truth, const EncoderSpec& spec, std::mt19937_64& rng)
{
  return simulate_measurement(apply_errors(model, truth), qi, q0, spec, rng);
}

MeasurementLog run_campaign(const CalibrationPlan& plan, const RobotModel& model, const ErrorVector& truth,
                            const EncoderSpec& spec)
{
  spec.check();
  const RobotModel truth_model = apply_errors(model, truth);
  std::mt19937_64 rng(spec.seed);
  MeasurementLog log;
  for (const auto& set : plan.sets) {
    log.anchor_checks.push_back(simulate_measurement(truth_model, plan.anchor, plan.anchor, spec, rng).measured);
    for (std::size_t i = 0; i < set.points.size(); ++i) {
      Measurement m;
      try {
        m = simulate_measurement(truth_model, set.points[i], plan.anchor, spec, rng);
      } catch (const RangeError& e) {
        throw RangeError("step " + std::to_string(set.step) + " point " + std::to_string(i + 1) + ": " + e.what());
      }
      m.step = set.step;
      m.param = set.param;
      log.measurements.push_back(std::move(m));
    }
  }
  return log;
}

}  // namespace wirecal
