#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "common.hpp"
#include "wirecal/errors.hpp"

using namespace wirecal;
using namespace wirecal::testing;

TEST(Quantize, NearestCount)
{
  EXPECT_NEAR(quantize(1.0, 0.025488), 0.994032, 1e-12);
  EXPECT_NEAR(quantize(1.0, 0.025488) / 0.025488, 39.0, 1e-9);
  EXPECT_DOUBLE_EQ(quantize(0.0, 0.025488), 0.0);
}

TEST(Quantize, Idempotent)
{
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1250);
  for (int i = 0; i < 1000; ++i) {
    const double x = quantize(u(rng), 0.025488);
    EXPECT_EQ(quantize(x, 0.025488), x);
  }
}

TEST(SimulateMeasurement, ZeroAtAnchor)
{
  EncoderSpec spec;
  std::mt19937_64 rng(1);
  EXPECT_DOUBLE_EQ(simulate_measurement(viper(), anchor(), anchor(), table4(), spec, rng).measured, 0.0);
  spec.noise_sigma = 0.02;
  EXPECT_DOUBLE_EQ(simulate_measurement(viper(), anchor(), anchor(), table4(), spec, rng).measured, 0.0);
}

TEST(SimulateMeasurement, OverRange)
{
  RobotModel m = planar();
  m.rows[1].a_prev = 650;
  m.tool = Point3(650, 0, 0);
  EncoderSpec spec;
  std::mt19937_64 rng(1);
  ErrorVector zero = ErrorVector::zero(planar_errors());
  EXPECT_NEAR(predicted_distance(m, q({0, 180}), q({0, 0}), zero), 1300.0, 1e-9);
  EXPECT_THROW(simulate_measurement(m, q({0, 180}), q({0, 0}), zero, spec, rng), RangeError);
}

TEST(SimulateMeasurement, ErrorBound)
{
  const CalibrationPlan plan = io::load_plan(data("viper_s650_plan_corrected.json"));
  for (double sigma : {0.0, 0.02}) {
    EncoderSpec spec;
    spec.noise_sigma = sigma;
    spec.seed = 17;
    const MeasurementLog log = run_campaign(plan, viper(), table4(), spec);
    for (const auto& m : log.measurements) {
      EXPECT_LE(std::abs(m.measured - m.true_distance), spec.resolution / 2 + 5 * sigma + 1e-12);
      EXPECT_GE(m.measured, 0.0);
      EXPECT_LE(m.measured, spec.max_length);
      if (sigma == 0.0) EXPECT_EQ(m.measured, quantize(m.true_distance, spec.resolution));
    }
  }
}

TEST(RunCampaign, CoversPlanAndZeroReference)
{
  const CalibrationPlan plan = io::load_plan(data("viper_s650_plan_corrected.json"));
  const MeasurementLog log = run_campaign(plan, viper(), ErrorVector::zero(viper_errors()), EncoderSpec{});
  ASSERT_EQ(static_cast<int>(log.measurements.size()), plan.point_count());
  ASSERT_EQ(log.anchor_checks.size(), plan.sets.size());
  for (double a : log.anchor_checks) EXPECT_EQ(a, 0.0);
  std::size_t k = 0;
  for (const auto& s : plan.sets)
    for (const auto& p : s.points) {
      const Measurement& m = log.measurements[k++];
      EXPECT_EQ(m.step, s.step);
      EXPECT_EQ(m.param, s.param);
      EXPECT_EQ(m.point, p);
      EXPECT_EQ(m.measured, quantize(wire_geometry(viper(), p, plan.anchor).length, 0.025488));
    }
}

TEST(RunCampaign, Deterministic)
{
  const CalibrationPlan plan = io::load_plan(data("viper_s650_plan_corrected.json"));
  EncoderSpec spec;
  spec.noise_sigma = 0.02;
  spec.seed = 42;
  const MeasurementLog a = run_campaign(plan, viper(), table4(), spec);
  const MeasurementLog b = run_campaign(plan, viper(), table4(), spec);
  EXPECT_EQ(io::log_csv(a), io::log_csv(b));
  spec.seed = 43;
  EXPECT_NE(io::log_csv(a), io::log_csv(run_campaign(plan, viper(), table4(), spec)));
}

TEST(EncoderSpec, Validation)
{
  EncoderSpec s;
  s.resolution = 0;
  EXPECT_THROW(s.check(), StructuralError);
  s = EncoderSpec{};
  s.noise_sigma = -1;
  EXPECT_THROW(s.check(), StructuralError);
}
