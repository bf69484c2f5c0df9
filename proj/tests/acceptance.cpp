#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "wirecal/io.hpp"

using namespace wirecal;

namespace {

// tolerances
constexpr double kPsiTol = 0.02;
constexpr double kPsiRuntime = 1.0;  // s
constexpr double kFdRel = 1e-5;
constexpr double kCleanTol = 1e-3;
constexpr double kCoupledTol = 1e-2;
constexpr double kCleanRuntime = 30.0;  // s
constexpr double kNoisySigma = 0.02;
constexpr double kNoisyTol = 0.05;
constexpr int kNoisySeeds = 10;
constexpr double kDiscrepancyReduction = 0.80;
constexpr double kPlaneReduction = 0.70;
constexpr double kIkTol = 1e-9;
constexpr double kNegativeFactor = 10.0;

std::string data(const std::string& name) { return std::string(WIRECAL_DATA_DIR) + "/" + name; }

struct Fixture {
  RobotModel viper = io::load_robot_model(data("viper_s650.json"));
  ErrorModel em = io::load_error_model(data("viper_s650_errors.json"));
  ErrorVector truth = io::load_error_values(data("table4_offsets.json"), em);
  RobotModel planar = io::load_robot_model(data("planar_2dof.json"));
  ErrorModel planar_em = io::load_error_model(data("planar_2dof_errors.json"));
  CalibrationPlan verbatim = io::load_plan(data("viper_s650_plan.json"));
  CalibrationPlan corrected = io::load_plan(data("viper_s650_plan_corrected.json"));
};

const Fixture& fx()
{
  static const Fixture f;
  return f;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double tolerance_for(const std::string& name)
{
  return (name == "theta4" || name == "a3" || name == "d4") ? kCoupledTol : kCleanTol;
}

// injected truth in the order of the plan
Eigen::VectorXd truth_in(const CalibrationPlan& plan)
{
  const ErrorModel ordered = plan_error_model(plan, fx().em);
  Eigen::VectorXd t(ordered.size());
  for (int i = 0; i < ordered.size(); ++i) t[i] = fx().truth.value(ordered.params[i].name());
  return t;
}

// plan used for the noisy runs and the validations
const CalibrationPlan& designed_plan()
{
  static const CalibrationPlan p = [] {
    DesignOptions opt;
    opt.set_size = 10;
    JointConfig q0(6);
    q0 << 0, -90, 210, -90, 0, -90;
    return design_plan(fx().viper, q0, fx().em, opt);
  }();
  return p;
}

IdentificationReport calibrate(const CalibrationPlan& plan, const EncoderSpec& spec)
{
  return run_calibration(plan, run_campaign(plan, fx().viper, fx().truth, spec), fx().viper, fx().em);
}

std::vector<BranchFlags> four_branches()
{
  return {{false, true, false}, {false, true, true}, {false, false, false}, {false, false, true}};
}

RobotModel compensated_model()
{
  EncoderSpec spec;
  spec.noise_sigma = kNoisySigma;
  spec.seed = 1;
  return apply_errors(fx().viper, calibrate(designed_plan(), spec).estimate);
}

bool criterion1()
{
  const auto t0 = std::chrono::steady_clock::now();
  const CalibrationPlan& plan = fx().verbatim;
  const ErrorModel ordered = plan_error_model(plan, fx().em);
  int rows = 0, bad = 0;
  for (const auto& s : plan.sets)
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      ++rows;
      const Eigen::VectorXd psi = sensitivity_row(fx().viper, s.points[i], plan.anchor, ordered).values;
      const Eigen::VectorXd d = (psi - s.psi[i]).cwiseAbs();
      Eigen::Index col = 0;
      const double worst = d.maxCoeff(&col);
      if (worst > kPsiTol) {
        ++bad;
        std::printf("  step %d row %zu: psi_%s computed %.4f, published %.2f\n", s.step, i + 1,
                    ordered.params[col].name().c_str(), psi[col], s.psi[i][col]);
      }
    }
  const double dt = seconds_since(t0);
  std::printf("  %d/%d rows within %.2f, %.3f s\n", rows - bad, rows, kPsiTol, dt);
  return rows == 69 && bad == 0 && dt < kPsiRuntime;
}

bool fd_check(const RobotModel& model, const ErrorModel& em, std::uint64_t seed, const char* label)
{
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, em.size() - 1);
  int bad = 0, done = 0;
  double worst = 0;
  while (done < 100) {
    JointConfig qi(model.dof()), q0(model.dof());
    for (int k = 0; k < model.dof(); ++k) {
      std::uniform_real_distribution<double> u(model.joint_limits[k].lower, model.joint_limits[k].upper);
      qi[k] = u(rng);
      q0[k] = u(rng);
    }
    const int j = pick(rng);
    if ((tcp_position(model, qi) - tcp_position(model, q0)).norm() < 10.0) continue;
    const double psi = sensitivity_row(model, qi, q0, em).values[j];
    const double h = 1e-4;
    ErrorVector plus = ErrorVector::zero(em), minus = ErrorVector::zero(em);
    plus.values[j] = h;
    minus.values[j] = -h;
    const double fd = (predicted_distance(model, qi, q0, plus) - predicted_distance(model, qi, q0, minus)) / (2 * h);
    const double err = std::abs(psi - fd);
    worst = std::max(worst, err / std::max(1.0, std::abs(psi)));
    if (err > std::max(kFdRel, kFdRel * std::abs(psi))) ++bad;
    ++done;
  }
  std::printf("  %s: %d/100 triples within tolerance, worst scaled error %.2e\n", label, 100 - bad, worst);
  return bad == 0;
}

bool criterion2()
{
  const bool a = fd_check(fx().viper, fx().em, 11, "viper");
  const bool b = fd_check(fx().planar, fx().planar_em, 12, "planar");
  return a && b;
}

bool criterion3()
{
  const auto t0 = std::chrono::steady_clock::now();
  EncoderSpec spec;
  spec.quantize = false;
  const IdentificationReport r = calibrate(fx().corrected, spec);
  const double dt = seconds_since(t0);
  const Eigen::VectorXd t = truth_in(fx().corrected);
  bool ok = dt < kCleanRuntime;
  for (int i = 0; i < t.size(); ++i) {
    const std::string name = r.estimate.model.params[i].name();
    const double err = std::abs(r.estimate.values[i] - t[i]);
    const bool pass = err <= tolerance_for(name);
    ok = ok && pass;
    std::printf("  %-7s injected %+.4f recovered %+.6f error %.2e%s\n", name.c_str(), t[i], r.estimate.values[i], err,
                pass ? "" : "  <-- over");
  }
  std::printf("  runtime %.3f s\n", dt);
  return ok;
}

double worst_noisy_error(const CalibrationPlan& plan, int seed)
{
  EncoderSpec spec;
  spec.noise_sigma = kNoisySigma;
  spec.seed = static_cast<std::uint64_t>(seed);
  const IdentificationReport r = calibrate(plan, spec);
  return (r.estimate.values - truth_in(plan)).cwiseAbs().maxCoeff();
}

bool criterion4()
{
  bool ok = true;
  for (int seed = 1; seed <= kNoisySeeds; ++seed) {
    const double w = worst_noisy_error(designed_plan(), seed);
    ok = ok && w <= kNoisyTol;
    std::printf("  seed %2d: worst |error| %.4f\n", seed, w);
  }
  int corrected_ok = 0;
  for (int seed = 1; seed <= kNoisySeeds; ++seed) corrected_ok += worst_noisy_error(fx().corrected, seed) <= kNoisyTol;
  std::printf("  (for reference, the corrected published plan passes %d/%d seeds)\n", corrected_ok, kNoisySeeds);
  return ok;
}

bool criterion5()
{
  const auto poses = sample_validation_poses(fx().viper, 50, 5, four_branches());
  const RobotModel actual = apply_errors(fx().viper, fx().truth);
  const Point3 anchor(800, 300, 200);
  const auto before = configuration_discrepancy(fx().viper, actual, poses, anchor, four_branches());
  const auto after = configuration_discrepancy(compensated_model(), actual, poses, anchor, four_branches());
  const double reduction = 1.0 - after.summary.mean / before.summary.mean;
  std::printf("  mean discrepancy %.4f mm -> %.4f mm (%d/%d poses), reduction %.1f%%\n", before.summary.mean,
              after.summary.mean, after.summary.count, before.summary.count, 100 * reduction);
  return before.summary.count == 50 && after.summary.count == 50 && reduction >= kDiscrepancyReduction;
}

bool criterion6()
{
  const RobotModel actual = apply_errors(fx().viper, fx().truth);
  const Plate plate;
  const auto before = simulate_probe_grid(fx().viper, actual, plate);
  const auto after = simulate_probe_grid(compensated_model(), actual, plate);
  const double mb = fit_plane(before.points).mean, ma = fit_plane(after.points).mean;
  const double reduction = 1.0 - ma / mb;
  std::printf("  mean plane residual %.5f mm -> %.5f mm (%zu points), reduction %.1f%%\n", mb, ma,
              after.points.size(), 100 * reduction);
  const std::size_t cells = static_cast<std::size_t>(plate.nx * plate.ny);
  return before.points.size() == cells && after.points.size() == cells && reduction >= kPlaneReduction;
}

bool ik_round_trip()
{
  RobotModel m = fx().viper;
  for (auto& l : m.joint_limits) l = {-360, 360};
  const auto poses = sample_validation_poses(m, 200, 21, BranchFlags::all());
  int checked = 0, bad = 0;
  for (const auto& T : poses)
    for (const auto& b : BranchFlags::all()) {
      const auto s = inverse_kinematics(m, T, b);
      if (!s) {
        ++bad;
        continue;
      }
      const Pose back = forward_kinematics(m, s->q);
      const double e = std::max((back.translation() - T.translation()).norm(),
                                (back.linear() - T.linear()).cwiseAbs().maxCoeff());
      ++checked;
      if (e > kIkTol) ++bad;
    }
  std::printf("  FK(IK) round trip: %d solutions, %d violations\n", checked, bad);
  return poses.size() == 200 && checked == 1600 && bad == 0;
}

bool theta1_invariance()
{
  const ErrorModel em = io::parse_error_model(R"([{"kind":"theta","joint":1,"bound":2}])");
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-120, 120), d(-2, 2);
  int bad = 0;
  for (int i = 0; i < 200; ++i) {
    JointConfig qi(6), q0(6);
    for (int k = 0; k < 6; ++k) {
      qi[k] = u(rng);
      q0[k] = u(rng);
    }
    ErrorVector ev = ErrorVector::zero(em);
    ev.values[0] = d(rng);
    const double a = predicted_distance(fx().viper, qi, q0, ErrorVector::zero(em));
    if (std::abs(predicted_distance(fx().viper, qi, q0, ev) - a) > 1e-9 * std::max(1.0, a)) ++bad;
  }
  std::printf("  theta1 distance invariance: %d violations in 200 draws\n", bad);
  return bad == 0;
}

bool plane_orthogonality()
{
  std::mt19937_64 rng(23);
  std::normal_distribution<double> n(0, 0.05);
  std::uniform_real_distribution<double> s(-0.01, 0.01);
  int bad = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const double a = s(rng), b = s(rng);
    std::vector<Point3> pts;
    Eigen::MatrixXd U(209, 3);
    for (int i = 0; i < 209; ++i) {
      const double x = 150 + (i % 19) * 400.0 / 18, y = -125 + (i / 19) * 25.0;
      pts.emplace_back(x, y, a * x + b * y + n(rng));
      U.row(i) << x, y, 1;
    }
    const PlaneFit f = fit_plane(pts);
    if ((U.transpose() * f.residuals).cwiseAbs().maxCoeff() > 1e-8) ++bad;
  }
  std::printf("  plane-fit orthogonality: %d violations in 50 fits\n", bad);
  return bad == 0;
}

bool quantization_bound()
{
  int bad = 0, count = 0;
  for (const double sigma : {0.0, 0.02}) {
    for (int seed = 1; seed <= 5; ++seed) {
      EncoderSpec spec;
      spec.noise_sigma = sigma;
      spec.seed = static_cast<std::uint64_t>(seed);
      const MeasurementLog log = run_campaign(fx().corrected, fx().viper, fx().truth, spec);
      for (const auto& m : log.measurements) {
        ++count;
        const double bound = sigma == 0.0 ? spec.resolution / 2 + 1e-12 : spec.resolution / 2 + 5 * sigma;
        if (std::abs(m.measured - m.true_distance) > bound) ++bad;
      }
    }
  }
  std::printf("  quantization bound: %d violations in %d measurements\n", bad, count);
  return bad == 0;
}

bool determinism()
{
  EncoderSpec spec;
  spec.noise_sigma = kNoisySigma;
  spec.seed = 9;
  const std::string log_a = io::log_csv(run_campaign(designed_plan(), fx().viper, fx().truth, spec));
  const std::string log_b = io::log_csv(run_campaign(designed_plan(), fx().viper, fx().truth, spec));
  const auto ra = calibrate(designed_plan(), spec);
  const auto rb = calibrate(designed_plan(), spec);
  const bool same_report = io::error_values_json(ra.estimate) == io::error_values_json(rb.estimate);
  JointConfig q0(6);
  q0 << 0, -90, 210, -90, 0, -90;
  DesignOptions opt;
  opt.set_size = 10;
  const bool same_plan = io::plan_json(design_plan(fx().viper, q0, fx().em, opt)) == io::plan_json(designed_plan());
  std::printf("  determinism: log %s, estimate %s, plan %s\n", log_a == log_b ? "identical" : "DIFFERS",
              same_report ? "identical" : "DIFFERS", same_plan ? "identical" : "DIFFERS");
  return log_a == log_b && same_report && same_plan;
}

bool criterion7()
{
  const bool a = ik_round_trip();
  const bool b = theta1_invariance();
  const bool c = plane_orthogonality();
  const bool d = quantization_bound();
  const bool e = determinism();
  return a && b && c && d && e;
}

bool criterion8()
{
  CalibrationPlan plan = fx().corrected;
  plan.sets.erase(plan.sets.begin());
  EncoderSpec spec;
  spec.quantize = false;
  const MeasurementLog log = run_campaign(plan, fx().viper, fx().truth, spec);
  // theta6 stays at zero; the remaining steps are identified as usual
  const ErrorModel ordered = plan_error_model(fx().corrected, fx().em);
  ErrorVector est = ErrorVector::zero(ordered);
  for (const auto& s : plan.sets)
    identify_parameter(ordered.index_of(s.param), log.for_step(s.step), fx().viper, plan.anchor, est, {});
  const Eigen::VectorXd t = truth_in(fx().corrected);
  double worst_ratio = 0;
  std::string worst_name;
  for (int i = 1; i < ordered.size(); ++i) {
    const std::string name = ordered.params[i].name();
    const double ratio = std::abs(est.values[i] - t[i]) / tolerance_for(name);
    std::printf("  %-7s error %.4f (%.1fx tolerance)\n", name.c_str(), std::abs(est.values[i] - t[i]), ratio);
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst_name = name;
    }
  }
  std::printf("  largest: %s at %.1fx tolerance\n", worst_name.c_str(), worst_ratio);
  return worst_ratio > kNegativeFactor;
}

struct Criterion {
  int id;
  const char* title;
  std::function<bool()> run;
};

}  // namespace

int main(int argc, char** argv)
{
  const std::vector<Criterion> all = {
      {1, "psi table reproduction", criterion1},
      {2, "analytic sensitivity vs finite differences", criterion2},
      {3, "clean round-trip identification", criterion3},
      {4, "noisy round-trip identification", criterion4},
      {5, "configuration discrepancy reduction", criterion5},
      {6, "probe-grid plane residual reduction", criterion6},
      {7, "property suites", criterion7},
      {8, "negative control without the first step", criterion8},
  };

  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
      return 2;
    }
  }

  int failed = 0, ran = 0;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    bool pass = false;
    try {
      pass = c.run();
    } catch (const std::exception& e) {
      std::printf("  exception: %s\n", e.what());
    }
    std::printf("criterion %d (%s): %s\n", c.id, c.title, pass ? "PASS" : "FAIL");
    std::fflush(stdout);
    failed += !pass;
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
