#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wirecal/errors.hpp"
#include "wirecal/io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace wirecal;

namespace {

constexpr int kConfigError = 2;
constexpr int kStageError = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StageError : std::runtime_error {
  StageError(std::string stage, const std::string& what) : std::runtime_error(what), stage(std::move(stage)) {}
  std::string stage;
};

struct Options {
  std::string model = std::string(WIRECAL_DATA_DIR) + "/viper_s650.json";
  std::string errors = std::string(WIRECAL_DATA_DIR) + "/viper_s650_errors.json";
  std::string plan;
  bool design = false;
  std::string truth;
  std::string log;
  std::string estimate;
  double sigma = 0.0;
  double resolution = 0.025488;
  std::uint64_t seed = 1;
  std::string out;
  int refine = 0;
  int set_size = 10;
  int poses = 50;
  double tolerance = 0.05;
  double min_discrepancy_reduction = 0.80;
  double min_plane_reduction = 0.70;
};

struct Input {
  std::string role, file, sha256;
};

// outputs are collected per run and written together at the end
class Bundle {
 public:
  explicit Bundle(std::string dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

  void write(bool failed) const
  {
    const fs::path base = failed ? fs::path(dir_) / "failed" : fs::path(dir_);
    for (const auto& [name, content] : files_) io::write_atomic(base / name, content);
  }

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

template <class F>
auto load(const std::string& what, F&& f)
{
  try {
    return f();
  } catch (const ParseError& e) {
    throw ConfigError(what + ": " + e.what());
  } catch (const std::ios_base::failure& e) {
    throw ConfigError(what + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

template <class F>
auto stage(const std::string& name, F&& f)
{
  try {
    return f();
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

Input digest(const std::string& role, const std::string& path)
{
  if (!fs::exists(path)) throw ConfigError(role + ": no such file: " + path);
  return {role, fs::path(path).filename().string(), io::sha256_file(path)};
}

json meta(const Options& o, const std::vector<Input>& inputs)
{
  json m;
  m["tool"] = "wirecal";
  m["version"] = WIRECAL_VERSION;
  m["seed"] = o.seed;
  json in = json::object();
  for (const auto& i : inputs) in[i.role] = {{"file", i.file}, {"sha256", i.sha256}};
  m["inputs"] = in;
  return m;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string with_header(const Options& o, const std::vector<Input>& inputs, const std::string& csv)
{
  std::ostringstream s;
  s << "# wirecal " << WIRECAL_VERSION << " seed " << o.seed;
  for (const auto& i : inputs) s << " " << i.role << "=" << i.sha256.substr(0, 16);
  s << "\n" << csv;
  return s.str();
}

JointConfig default_anchor(const RobotModel& m)
{
  JointConfig q0 = JointConfig::Zero(m.dof());
  if (m.dof() == 6) q0 << 0, -90, 210, -90, 0, -90;
  return q0;
}

struct Loaded {
  RobotModel model;
  ErrorModel em;
  std::vector<Input> inputs;
};

Loaded load_base(const Options& o)
{
  Loaded l;
  l.inputs.push_back(digest("model", o.model));
  l.inputs.push_back(digest("errors", o.errors));
  l.model = load("model", [&] { return io::load_robot_model(o.model); });
  l.em = load("errors", [&] { return io::load_error_model(o.errors); });
  return l;
}

std::optional<ErrorVector> load_truth(const Options& o, Loaded& l)
{
  if (o.truth.empty()) return std::nullopt;
  if (o.truth == "zero") return ErrorVector::zero(l.em);
  const std::string path = o.truth == "table4" ? std::string(WIRECAL_DATA_DIR) + "/table4_offsets.json" : o.truth;
  l.inputs.push_back(digest("truth", path));
  return load("truth", [&] { return io::load_error_values(path, l.em); });
}

CalibrationPlan load_plan(const Options& o, Loaded& l)
{
  l.inputs.push_back(digest("plan", o.plan));
  return load("plan", [&] { return io::load_plan(o.plan); });
}

EncoderSpec encoder_spec(const Options& o)
{
  EncoderSpec spec;
  spec.noise_sigma = o.sigma;
  spec.seed = o.seed;
  if (o.resolution == 0.0)
    spec.quantize = false;
  else
    spec.resolution = o.resolution;
  load("encoder", [&] {
    spec.check();
    return 0;
  });
  return spec;
}

DesignOptions design_options(const Options& o)
{
  DesignOptions d;
  d.seed = o.seed;
  d.set_size = o.set_size;
  return d;
}

std::vector<BranchFlags> validation_branches()
{
  return {{false, true, false}, {false, true, true}, {false, false, false}, {false, false, true}};
}

json calibration_json(const IdentificationReport& r)
{
  json steps = json::array();
  for (const auto& s : r.steps)
    steps.push_back({{"step", s.step},
                     {"param", s.param},
                     {"unit", s.unit},
                     {"value", s.value},
                     {"interval", {s.lower, s.upper}},
                     {"cost_before", s.cost_before},
                     {"cost_after", s.cost_after},
                     {"rms_before_mm", s.rms_before},
                     {"rms_after_mm", s.rms_after},
                     {"evaluations", s.iterations},
                     {"boundary_hit", s.boundary_hit}});
  return {{"steps", steps}, {"estimate", json::parse(io::error_values_json(r.estimate))["values"]},
          {"warnings", r.warnings}};
}

json summary_json(const Summary& s) { return {{"mean_mm", s.mean}, {"std_mm", s.std}, {"max_mm", s.max}, {"count", s.count}}; }

double reduction(double before, double after) { return before > 0 ? 1.0 - after / before : 0.0; }

struct ValidationOutcome {
  json report;
  std::string summary;
  bool pass = true;
  std::vector<double> disc_before, disc_after, plane_before, plane_after;
};

ValidationOutcome validate_models(const Options& o, const RobotModel& nominal, const RobotModel& compensated,
                                  const RobotModel& actual)
{
  ValidationOutcome v;
  const auto branches = validation_branches();
  const Point3 anchor(800, 300, 200);
  const auto poses = sample_validation_poses(nominal, o.poses, o.seed, branches);
  const auto db = configuration_discrepancy(nominal, actual, poses, anchor, branches);
  const auto da = configuration_discrepancy(compensated, actual, poses, anchor, branches);
  for (const auto& r : db.records) v.disc_before.push_back(r.discrepancy);
  for (const auto& r : da.records) v.disc_after.push_back(r.discrepancy);

  const Plate plate;
  const auto pb = simulate_probe_grid(nominal, actual, plate);
  const auto pa = simulate_probe_grid(compensated, actual, plate);
  const PlaneFit fb = fit_plane(pb.points), fa = fit_plane(pa.points);
  for (int i = 0; i < fb.residuals.size(); ++i) v.plane_before.push_back(std::abs(fb.residuals[i]));
  for (int i = 0; i < fa.residuals.size(); ++i) v.plane_after.push_back(std::abs(fa.residuals[i]));

  const double rd = reduction(db.summary.mean, da.summary.mean);
  const double rp = reduction(fb.mean, fa.mean);
  json branch_labels = json::array();
  for (const auto& b : branches) branch_labels.push_back(b.label());
  std::vector<std::string> notices = db.notices;
  notices.insert(notices.end(), da.notices.begin(), da.notices.end());
  notices.insert(notices.end(), pb.notices.begin(), pb.notices.end());
  notices.insert(notices.end(), pa.notices.begin(), pa.notices.end());
  v.report = {{"discrepancy",
               {{"anchor_mm", {anchor.x(), anchor.y(), anchor.z()}},
                {"branches", branch_labels},
                {"before", summary_json(db.summary)},
                {"after", summary_json(da.summary)},
                {"reduction", rd},
                {"threshold", o.min_discrepancy_reduction}}},
              {"plane",
               {{"grid", {plate.nx, plate.ny}},
                {"before", summary_json(summarize(v.plane_before))},
                {"after", summary_json(summarize(v.plane_after))},
                {"reduction", rp},
                {"threshold", o.min_plane_reduction}}},
              {"notices", notices}};

  char buf[512];
  std::snprintf(buf, sizeof buf,
                "configuration discrepancy: mean %.4f mm (std %.4f) -> %.4f mm (std %.4f), reduced %.1f%%\n"
                "plane residual: mean %.5f mm (std %.5f) -> %.5f mm (std %.5f), reduced %.1f%%\n",
                db.summary.mean, db.summary.std, da.summary.mean, da.summary.std, 100 * rd, fb.mean, fb.std, fa.mean,
                fa.std, 100 * rp);
  v.summary = buf;
  v.pass = rd >= o.min_discrepancy_reduction && rp >= o.min_plane_reduction;
  return v;
}

int cmd_psi_table(const Options& o)
{
  Loaded l = load_base(o);
  CalibrationPlan plan = load_plan(o, l);
  fill_psi(plan, l.model, l.em);
  const std::string csv = with_header(o, l.inputs, io::psi_table_csv(plan, plan_error_model(plan, l.em)));
  if (o.out.empty())
    std::cout << csv;
  else
    io::write_atomic(o.out, csv);
  return 0;
}

int cmd_design(const Options& o)
{
  Loaded l = load_base(o);
  const CalibrationPlan plan =
      stage("design", [&] { return design_plan(l.model, default_anchor(l.model), l.em, design_options(o)); });
  const std::string text = io::plan_json(plan);
  if (o.out.empty())
    std::cout << text;
  else
    io::write_atomic(o.out, text);
  for (const auto& s : plan.sets)
    if (s.sub_quality) std::cerr << "note: set for " << s.param << " is below the requested quality\n";
  return 0;
}

int cmd_simulate(const Options& o)
{
  Loaded l = load_base(o);
  const auto truth = load_truth(o, l);
  if (!truth) throw ConfigError("simulate needs --truth");
  const CalibrationPlan plan = load_plan(o, l);
  const EncoderSpec spec = encoder_spec(o);
  const MeasurementLog log = stage("campaign", [&] { return run_campaign(plan, l.model, *truth, spec); });
  const std::string csv = with_header(o, l.inputs, io::log_csv(log));
  if (o.out.empty())
    std::cout << csv;
  else
    io::write_atomic(o.out, csv);
  return 0;
}

int cmd_validate(const Options& o)
{
  if (o.out.empty()) throw ConfigError("validate needs --out");
  Loaded l = load_base(o);
  const auto truth = load_truth(o, l);
  if (!truth) throw ConfigError("validate needs --truth");
  if (o.estimate.empty()) throw ConfigError("validate needs --estimate");
  l.inputs.push_back(digest("estimate", o.estimate));
  const ErrorVector est = load("estimate", [&] { return io::load_error_values(o.estimate, l.em); });

  Bundle out(o.out);
  try {
    const RobotModel actual = apply_errors(l.model, *truth);
    const RobotModel compensated = apply_errors(l.model, est);
    const ValidationOutcome v = stage("validation", [&] { return validate_models(o, l.model, compensated, actual); });
    json report = {{"meta", meta(o, l.inputs)}, {"validation", v.report}, {"pass", v.pass}};
    out.add("validation_report.json", dump(report));
    out.add("discrepancy_hist.csv", with_header(o, l.inputs, io::histogram_csv(v.disc_after, 0.01)));
    out.add("plane_hist.csv", with_header(o, l.inputs, io::histogram_csv(v.plane_after, 0.001)));
    out.add("summary.txt", v.summary + (v.pass ? "result: PASS\n" : "result: FAIL\n"));
    out.write(false);
    std::cout << v.summary;
    return v.pass ? 0 : kStageError;
  } catch (const StageError&) {
    out.write(true);
    throw;
  }
}

int cmd_calibrate(const Options& o)
{
  if (o.out.empty()) throw ConfigError("calibrate needs --out");
  if (o.truth.empty() == o.log.empty()) throw ConfigError("calibrate needs exactly one of --truth and --log");
  if (!o.plan.empty() && o.design) throw ConfigError("--plan and --design are mutually exclusive");

  Loaded l = load_base(o);
  const auto truth = load_truth(o, l);
  std::optional<CalibrationPlan> loaded_plan;
  if (!o.plan.empty()) loaded_plan = load_plan(o, l);
  std::optional<MeasurementLog> ingested;
  if (!o.log.empty()) {
    l.inputs.push_back(digest("log", o.log));
    ingested = load("log", [&] { return io::load_log_csv(o.log); });
  }
  const EncoderSpec spec = encoder_spec(o);
  IdentifyOptions iopt;
  iopt.refine = o.refine;

  Bundle out(o.out);
  std::ostringstream summary;
  summary << "wirecal " << WIRECAL_VERSION << ", seed " << o.seed << "\n";
  for (const auto& i : l.inputs) summary << i.role << ": " << i.file << " sha256 " << i.sha256 << "\n";

  try {
    CalibrationPlan plan;
    if (loaded_plan) {
      plan = *loaded_plan;
    } else {
      plan = stage("design", [&] { return design_plan(l.model, default_anchor(l.model), l.em, design_options(o)); });
      out.add("plan.json", io::plan_json(plan));
      summary << "plan designed: " << plan.point_count() << " points in " << plan.sets.size() << " sets\n";
    }

    MeasurementLog log;
    if (ingested) {
      log = *ingested;
    } else {
      log = stage("campaign", [&] { return run_campaign(plan, l.model, *truth, spec); });
      out.add("log.csv", with_header(o, l.inputs, io::log_csv(log)));
    }

    const IdentificationReport rep = stage("calibration", [&] { return run_calibration(plan, log, l.model, l.em, iopt); });
    const RobotModel compensated = apply_errors(l.model, rep.estimate);
    out.add("estimate.json", io::error_values_json(rep.estimate));
    out.add("compensated_model.json", io::robot_model_json(compensated));

    json cal = {{"meta", meta(o, l.inputs)},
                {"encoder",
                 {{"resolution_mm", spec.quantize ? spec.resolution : 0.0},
                  {"sigma_mm", spec.noise_sigma},
                  {"max_length_mm", spec.max_length}}},
                {"refine", o.refine},
                {"calibration", calibration_json(rep)}};

    bool pass = true;
    summary << "\nidentified offsets:\n";
    for (std::size_t k = 0; k < rep.steps.size(); ++k) {
      const auto& s = rep.steps[k];
      char buf[256];
      std::snprintf(buf, sizeof buf, "  %2d %-7s %+.5f %s  rms %.4f -> %.4f mm", s.step, s.param.c_str(), s.value,
                    s.unit.c_str(), s.rms_before, s.rms_after);
      summary << buf;
      if (truth) {
        const double err = rep.estimate.value(s.param) - truth->value(s.param);
        std::snprintf(buf, sizeof buf, "  injected %+.5f error %+.5f", truth->value(s.param), err);
        summary << buf;
        pass = pass && std::abs(err) <= o.tolerance;
      }
      summary << "\n";
    }
    for (const auto& w : rep.warnings) summary << "warning: " << w << "\n";

    if (truth) {
      cal["recovery"] = {{"tolerance", o.tolerance}, {"pass", pass}};
      const RobotModel actual = apply_errors(l.model, *truth);
      const ValidationOutcome v = stage("validation", [&] { return validate_models(o, l.model, compensated, actual); });
      json vr = {{"meta", meta(o, l.inputs)}, {"validation", v.report}, {"pass", v.pass}};
      out.add("validation_report.json", dump(vr));
      out.add("discrepancy_hist.csv", with_header(o, l.inputs, io::histogram_csv(v.disc_after, 0.01)));
      out.add("plane_hist.csv", with_header(o, l.inputs, io::histogram_csv(v.plane_after, 0.001)));
      summary << "\n" << v.summary;
      pass = pass && v.pass;
    } else {
      summary << "\nno injected truth: validation skipped\n";
    }
    cal["pass"] = pass;
    out.add("calibration_report.json", dump(cal));
    summary << "result: " << (pass ? "PASS" : "FAIL") << "\n";
    out.add("summary.txt", summary.str());
    out.write(false);
    std::cout << summary.str();
    return pass ? 0 : kStageError;
  } catch (const StageError& e) {
    out.add("error.txt", "stage " + e.stage + ": " + e.what() + "\n");
    out.write(true);
    throw;
  }
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Step-by-step kinematic calibration with a single draw-wire encoder"};
  app.set_version_flag("--version", std::string(WIRECAL_VERSION));
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* c) {
    c->add_option("--model", o.model, "robot model JSON");
    c->add_option("--errors", o.errors, "error model JSON");
    c->add_option("--seed", o.seed, "seed for every random draw");
    c->add_option("--out", o.out, "output file or directory");
  };
  auto encoder = [&](CLI::App* c) {
    c->add_option("--sigma", o.sigma, "encoder noise sigma, mm");
    c->add_option("--resolution", o.resolution, "encoder resolution, mm (0 disables quantization)");
  };
  auto truth = [&](CLI::App* c) {
    c->add_option("--truth", o.truth, "injected offsets: zero, table4 or a values JSON file");
  };
  auto design = [&](CLI::App* c) { c->add_option("--set-size", o.set_size, "points per calibration set"); };
  auto thresholds = [&](CLI::App* c) {
    c->add_option("--poses", o.poses, "validation poses");
    c->add_option("--min-discrepancy-reduction", o.min_discrepancy_reduction);
    c->add_option("--min-plane-reduction", o.min_plane_reduction);
  };

  auto* psi = app.add_subcommand("psi-table", "sensitivity table of a plan as CSV");
  common(psi);
  psi->add_option("--plan", o.plan, "plan JSON")->required();

  auto* des = app.add_subcommand("design", "design a calibration plan");
  common(des);
  design(des);

  auto* sim = app.add_subcommand("simulate", "simulate a measurement campaign");
  common(sim);
  encoder(sim);
  truth(sim);
  sim->add_option("--plan", o.plan, "plan JSON")->required();

  auto* cal = app.add_subcommand("calibrate", "design, measure, identify and validate");
  common(cal);
  encoder(cal);
  truth(cal);
  design(cal);
  thresholds(cal);
  cal->add_option("--plan", o.plan, "plan JSON (designed when absent)");
  cal->add_flag("--design", o.design, "design the plan even if one could be loaded");
  cal->add_option("--log", o.log, "measurement log CSV instead of a simulated campaign");
  cal->add_option("--refine", o.refine, "extra passes over all steps");
  cal->add_option("--tolerance", o.tolerance, "allowed recovery error against injected truth");

  auto* val = app.add_subcommand("validate", "validation experiments for an estimate");
  common(val);
  truth(val);
  thresholds(val);
  val->add_option("--estimate", o.estimate, "identified offsets JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*psi) return cmd_psi_table(o);
    if (*des) return cmd_design(o);
    if (*sim) return cmd_simulate(o);
    if (*cal) return cmd_calibrate(o);
    if (*val) return cmd_validate(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const StageError& e) {
    std::cerr << "stage " << e.stage << " failed: " << e.what() << "\n";
    return kStageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kStageError;
  }
  return 0;
}
