#include "wirecal/identifier.hpp"

#include <cmath>
#include <limits>

#include "wirecal/errors.hpp"

namespace wirecal {

ScalarMinimum minimize_scalar(const std::function<double(double)>& f, double lo, double hi, double tol)
{
  if (!(lo < hi)) throw StructuralError("minimize_scalar: empty interval");
  if (!(tol > 0)) throw StructuralError("minimize_scalar: tolerance must be positive");

  const double c = 0.5 * (3.0 - std::sqrt(5.0));
  const double eps = std::numeric_limits<double>::epsilon();
  int evals = 0;
  auto eval = [&](double x) {
    const double v = f(x);
    ++evals;
    if (!std::isfinite(v)) throw NumericError("objective is not finite at x = " + std::to_string(x));
    return v;
  };

  double a = lo, b = hi;
  double v = a + c * (b - a);
  double w = v, x = v;
  double d = 0.0, e = 0.0;
  double fx = eval(x);
  double fv = fx, fw = fx;

  for (;;) {
    const double xm = 0.5 * (a + b);
    const double tol1 = 2 * eps * std::abs(x) + tol / 4.0;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;

    bool golden = true;
    if (std::abs(e) > tol1) {
      // parabola through x, v, w
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0) p = -p;
      q = std::abs(q);
      const double etemp = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * etemp) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = x < xm ? tol1 : -tol1;
        golden = false;
      }
    }
    if (golden) {
      e = (x < xm ? b : a) - x;
      d = c * e;
    }

    const double u = std::abs(d) >= tol1 ? x + d : x + (d > 0 ? tol1 : -tol1);
    const double fu = eval(u);

    if (fu <= fx) {
      if (u < x) b = x; else a = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return {x, fx, evals};
}

double step_cost(const std::vector<Measurement>& set, const RobotModel& model, const JointConfig& q0,
                 const ErrorVector& current, int slot, double candidate)
{
  if (set.empty()) return 0.0;
  ErrorVector ev = current;
  ev.values[slot] = candidate;
  const RobotModel m = apply_errors(model, ev);
  const Point3 p0 = tcp_position(m, q0);
  double cost = 0;
  for (const auto& s : set) {
    const double r = (tcp_position(m, s.point) - p0).norm() - s.measured;
    cost += r * r;
  }
  return cost;
}

StepResult identify_parameter(int slot, const std::vector<Measurement>& set, const RobotModel& model,
                              const JointConfig& q0, ErrorVector& current, const IdentifyOptions& opt)
{
  if (slot < 0 || slot >= current.model.size()) throw StructuralError("slot out of range");
  if (set.empty())
    throw StructuralError("no measurements for parameter " + current.model.params[slot].name());
  const ErrorParam& p = current.model.params[slot];
  StepResult r;
  r.param = p.name();
  r.unit = p.unit();
  r.lower = -p.bound;
  r.upper = p.bound;
  r.cost_before = step_cost(set, model, q0, current, slot, current.values[slot]);

  const ScalarMinimum m = minimize_scalar(
      [&](double x) { return step_cost(set, model, q0, current, slot, x); }, r.lower, r.upper, opt.tol);
  r.value = m.x;
  r.cost_after = m.fx;
  r.iterations = m.evaluations;
  if (r.cost_after > r.cost_before) {
    r.value = current.values[slot];
    r.cost_after = r.cost_before;
  }
  r.boundary_hit = r.value - r.lower < opt.boundary_margin || r.upper - r.value < opt.boundary_margin;
  const double n = static_cast<double>(set.size());
  r.rms_before = std::sqrt(r.cost_before / n);
  r.rms_after = std::sqrt(r.cost_after / n);
  current.values[slot] = r.value;
  return r;
}

IdentificationReport run_calibration(const CalibrationPlan& plan, const MeasurementLog& log,
                                     const RobotModel& model, const ErrorModel& em, const IdentifyOptions& opt)
{
  const ErrorModel ordered = plan_error_model(plan, em);

  std::vector<std::vector<Measurement>> per_set;
  std::vector<std::string> missing;
  for (const auto& set : plan.sets) {
    per_set.push_back(log.for_step(set.step));
    if (per_set.back().empty()) missing.push_back(set.param);
  }
  if (!missing.empty()) {
    std::string s = "measurement log has no data for";
    for (const auto& m : missing) s += " " + m;
    throw StructuralError(s);
  }

  IdentificationReport rep;
  rep.estimate = ErrorVector::zero(ordered);
  for (int pass = 0; pass <= opt.refine; ++pass) {
    rep.steps.clear();
    for (std::size_t k = 0; k < plan.sets.size(); ++k) {
      const int slot = ordered.index_of(plan.sets[k].param);
      StepResult r = identify_parameter(slot, per_set[k], model, plan.anchor, rep.estimate, opt);
      r.step = plan.sets[k].step;
      rep.steps.push_back(r);
    }
  }
  for (const auto& r : rep.steps)
    if (r.boundary_hit)
      rep.warnings.push_back(r.param + " converged to the bound of its search interval; widen the bound or run a "
                                       "coarse calibration first");
  return rep;
}

}  // namespace wirecal
