#include "wirecal/designer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "wirecal/errors.hpp"
#include "wirecal/identifier.hpp"

namespace wirecal {

namespace {

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

double radical_inverse(std::uint64_t i, int base)
{
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

// uniform in [0,1) built from raw engine output, identical on every platform
double uniform01(std::mt19937_64& rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Shifted Halton sequence.
class Halton {
 public:
  Halton(int dim, std::uint64_t seed) : shift_(dim)
  {
    if (dim > static_cast<int>(std::size(kPrimes))) throw StructuralError("Halton dimension too large");
    std::mt19937_64 rng(seed);
    for (auto& s : shift_) s = uniform01(rng);
  }

  Eigen::VectorXd operator()(std::uint64_t i) const
  {
    Eigen::VectorXd u(shift_.size());
    for (std::size_t k = 0; k < shift_.size(); ++k) {
      double v = radical_inverse(i + 1, kPrimes[k]) + shift_[k];
      u[k] = v - std::floor(v);
    }
    return u;
  }

 private:
  std::vector<double> shift_;
};

struct Sample {
  int k;
  Eigen::VectorXd psi;
};

double joint_distance(const JointConfig& a, const JointConfig& b) { return (a - b).norm(); }

// Evaluation of the set objective on a subset of free joints.
class SetObjective {
 public:
  SetObjective(const SensitivityEvaluator& ev, int target, double lambda, double max_length)
      : ev_(ev), target_(target), lambda_(lambda), max_length_(max_length)
  {
  }

  double operator()(const JointConfig& q, Eigen::VectorXd* psi_out = nullptr) const
  {
    Eigen::VectorXd psi;
    double len = 0;
    if (!ev_.evaluate(q, psi, len)) return 1e6 + (kDefaultWireEps - len);
    if (psi_out) *psi_out = psi;
    double off = 0;
    for (int t = target_ + 1; t < psi.size(); ++t) off += psi[t] * psi[t];
    double g = -std::abs(psi[target_]) + lambda_ * off;
    if (len > max_length_) g += 1e3 + (len - max_length_);
    return g;
  }

 private:
  const SensitivityEvaluator& ev_;
  int target_;
  double lambda_;
  double max_length_;
};

// Coordinate-wise line searches with shrinking windows.
JointConfig refine(const SetObjective& obj, JointConfig q, const std::vector<int>& free,
                   const RobotModel& model, int passes, double window)
{
  for (int p = 0; p < passes; ++p) {
    for (int k : free) {
      const double lo = std::max(model.joint_limits[k].lower, q[k] - window);
      const double hi = std::min(model.joint_limits[k].upper, q[k] + window);
      if (!(lo < hi)) continue;
      JointConfig trial = q;
      const double f_cur = obj(q);
      const ScalarMinimum m = minimize_scalar(
          [&](double x) {
            trial[k] = x;
            return obj(trial);
          },
          lo, hi, 1e-4);
      if (m.fx < f_cur) q[k] = m.x;
    }
    window *= 0.5;
  }
  return q;
}

struct Candidate {
  JointConfig q;
  Eigen::VectorXd psi;
  double objective;
  bool good;
  int origin;
};

}  // namespace

double CalibrationSet::min_target() const
{
  double v = std::numeric_limits<double>::infinity();
  for (const auto& p : psi) v = std::min(v, std::abs(p[step - 1]));
  return psi.empty() ? 0.0 : v;
}

double CalibrationSet::max_off_target() const
{
  double v = 0;
  for (const auto& p : psi)
    for (int t = step; t < p.size(); ++t) v = std::max(v, std::abs(p[t]));
  return v;
}

int CalibrationPlan::point_count() const
{
  int n = 0;
  for (const auto& s : sets) n += static_cast<int>(s.points.size());
  return n;
}

double DesignOptions::eps_null_for(int step) const
{
  auto it = eps_null_override.find(step);
  return it == eps_null_override.end() ? eps_null : it->second;
}

std::vector<int> determine_order(const RobotModel& model, const JointConfig& q0, const ErrorModel& em,
                                 const DesignOptions& opt)
{
  model.check();
  const int n = model.dof();
  const int m = em.size();
  if (m == 0) return {};
  const SensitivityEvaluator ev(model, q0, em, opt.eps_wire);

  std::vector<Sample> samples;
  for (int k = 1; k <= n; ++k) {
    const Halton h(k, opt.seed + static_cast<std::uint64_t>(k));
    for (int s = 0; s < opt.order_samples; ++s) {
      const Eigen::VectorXd u = h(static_cast<std::uint64_t>(s));
      JointConfig q = q0;
      for (int c = 0; c < k; ++c) {
        const auto& lim = model.joint_limits[n - k + c];
        q[n - k + c] = lim.lower + u[c] * (lim.upper - lim.lower);
      }
      Eigen::VectorXd psi;
      double len = 0;
      if (!ev.evaluate(q, psi, len) || len > opt.max_length) continue;
      samples.push_back({k, psi});
    }
  }

  std::vector<int> order;
  std::vector<int> remaining(m);
  for (int j = 0; j < m; ++j) remaining[j] = j;

  while (!remaining.empty()) {
    int pick = -1;
    for (int k = 1; k <= n && pick < 0; ++k) {
      for (int j : remaining) {
        const bool isolable = std::any_of(samples.begin(), samples.end(), [&](const Sample& s) {
          if (s.k > k || std::abs(s.psi[j]) < opt.psi_min) return false;
          for (int t : remaining)
            if (t != j && std::abs(s.psi[t]) > opt.eps_null) return false;
          return true;
        });
        if (isolable) {
          pick = j;
          break;
        }
      }
    }
    if (pick < 0) {
      std::vector<std::string> partial, stuck;
      for (int j : order) partial.push_back(em.params[j].name());
      for (int j : remaining) stuck.push_back(em.params[j].name());
      throw OrderingFailure(partial, stuck);
    }
    order.push_back(pick);
    remaining.erase(std::find(remaining.begin(), remaining.end(), pick));
  }
  return order;
}

CalibrationSet find_calibration_set(const RobotModel& model, const JointConfig& q0, int j,
                                    const ErrorModel& ordered, const DesignOptions& opt)
{
  model.check();
  if (j < 1 || j > ordered.size()) throw StructuralError("step index out of range");
  const int n = model.dof();
  const int target = j - 1;
  const double eps = opt.eps_null_for(j);
  const SensitivityEvaluator ev(model, q0, ordered, opt.eps_wire);
  const SetObjective obj(ev, target, opt.lambda, opt.max_length);

  auto is_good = [&](const Eigen::VectorXd& psi) {
    if (std::abs(psi[target]) < opt.psi_min) return false;
    for (int t = target + 1; t < psi.size(); ++t)
      if (std::abs(psi[t]) > eps) return false;
    return true;
  };
  auto make = [&](const JointConfig& q, int origin) {
    Candidate c{q, {}, 0, false, origin};
    c.objective = obj(q, &c.psi);
    double len = 0;
    c.good = ev.evaluate(q, c.psi, len) && len <= opt.max_length && is_good(c.psi);
    return c;
  };

  // free joints: one proximal to the parameter's row, widened until the search succeeds
  const int row = ordered.params[target].joint;
  std::vector<Candidate> best;
  for (int first = std::max(1, row - 1); first >= 1; --first) {
    std::vector<int> free;
    for (int k = first - 1; k < n; ++k) free.push_back(k);
    const Halton h(static_cast<int>(free.size()), opt.seed * 1000003ULL + static_cast<std::uint64_t>(j));

    std::vector<Candidate> found;
    for (int s = 0; s < opt.multistarts; ++s) {
      const Eigen::VectorXd u = h(static_cast<std::uint64_t>(s));
      JointConfig q = q0;
      for (std::size_t c = 0; c < free.size(); ++c) {
        const auto& lim = model.joint_limits[free[c]];
        q[free[c]] = lim.lower + u[c] * (lim.upper - lim.lower);
      }
      q = refine(obj, q, free, model, opt.refine_passes, 60.0);
      found.push_back(make(q, s));
    }
    std::stable_sort(found.begin(), found.end(),
                     [](const Candidate& a, const Candidate& b) { return a.objective < b.objective; });

    // distinct good seeds, then neighbours with one joint pinned at an offset
    std::vector<Candidate> chosen;
    auto distinct = [&](const JointConfig& q) {
      return std::all_of(chosen.begin(), chosen.end(),
                         [&](const Candidate& c) { return joint_distance(c.q, q) >= opt.min_separation; });
    };
    for (const auto& c : found)
      if (c.good && distinct(c.q) && static_cast<int>(chosen.size()) < opt.set_size) chosen.push_back(c);

    const std::vector<double> offsets = {5.0, -5.0, 10.0, -10.0, 15.0, -15.0};
    for (std::size_t base = 0; base < chosen.size() && static_cast<int>(chosen.size()) < opt.set_size; ++base) {
      for (double off : offsets) {
        for (int k : free) {
          if (static_cast<int>(chosen.size()) >= opt.set_size) break;
          JointConfig q = chosen[base].q;
          q[k] += off;
          if (!model.joint_limits[k].contains(q[k])) continue;
          std::vector<int> rest;
          for (int f : free)
            if (f != k) rest.push_back(f);
          q = refine(obj, q, rest, model, opt.refine_passes, 10.0);
          Candidate c = make(q, -1);
          if (c.good && distinct(c.q)) chosen.push_back(c);
        }
      }
    }

    if (static_cast<int>(chosen.size()) >= opt.set_size || first == 1) {
      best = chosen;
      for (const auto& c : found) {
        if (static_cast<int>(best.size()) >= opt.set_size) break;
        const bool far = std::all_of(best.begin(), best.end(), [&](const Candidate& b) {
          return joint_distance(b.q, c.q) >= opt.min_separation;
        });
        if (far) best.push_back(c);
      }
      break;
    }
  }

  CalibrationSet set;
  set.step = j;
  set.param = ordered.params[target].name();
  if (opt.eps_null_override.count(j)) set.eps_null = eps;
  for (const auto& c : best) {
    set.points.push_back(c.q);
    set.psi.push_back(c.psi);
    if (!c.good) set.sub_quality = true;
  }
  if (static_cast<int>(best.size()) < opt.set_size) set.sub_quality = true;
  return set;
}

CalibrationPlan design_plan(const RobotModel& model, const JointConfig& q0, const ErrorModel& em,
                            const DesignOptions& opt)
{
  const std::vector<int> order = determine_order(model, q0, em, opt);
  const ErrorModel ordered = em.reordered(order);
  CalibrationPlan plan;
  plan.anchor = q0;
  plan.order = ordered.names();
  for (int j = 1; j <= ordered.size(); ++j) plan.sets.push_back(find_calibration_set(model, q0, j, ordered, opt));
  return plan;
}

ErrorModel plan_error_model(const CalibrationPlan& plan, const ErrorModel& em)
{
  std::vector<std::string> order = plan.order;
  if (order.empty())
    for (const auto& s : plan.sets) order.push_back(s.param);
  std::vector<int> perm;
  for (const auto& name : order) {
    const int i = em.index_of(name);
    if (i < 0) throw StructuralError("plan names parameter '" + name + "' absent from the error model");
    perm.push_back(i);
  }
  // parameters the plan never mentions keep their relative order at the end
  for (int i = 0; i < em.size(); ++i)
    if (std::find(perm.begin(), perm.end(), i) == perm.end()) perm.push_back(i);
  return em.reordered(perm);
}

void fill_psi(CalibrationPlan& plan, const RobotModel& model, const ErrorModel& em, double eps_wire)
{
  const ErrorModel ordered = plan_error_model(plan, em);
  for (auto& set : plan.sets) {
    set.psi.clear();
    for (const auto& q : set.points) set.psi.push_back(sensitivity_row(model, q, plan.anchor, ordered,
                                                                       AngleUnit::Degree, eps_wire).values);
  }
}

PlanReport validate_plan(const CalibrationPlan& plan, const RobotModel& model, const ErrorModel& em,
                         const DesignOptions& opt)
{
  PlanReport rep;
  const ErrorModel ordered = plan_error_model(plan, em);
  for (const auto& name : ordered.names()) {
    const bool present = std::any_of(plan.sets.begin(), plan.sets.end(),
                                     [&](const CalibrationSet& s) { return s.param == name; });
    if (!present) rep.missing.push_back(name);
  }

  for (const auto& set : plan.sets) {
    SetReport r;
    r.step = set.step;
    r.param = set.param;
    r.points = static_cast<int>(set.points.size());
    r.eps_null = set.eps_null ? *set.eps_null : opt.eps_null_for(set.step);
    const int target = ordered.index_of(set.param);
    if (target < 0) {
      r.problems.push_back("unknown parameter " + set.param);
      rep.sets.push_back(r);
      continue;
    }
    r.min_target = std::numeric_limits<double>::infinity();
    r.min_length = std::numeric_limits<double>::infinity();
    r.min_separation = std::numeric_limits<double>::infinity();
    double sumsq = 0;
    for (std::size_t i = 0; i < set.points.size(); ++i) {
      const JointConfig& q = set.points[i];
      if (!model.within_limits(q)) r.problems.push_back("point " + std::to_string(i + 1) + " outside joint limits");
      const Point3 nu = tcp_position(model, q) - tcp_position(model, plan.anchor);
      const double len = nu.norm();
      r.min_length = std::min(r.min_length, len);
      r.max_length = std::max(r.max_length, len);
      if (len < opt.eps_wire) {
        r.problems.push_back("point " + std::to_string(i + 1) + " wire length below threshold");
        continue;
      }
      if (len > opt.max_length)
        r.problems.push_back("point " + std::to_string(i + 1) + " exceeds encoder range");
      const Eigen::VectorXd psi = sensitivity_row(model, q, plan.anchor, ordered, AngleUnit::Degree,
                                                  opt.eps_wire).values;
      r.min_target = std::min(r.min_target, std::abs(psi[target]));
      sumsq += psi[target] * psi[target];
      for (int t = target + 1; t < psi.size(); ++t) r.max_off_target = std::max(r.max_off_target, std::abs(psi[t]));
      for (std::size_t k = 0; k < i; ++k)
        r.min_separation = std::min(r.min_separation, joint_distance(q, set.points[k]));
    }
    if (set.points.empty()) {
      r.min_target = 0;
      r.min_length = 0;
      r.problems.push_back("empty set");
    }
    r.rms_target = set.points.empty() ? 0.0 : std::sqrt(sumsq / static_cast<double>(set.points.size()));
    if (r.points < 5) r.problems.push_back("fewer than 5 points");
    if (r.rms_target < opt.psi_min) r.problems.push_back("target sensitivity below psi_min");
    if (r.max_off_target > r.eps_null) r.problems.push_back("off-target sensitivity above eps_null");
    if (set.points.size() > 1 && r.min_separation < opt.min_separation)
      r.problems.push_back("min-separation violation");
    r.pass = r.problems.empty();
    rep.sets.push_back(r);
  }
  rep.pass = rep.missing.empty() && !rep.sets.empty() &&
             std::all_of(rep.sets.begin(), rep.sets.end(), [](const SetReport& s) { return s.pass; });
  return rep;
}

}  // namespace wirecal
