#include "wirecal/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "wirecal/errors.hpp"

namespace wirecal::io {

using nlohmann::json;

namespace {

std::string fmt(double v)
{
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double to_double(const std::string& s, const std::string& where)
{
  double v = 0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r')) --e;
  if (b < e && *b == '+') ++b;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e || b == e)
    throw ParseError(where + ": '" + s + "' is not a number");
  return v;
}

json parse_json(const std::string& text, const std::string& origin)
{
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

const json& field(const json& j, const char* key, const std::string& where)
{
  if (!j.is_object() || !j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  return j.at(key);
}

double number(const json& j, const std::string& where)
{
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(where + ": not finite");
  return v;
}

JointConfig joints(const json& j, const std::string& where)
{
  if (!j.is_array()) throw ParseError(where + ": expected an array of angles");
  JointConfig q(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) q[i] = number(j[i], where + "[" + std::to_string(i) + "]");
  return q;
}

json to_json(const JointConfig& q)
{
  json a = json::array();
  for (int i = 0; i < q.size(); ++i) a.push_back(q[i]);
  return a;
}

json to_json(const Eigen::VectorXd& v, int) { return to_json(JointConfig(v)); }

std::vector<std::string> split(const std::string& line, char sep)
{
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s)
{
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

}  // namespace

std::string read_text(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ParseError(p.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& p, const std::string& content)
{
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(tmp.string() + ": cannot write");
    out << content;
    out.flush();
    if (!out) throw Error(tmp.string() + ": write failed");
  }
  fs::rename(tmp, p);
}

std::string sha256_hex(const std::string& bytes)
{
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  std::ostringstream ss;
  for (unsigned int i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return ss.str();
}

std::string sha256_file(const fs::path& p) { return sha256_hex(read_text(p)); }

RobotModel parse_robot_model(const std::string& text, const std::string& origin)
{
  const json j = parse_json(text, origin);
  RobotModel m;
  if (j.contains("name")) m.name = j.at("name").get<std::string>();
  const json& rows = field(j, "rows", origin);
  if (!rows.is_array()) throw ParseError(origin + ": 'rows' must be an array");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string w = origin + ": rows[" + std::to_string(i) + "]";
    DHRow r;
    r.alpha_prev = number(field(rows[i], "alpha_deg", w), w + ".alpha_deg");
    r.a_prev = number(field(rows[i], "a_mm", w), w + ".a_mm");
    r.theta_offset = rows[i].contains("theta_offset_deg") ? number(rows[i]["theta_offset_deg"], w) : 0.0;
    r.d = number(field(rows[i], "d_mm", w), w + ".d_mm");
    m.rows.push_back(r);
  }
  if (j.contains("joint_limits_deg")) {
    const json& lim = j.at("joint_limits_deg");
    if (!lim.is_array()) throw ParseError(origin + ": 'joint_limits_deg' must be an array");
    for (std::size_t i = 0; i < lim.size(); ++i) {
      const std::string w = origin + ": joint_limits_deg[" + std::to_string(i) + "]";
      if (!lim[i].is_array() || lim[i].size() != 2) throw ParseError(w + ": expected [lower, upper]");
      m.joint_limits.push_back({number(lim[i][0], w), number(lim[i][1], w)});
    }
  } else {
    m.joint_limits.assign(m.rows.size(), JointInterval{});
  }
  if (j.contains("tool_mm")) {
    const JointConfig t = joints(j.at("tool_mm"), origin + ": tool_mm");
    if (t.size() != 3) throw ParseError(origin + ": tool_mm needs 3 entries");
    m.tool = t;
  }
  try {
    m.check();
  } catch (const Error& e) {
    throw ParseError(origin + ": " + e.what());
  }
  return m;
}

RobotModel load_robot_model(const fs::path& p) { return parse_robot_model(read_text(p), p.string()); }

std::string robot_model_json(const RobotModel& m)
{
  json j;
  j["name"] = m.name;
  j["rows"] = json::array();
  for (const auto& r : m.rows)
    j["rows"].push_back(
        {{"alpha_deg", r.alpha_prev}, {"a_mm", r.a_prev}, {"theta_offset_deg", r.theta_offset}, {"d_mm", r.d}});
  j["joint_limits_deg"] = json::array();
  for (const auto& l : m.joint_limits) j["joint_limits_deg"].push_back({l.lower, l.upper});
  j["tool_mm"] = {m.tool.x(), m.tool.y(), m.tool.z()};
  return j.dump(2) + "\n";
}

ErrorModel parse_error_model(const std::string& text, const std::string& origin)
{
  const json j = parse_json(text, origin);
  const json* arr = &j;
  ErrorModel em;
  if (j.is_object()) {
    arr = &field(j, "params", origin);
    if (j.contains("protected_twist_rows"))
      for (const auto& r : j.at("protected_twist_rows")) em.protected_twist_rows.push_back(r.get<int>());
  }
  if (!arr->is_array()) throw ParseError(origin + ": expected an array of error parameters");
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const json& e = (*arr)[i];
    const std::string w = origin + ": [" + std::to_string(i) + "]";
    ErrorParam p;
    try {
      p.kind = error_kind_from_string(field(e, "kind", w).get<std::string>());
    } catch (const StructuralError& ex) {
      throw ParseError(w + ".kind: " + ex.what());
    }
    const json& jj = field(e, "joint", w);
    if (!jj.is_number_integer()) throw ParseError(w + ".joint: expected an integer");
    p.joint = jj.get<int>();
    p.bound = number(field(e, "bound", w), w + ".bound");
    if (!(p.bound > 0)) throw ParseError(w + ".bound: must be positive");
    if (em.index_of(p.name()) >= 0) throw ParseError(w + ": duplicate parameter " + p.name());
    em.params.push_back(p);
  }
  return em;
}

ErrorModel load_error_model(const fs::path& p) { return parse_error_model(read_text(p), p.string()); }

std::string error_model_json(const ErrorModel& m)
{
  json params = json::array();
  for (const auto& p : m.params) params.push_back({{"kind", to_string(p.kind)}, {"joint", p.joint}, {"bound", p.bound}});
  json j;
  j["params"] = params;
  j["protected_twist_rows"] = m.protected_twist_rows;
  return j.dump(2) + "\n";
}

ErrorVector parse_error_values(const std::string& text, const ErrorModel& em, const std::string& origin)
{
  json j = parse_json(text, origin);
  if (j.is_object() && j.contains("values")) j = j.at("values");
  if (!j.is_object()) throw ParseError(origin + ": expected an object of parameter values");
  ErrorVector ev = ErrorVector::zero(em);
  for (auto it = j.begin(); it != j.end(); ++it) {
    const int k = em.index_of(it.key());
    if (k < 0) throw ParseError(origin + ": '" + it.key() + "' is not in the error model");
    ev.values[k] = number(it.value(), origin + ": " + it.key());
  }
  return ev;
}

ErrorVector load_error_values(const fs::path& p, const ErrorModel& em)
{
  return parse_error_values(read_text(p), em, p.string());
}

std::string error_values_json(const ErrorVector& ev)
{
  json v = json::object();
  for (int k = 0; k < ev.model.size(); ++k) v[ev.model.params[k].name()] = ev.values[k];
  return json{{"values", v}}.dump(2) + "\n";
}

CalibrationPlan parse_plan(const std::string& text, const std::string& origin)
{
  const json j = parse_json(text, origin);
  CalibrationPlan plan;
  plan.anchor = joints(field(j, "anchor_deg", origin), origin + ": anchor_deg");
  if (j.contains("order"))
    for (const auto& o : j.at("order")) plan.order.push_back(o.get<std::string>());
  const json& sets = field(j, "sets", origin);
  if (!sets.is_array()) throw ParseError(origin + ": 'sets' must be an array");
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const std::string w = origin + ": sets[" + std::to_string(i) + "]";
    const json& s = sets[i];
    CalibrationSet cs;
    const json& step = field(s, "step", w);
    if (!step.is_number_integer()) throw ParseError(w + ".step: expected an integer");
    cs.step = step.get<int>();
    cs.param = field(s, "param", w).get<std::string>();
    const json& pts = field(s, "points_deg", w);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      cs.points.push_back(joints(pts[k], w + ".points_deg[" + std::to_string(k) + "]"));
      if (cs.points.back().size() != plan.anchor.size())
        throw ParseError(w + ".points_deg[" + std::to_string(k) + "]: wrong number of joints");
    }
    if (s.contains("psi"))
      for (std::size_t k = 0; k < s.at("psi").size(); ++k)
        cs.psi.push_back(joints(s.at("psi")[k], w + ".psi[" + std::to_string(k) + "]"));
    if (s.contains("eps_null")) cs.eps_null = number(s.at("eps_null"), w + ".eps_null");
    if (s.contains("sub_quality")) cs.sub_quality = s.at("sub_quality").get<bool>();
    plan.sets.push_back(std::move(cs));
  }
  return plan;
}

CalibrationPlan load_plan(const fs::path& p) { return parse_plan(read_text(p), p.string()); }

std::string plan_json(const CalibrationPlan& plan)
{
  json j;
  j["anchor_deg"] = to_json(plan.anchor);
  j["order"] = plan.order;
  j["sets"] = json::array();
  for (const auto& s : plan.sets) {
    json js;
    js["step"] = s.step;
    js["param"] = s.param;
    if (s.eps_null) js["eps_null"] = *s.eps_null;
    if (s.sub_quality) js["sub_quality"] = true;
    js["points_deg"] = json::array();
    for (const auto& q : s.points) js["points_deg"].push_back(to_json(q));
    js["psi"] = json::array();
    for (const auto& p : s.psi) js["psi"].push_back(to_json(p, 0));
    j["sets"].push_back(js);
  }
  return j.dump(2) + "\n";
}

MeasurementLog parse_log_csv(const std::string& text, const std::string& origin)
{
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  MeasurementLog log;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> cells = split(line, ',');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (header.empty()) {
      header = cells;
      for (auto& h : header) h = trim(h);
      if (header.size() < 4 || header[0] != "step" || header[1] != "param" || header.back() != "measured_mm")
        throw ParseError(where + ": header must be step,param,theta1..thetaN,measured_mm");
      for (std::size_t k = 2; k + 1 < header.size(); ++k)
        if (header[k] != "theta" + std::to_string(k - 1))
          throw ParseError(where + ": column " + std::to_string(k + 1) + " should be theta" + std::to_string(k - 1));
      continue;
    }
    if (cells.size() != header.size())
      throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                       std::to_string(cells.size()));
    Measurement m;
    try {
      std::size_t used = 0;
      m.step = std::stoi(cells[0], &used);
      if (trim(cells[0]).size() != used) throw std::invalid_argument("step");
    } catch (const std::exception&) {
      throw ParseError(where + ": field 'step' is not an integer");
    }
    m.param = trim(cells[1]);
    const int n = static_cast<int>(header.size()) - 3;
    m.point.resize(n);
    for (int k = 0; k < n; ++k) m.point[k] = to_double(cells[k + 2], where + ": field '" + header[k + 2] + "'");
    m.measured = to_double(cells.back(), where + ": field 'measured_mm'");
    m.true_distance = std::nan("");
    log.measurements.push_back(std::move(m));
  }
  if (header.empty()) throw ParseError(origin + ": empty log");
  return log;
}

MeasurementLog load_log_csv(const fs::path& p) { return parse_log_csv(read_text(p), p.string()); }

std::string log_csv(const MeasurementLog& log)
{
  const int n = log.measurements.empty() ? 6 : static_cast<int>(log.measurements.front().point.size());
  std::ostringstream out;
  out << "step,param";
  for (int k = 1; k <= n; ++k) out << ",theta" << k;
  out << ",measured_mm\n";
  for (const auto& m : log.measurements) {
    out << m.step << "," << m.param;
    for (int k = 0; k < m.point.size(); ++k) out << "," << fmt(m.point[k]);
    out << "," << fmt(m.measured) << "\n";
  }
  return out.str();
}

std::string psi_table_csv(const CalibrationPlan& plan, const ErrorModel& ordered)
{
  std::ostringstream out;
  const int n = static_cast<int>(plan.anchor.size());
  out << "step,param";
  for (int k = 1; k <= n; ++k) out << ",theta" << k;
  for (const auto& name : ordered.names()) out << ",psi_" << name;
  out << "\n";
  for (const auto& s : plan.sets) {
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      out << s.step << "," << s.param;
      for (int k = 0; k < s.points[i].size(); ++k) out << "," << fmt(s.points[i][k]);
      for (int k = 0; k < s.psi[i].size(); ++k) {
        std::ostringstream v;
        v << std::fixed << std::setprecision(4) << s.psi[i][k];
        out << "," << (v.str() == "-0.0000" ? "0.0000" : v.str());
      }
      out << "\n";
    }
  }
  return out.str();
}

std::string histogram_csv(const std::vector<double>& values, double bin_width)
{
  std::map<long, int> bins;
  for (double v : values) ++bins[static_cast<long>(std::floor(std::abs(v) / bin_width))];
  std::ostringstream out;
  out << "bin_low_mm,bin_high_mm,count\n";
  const long last = bins.empty() ? -1 : bins.rbegin()->first;
  for (long b = 0; b <= last; ++b) {
    auto it = bins.find(b);
    out << b * bin_width << "," << (b + 1) * bin_width << "," << (it == bins.end() ? 0 : it->second)
        << "\n";
  }
  return out.str();
}

}  // namespace wirecal::io
