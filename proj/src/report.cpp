#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "mlreg/serialize.hpp"

namespace mlreg {

namespace {

json point(const Point& p, int dim) { return dim == 2 ? json{p[0], p[1]} : json(p[0]); }

json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream o;
  o << std::setprecision(17) << v;
  return o.str();
}

int verdict_code(const std::string& v) { return v == "regular" ? 0 : v == "singular" ? 1 : 2; }

}  // namespace

json to_json(const InequalityCertificate& c) {
  json j{{"name", c.name}, {"params", to_json(c.params)}, {"margin", num(c.margin)}, {"holds", c.holds}};
  j["range"] = json::object();
  for (const auto& [k, v] : c.range) j["range"][k] = v;
  j["constants"] = json::object();
  for (const auto& [k, v] : c.constants) j["constants"][k] = num(v);
  if (!c.notes.empty()) j["notes"] = c.notes;
  return j;
}

json to_json(const Region& r) {
  return {{"dim", r.dim}, {"center", point(r.center, r.dim)}, {"r", r.r}};
}

json to_json(const CutoffFamily& f) {
  json j{{"report", "cutoff_family"}, {"region", to_json(f.region)}, {"params", to_json(f.params)},
         {"mode", f.mode}, {"n_list", f.n_list}};
  j["members"] = json::array();
  for (const auto& m : f.members)
    j["members"].push_back({{"n", m.n},
                            {"m", m.m},
                            {"k", m.k},
                            {"R", m.profile.R},
                            {"bump_radius", m.profile.a},
                            {"box_width", m.profile.w},
                            {"plateau", m.profile.plateau()},
                            {"support", m.profile.support()},
                            {"amplitude", m.amplitude}});
  return j;
}

json to_json(const AdmissibilityCertificate& c) {
  json j{{"report", "cutoff_verify"}, {"beta_max", c.beta_max}, {"invariants_ok", c.invariants_ok},
         {"c_beta", nums(c.c_beta)}, {"stability", nums(c.stability)}, {"stability_limit", c.stability_limit},
         {"violations", c.violations}, {"holds", c.holds}};
  if (!c.invariant_failure.empty()) j["invariant_failure"] = c.invariant_failure;
  j["sups"] = json::array();
  for (const auto& s : c.sups) j["sups"].push_back(nums(s));
  j["c_per_n"] = json::array();
  for (const auto& s : c.c_per_n) j["c_per_n"].push_back(nums(s));
  return j;
}

json to_json(const FourierBoundReport& r) {
  return {{"alpha_order", r.alpha_order}, {"beta_order", r.beta_order}, {"band", {r.band_lo, r.band_hi}},
          {"nyquist", r.nyquist},         {"aliasing", r.aliasing},     {"n", r.n},
          {"a_predicted", nums(r.a_predicted)}, {"a_measured", nums(r.a_measured)},
          {"margin", nums(r.margin)},     {"holds", r.holds}};
}

json to_json(const Partition& p) {
  json j{{"target", to_json(p.target)}, {"n", p.n}, {"m", p.m}, {"k", p.k}, {"delta", p.delta},
         {"members", p.members.size()}, {"mollifier_mass", num(p.mollifier_mass)},
         {"mollifier_mass_grid", num(p.mollifier_mass_grid)}, {"residual", num(p.residual)}};
  j["cover"] = json::array();
  for (const auto& r : p.cover) j["cover"].push_back(to_json(r));
  j["member_c"] = json::array();
  for (const auto& c : p.member_c) j["member_c"].push_back(nums(c));
  return j;
}

std::string cutoff_csv(const CutoffFamily& f, const SampledSignal& like) {
  if (like.dim != 1) throw ValidationError("cutoff CSV is one-dimensional");
  std::vector<SampledSignal> cols;
  for (std::size_t i = 0; i < f.members.size(); ++i) cols.push_back(sample_cutoff(f, i, like));
  std::ostringstream o;
  o << "x";
  for (auto n : f.n_list) o << ",chi_" << n;
  o << "\n";
  for (std::size_t i = 0; i < like.size(); ++i) {
    o << fmt(like.coord(0, i));
    for (const auto& c : cols) o << "," << fmt(c.samples[i].real());
    o << "\n";
  }
  return o.str();
}

json to_json(const Caps& c) { return {{"A_max", c.a_max}, {"h_max", c.h_max}}; }

json to_json(const FeasibilityCert& c) {
  return {{"tau", c.tau},           {"sigma", c.sigma},         {"log_a", num(c.log_a)},
          {"log_h", num(c.log_h)},  {"residual", num(c.residual)}, {"feasible", c.feasible}};
}

json to_json(const EnvelopeFit& f) {
  json j{{"report", "envelope_fit"}, {"sigma", f.sigma},        {"tau_hat", num(f.tau_hat)},
         {"log_h", num(f.log_h)},    {"log_a", num(f.log_a)},   {"residual", num(f.residual)},
         {"mode", f.mode},           {"p_range", {f.p_lo, f.p_hi}}, {"caps", to_json(f.caps)},
         {"tolerance", f.tolerance}, {"bracket_hi", f.bracket_hi}, {"feasible", f.feasible},
         {"verdict", f.verdict}};
  if (!f.h_grid.empty()) j["h_grid"] = nums(f.h_grid);
  if (f.smallest_h) j["smallest_h"] = *f.smallest_h;
  return j;
}

json to_json(const EmbeddingReport& r) {
  json j{{"report", "embedding"},     {"sigma", r.sigma},
         {"tau1", r.tau1},            {"tau2", r.tau2},
         {"cert1", to_json(r.cert1)}, {"substitution_checked", r.substitution_checked},
         {"substitution_violation", num(r.substitution_violation)},
         {"violations", r.violations}, {"holds", r.holds}};
  j["sigma_transfers"] = json::array();
  for (const auto& t : r.sigma_transfers)
    j["sigma_transfers"].push_back({{"sigma2", t.sigma2}, {"tau2", t.tau2}, {"feasible", t.feasible}});
  return j;
}

json to_json(const AlgebraReport& r) {
  return {{"report", "algebra"}, {"sigma", r.sigma}, {"tau", r.tau},       {"h", r.h},
          {"c_h", r.c_h},        {"lhs", num(r.lhs)}, {"rhs", num(r.rhs)}, {"product_sups", nums(r.product_sups)},
          {"holds", r.holds}};
}

json to_json(const OperatorMapping& m) {
  return {{"report", "operator_mapping"}, {"tau_bound", m.tau_bound}, {"tolerance", m.tolerance},
          {"fit_in", to_json(m.fit_in)},  {"fit_out", to_json(m.fit_out)}, {"order", m.order},
          {"holds", m.holds}};
}

std::string feasibility_csv(const std::vector<FeasibilityCert>& grid) {
  std::ostringstream o;
  o << "tau,sigma,feasible,log_a,log_h,residual\n";
  for (const auto& c : grid)
    o << fmt(c.tau) << "," << fmt(c.sigma) << "," << int(c.feasible) << "," << fmt(c.log_a) << "," << fmt(c.log_h)
      << "," << fmt(c.residual) << "\n";
  return o.str();
}

json to_json(const GridSpec& g) {
  json j{{"dim", g.dim}, {"n", json::array()}, {"lo", json::array()}, {"hi", json::array()}};
  for (int a = 0; a < g.dim; ++a) {
    j["n"].push_back(g.n[a]);
    j["lo"].push_back(g.lo[a]);
    j["hi"].push_back(g.hi[a]);
  }
  return j;
}

json to_json(const WfConfig& c) {
  json j{{"r", c.r},
         {"n_list", c.n_list},
         {"band", c.band ? json{c.band->first, c.band->second} : json(nullptr)},
         {"caps", to_json(c.caps)},
         {"slope_tol", c.slope_tol},
         {"window_margin", c.window_margin},
         {"majority", c.majority},
         {"pw_order", c.pw_order},
         {"floor_rel", c.floor_rel},
         {"noise_factor", c.noise_factor},
         {"fit_from", c.fit_from},
         {"m_max", c.m_max},
         {"n_directions", c.n_directions},
         {"half_angle", c.half_angle},
         {"ss_guard", c.ss_guard},
         {"ss_radii", c.ss_radii},
         {"ss_p_max", c.ss_p_max}};
  return j;
}

json to_json(const ConeSpec& c) {
  json j{{"direction", point(c.direction, c.dim)}, {"band", {c.band_lo, c.band_hi}}};
  if (c.dim == 2) j["half_angle"] = c.half_angle;
  return j;
}

json to_json(const DecayFit& f) {
  json j{{"verdict", f.verdict},
         {"reason", f.reason},
         {"n_list", f.n_list},
         {"index", nums(f.index)},
         {"usable", f.usable},
         {"k", f.k},
         {"slope_cap", f.slope_cap},
         {"c_N", nums(f.c_n)},
         {"s_N", nums(f.s_n)},
         {"deficit", nums(f.deficit)},
         {"log_A", num(f.log_a)},
         {"log_h", num(f.log_h)},
         {"feasible", f.feasible},
         {"fact_exp", f.form.fact_exp},
         {"n_scale", f.form.n_scale},
         {"pw_bound", num(f.pw_bound)},
         {"pw_ok", f.pw_ok}};
  return j;
}

json to_json(const WfReport& r) {
  json cfg = to_json(r.config);
  // the band actually used, which defaults from the grid
  cfg["band"] = r.entries.empty() ? cfg["band"] : json{r.entries[0].fit.cone.band_lo, r.entries[0].fit.cone.band_hi};
  cfg["grid"] = to_json(r.grid);
  cfg["params_grid"] = json::array();
  for (const auto& p : r.params_list) cfg["params_grid"].push_back(to_json(p));
  cfg["directions"] = json::array();
  for (const auto& d : r.directions) cfg["directions"].push_back(point(d, r.dim));
  json j{{"report", "wf_scan"}, {"tool_version", tool_version}, {"config", cfg}};
  j["entries"] = json::array();
  for (const auto& e : r.entries) {
    json x = to_json(e.fit);
    x["x"] = point(e.x, r.dim);
    x["dir"] = point(e.direction, r.dim);
    x["tau"] = e.params.tau;
    x["sigma"] = e.params.sigma;
    x["tau_tilde"] = e.params.tau_tilde ? num(*e.params.tau_tilde) : json(nullptr);
    j["entries"].push_back(std::move(x));
  }
  return j;
}

std::string wf_csv(const WfReport& r) {
  std::ostringstream o;
  o << (r.dim == 2 ? "x,y," : "x,") << "dir_angle,tau,sigma,verdict_code,slope_deficit\n";
  for (const auto& e : r.entries) {
    double worst = -INFINITY;
    for (std::size_t i = 0; i < e.fit.deficit.size(); ++i)
      if (e.fit.usable[i]) worst = std::max(worst, e.fit.deficit[i]);
    o << fmt(e.x[0]) << ",";
    if (r.dim == 2) o << fmt(e.x[1]) << ",";
    o << fmt(std::atan2(e.direction[1], e.direction[0])) << "," << fmt(e.params.tau) << "," << fmt(e.params.sigma)
      << "," << verdict_code(e.fit.verdict) << "," << fmt(worst) << "\n";
  }
  return o.str();
}

json to_json(const SingsuppReport& r) {
  const int dim = r.dim;
  json j{{"report", "singsupp"}, {"tool_version", tool_version}, {"mode", r.mode}};
  j["params_grid"] = json::array();
  for (const auto& p : r.params_list) j["params_grid"].push_back(to_json(p));
  j["points"] = json::array();
  for (const auto& p : r.points) {
    json q{{"x", point(p.x, dim)}, {"singular", p.singular}, {"inconclusive", p.inconclusive}, {"reason", p.reason}};
    q["sups"] = json::array();
    for (const auto& s : p.sups) q["sups"].push_back(to_json(s));
    j["points"].push_back(std::move(q));
  }
  j["detected"] = json::array();
  for (const auto& p : r.detected) j["detected"].push_back(point(p, dim));
  j["borderline"] = json::object();
  for (const auto& [name, pts] : r.borderline) {
    j["borderline"][name] = json::array();
    for (const auto& p : pts) j["borderline"][name].push_back(point(p, dim));
  }
  return j;
}

json to_json(const ProjectionReport& r) {
  json j{{"report", "projection"}, {"tool_version", tool_version}, {"holds", r.holds}};
  j["x_grid"] = json::array();
  for (const auto& x : r.x_grid) j["x_grid"].push_back(point(x, r.dim));
  j["pairs"] = json::array();
  for (const auto& p : r.pairs) {
    json q{{"wf", p.wf_name}, {"singsupp", p.ss_name}, {"symmetric_difference", p.symmetric_difference},
           {"holds", p.holds}};
    q["projected"] = json::array();
    for (const auto& x : p.projected) q["projected"].push_back(point(x, r.dim));
    q["singsupp_points"] = json::array();
    for (const auto& x : p.singsupp) q["singsupp_points"].push_back(point(x, r.dim));
    j["pairs"].push_back(std::move(q));
  }
  return j;
}

json to_json(const RoundtripReport& r) {
  json j{{"report", "roundtrip"}, {"tool_version", tool_version}, {"region", to_json(r.region)},
         {"inconclusive", r.inconclusive}, {"disagreements", r.disagreements}};
  j["entries"] = json::array();
  for (const auto& e : r.entries)
    j["entries"].push_back({{"tau", e.params.tau},
                            {"sigma", e.params.sigma},
                            {"decay_regular", e.decay_regular},
                            {"member", e.member},
                            {"decay_tilde_regular", e.decay_tilde_regular},
                            {"a_pass", e.a_pass},
                            {"b_pass", e.b_pass},
                            {"agree", e.agree()},
                            {"inconclusive", e.inconclusive},
                            {"findings", e.findings}});
  return j;
}

json to_json(const PseudolocalReport& r) {
  json op{{"kind", r.op.kind}};
  if (r.op.kind == "first_order") op["a"] = to_json(r.op.a);
  if (r.op.kind == "first_order" || r.op.kind == "multiply") op["b"] = to_json(r.op.b);
  return {{"report", "pseudolocal"},
          {"tool_version", tool_version},
          {"operator", op},
          {"violations", r.violations},
          {"excluded_inconclusive", r.excluded_inconclusive},
          {"holds", r.holds},
          {"before", to_json(r.before)},
          {"after", to_json(r.after)}};
}

namespace {

std::string pass(bool b) { return b ? "PASS" : "FAIL"; }

std::string list_points(const json& pts) {
  std::string s = "{";
  for (std::size_t i = 0; i < pts.size(); ++i) s += (i ? " " : "") + pts[i].dump();
  return s + "}";
}

void summarize_one(const std::string& src, const json& j, std::vector<SummaryRow>& rows) {
  const std::string kind = j.is_object() ? j.value("report", "") : "";
  SummaryRow row{src, kind.empty() ? "unknown" : kind, "INFO", ""};
  std::ostringstream d;
  if (kind == "wf_scan") {
    int reg = 0, sing = 0, inc = 0;
    std::vector<std::string> xs;
    for (const auto& e : j.at("entries")) {
      const auto v = e.at("verdict").get<std::string>();
      (v == "regular" ? reg : v == "singular" ? sing : inc) += 1;
      if (v == "singular") {
        const auto x = e.at("x").dump();
        if (std::find(xs.begin(), xs.end(), x) == xs.end()) xs.push_back(x);
      }
    }
    d << j.at("entries").size() << " entries: " << reg << " regular, " << sing << " singular, " << inc
      << " inconclusive; singular at {";
    for (std::size_t i = 0; i < xs.size(); ++i) d << (i ? " " : "") << xs[i];
    d << "}";
  } else if (kind == "singsupp") {
    if (j.at("mode") == "fixed") {
      d << "detected " << list_points(j.at("detected"));
    } else {
      bool first = true;
      for (const auto& [name, pts] : j.at("borderline").items()) {
        d << (first ? "" : "; ") << name << " " << list_points(pts);
        first = false;
      }
    }
  } else if (kind == "projection") {
    row.status = pass(j.at("holds").get<bool>());
    int worst = 0;
    for (const auto& p : j.at("pairs")) worst = std::max(worst, p.at("symmetric_difference").get<int>());
    d << "max symmetric difference " << worst;
  } else if (kind == "roundtrip") {
    row.status = pass(j.at("disagreements").get<int>() == 0);
    d << j.at("entries").size() << " params, " << j.at("disagreements").get<int>() << " disagreements, "
      << j.at("inconclusive").get<int>() << " inconclusive";
  } else if (kind == "pseudolocal") {
    row.status = pass(j.at("holds").get<bool>());
    d << j.at("operator").at("kind").get<std::string>() << ": " << j.at("violations").size() << " violations, "
      << j.at("excluded_inconclusive").get<int>() << " excluded";
  } else if (kind == "envelope_fit") {
    d << j.at("verdict").get<std::string>() << ", tau_hat " << j.at("tau_hat").dump() << " at sigma "
      << j.at("sigma").dump();
  } else if (kind == "certificates") {
    bool all = true;
    int n = 0;
    for (const auto& c : j.at("certificates")) {
      all = all && c.at("holds").get<bool>();
      ++n;
    }
    row.status = pass(all);
    d << n << " certificates";
  } else if (kind == "cutoff_verify") {
    row.status = pass(j.at("holds").get<bool>());
    d << j.at("violations").size() << " violations";
  } else if (kind == "cutoff_family") {
    d << j.at("members").size() << " members";
  } else if (kind == "acceptance") {
    for (const auto& c : j.at("criteria"))
      rows.push_back({src, "acceptance #" + c.at("id").dump(), pass(c.at("pass").get<bool>()),
                      c.at("name").get<std::string>() + ": " + c.value("detail", "")});
    return;
  } else {
    d << "unrecognized report";
  }
  row.detail = d.str();
  rows.push_back(row);
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<std::pair<std::string, json>>& reports) {
  std::vector<SummaryRow> rows;
  for (const auto& [src, j] : reports) {
    try {
      summarize_one(src, j, rows);
    } catch (const json::exception& e) {
      throw ValidationError(src + ": malformed report (" + e.what() + ")");
    }
  }
  return rows;
}

std::string format_summary(const std::vector<SummaryRow>& rows) {
  std::size_t w0 = 6, w1 = 4;
  for (const auto& r : rows) {
    w0 = std::max(w0, r.source.size());
    w1 = std::max(w1, r.kind.size());
  }
  std::ostringstream o;
  o << std::left << std::setw(int(w0)) << "source" << "  " << std::setw(int(w1)) << "kind" << "  status  detail\n";
  int passed = 0, failed = 0;
  for (const auto& r : rows) {
    o << std::setw(int(w0)) << r.source << "  " << std::setw(int(w1)) << r.kind << "  " << std::setw(6) << r.status
      << "  " << r.detail << "\n";
    passed += r.status == "PASS";
    failed += r.status == "FAIL";
  }
  o << passed << " passed, " << failed << " failed, " << rows.size() - passed - failed << " informational\n";
  return o.str();
}

}  // namespace mlreg
