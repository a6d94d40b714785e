// mlreg command-line front end.
#include <CLI11.hpp>
#include <openssl/sha.h>

#include <chrono>
#include <cstdlib>
#include <deque>
#include <memory>
#include <tuple>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "mlreg/serialize.hpp"

using namespace mlreg;

namespace {

enum Exit { ok = 0, invalid = 1, findings = 2, io_failure = 3 };

json default_config() {
  json detector = to_json(WfConfig{});
  detector.erase("caps");
  return {{"tau", {0.25, 0.5, 1.0, 2.0, 4.0}},
          {"sigma", {1.125, 1.5, 2.0, 3.0}},
          {"caps", to_json(Caps{})},
          {"detector", detector},
          {"x_grid", {{"lo", -3.0}, {"hi", 3.0}, {"step", 0.5}}},
          {"y_grid", nullptr},
          {"points", nullptr},
          {"region", {-0.5, 0.5}},
          {"operator", {{"kind", "dx"}, {"a", {{"kind", "gaussian"}}}, {"b", {{"kind", "gaussian"}}}}},
          {"singsupp_mode", "grid-borderline"},
          {"seq", {{"p_max", 200}, {"q_max", 100}}},
          {"cutoff", {{"center", {0.0}}, {"r", 1.0}, {"n_list", {4, 16, 64, 256}}, {"beta_max", 4}, {"mode", "tensor"},
                      {"m_max", 16}}},
          {"classify",
           {{"sigma", 2.0}, {"p_max", 8}, {"method", "spectral"}, {"mode", "roumieu"}, {"refuse_past_cap", false}}},
          {"synth", {{"n", {4096}}, {"lo", {-4.0}}, {"hi", {4.0}}, {"seed", 12345}, {"amplitude", 1.0}}}};
}

// Overlays `over` onto `base`; keys absent from the defaults are rejected.
void merge(json& base, const json& over, const std::string& path) {
  if (!over.is_object()) throw ValidationError("config " + (path.empty() ? "root" : path) + ": expected an object");
  for (const auto& [k, v] : over.items()) {
    const std::string name = path.empty() ? k : path + "." + k;
    if (!base.contains(k)) throw ValidationError("config: unknown field '" + name + "'");
    // operator coefficients are free-form synth specs
    if (base[k].is_object() && v.is_object() && name != "operator.a" && name != "operator.b")
      merge(base[k], v, name);
    else
      base[k] = v;
  }
}

const json& at_path(const json& root, const std::string& dotted) {
  const json* j = &root;
  std::istringstream in(dotted);
  for (std::string part; std::getline(in, part, '.');) j = &j->at(part);
  return *j;
}

template <class T>
T field(const json& cfg, const std::string& dotted) {
  const json* j = nullptr;
  try {
    j = &at_path(cfg, dotted);
  } catch (const json::exception&) {
    throw ValidationError("config field '" + dotted + "' is missing");
  }
  try {
    return j->get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config field '" + dotted + "' has the wrong type");
  }
}

void set_path(json& root, const std::string& dotted, json value) {
  json* j = &root;
  std::istringstream in(dotted);
  for (std::string part; std::getline(in, part, '.');) j = &(*j)[part];
  *j = std::move(value);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path);
  return ss.str();
}

std::string sha256_hex(const std::string& data) {
  unsigned char d[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), d);
  std::ostringstream o;
  for (unsigned char c : d) o << std::hex << std::setw(2) << std::setfill('0') << int(c);
  return o.str();
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int env_threads() {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const char* s = std::getenv("MLREG_THREADS");
  if (!s || !*s) return int(hw);
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (*end || v < 1) throw ValidationError("MLREG_THREADS must be a positive integer");
  return int(v);
}

// Parsed once per run; every report carries a copy.
struct Run {
  std::string command;
  json config = default_config();
  json inputs = json::array();
  bool deterministic = false;
  std::string out, csv;

  void add_input(const std::string& path, const std::string& bytes) {
    inputs.push_back({{"path", path}, {"sha256", sha256_hex(bytes)}});
  }

  json stamp(json report) const {
    json run{{"command", command}, {"tool_version", tool_version}, {"config", config}, {"inputs", inputs}};
    if (!deterministic) run["timestamp"] = utc_now();
    report["run"] = std::move(run);
    return report;
  }
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw IoError("write to stdout failed");
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  out.close();
  if (!out) throw IoError("write failed for " + path);
}

void emit(const Run& run, const json& report) { write_text(run.out, run.stamp(report).dump(2) + "\n"); }

void emit_csv(const Run& run, const std::string& text) {
  if (!run.csv.empty()) write_text(run.csv, text);
}

GridSpec synth_grid(const json& cfg) {
  const auto n = field<std::vector<std::size_t>>(cfg, "synth.n");
  const auto lo = field<std::vector<double>>(cfg, "synth.lo");
  const auto hi = field<std::vector<double>>(cfg, "synth.hi");
  if (n.empty() || n.size() > 2 || lo.size() != n.size() || hi.size() != n.size())
    throw ValidationError("config fields 'synth.n', 'synth.lo', 'synth.hi' need one entry per axis (1 or 2)");
  GridSpec g;
  g.dim = int(n.size());
  for (int a = 0; a < g.dim; ++a) {
    g.n[a] = n[a];
    g.lo[a] = lo[a];
    g.hi[a] = hi[a];
  }
  return g;
}

std::vector<ClassParams> params_grid(const json& cfg, bool detector) {
  const auto taus = field<std::vector<double>>(cfg, "tau");
  const auto sigmas = field<std::vector<double>>(cfg, "sigma");
  if (taus.empty()) throw ValidationError("config field 'tau' is empty");
  if (sigmas.empty()) throw ValidationError("config field 'sigma' is empty");
  std::vector<ClassParams> out;
  for (double s : sigmas)
    for (double t : taus) out.push_back(detector ? ClassParams::detector(t, s) : ClassParams::make(t, s));
  return out;
}

WfConfig wf_config(const json& cfg) {
  WfConfig c;
  const std::string d = "detector.";
  c.r = field<double>(cfg, d + "r");
  c.n_list = field<std::vector<long long>>(cfg, d + "n_list");
  if (!at_path(cfg, d + "band").is_null()) {
    const auto b = field<std::vector<double>>(cfg, d + "band");
    if (b.size() != 2) throw ValidationError("config field 'detector.band' needs [lo, hi]");
    c.band = std::make_pair(b[0], b[1]);
  }
  c.caps.a_max = field<double>(cfg, "caps.A_max");
  c.caps.h_max = field<double>(cfg, "caps.h_max");
  c.caps.validate();
  c.slope_tol = field<double>(cfg, d + "slope_tol");
  c.window_margin = field<double>(cfg, d + "window_margin");
  c.majority = field<double>(cfg, d + "majority");
  c.pw_order = field<double>(cfg, d + "pw_order");
  c.floor_rel = field<double>(cfg, d + "floor_rel");
  c.noise_factor = field<double>(cfg, d + "noise_factor");
  c.fit_from = field<double>(cfg, d + "fit_from");
  c.m_max = field<int>(cfg, d + "m_max");
  c.n_directions = field<int>(cfg, d + "n_directions");
  c.half_angle = field<double>(cfg, d + "half_angle");
  c.ss_guard = field<double>(cfg, d + "ss_guard");
  c.ss_radii = field<std::vector<double>>(cfg, d + "ss_radii");
  c.ss_p_max = field<int>(cfg, d + "ss_p_max");
  if (!(c.r > 0.0)) throw ValidationError("config field 'detector.r' must be positive");
  if (c.n_list.empty()) throw ValidationError("config field 'detector.n_list' is empty");
  if (!(c.majority > 0.0 && c.majority <= 1.0)) throw ValidationError("config field 'detector.majority' must be in (0, 1]");
  if (!(c.slope_tol >= 0.0)) throw ValidationError("config field 'detector.slope_tol' must be >= 0");
  if (c.n_directions < 1) throw ValidationError("config field 'detector.n_directions' must be >= 1");
  c.threads = env_threads();
  return c;
}

std::vector<Point> scan_points(const json& cfg, int dim) {
  if (!at_path(cfg, "points").is_null()) {
    std::vector<Point> pts;
    for (const auto& p : field<std::vector<std::vector<double>>>(cfg, "points")) {
      if (int(p.size()) != dim) throw ValidationError("config field 'points' entries need one coordinate per axis");
      pts.push_back({p[0], dim == 2 ? p[1] : 0.0});
    }
    if (pts.empty()) throw ValidationError("config field 'points' is empty");
    return pts;
  }
  auto axis = [&](const std::string& key) {
    return line_grid(field<double>(cfg, key + ".lo"), field<double>(cfg, key + ".hi"), field<double>(cfg, key + ".step"));
  };
  const auto xs = axis("x_grid");
  if (dim == 1) return xs;
  const auto ys = at_path(cfg, "y_grid").is_null() ? xs : axis("y_grid");
  std::vector<Point> pts;
  for (const auto& x : xs)
    for (const auto& y : ys) pts.push_back({x[0], y[0]});
  return pts;
}

Box config_region(const json& cfg, int dim) {
  const auto r = field<std::vector<double>>(cfg, "region");
  if (dim == 1 && r.size() == 2) return interval(r[0], r[1]);
  if (dim == 2 && r.size() == 4) return Box{2, {r[0], r[2]}, {r[1], r[3]}};
  throw ValidationError("config field 'region' needs [a, b] in dim 1 or [x0, x1, y0, y1] in dim 2");
}

OperatorSpec config_operator(const json& cfg) {
  OperatorSpec op;
  op.kind = field<std::string>(cfg, "operator.kind");
  op.a = synth_spec_from_json(at_path(cfg, "operator.a"));
  op.b = synth_spec_from_json(at_path(cfg, "operator.b"));
  return op;
}

// "builtin:<kind>" synthesizes a catalog fixture on the configured grid.
SampledSignal load_input(Run& run, const std::string& spec) {
  const std::string tag = "builtin:";
  if (spec.rfind(tag, 0) == 0) {
    SynthSpec s;
    s.kind = spec.substr(tag.size());
    if (s.kind == "sum") {
      SynthSpec a, b;
      a.kind = "heaviside";
      a.x0 = {-1.0, 0.0};
      b.kind = "kink";
      b.x0 = {1.0, 0.0};
      s.parts = {a, b};
    }
    const auto u = synth(s, synth_grid(run.config));
    run.add_input(spec, signal_to_json_text(u));
    return u;
  }
  const std::string bytes = read_file(spec);
  run.add_input(spec, bytes);
  return format_from_path(spec) == SignalFormat::csv ? signal_from_csv_text(bytes) : signal_from_json_text(bytes);
}

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::istringstream in(text);
  for (std::string tok; std::getline(in, tok, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ValidationError(flag + ": cannot parse '" + tok + "' as a number");
    }
  }
  if (out.empty()) throw ValidationError(flag + ": empty list");
  return out;
}

ClassParams single_params(const json& cfg) {
  const auto p = params_grid(cfg, false);
  if (p.size() != 1) throw ValidationError("this command needs a single --tau and --sigma");
  return p[0];
}

int cmd_seq_certify(Run& run) {
  const int p_max = field<int>(run.config, "seq.p_max");
  const int q_max = field<int>(run.config, "seq.q_max");
  json certs = json::array();
  bool all = true;
  for (const auto& p : params_grid(run.config, false))
    for (const auto& c : certify_all(p, p_max, q_max)) {
      all = all && c.holds;
      certs.push_back(to_json(c));
    }
  emit(run, {{"report", "certificates"}, {"tool_version", tool_version}, {"holds", all}, {"certificates", certs}});
  return all ? ok : findings;
}

CutoffFamily config_family(const json& cfg) {
  const auto c = field<std::vector<double>>(cfg, "cutoff.center");
  if (c.empty() || c.size() > 2) throw ValidationError("config field 'cutoff.center' needs 1 or 2 coordinates");
  Region region{int(c.size()), {c[0], c.size() == 2 ? c[1] : 0.0}, field<double>(cfg, "cutoff.r")};
  CutoffOptions o;
  o.mode = field<std::string>(cfg, "cutoff.mode");
  o.m_max = field<int>(cfg, "cutoff.m_max");
  return build_admissible(region, single_params(cfg), field<std::vector<long long>>(cfg, "cutoff.n_list"), o);
}

SampledSignal sample_grid(const json& cfg, int dim) {
  GridSpec g = synth_grid(cfg);
  if (g.dim != dim) throw ValidationError("config field 'synth.n' must have one entry per cutoff axis");
  return make_grid(g);
}

int cmd_cutoff(Run& run, bool verify) {
  const auto family = config_family(run.config);
  if (!run.csv.empty()) emit_csv(run, cutoff_csv(family, sample_grid(run.config, family.region.dim)));
  if (!verify) {
    emit(run, to_json(family));
    return ok;
  }
  const auto cert = verify_admissible(family, field<int>(run.config, "cutoff.beta_max"));
  json j = to_json(cert);
  j["tool_version"] = tool_version;
  j["family"] = to_json(family);
  emit(run, j);
  return cert.holds ? ok : findings;
}

json signal_info(const SampledSignal& u) {
  json j{{"report", "signal"}, {"tool_version", tool_version}, {"dim", u.dim}, {"shape", json::array()},
         {"origin", json::array()}, {"spacing", json::array()}, {"is_complex", u.is_complex},
         {"noise_level", num(u.noise_level())}};
  for (int a = 0; a < u.dim; ++a) {
    j["shape"].push_back(u.shape[a]);
    j["origin"].push_back(u.origin[a]);
    j["spacing"].push_back(u.spacing[a]);
  }
  j["label"] = u.label ? to_json(*u.label) : json(nullptr);
  return j;
}

int cmd_signal_synth(Run& run, const SynthSpec& spec, const std::string& path) {
  if (path.empty()) throw ValidationError("--out (the signal file) is required");
  const GridSpec g = synth_grid(run.config);
  SampledSignal u;
  if (spec.kind == "prescribed") {
    PrescribedDecay o;
    o.amplitude = field<double>(run.config, "synth.amplitude");
    o.seed = field<std::uint64_t>(run.config, "synth.seed");
    u = synth_prescribed_decay(single_params(run.config), g, o);
  } else {
    u = synth(spec, g);
  }
  save_signal(u, path, format_from_path(path));
  run.add_input(path, read_file(path));
  json info = signal_info(u);
  info["written"] = path;
  emit(run, info);
  return ok;
}

int cmd_signal_load(Run& run, const std::string& in, const std::string& path) {
  const auto u = load_input(run, in);
  u.validate();
  json info = signal_info(u);
  if (!path.empty()) {
    save_signal(u, path, format_from_path(path));
    info["written"] = path;
  }
  emit(run, info);
  return ok;
}

int cmd_classify_fit(Run& run, const std::string& in, bool grid) {
  const auto u = load_input(run, in);
  const Box region = config_region(run.config, u.dim);
  DerivOptions o;
  o.method = field<std::string>(run.config, "classify.method");
  o.refuse_past_cap = field<bool>(run.config, "classify.refuse_past_cap");
  const auto sups = derivative_sups(u, region, field<int>(run.config, "classify.p_max"), o);
  Caps caps{field<double>(run.config, "caps.A_max"), field<double>(run.config, "caps.h_max")};
  caps.validate();
  const std::string mode = field<std::string>(run.config, "classify.mode");
  json j = to_json(fit_envelope(sups, field<double>(run.config, "classify.sigma"), caps, mode));
  j["tool_version"] = tool_version;
  j["sups"] = to_json(sups);
  if (grid) {
    std::ostringstream csv;
    csv << "tau,sigma,tau_hat,log_h,log_A,residual,verdict\n";
    json rows = json::array();
    const bool diverging = sups.any_diverging(1, sups.p_max);
    for (double s : field<std::vector<double>>(run.config, "sigma")) {
      const auto fit = fit_envelope(sups, s, caps, mode);
      for (double t : field<std::vector<double>>(run.config, "tau")) {
        const auto c = feasibility(sups.values, t, s, caps);
        const std::string verdict = diverging ? "diverging" : c.feasible ? "member" : "not_member";
        rows.push_back({{"tau", t}, {"sigma", s}, {"tau_hat", num(fit.tau_hat)}, {"log_h", num(c.log_h)},
                        {"log_A", num(c.log_a)}, {"residual", num(c.residual)}, {"verdict", verdict}});
        auto f = [](double v) { return std::isfinite(v) ? json(v).dump() : std::string(); };
        csv << f(t) << "," << f(s) << "," << f(fit.tau_hat) << "," << f(c.log_h) << "," << f(c.log_a) << ","
            << f(c.residual) << "," << verdict << "\n";
      }
    }
    j["grid"] = rows;
    emit_csv(run, csv.str());
  }
  emit(run, j);
  return ok;
}

std::string csv_num(double v) { return std::isfinite(v) ? json(v).dump() : std::string(); }

std::string point_csv(const Point& x, int dim) {
  return dim == 2 ? csv_num(x[0]) + "," + csv_num(x[1]) : csv_num(x[0]);
}

int cmd_wf(Run& run, const std::string& what, const std::string& in) {
  const auto u = load_input(run, in);
  const WfConfig cfg = wf_config(run.config);
  const auto ps = params_grid(run.config, true);
  const std::string head = u.dim == 2 ? "x,y," : "x,";

  if (what == "scan") {
    const auto rep = wf_scan(u, scan_points(run.config, u.dim), default_directions(u.dim, cfg.n_directions), ps, cfg);
    emit_csv(run, wf_csv(rep));
    emit(run, to_json(rep));
    return ok;
  }
  if (what == "singsupp") {
    const auto rep = singsupp_detect(u, scan_points(run.config, u.dim), ps, field<std::string>(run.config, "singsupp_mode"), cfg);
    std::ostringstream csv;
    csv << head << "tau,sigma,singular\n";
    for (const auto& pt : rep.points)
      for (std::size_t i = 0; i < rep.params_list.size(); ++i)
        csv << point_csv(pt.x, u.dim) << "," << csv_num(rep.params_list[i].tau) << ","
            << csv_num(rep.params_list[i].sigma) << "," << (pt.inconclusive ? 2 : int(pt.singular[i])) << "\n";
    emit_csv(run, csv.str());
    emit(run, to_json(rep));
    return ok;
  }
  if (what == "project") {
    const auto rep = projection_check(u, scan_points(run.config, u.dim), ps, cfg);
    std::ostringstream csv;
    csv << "wf,singsupp,symmetric_difference,holds\n";
    for (const auto& p : rep.pairs)
      csv << json(p.wf_name).dump() << "," << json(p.ss_name).dump() << "," << p.symmetric_difference << "," << int(p.holds) << "\n";
    emit_csv(run, csv.str());
    emit(run, to_json(rep));
    return rep.holds ? ok : findings;
  }
  if (what == "roundtrip") {
    const auto rep = roundtrip_check(u, config_region(run.config, u.dim), ps, cfg);
    std::ostringstream csv;
    csv << "tau,sigma,a_pass,b_pass,agree,inconclusive\n";
    for (const auto& e : rep.entries)
      csv << csv_num(e.params.tau) << "," << csv_num(e.params.sigma) << "," << int(e.a_pass) << "," << int(e.b_pass)
          << "," << int(e.agree()) << "," << int(e.inconclusive) << "\n";
    emit_csv(run, csv.str());
    emit(run, to_json(rep));
    return rep.disagreements == 0 ? ok : findings;
  }
  // pseudolocal: the CSV is the scan of P u
  const auto rep = pseudolocal_check(u, config_operator(run.config), scan_points(run.config, u.dim), ps, cfg);
  emit_csv(run, wf_csv(rep.after));
  emit(run, to_json(rep));
  return rep.holds ? ok : findings;
}

int cmd_report_summarize(Run& run, const std::vector<std::string>& files) {
  std::vector<std::pair<std::string, json>> reports;
  for (const auto& f : files) {
    const std::string text = read_file(f);
    run.add_input(f, text);
    try {
      reports.emplace_back(f, json::parse(text));
    } catch (const json::parse_error& e) {
      throw ValidationError(f + ": not valid JSON (" + e.what() + ")");
    }
  }
  const auto rows = summarize(reports);
  write_text(run.out, format_summary(rows));
  if (!run.csv.empty()) {
    std::ostringstream csv;
    csv << "source,kind,status,detail\n";
    for (const auto& r : rows) csv << json(r.source).dump() << "," << json(r.kind).dump() << "," << r.status << ","
                                   << json(r.detail).dump() << "\n";
    emit_csv(run, csv.str());
  }
  for (const auto& r : rows)
    if (r.status == "FAIL") return findings;
  return ok;
}

}  // namespace

namespace {

// Flags that override config fields; applied after the config file.
struct Overrides {
  std::deque<std::string> values;
  std::vector<std::tuple<CLI::Option*, std::string*, std::function<void(json&, const std::string&)>>> items;

  void add(CLI::App* app, const std::string& flag, const std::string& help,
           std::function<void(json&, const std::string&)> apply) {
    values.emplace_back();
    auto* v = &values.back();
    items.emplace_back(app->add_option(flag, *v, help), v, std::move(apply));
  }
  void number(CLI::App* app, const std::string& flag, const std::string& path, const std::string& help) {
    add(app, flag, help, [=](json& c, const std::string& s) { set_path(c, path, parse_list(s, flag).at(0)); });
  }
  void integer(CLI::App* app, const std::string& flag, const std::string& path, const std::string& help) {
    add(app, flag, help, [=](json& c, const std::string& s) { set_path(c, path, (long long)parse_list(s, flag).at(0)); });
  }
  void list(CLI::App* app, const std::string& flag, const std::string& path, const std::string& help,
            bool integers = false) {
    add(app, flag, help, [=](json& c, const std::string& s) {
      const auto v = parse_list(s, flag);
      if (!integers) return set_path(c, path, v);
      std::vector<long long> n;
      for (double x : v) {
        if (x != std::floor(x)) throw ValidationError(flag + ": expected integers");
        n.push_back((long long)x);
      }
      set_path(c, path, n);
    });
  }
  void text(CLI::App* app, const std::string& flag, const std::string& path, const std::string& help) {
    add(app, flag, help, [=](json& c, const std::string& s) { set_path(c, path, s); });
  }
  void apply(json& cfg) const {
    for (const auto& [opt, v, f] : items)
      if (opt->count() > 0) f(cfg, *v);
  }
};

struct Leaf {
  CLI::App* app;
  std::function<int(Run&)> action;
  bool output_is_signal = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ultradifferentiable regularity and wave-front analysis", "mlreg"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version);

  std::string config_path;
  Run run;
  Overrides ov;
  std::vector<Leaf> leaves;

  auto leaf = [&](CLI::App* group, const std::string& name, const std::string& help) {
    auto* s = group->add_subcommand(name, help);
    s->add_option("--config", config_path, "JSON config file; flags override its fields");
    s->add_option("--out", run.out, "output file (default stdout)");
    s->add_option("--csv", run.csv, "CSV plot data file");
    s->add_flag("--deterministic", run.deterministic, "omit the timestamp");
    return s;
  };
  auto params_flags = [&](CLI::App* s) {
    ov.list(s, "--tau", "tau", "tau value(s), comma separated");
    ov.list(s, "--sigma", "sigma", "sigma value(s), comma separated");
  };

  auto* seq = app.add_subcommand("seq", "weight sequence certificates")->require_subcommand(1);
  {
    auto* s = leaf(seq, "certify", "all sequence certificates");
    params_flags(s);
    ov.integer(s, "--pmax", "seq.p_max", "largest p");
    ov.integer(s, "--qmax", "seq.q_max", "largest q for the two-index inequality");
    leaves.push_back({s, cmd_seq_certify});
  }

  auto* cutoff = app.add_subcommand("cutoff", "admissible cutoff families")->require_subcommand(1);
  for (const bool verify : {false, true}) {
    auto* s = leaf(cutoff, verify ? "verify" : "build", verify ? "certify derivative bounds" : "build a family");
    params_flags(s);
    ov.list(s, "--center", "cutoff.center", "ball center (1 or 2 coordinates)");
    ov.number(s, "--r", "cutoff.r", "ball radius");
    ov.list(s, "--n", "cutoff.n_list", "member indices N", true);
    ov.text(s, "--mode", "cutoff.mode", "tensor | radial");
    ov.integer(s, "--m-max", "cutoff.m_max", "largest box-spline order");
    if (verify) ov.integer(s, "--beta-max", "cutoff.beta_max", "highest derivative order checked");
    leaves.push_back({s, [verify](Run& r) { return cmd_cutoff(r, verify); }});
  }

  auto* signal = app.add_subcommand("signal", "signal corpus")->require_subcommand(1);
  auto spec = std::make_shared<SynthSpec>();
  auto input = std::make_shared<std::string>();
  {
    auto* s = leaf(signal, "synth", "synthesize a catalog signal; --out names the signal file (.json or .csv)");
    s->add_option("--kind", spec->kind, "gaussian cosine heaviside kink gevrey_flat chirp sum prescribed")->required();
    s->add_option("--x0", spec->x0[0], "singular point / center");
    s->add_option("--width", spec->width, "gaussian standard deviation");
    s->add_option("--lambda", spec->lambda, "cosine angular frequency");
    s->add_option("--a", spec->a, "gevrey_flat exponent");
    s->add_option("--amplitude", spec->amplitude, "amplitude");
    params_flags(s);
    ov.list(s, "--n", "synth.n", "samples per axis", true);
    ov.list(s, "--lo", "synth.lo", "lower domain bound per axis");
    ov.list(s, "--hi", "synth.hi", "upper domain bound per axis");
    ov.integer(s, "--seed", "synth.seed", "phase seed for prescribed decay");
    leaves.push_back({s, [spec](Run& r) {
                        if (spec->kind == "sum") {
                          SynthSpec a, b;
                          a.kind = "heaviside";
                          a.x0 = {-1.0, 0.0};
                          b.kind = "kink";
                          b.x0 = {1.0, 0.0};
                          spec->parts = {a, b};
                        }
                        const std::string path = r.out;
                        r.out.clear();
                        return cmd_signal_synth(r, *spec, path);
                      },
                      true});
  }
  {
    auto* s = leaf(signal, "load", "validate a signal file; --out converts it");
    s->add_option("--signal", *input, "signal file or builtin:<kind>")->required();
    leaves.push_back({s, [input](Run& r) {
                        const std::string path = r.out;
                        r.out.clear();
                        return cmd_signal_load(r, *input, path);
                      },
                      true});
  }

  auto* classify = app.add_subcommand("classify", "class membership from derivative growth")->require_subcommand(1);
  auto grid = std::make_shared<bool>(false);
  {
    auto* s = leaf(classify, "fit", "fit the derivative envelope on a region");
    s->add_option("--signal", *input, "signal file or builtin:<kind>")->required();
    ov.list(s, "--region", "region", "A,B (dim 1) or x0,x1,y0,y1 (dim 2)");
    ov.number(s, "--sigma", "classify.sigma", "sigma of the fit");
    ov.integer(s, "--pmax", "classify.p_max", "highest derivative order");
    ov.text(s, "--method", "classify.method", "spectral | oracle");
    ov.text(s, "--fit-mode", "classify.mode", "roumieu | beurling");
    ov.list(s, "--tau-grid", "tau", "tau values for --grid");
    ov.list(s, "--sigma-grid", "sigma", "sigma values for --grid");
    s->add_flag("--grid", *grid, "membership over the (tau, sigma) grid, written to --csv");
    leaves.push_back({s, [input, grid](Run& r) { return cmd_classify_fit(r, *input, *grid); }});
  }

  auto* wf = app.add_subcommand("wf", "wave-front analysis")->require_subcommand(1);
  for (const std::string what : {"scan", "singsupp", "project", "roundtrip", "pseudolocal"}) {
    auto* s = leaf(wf, what, what == "scan"       ? "wave-front verdicts over points, directions and parameters"
                             : what == "singsupp" ? "singular support from derivative growth"
                             : what == "project"  ? "projection of the wave-front set against singular support"
                             : what == "roundtrip" ? "decay versus class membership on a region"
                                                   : "singularities of P u against those of u");
    s->add_option("--signal", *input, "signal file or builtin:<kind>")->required();
    params_flags(s);
    ov.add(s, "--x-grid", "lo,hi,step", [](json& c, const std::string& v) {
      const auto g = parse_list(v, "--x-grid");
      if (g.size() != 3) throw ValidationError("--x-grid needs lo,hi,step");
      c["x_grid"] = {{"lo", g[0]}, {"hi", g[1]}, {"step", g[2]}};
    });
    ov.list(s, "--n-list", "detector.n_list", "cutoff indices N", true);
    ov.list(s, "--band", "detector.band", "lo,hi frequency band");
    ov.number(s, "--r", "detector.r", "cutoff radius");
    ov.number(s, "--slope-tol", "detector.slope_tol", "slope deficit tolerance");
    ov.number(s, "--majority", "detector.majority", "fraction of shallow N for a singular verdict");
    ov.integer(s, "--directions", "detector.n_directions", "direction count in dim 2");
    if (what == "singsupp") ov.text(s, "--mode", "singsupp_mode", "fixed | grid-borderline");
    if (what == "roundtrip") ov.list(s, "--region", "region", "A,B (dim 1) or x0,x1,y0,y1 (dim 2)");
    if (what == "pseudolocal") {
      ov.text(s, "--op", "operator.kind", "dx | first_order | multiply | identity");
      ov.text(s, "--coef-a", "operator.a.kind", "catalog kind of the d/dx coefficient");
      ov.text(s, "--coef-b", "operator.b.kind", "catalog kind of the zeroth-order coefficient");
    }
    leaves.push_back({s, [input, what](Run& r) { return cmd_wf(r, what, *input); }});
  }

  auto* report = app.add_subcommand("report", "report tables")->require_subcommand(1);
  auto files = std::make_shared<std::vector<std::string>>();
  {
    auto* s = leaf(report, "summarize", "PASS/FAIL table over report files");
    s->add_option("--in", *files, "report JSON files")->required()->expected(1, -1);
    leaves.push_back({s, [files](Run& r) { return cmd_report_summarize(r, *files); }});
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const CLI::App* deepest = &app;
    for (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands()[0]; sub;
         sub = sub->get_subcommands().empty() ? nullptr : sub->get_subcommands()[0])
      deepest = sub;
    std::cerr << "error: " << e.what() << "\n\n" << deepest->help();
    return invalid;
  }

  try {
    for (const auto& l : leaves) {
      if (!l.app->parsed()) continue;
      run.command = l.app->get_parent()->get_name() + " " + l.app->get_name();
      if (!config_path.empty()) {
        const std::string text = read_file(config_path);
        run.add_input(config_path, text);
        json file;
        try {
          file = json::parse(text);
        } catch (const json::parse_error& e) {
          throw ValidationError("config " + config_path + ": not valid JSON (" + e.what() + ")");
        }
        merge(run.config, file, "");
      }
      ov.apply(run.config);
      return l.action(run);
    }
    return invalid;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return invalid;
  } catch (const RefusedError& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return invalid;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return io_failure;
  } catch (const json::exception& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return invalid;
  }
}
