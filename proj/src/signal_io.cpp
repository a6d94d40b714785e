#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mlreg/serialize.hpp"

namespace mlreg {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const ClassParams& p) {
  json j{{"tau", p.tau}, {"sigma", p.sigma}};
  j["tau_tilde"] = p.tau_tilde ? num(*p.tau_tilde) : json(nullptr);
  return j;
}

json to_json(const Label& l) {
  json j{{"kind", l.kind}};
  j["singular_points"] = json::array();
  for (const auto& p : l.singular_points) j["singular_points"].push_back({p[0], p[1]});
  if (!l.singular_hyperplanes.empty()) {
    j["singular_hyperplanes"] = json::array();
    for (const auto& h : l.singular_hyperplanes)
      j["singular_hyperplanes"].push_back({{"point", {h.point[0], h.point[1]}}, {"normal", {h.normal[0], h.normal[1]}}});
  }
  if (!l.gevrey_points.empty()) {
    j["gevrey_points"] = json::array();
    for (const auto& g : l.gevrey_points)
      j["gevrey_points"].push_back({{"point", {g.point[0], g.point[1]}}, {"order", g.order}});
  }
  if (l.expected_params)
    j["expected_params"] = {{"tau", l.expected_params->first}, {"sigma", l.expected_params->second}};
  return j;
}

Label label_from_json(const json& j) {
  Label l;
  l.kind = j.value("kind", "");
  if (j.contains("singular_points"))
    for (const auto& p : j["singular_points"]) l.singular_points.push_back({p.at(0).get<double>(), p.size() > 1 ? p.at(1).get<double>() : 0.0});
  if (j.contains("singular_hyperplanes"))
    for (const auto& h : j["singular_hyperplanes"])
      l.singular_hyperplanes.push_back({{h["point"][0].get<double>(), h["point"][1].get<double>()},
                                        {h["normal"][0].get<double>(), h["normal"][1].get<double>()}});
  if (j.contains("gevrey_points"))
    for (const auto& g : j["gevrey_points"])
      l.gevrey_points.push_back({{g["point"][0].get<double>(), g["point"][1].get<double>()}, g["order"].get<double>()});
  if (j.contains("expected_params") && !j["expected_params"].is_null())
    l.expected_params = std::make_pair(j["expected_params"]["tau"].get<double>(), j["expected_params"]["sigma"].get<double>());
  return l;
}

json to_json(const SynthSpec& s) {
  json j{{"kind", s.kind},     {"x0", {s.x0[0], s.x0[1]}}, {"normal", {s.normal[0], s.normal[1]}},
         {"amplitude", s.amplitude}, {"width", s.width},  {"lambda", s.lambda},
         {"a", s.a},           {"f0", s.f0},               {"rate", s.rate}};
  if (!s.parts.empty()) {
    j["parts"] = json::array();
    for (const auto& p : s.parts) j["parts"].push_back(to_json(p));
  }
  return j;
}

SynthSpec synth_spec_from_json(const json& j) {
  SynthSpec s;
  s.kind = j.value("kind", s.kind);
  if (j.contains("x0")) {
    if (j["x0"].is_array()) {
      s.x0[0] = j["x0"].at(0).get<double>();
      if (j["x0"].size() > 1) s.x0[1] = j["x0"].at(1).get<double>();
    } else {
      s.x0[0] = j["x0"].get<double>();
    }
  }
  if (j.contains("normal")) s.normal = {j["normal"].at(0).get<double>(), j["normal"].at(1).get<double>()};
  s.amplitude = j.value("amplitude", s.amplitude);
  s.width = j.value("width", s.width);
  s.lambda = j.value("lambda", s.lambda);
  s.a = j.value("a", s.a);
  s.f0 = j.value("f0", s.f0);
  s.rate = j.value("rate", s.rate);
  if (j.contains("parts"))
    for (const auto& p : j["parts"]) s.parts.push_back(synth_spec_from_json(p));
  return s;
}

json to_json(const SampledSignal& s) {
  json j;
  j["dim"] = s.dim;
  j["origin"] = json::array();
  j["spacing"] = json::array();
  j["shape"] = json::array();
  for (int a = 0; a < s.dim; ++a) {
    j["origin"].push_back(s.origin[a]);
    j["spacing"].push_back(s.spacing[a]);
    j["shape"].push_back(s.shape[a]);
  }
  json samples = json::array();
  for (const auto& v : s.samples) {
    if (s.is_complex)
      samples.push_back({v.real(), v.imag()});
    else
      samples.push_back(v.real());
  }
  j["samples"] = std::move(samples);
  j["label"] = s.label ? to_json(*s.label) : json(nullptr);
  if (s.source) j["source"] = to_json(*s.source);
  if (s.noise > 0.0) j["noise"] = s.noise;
  return j;
}

SampledSignal signal_from_json(const json& j) {
  SampledSignal s;
  try {
    s.dim = j.at("dim").get<int>();
    if (s.dim != 1 && s.dim != 2) throw ValidationError("dim must be 1 or 2");
    const auto& o = j.at("origin");
    const auto& sp = j.at("spacing");
    const auto& sh = j.at("shape");
    if (int(o.size()) != s.dim || int(sp.size()) != s.dim || int(sh.size()) != s.dim)
      throw ValidationError("origin/spacing/shape length must equal dim");
    for (int a = 0; a < s.dim; ++a) {
      s.origin[a] = o[a].get<double>();
      s.spacing[a] = sp[a].get<double>();
      s.shape[a] = sh[a].get<std::size_t>();
    }
    if (s.dim == 1) s.shape[1] = 1;
    const auto& smp = j.at("samples");
    if (smp.size() != s.size())
      throw ValidationError("shape mismatch: shape implies " + std::to_string(s.size()) + " samples, got " +
                            std::to_string(smp.size()));
    s.samples.reserve(smp.size());
    for (std::size_t i = 0; i < smp.size(); ++i) {
      const auto& v = smp[i];
      if (v.is_array()) {
        s.is_complex = true;
        s.samples.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
      } else if (v.is_number()) {
        s.samples.emplace_back(v.get<double>(), 0.0);
      } else {
        throw ValidationError("sample " + std::to_string(i) + " is not a number");
      }
    }
    if (j.contains("label") && !j["label"].is_null()) s.label = label_from_json(j["label"]);
    if (j.contains("source") && !j["source"].is_null()) s.source = synth_spec_from_json(j["source"]);
    if (j.contains("noise")) s.noise = j["noise"].get<double>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed signal JSON: ") + e.what());
  }
  s.validate();
  return s;
}

json to_json(const Box& b) {
  json j{{"dim", b.dim}, {"lo", json::array()}, {"hi", json::array()}};
  for (int a = 0; a < b.dim; ++a) {
    j["lo"].push_back(b.lo[a]);
    j["hi"].push_back(b.hi[a]);
  }
  return j;
}

Box box_from_json(const json& j) {
  Box b;
  b.dim = j.at("dim").get<int>();
  for (int a = 0; a < b.dim; ++a) {
    b.lo[a] = j["lo"][a].get<double>();
    b.hi[a] = j["hi"][a].get<double>();
  }
  return b;
}

json to_json(const DerivSups& d) {
  json j{{"p_max", d.p_max}, {"method", d.method}, {"region", to_json(d.region)}};
  j["values"] = json::array();
  for (double v : d.values) j["values"].push_back(num(v));
  if (!d.values_half.empty()) {
    j["values_half_band"] = json::array();
    for (double v : d.values_half) j["values_half_band"].push_back(num(v));
    j["diverging"] = d.diverging;
  }
  if (!d.noise.empty()) {
    j["roundoff_estimate"] = json::array();
    for (double v : d.noise) j["roundoff_estimate"].push_back(num(v));
  }
  j["p_cap"] = d.p_cap ? json(*d.p_cap) : json(nullptr);
  if (d.method == "spectral") j["guard"] = d.guard;
  return j;
}

std::string signal_to_json_text(const SampledSignal& s) { return to_json(s).dump(); }

SampledSignal signal_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
  return signal_from_json(j);
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& c, std::size_t row) {
  std::size_t used = 0;
  double v;
  try {
    v = std::stod(c, &used);
  } catch (const std::exception&) {
    throw ValidationError("row " + std::to_string(row) + ": malformed number '" + c + "'");
  }
  while (used < c.size() && std::isspace(static_cast<unsigned char>(c[used]))) ++used;
  if (used != c.size()) throw ValidationError("row " + std::to_string(row) + ": malformed number '" + c + "'");
  if (!std::isfinite(v)) throw ValidationError("row " + std::to_string(row) + ": non-finite value");
  return v;
}

}  // namespace

SampledSignal signal_from_csv_text(const std::string& text) {
  std::stringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto head = split_csv(line);
  const bool cplx_cols = head.size() == 3;
  if (head.size() < 2 || head.size() > 3 || head[0] != "x" || head[1] != "re" || (cplx_cols && head[2] != "im"))
    throw ValidationError("row 1: header must be x,re[,im]");
  std::vector<double> xs;
  std::vector<cplx> vals;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != head.size())
      throw ValidationError("row " + std::to_string(row) + ": expected " + std::to_string(head.size()) + " columns");
    const double x = parse_cell(cells[0], row);
    const double re = parse_cell(cells[1], row);
    const double im = cplx_cols ? parse_cell(cells[2], row) : 0.0;
    if (xs.size() >= 2) {
      const double dx = xs[1] - xs[0];
      const double step = x - xs.back();
      if (std::abs(step - dx) > 1e-9 * std::abs(dx))
        throw ValidationError("row " + std::to_string(row) + ": non-uniform spacing");
    } else if (xs.size() == 1 && !(x > xs[0])) {
      throw ValidationError("row " + std::to_string(row) + ": x must increase");
    }
    xs.push_back(x);
    vals.emplace_back(re, im);
  }
  SampledSignal s;
  s.dim = 1;
  if (xs.size() < 2) throw ValidationError("CSV needs at least 16 rows");
  s.origin = {xs.front(), 0.0};
  s.spacing = {(xs.back() - xs.front()) / double(xs.size() - 1), 1.0};
  s.shape = {xs.size(), 1};
  s.samples = std::move(vals);
  s.is_complex = cplx_cols;
  s.validate();
  return s;
}

SignalFormat format_from_path(const std::string& path) {
  auto ends = [&](const std::string& suf) {
    return path.size() >= suf.size() && path.compare(path.size() - suf.size(), suf.size(), suf) == 0;
  };
  if (ends(".csv")) return SignalFormat::csv;
  return SignalFormat::json;
}

void save_signal(const SampledSignal& s, const std::string& path, SignalFormat fmt) {
  s.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  if (fmt == SignalFormat::json) {
    out << signal_to_json_text(s) << "\n";
  } else {
    if (s.dim != 1) throw ValidationError("CSV output supports dim 1 only");
    out << (s.is_complex ? "x,re,im\n" : "x,re\n");
    for (std::size_t i = 0; i < s.shape[0]; ++i) {
      out << fmt17(s.coord(0, i)) << "," << fmt17(s.samples[i].real());
      if (s.is_complex) out << "," << fmt17(s.samples[i].imag());
      out << "\n";
    }
  }
  if (!out) throw IoError("write failed for " + path);
}

SampledSignal load_signal(const std::string& path, SignalFormat fmt) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return fmt == SignalFormat::json ? signal_from_json_text(ss.str()) : signal_from_csv_text(ss.str());
}

}  // namespace mlreg
