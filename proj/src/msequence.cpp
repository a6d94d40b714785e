#include "mlreg/msequence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mlreg {

ClassParams ClassParams::make(double tau, double sigma) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("tau must be a positive finite number");
  if (!(sigma >= 1.0) || !std::isfinite(sigma)) throw ValidationError("sigma must be >= 1");
  ClassParams p;
  p.tau = tau;
  p.sigma = sigma;
  if (sigma > 1.0) p.tau_tilde = std::pow(tau, sigma / (sigma - 1.0));
  return p;
}

ClassParams ClassParams::detector(double tau, double sigma) {
  if (!(sigma > 1.0)) throw ValidationError("detector operations require sigma > 1");
  return make(tau, sigma);
}

double log_m(const ClassParams& params, int p) {
  if (p <= 1) return 0.0;
  const double dp = p;
  return params.tau * std::pow(dp, params.sigma) * std::log(dp);
}

double log_factorial(double n) { return n <= 1.0 ? 0.0 : std::lgamma(n + 1.0); }

long long floor_pow(double p, double sigma) {
  const double v = std::pow(p, sigma);
  const double r = std::round(v);
  if (std::abs(v - r) <= 1e-9 * std::max(1.0, v)) return static_cast<long long>(r);
  return static_cast<long long>(std::floor(v));
}

LogMSequence log_sequence(const ClassParams& params, int p_max) {
  if (p_max < 1) throw ValidationError("p_max must be >= 1");
  LogMSequence s{params, p_max, {}};
  s.log_values.resize(p_max + 1);
  for (int p = 0; p <= p_max; ++p) s.log_values[p] = log_m(params, p);
  return s;
}

namespace {

InequalityCertificate base_cert(const char* name, const ClassParams& params) {
  InequalityCertificate c;
  c.name = name;
  c.params = params;
  return c;
}

}  // namespace

InequalityCertificate certify_m1(const ClassParams& params, int p_max) {
  if (p_max < 2) throw ValidationError("certify_m1 needs p_max >= 2");
  auto c = base_cert("M1", params);
  c.range = {{"p_min", 1}, {"p_max", p_max}};
  const auto L = log_sequence(params, p_max).log_values;
  std::vector<double> slack(p_max + 1, 0.0);
  double margin = std::numeric_limits<double>::infinity();
  for (int p = 1; p <= p_max - 1; ++p) {
    slack[p] = L[p - 1] + L[p + 1] - 2.0 * L[p];
    margin = std::min(margin, slack[p]);
  }
  c.tables["slack"] = slack;
  c.margin = margin;
  c.holds = margin >= 0.0;
  return c;
}

InequalityCertificate certify_m2_tilde_prime(const ClassParams& params, int q_max, int p_max) {
  if (q_max < 1 || p_max < 1) throw ValidationError("certify_m2_tilde_prime needs q_max, p_max >= 1");
  auto c = base_cert("M2_tilde_prime", params);
  c.range = {{"p_min", 1}, {"p_max", p_max}, {"q_min", 0}, {"q_max", q_max}};
  c.notes.push_back("p = 0 excluded: M_q <= C_q^0 M_0 fails for q >= 2");
  const auto L = log_sequence(params, p_max + q_max).log_values;
  std::vector<double> log_cq(q_max + 1, 0.0);
  double margin = std::numeric_limits<double>::infinity();
  bool all_ge_one = true;
  for (int q = 1; q <= q_max; ++q) {
    std::vector<double> e(p_max + 1);
    double best = 0.0;
    for (int p = 1; p <= p_max; ++p) {
      e[p] = (L[p + q] - L[p]) / std::pow(double(p), params.sigma);
      best = std::max(best, e[p]);
    }
    log_cq[q] = best;
    all_ge_one = all_ge_one && best >= 0.0;
    for (int p = 1; p <= p_max; ++p)
      margin = std::min(margin, (best - e[p]) * std::pow(double(p), params.sigma));
  }
  c.tables["log_C_q"] = log_cq;
  c.constants["log_C_1"] = log_cq[1];
  c.margin = margin;
  c.holds = all_ge_one && margin >= 0.0;
  return c;
}

InequalityCertificate certify_m2_tilde(const ClassParams& params, int p_max) {
  if (p_max < 1) throw ValidationError("certify_m2_tilde needs p_max >= 1");
  auto c = base_cert("M2_tilde", params);
  c.range = {{"p_min", 1}, {"p_max", p_max}, {"q_min", 1}, {"q_max", p_max}};
  const auto L = log_sequence(params, 2 * p_max).log_values;
  const ClassParams wide = ClassParams::make(params.tau * std::pow(2.0, params.sigma - 1.0), params.sigma);
  const auto W = log_sequence(wide, p_max).log_values;
  const double eps = 1e-12;
  double log_c = eps;
  auto expo = [&](int p, int q) {
    const double den = std::pow(double(p), params.sigma) + std::pow(double(q), params.sigma);
    return std::pair{(L[p + q] - W[p] - W[q]) / den, den};
  };
  for (int p = 1; p <= p_max; ++p)
    for (int q = 1; q <= p_max; ++q) log_c = std::max(log_c, expo(p, q).first);
  double margin = std::numeric_limits<double>::infinity();
  for (int p = 1; p <= p_max; ++p)
    for (int q = 1; q <= p_max; ++q) {
      auto [e, den] = expo(p, q);
      margin = std::min(margin, (log_c - e) * den);
    }
  c.constants["log_C"] = log_c;
  c.constants["C"] = std::exp(log_c);
  c.constants["tau_wide"] = wide.tau;
  c.margin = margin;
  c.holds = log_c > 0.0 && margin >= 0.0;
  return c;
}

namespace {

// ln d_p with d_p = (2p)^(-tau (p-1)^(sigma-1)), p real >= 2.
double log_dominating(const ClassParams& params, double p) {
  return -params.tau * std::pow(p - 1.0, params.sigma - 1.0) * std::log(2.0 * p);
}

double tail_exponent(const ClassParams& params, double p) {
  return params.tau * std::pow(p - 1.0, params.sigma - 1.0);
}

}  // namespace

InequalityCertificate certify_m3_prime(const ClassParams& params, int p_max) {
  if (p_max < 2) throw ValidationError("certify_m3_prime needs p_max >= 2");
  if (!(params.sigma > 1.0)) throw ValidationError("certify_m3_prime needs sigma > 1");
  auto c = base_cert("M3_prime", params);
  c.range = {{"p_min", 1}, {"p_max", p_max}};
  const auto L = log_sequence(params, p_max).log_values;
  std::vector<double> terms(p_max + 1, 0.0), partial(p_max + 1, 0.0), dom(p_max + 1, 0.0);
  double margin = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (int p = 1; p <= p_max; ++p) {
    const double lr = L[p - 1] - L[p];
    terms[p] = std::exp(lr);
    sum += terms[p];
    partial[p] = sum;
    if (p >= 2) {
      const double ld = log_dominating(params, p);
      dom[p] = std::exp(ld);
      margin = std::min(margin, ld - lr);
    }
  }
  // Tail of the dominating series past p_max: geometric blocks bounded by their
  // first term, then an integral once the exponent reaches 2.
  double tail = 0.0;
  double a = p_max + 1.0;
  long long blocks = 0;
  while (tail_exponent(params, a) < 2.0) {
    const double b = std::max(a, std::floor(a * 1.05));
    tail += (b - a + 1.0) * std::exp(log_dominating(params, a));
    a = b + 1.0;
    if (++blocks > 100000000) break;
  }
  const double e = tail_exponent(params, a);
  tail += std::exp(log_dominating(params, a));
  tail += std::pow(2.0 * a, 1.0 - e) / (2.0 * (e - 1.0));
  c.tables["terms"] = terms;
  c.tables["partial_sums"] = partial;
  c.tables["dominating"] = dom;
  c.constants["partial_sum"] = sum;
  c.constants["tail_bound"] = tail;
  c.constants["upper_bound"] = sum + tail;
  c.margin = margin;
  c.holds = margin >= 0.0 && std::isfinite(sum + tail);
  return c;
}

InequalityCertificate certify_stirling_bounds(const ClassParams& params, int p_max,
                                              std::optional<double> log_c) {
  if (p_max < 1) throw ValidationError("certify_stirling_bounds needs p_max >= 1");
  auto c = base_cert("stirling", params);
  c.range = {{"p_min", 1}, {"p_max", p_max}};
  const double k = params.tau / params.sigma;
  const double lc = log_c.value_or(k);
  std::vector<double> up(p_max + 1, 0.0), lo(p_max + 1, 0.0);
  double log_a = -std::numeric_limits<double>::infinity();
  double log_b = -std::numeric_limits<double>::infinity();
  for (int p = 1; p <= p_max; ++p) {
    const double ps = std::pow(double(p), params.sigma);
    const double lf = k * log_factorial(double(floor_pow(p, params.sigma)));
    const double lm = log_m(params, p);
    up[p] = lm - ps * lc - lf;
    lo[p] = lf - lm;
    log_a = std::max(log_a, up[p]);
    log_b = std::max(log_b, lo[p]);
  }
  double margin_up = std::numeric_limits<double>::infinity();
  double margin_lo = std::numeric_limits<double>::infinity();
  for (int p = 1; p <= p_max; ++p) {
    margin_up = std::min(margin_up, log_a - up[p]);
    margin_lo = std::min(margin_lo, log_b - lo[p]);
  }
  c.constants["log_A"] = log_a;
  c.constants["log_B"] = log_b;
  c.constants["log_C"] = lc;
  c.constants["A"] = std::exp(log_a);
  c.constants["B"] = std::exp(log_b);
  c.constants["C"] = std::exp(lc);
  c.constants["margin_upper"] = margin_up;
  c.constants["margin_lower"] = margin_lo;
  c.margin = std::min(margin_up, margin_lo);
  c.holds = c.margin >= 0.0 && std::isfinite(log_a) && std::isfinite(log_b);
  return c;
}

std::vector<InequalityCertificate> certify_all(const ClassParams& params, int p_max, int q_max) {
  std::vector<InequalityCertificate> out;
  out.push_back(certify_m1(params, p_max));
  out.push_back(certify_m2_tilde_prime(params, q_max, p_max));
  out.push_back(certify_m2_tilde(params, std::min(p_max, 100)));
  out.push_back(certify_m3_prime(params, p_max));
  auto st = certify_stirling_bounds(params, p_max);
  auto upper = st, lower = st;
  upper.name = "stirling_upper";
  upper.margin = st.constants["margin_upper"];
  upper.holds = upper.margin >= 0.0 && std::isfinite(st.constants["log_A"]);
  lower.name = "stirling_lower";
  lower.margin = st.constants["margin_lower"];
  lower.holds = lower.margin >= 0.0 && std::isfinite(st.constants["log_B"]);
  out.push_back(upper);
  out.push_back(lower);
  return out;
}

EnumMap EnumMap::identity() { return {}; }

EnumMap EnumMap::scale(double c) {
  EnumMap m;
  m.kind = Kind::scale;
  m.coefficients = {c};
  m.validate();
  return m;
}

EnumMap EnumMap::power(double c, double e) {
  EnumMap m;
  m.kind = Kind::power;
  m.coefficients = {c, e};
  m.validate();
  return m;
}

EnumMap EnumMap::compose(const EnumMap& first, const EnumMap& second) {
  EnumMap m;
  m.kind = Kind::composed;
  m.parts = {first, second};
  m.validate();
  return m;
}

void EnumMap::validate() const {
  switch (kind) {
    case Kind::identity:
      return;
    case Kind::scale:
      if (coefficients.size() != 1 || !(coefficients[0] > 0.0))
        throw ValidationError("scale map needs one positive coefficient");
      return;
    case Kind::power:
      if (coefficients.size() != 2 || !(coefficients[0] > 0.0) || !(coefficients[1] > 0.0))
        throw ValidationError("power map needs positive c and e");
      return;
    case Kind::composed:
      if (parts.empty()) throw ValidationError("composed map needs parts");
      for (const auto& p : parts) p.validate();
      return;
  }
}

double EnumMap::operator()(double n) const {
  switch (kind) {
    case Kind::identity:
      return n;
    case Kind::scale:
      return coefficients[0] * n;
    case Kind::power:
      return coefficients[0] * std::pow(n, coefficients[1]);
    case Kind::composed: {
      double v = n;
      for (auto it = parts.rbegin(); it != parts.rend(); ++it) v = (*it)(v);
      return v;
    }
  }
  return n;
}

namespace {

double interpolate_log(const std::vector<ProfilePoint>& pts, double x) {
  if (x < double(pts.front().n) - 1e-12 || x > double(pts.back().n) + 1e-12)
    throw ValidationError("enumerated index falls outside the sampled profile");
  auto it = std::lower_bound(pts.begin(), pts.end(), x,
                             [](const ProfilePoint& p, double v) { return double(p.n) < v; });
  if (it == pts.begin()) return it->log_value;
  if (it == pts.end()) return pts.back().log_value;
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double w = (x - double(lo.n)) / double(hi.n - lo.n);
  return lo.log_value + w * (hi.log_value - lo.log_value);
}

}  // namespace

Profile enumerate_profile(const Profile& profile, const EnumMap& map) {
  map.validate();
  if (profile.points.empty()) throw ValidationError("empty profile");
  for (size_t i = 0; i < profile.points.size(); ++i) {
    if (profile.points[i].n < 1) throw ValidationError("profile indices must be >= 1");
    if (i > 0 && profile.points[i].n <= profile.points[i - 1].n)
      throw ValidationError("profile indices must be strictly increasing");
  }
  double prev = -std::numeric_limits<double>::infinity();
  for (const auto& pt : profile.points) {
    const double a = map(double(pt.n));
    if (!(a > 0.0) || !(a > prev)) throw ValidationError("enumeration map is not positive and increasing");
    prev = a;
  }
  Profile out;
  out.interpolated = profile.interpolated || !profile.log_closed_form;
  if (profile.log_closed_form) {
    auto f = profile.log_closed_form;
    out.log_closed_form = [f, map](double x) { return f(map(x)); };
  }
  for (const auto& pt : profile.points) {
    const double a = map(double(pt.n));
    const double v = profile.log_closed_form ? profile.log_closed_form(a) : interpolate_log(profile.points, a);
    out.points.push_back({pt.n, v});
  }
  return out;
}

double associated_weight(const ClassParams& params, double t) {
  if (!(t > 0.0)) throw ValidationError("associated_weight needs t > 0");
  if (t <= 1.0) return 0.0;
  const double lt = std::log(t);
  double best = 0.0, prev = 0.0;
  int extra = -1;
  for (int p = 1;; ++p) {
    const double v = p * lt - log_m(params, p);
    best = std::max(best, v);
    if (extra < 0 && v < prev) extra = 5;
    if (extra >= 0 && extra-- == 0) break;
    prev = v;
  }
  return best;
}

}  // namespace mlreg
