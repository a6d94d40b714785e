#include "mlreg/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mlreg/msequence.hpp"

namespace mlreg {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double feasible_tol = 1e-9;

double q_of(int p, double sigma) { return p == 0 ? 0.0 : std::pow(double(p), sigma); }
double c_of(int p, double sigma) { return p <= 1 ? 0.0 : std::pow(double(p), sigma) * std::log(double(p)); }

void check_sups(const std::vector<double>& sups) {
  for (double s : sups)
    if (std::isnan(s) || s < 0.0) throw ValidationError("sups must be nonnegative numbers");
}

}  // namespace

void Caps::validate() const {
  if (!(a_max > 0.0) || !std::isfinite(a_max)) throw ValidationError("caps.a_max must be positive");
  if (!(h_max > 0.0) || !std::isfinite(h_max)) throw ValidationError("caps.h_max must be positive");
}

double log_seminorm(const std::vector<double>& sups, const ClassParams& params, double h) {
  if (!(h > 0.0)) throw ValidationError("h must be positive");
  check_sups(sups);
  const double lh = std::log(h);
  double best = -inf;
  for (std::size_t p = 0; p < sups.size(); ++p) {
    if (sups[p] == 0.0) continue;
    if (std::isinf(sups[p])) return inf;
    const int pi = int(p);
    best = std::max(best, std::log(sups[p]) - q_of(pi, params.sigma) * lh - params.tau * c_of(pi, params.sigma));
  }
  return best;
}

double seminorm(const std::vector<double>& sups, const ClassParams& params, double h) {
  return std::exp(log_seminorm(sups, params, h));
}

double seminorm(const DerivSups& sups, const ClassParams& params, double h) { return seminorm(sups.values, params, h); }

double constraint_violation(const std::vector<double>& sups, double tau, double sigma, double log_a, double log_h) {
  double worst = -inf;
  for (std::size_t p = 0; p < sups.size(); ++p) {
    if (sups[p] == 0.0) continue;
    if (std::isinf(sups[p])) return inf;
    const int pi = int(p);
    worst = std::max(worst, std::log(sups[p]) - log_a - log_h * q_of(pi, sigma) - tau * c_of(pi, sigma));
  }
  return worst;
}

FeasibilityCert feasibility(const std::vector<double>& sups, double tau, double sigma, const Caps& caps,
                            std::optional<double> log_h_cap) {
  check_sups(sups);
  FeasibilityCert c;
  c.tau = tau;
  c.sigma = sigma;
  const double a_cap = std::log(caps.a_max), b_cap = log_h_cap ? *log_h_cap : std::log(caps.h_max);
  const double v = constraint_violation(sups, tau, sigma, a_cap, b_cap);
  c.feasible = v <= feasible_tol;
  if (!c.feasible) {
    c.log_a = a_cap;
    c.log_h = b_cap;
    c.residual = v;
    return c;
  }
  double b = -inf;
  for (std::size_t p = 1; p < sups.size(); ++p)
    if (sups[p] > 0.0) b = std::max(b, (std::log(sups[p]) - a_cap - tau * c_of(int(p), sigma)) / q_of(int(p), sigma));
  c.log_h = std::isfinite(b) ? std::min(b, b_cap) : b_cap;
  double a = -inf;
  for (std::size_t p = 0; p < sups.size(); ++p)
    if (sups[p] > 0.0)
      a = std::max(a, std::log(sups[p]) - c.log_h * q_of(int(p), sigma) - tau * c_of(int(p), sigma));
  c.log_a = std::isfinite(a) ? std::min(a, a_cap) : a_cap;
  c.residual = std::max(0.0, constraint_violation(sups, tau, sigma, c.log_a, c.log_h));
  return c;
}

EnvelopeFit fit_envelope(const std::vector<double>& sups, double sigma, const Caps& caps, const std::string& mode,
                         const std::vector<bool>& diverging, double tolerance) {
  if (sups.size() < 7) throw ValidationError("fit_envelope needs p_max >= 6");
  if (!(sigma > 1.0)) throw ValidationError("sigma must be > 1");
  if (!(tolerance > 0.0)) throw ValidationError("tolerance must be positive");
  if (mode != "roumieu" && mode != "beurling") throw ValidationError("mode must be roumieu or beurling");
  caps.validate();
  check_sups(sups);
  EnvelopeFit f;
  f.sigma = sigma;
  f.mode = mode;
  f.caps = caps;
  f.tolerance = tolerance;
  f.p_hi = int(sups.size()) - 1;
  std::optional<double> b_cap;
  if (mode == "beurling") {
    for (int k = 0; k <= 10; ++k) f.h_grid.push_back(std::ldexp(1.0, -k));
    b_cap = std::log(f.h_grid.back());
  }
  for (std::size_t p = 1; p < diverging.size(); ++p)
    if (diverging[p]) {
      f.tau_hat = inf;
      f.verdict = "diverging";
      f.log_a = std::log(caps.a_max);
      f.log_h = std::log(caps.h_max);
      f.residual = inf;
      return f;
    }
  auto ok = [&](double tau) { return feasibility(sups, tau, sigma, caps, b_cap).feasible; };
  if (ok(0.0)) {
    f.tau_hat = 0.0;
    f.verdict = "analytic-like";
  } else if (!ok(f.bracket_hi)) {
    f.tau_hat = inf;
    f.verdict = "not in class at these caps";
  } else {
    double lo = 0.0, hi = f.bracket_hi;
    while (hi - lo > tolerance) {
      const double mid = 0.5 * (lo + hi);
      (ok(mid) ? hi : lo) = mid;
    }
    f.tau_hat = hi;
    f.verdict = "in class at caps";
  }
  const auto cert = feasibility(sups, std::isfinite(f.tau_hat) ? f.tau_hat : f.bracket_hi, sigma, caps, b_cap);
  f.feasible = std::isfinite(f.tau_hat);
  f.log_a = cert.log_a;
  f.log_h = cert.log_h;
  f.residual = cert.residual;
  if (mode == "beurling" && f.feasible) {
    const auto roumieu = fit_envelope(sups, sigma, caps, "roumieu", {}, tolerance);
    for (double h : f.h_grid)
      if (roumieu.feasible && feasibility(sups, roumieu.tau_hat, sigma, caps, std::log(h)).feasible) f.smallest_h = h;
  }
  return f;
}

EnvelopeFit fit_envelope(const DerivSups& sups, double sigma, const Caps& caps, const std::string& mode,
                         double tolerance) {
  auto f = fit_envelope(sups.values, sigma, caps, mode, sups.diverging, tolerance);
  f.p_lo = 0;
  f.p_hi = sups.p_max;
  return f;
}

EmbeddingReport check_embedding(const std::vector<double>& sups, double sigma, double tau1, double tau2,
                                const Caps& caps, const std::vector<double>& sigma2_grid,
                                const std::vector<double>& tau_grid) {
  if (!(tau1 > 0.0) || !(tau2 > tau1)) throw ValidationError("check_embedding needs 0 < tau1 < tau2");
  if (!(sigma > 1.0)) throw ValidationError("sigma must be > 1");
  caps.validate();
  EmbeddingReport r;
  r.sigma = sigma;
  r.tau1 = tau1;
  r.tau2 = tau2;
  r.cert1 = feasibility(sups, tau1, sigma, caps);
  if (r.cert1.feasible) {
    r.substitution_checked = true;
    r.substitution_violation = constraint_violation(sups, tau2, sigma, r.cert1.log_a, r.cert1.log_h);
    if (!(r.substitution_violation <= feasible_tol)) {
      std::ostringstream why;
      why << "certificate at tau=" << tau1 << " fails at tau=" << tau2 << " by " << r.substitution_violation;
      r.violations.push_back(why.str());
    }
  }
  bool feasible_at_sigma = r.cert1.feasible;
  for (double t : tau_grid) feasible_at_sigma = feasible_at_sigma || feasibility(sups, t, sigma, caps).feasible;
  if (feasible_at_sigma)
    for (double s2 : sigma2_grid) {
      if (!(s2 > sigma)) continue;
      for (double t : tau_grid) {
        SigmaTransfer st{s2, t, feasibility(sups, t, s2, caps).feasible};
        r.sigma_transfers.push_back(st);
        if (!st.feasible) {
          std::ostringstream why;
          why << "feasible at sigma=" << sigma << " but not at (tau=" << t << ", sigma=" << s2 << ")";
          r.violations.push_back(why.str());
        }
      }
    }
  r.holds = r.violations.empty();
  return r;
}

AlgebraReport check_algebra(const std::vector<double>& phi, const std::vector<double>& psi, double sigma, double tau,
                            double h) {
  if (!(h > 0.0)) throw ValidationError("h must be positive");
  if (phi.size() != psi.size() || phi.empty()) throw ValidationError("sups tables must have the same nonzero length");
  check_sups(phi);
  check_sups(psi);
  AlgebraReport r;
  r.sigma = sigma;
  r.tau = tau;
  r.h = h;
  r.c_h = std::min(h, std::pow(h, std::pow(2.0, sigma - 1.0)));
  r.product_sups.assign(phi.size(), 0.0);
  for (std::size_t p = 0; p < phi.size(); ++p)
    for (std::size_t k = 0; k <= p; ++k) {
      const double binom = std::exp(log_factorial(double(p)) - log_factorial(double(k)) - log_factorial(double(p - k)));
      r.product_sups[p] += binom * phi[p - k] * psi[k];
    }
  const ClassParams cp{tau, sigma, std::nullopt};
  const double lhs = log_seminorm(r.product_sups, cp, 2.0 * h);
  const double rhs = log_seminorm(phi, cp, r.c_h) + log_seminorm(psi, cp, r.c_h);
  r.lhs = std::exp(lhs);
  r.rhs = std::exp(rhs);
  r.holds = lhs == -inf || lhs <= rhs + 1e-12 * std::max(1.0, std::abs(rhs));
  return r;
}

OperatorResult apply_ultradiff_operator(const Spectrum& spec, const OperatorLaw& law, std::optional<int> truncation,
                                        int p_cap_max) {
  if (spec.dim != 1) throw ValidationError("operators act on 1D spectra");
  if (!(law.a > 0.0) || !(law.l >= 0.0)) throw ValidationError("operator law needs A > 0 and L >= 0");
  if (!(law.params.sigma >= 1.0) || !(law.params.tau > 0.0)) throw ValidationError("operator law needs tau > 0, sigma >= 1");
  const double sig = law.params.sigma, t2 = law.params.tau * std::pow(2.0, sig - 1.0);
  auto log_abs_a = [&](int p) {
    if (p == 0) return std::log(law.a);
    if (law.l == 0.0) return -inf;
    return std::log(law.a) + std::pow(double(p), sig) * std::log(law.l) - t2 * c_of(p, sig);
  };
  double mx = 0.0;
  for (const auto& v : spec.values) mx = std::max(mx, std::abs(v));
  const int p_scan = 200;
  // log of sum_k |u_k| (2 pi |xi_k|)^p for each p, the band mass of order p
  std::vector<double> mass(p_scan + 1, -inf);
  for (std::size_t k = 0; k < spec.values.size(); ++k) {
    const double v = std::abs(spec.values[k]);
    if (v == 0.0 || v < 1e-16 * mx) continue;
    const double xi = std::abs(spec.freq(0, k));
    const double lx = xi == 0.0 ? -inf : std::log(2.0 * M_PI * xi);
    for (int p = 0; p <= p_scan; ++p) {
      const double t = std::log(v) + (p == 0 ? 0.0 : p * lx);
      if (t == -inf) continue;
      mass[p] = std::max(mass[p], t) + std::log1p(std::exp(std::min(mass[p], t) - std::max(mass[p], t)));
    }
  }
  std::vector<double> term(p_scan + 1);
  for (int p = 0; p <= p_scan; ++p) term[p] = log_abs_a(p) + mass[p];
  OperatorResult out;
  int m = 0;
  if (truncation) {
    m = *truncation;
    if (m < 0) throw ValidationError("truncation must be >= 0");
  } else {
    for (m = 0; m < p_scan; ++m) {
      double kept = -inf, tail = -inf;
      for (int p = 0; p <= p_scan; ++p) {
        double& acc = p <= m ? kept : tail;
        if (term[p] == -inf) continue;
        acc = std::max(acc, term[p]) + std::log1p(std::exp(std::min(acc, term[p]) - std::max(acc, term[p])));
      }
      if (tail == -inf || tail - kept <= std::log(1e-12)) {
        out.tail_ratio = tail == -inf ? 0.0 : std::exp(tail - kept);
        break;
      }
    }
  }
  if (m > p_cap_max)
    throw RefusedError("operator truncation " + std::to_string(m) + " exceeds spectral cap " + std::to_string(p_cap_max));
  out.order = m;
  for (int p = 0; p <= m; ++p) out.coeffs.push_back((p % 2 ? -1.0 : 1.0) * std::exp(log_abs_a(p)));
  out.spectrum = spec;
  for (std::size_t k = 0; k < spec.values.size(); ++k) {
    const cplx w(0.0, 2.0 * M_PI * spec.freq(0, k));
    cplx acc = 0.0, pw = 1.0;
    for (int p = 0; p <= m; ++p) {
      acc += out.coeffs[p] * pw;
      pw *= w;
    }
    out.spectrum.values[k] *= acc;
  }
  return out;
}

OperatorMapping check_operator_mapping(const SampledSignal& u, const OperatorLaw& law, const Box& region, int p_max,
                                       const Caps& caps, const DerivOptions& opts) {
  OperatorMapping r;
  r.tau_bound = law.params.tau * std::pow(2.0, law.params.sigma - 1.0);
  if (opts.method == "oracle" && u.prescribed) {
    // exact coefficients in, exact coefficients out
    const auto& ps = *u.prescribed;
    const Spectrum sp = prescribed_spectrum(ps.params, ps.grid, ps.opts);
    const auto op = apply_ultradiff_operator(sp, law, std::nullopt, opts.p_cap_max);
    r.order = op.order;
    r.fit_in = fit_envelope(spectrum_sups(sp, region, p_max), law.params.sigma, caps);
    r.fit_out = fit_envelope(spectrum_sups(op.spectrum, region, p_max), law.params.sigma, caps);
  } else {
    const auto op = apply_ultradiff_operator(forward(u), law, std::nullopt, opts.p_cap_max);
    r.order = op.order;
    const SampledSignal pu = inverse(op.spectrum, u.is_complex);
    r.fit_in = fit_envelope(derivative_sups(u, region, p_max, opts), law.params.sigma, caps);
    r.fit_out = fit_envelope(derivative_sups(pu, region, p_max, opts), law.params.sigma, caps);
  }
  r.holds = r.fit_out.feasible && r.fit_out.tau_hat <= r.tau_bound + r.tolerance;
  return r;
}

}  // namespace mlreg
