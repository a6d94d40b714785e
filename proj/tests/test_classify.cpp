#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mlreg/classify.hpp"

using namespace mlreg;

namespace {

SynthSpec kind(const std::string& k, double x0 = 0.0) {
  SynthSpec s;
  s.kind = k;
  s.x0 = {x0, 0.0};
  return s;
}

SampledSignal grid_signal(const SynthSpec& s, std::size_t n = 4096) {
  GridSpec g;
  g.n = {n, 1};
  return synth(s, g);
}

std::vector<double> powers(double lambda, int p_max) {
  std::vector<double> v;
  for (int p = 0; p <= p_max; ++p) v.push_back(std::pow(lambda, p));
  return v;
}

DerivSups oracle(const SynthSpec& s, const Box& k, int p_max) {
  DerivOptions o;
  o.method = "oracle";
  return derivative_sups(grid_signal(s), k, p_max, o);
}

}  // namespace

TEST_CASE("seminorm spot values") {
  const ClassParams cp = ClassParams::make(1.0, 2.0);
  CHECK(seminorm(std::vector<double>(8, 0.0), cp, 1.0) == 0.0);
  CHECK(seminorm(powers(1.0, 10), cp, 1.0) == doctest::Approx(1.0));
  for (double tau : {0.25, 1.0, 4.0})
    for (double sigma : {1.125, 2.0, 3.0})
      CHECK(seminorm(powers(1.0, 12), ClassParams::make(tau, sigma), 1.0) == doctest::Approx(1.0));
  std::vector<double> table{1.0, 3.0, 20.0, 400.0, 1e4, 1e6, 3e8, 1e11};
  for (double h : {0.1, 0.5, 1.0, 3.0}) {
    CHECK(seminorm(table, cp, 2.0 * h) <= seminorm(table, cp, h));
    CHECK(seminorm(table, ClassParams::make(2.0, 2.0), h) <= seminorm(table, cp, h));
  }
  std::vector<double> with_inf{1.0, INFINITY, 1.0};
  CHECK(std::isinf(seminorm(with_inf, cp, 1.0)));
  CHECK_THROWS_AS(seminorm(table, cp, 0.0), ValidationError);
}

TEST_CASE("cosine is analytic-like") {
  for (double lambda : {0.5, 1.0, 3.0, 10.0}) {
    auto fit = fit_envelope(powers(lambda, 12), 2.0);
    INFO("lambda=" << lambda);
    CHECK(fit.feasible);
    CHECK(fit.tau_hat == 0.0);
    CHECK(fit.verdict == "analytic-like");
    CHECK(fit.residual <= 1e-9);
  }
  // with oracle sups of the catalog cosine
  auto s = oracle(kind("cosine"), interval(-1, 1), 10);
  CHECK(fit_envelope(s, 2.0).tau_hat == 0.0);
}

TEST_CASE("tau_hat matches the closed-form minimal tau") {
  // S_p = p^{tau0 p^sigma} makes every constraint explicit.
  for (double tau0 : {3.0, 4.0, 5.0})
    for (double sigma : {1.5, 2.0}) {
      std::vector<double> s;
      for (int p = 0; p <= 8; ++p) s.push_back(p <= 1 ? 1.0 : std::exp(tau0 * std::pow(p, sigma) * std::log(p)));
      const Caps caps;
      double expect = 0.0;
      for (int p = 2; p <= 8; ++p) {
        const double q = std::pow(p, sigma);
        expect = std::max(expect, (std::log(s[p]) - std::log(caps.a_max) - std::log(caps.h_max) * q) / (q * std::log(p)));
      }
      auto fit = fit_envelope(s, sigma, caps);
      if (tau0 == 5.0) CHECK(expect > 0.5);
      INFO("tau0=" << tau0 << " sigma=" << sigma);
      CHECK(fit.feasible);
      CHECK(fit.tau_hat >= expect - 1e-9);
      CHECK(fit.tau_hat <= expect + 1e-3 + 1e-9);
      CHECK(fit.tau_hat <= tau0);
      // one bisection step lower is infeasible at every (a, b) within caps
      if (fit.tau_hat > 0.0) CHECK_FALSE(feasibility(s, fit.tau_hat - 1e-3, sigma, caps).feasible);
      CHECK(constraint_violation(s, fit.tau_hat, sigma, fit.log_a, fit.log_h) <= 1e-9);
      CHECK(fit.log_a <= std::log(caps.a_max) + 1e-12);
      CHECK(fit.log_h <= std::log(caps.h_max) + 1e-12);
    }
}

TEST_CASE("fit is monotone in the caps") {
  std::vector<double> s;
  for (int p = 0; p <= 9; ++p) s.push_back(p <= 1 ? 2.0 : std::exp(4.0 * p * p * std::log(p)));
  double prev = INFINITY;
  for (double h : {10.0, 100.0, 1e3, 1e4}) {
    Caps c;
    c.h_max = h;
    const double t = fit_envelope(s, 2.0, c).tau_hat;
    CHECK(t <= prev);
    prev = t;
  }
  prev = INFINITY;
  for (double a : {1e2, 1e4, 1e6, 1e8}) {
    Caps c;
    c.a_max = a;
    const double t = fit_envelope(s, 2.0, c).tau_hat;
    CHECK(t <= prev);
    prev = t;
  }
}

TEST_CASE("infeasible and diverging verdicts") {
  std::vector<double> huge(8, 1.0);
  huge[0] = 1e9;  // above A_max at p = 0, which tau cannot help
  auto f = fit_envelope(huge, 2.0);
  CHECK_FALSE(f.feasible);
  CHECK(f.verdict == "not in class at these caps");
  CHECK(std::isinf(f.tau_hat));

  // heaviside under refinement: spectral sups diverge across the jump
  GridSpec g;
  g.n = {4096, 1};
  auto h = synth(kind("heaviside"), g);
  auto d = derivative_sups(h, interval(-0.2, 0.2), 6, {});
  auto fh = fit_envelope(d, 2.0);
  CHECK(fh.verdict == "diverging");
  CHECK_FALSE(fh.feasible);
  CHECK_THROWS_AS(fit_envelope(powers(1.0, 5), 2.0), ValidationError);
  CHECK_THROWS_AS(fit_envelope(powers(1.0, 8), 1.0), ValidationError);
}

TEST_CASE("beurling mode") {
  auto f = fit_envelope(powers(3.0, 10), 2.0, {}, "beurling");
  CHECK(f.mode == "beurling");
  REQUIRE(f.h_grid.size() == 11);
  CHECK(f.h_grid.front() == 1.0);
  CHECK(f.h_grid.back() == std::ldexp(1.0, -10));
  CHECK(f.feasible);
  CHECK(f.log_h <= std::log(f.h_grid.back()) + 1e-12);
  REQUIRE(f.smallest_h);
  auto r = fit_envelope(powers(3.0, 10), 2.0);
  CHECK(f.tau_hat >= r.tau_hat);
}

TEST_CASE("embedding transfer") {
  std::vector<double> s;
  for (int p = 0; p <= 8; ++p) s.push_back(std::exp(0.6 * p * p * std::log(std::max(p, 1)) + p));
  auto e = check_embedding(s, 2.0, 0.5, 1.0);
  REQUIRE(e.cert1.feasible);
  CHECK(e.substitution_checked);
  CHECK(e.substitution_violation <= 1e-9);
  CHECK(e.holds);
  // gaussian oracle sups: feasible at sigma = 2 carries over to (0.1, 3)
  auto gs = oracle(kind("gaussian"), interval(-1, 1), 10);
  auto eg = check_embedding(gs.values, 2.0, 0.5, 1.0, {}, {3.0}, {0.1});
  REQUIRE(eg.cert1.feasible);
  REQUIRE(eg.sigma_transfers.size() == 1);
  CHECK(eg.sigma_transfers[0].feasible);
  CHECK(eg.holds);
  CHECK_THROWS_AS(check_embedding(s, 2.0, 1.0, 1.0), ValidationError);
}

TEST_CASE("algebra inequality") {
  // psi = 1 is the unit: product sups are phi's
  std::vector<double> phi{1.0, 2.0, 5.0, 20.0, 90.0, 500.0, 3000.0};
  std::vector<double> one(phi.size(), 0.0);
  one[0] = 1.0;
  auto u = check_algebra(phi, one, 2.0, 1.0, 1.0);
  for (std::size_t p = 0; p < phi.size(); ++p) CHECK(u.product_sups[p] == doctest::Approx(phi[p]));
  CHECK(u.holds);

  // cosine(1) squared at h = 1, tau = 1, sigma = 2, by explicit Leibniz sums
  auto c1 = powers(1.0, 10);
  auto r = check_algebra(c1, c1, 2.0, 1.0, 1.0);
  double lhs = 0.0;
  for (int p = 0; p <= 10; ++p) {
    const double prod = std::pow(2.0, p);
    const double den = std::pow(2.0, p * p) * (p <= 1 ? 1.0 : std::pow(double(p), double(p * p)));
    lhs = std::max(lhs, prod / den);
  }
  CHECK(r.c_h == 1.0);
  CHECK(r.lhs == doctest::Approx(lhs));
  CHECK(r.rhs == doctest::Approx(1.0));
  CHECK(r.holds);

  auto half = check_algebra(c1, c1, 2.0, 1.0, 0.5);
  CHECK(half.c_h == doctest::Approx(0.25));
  CHECK(half.holds);
  auto big = check_algebra(c1, c1, 3.0, 0.5, 4.0);
  CHECK(big.c_h == 4.0);
  CHECK(big.holds);
}

TEST_CASE("algebra over catalog oracle sups") {
  const auto k = interval(0.3, 1.0);
  std::vector<std::vector<double>> tables;
  for (const char* name : {"gaussian", "cosine", "gevrey_flat"}) tables.push_back(oracle(kind(name), k, 8).values);
  int violations = 0;
  for (const auto& a : tables)
    for (const auto& b : tables)
      for (double h : {0.25, 0.5, 1.0, 2.0, 4.0})
        for (double tau : {0.25, 1.0, 4.0})
          for (double sigma : {1.125, 2.0, 3.0}) violations += !check_algebra(a, b, sigma, tau, h).holds;
  CHECK(violations == 0);
}

TEST_CASE("infinite-order operators") {
  auto g = grid_signal(kind("gaussian"));
  const Spectrum sp = forward(g);
  OperatorLaw id;
  id.a = 1.0;
  id.l = 0.0;
  auto r = apply_ultradiff_operator(sp, id);
  CHECK(r.order == 0);
  double diff = 0.0;
  for (std::size_t k = 0; k < sp.values.size(); ++k) diff = std::max(diff, std::abs(r.spectrum.values[k] - sp.values[k]));
  CHECK(diff <= 1e-14);

  // small L: only p <= 2 matter, compare with finite differences
  OperatorLaw small;
  small.l = 0.05;
  small.params = ClassParams::make(0.25, 2.0);
  auto r2 = apply_ultradiff_operator(sp, small, 2);
  REQUIRE(r2.coeffs.size() == 3);
  CHECK(r2.coeffs[1] == doctest::Approx(-0.05));
  CHECK(r2.coeffs[2] == doctest::Approx(std::pow(0.05, 4) / 4.0));
  const double a3 = std::pow(0.05, 9) / std::pow(3.0, 4.5);
  CHECK(a3 < 1e-12);
  auto pu = inverse(r2.spectrum);
  const double dx = g.spacing[0];
  double err = 0.0;
  for (std::size_t i = 1000; i + 1000 < g.size(); ++i) {
    const double d1 = (g.samples[i + 1].real() - g.samples[i - 1].real()) / (2 * dx);
    const double d2 = (g.samples[i + 1].real() - 2 * g.samples[i].real() + g.samples[i - 1].real()) / (dx * dx);
    const double direct = g.samples[i].real() + r2.coeffs[1] * d1 + r2.coeffs[2] * d2;
    err = std::max(err, std::abs(direct - pu.samples[i].real()));
  }
  CHECK(err <= 1e-6);
  CHECK_THROWS_AS(apply_ultradiff_operator(sp, small, 30), RefusedError);
}
