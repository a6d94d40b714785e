#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mlreg/msequence.hpp"

using namespace mlreg;

namespace {

// Independent oracle: ln M_p = ln(p^tau) * p^sigma.
double oracle_log_m(double tau, double sigma, int p) {
  if (p <= 1) return 0.0;
  return std::log(std::pow(double(p), tau)) * std::pow(double(p), sigma);
}

const double kTaus[] = {0.25, 0.5, 1.0, 2.0, 4.0};
const double kSigmas[] = {9.0 / 8.0, 1.5, 2.0, 3.0};

}  // namespace

TEST_CASE("params") {
  auto p = ClassParams::make(2.0, 2.0);
  REQUIRE(p.tau_tilde.has_value());
  CHECK(*p.tau_tilde == doctest::Approx(4.0));
  CHECK_FALSE(ClassParams::make(1.0, 1.0).tau_tilde.has_value());
  CHECK_THROWS_AS(ClassParams::make(0.0, 2.0), ValidationError);
  CHECK_THROWS_AS(ClassParams::make(1.0, 0.5), ValidationError);
  CHECK_THROWS_AS(ClassParams::detector(1.0, 1.0), ValidationError);
}

TEST_CASE("log_m values") {
  auto p = ClassParams::make(1.0, 2.0);
  CHECK(log_m(p, 2) == doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-14));
  CHECK(log_m(p, 2) == doctest::Approx(2.77259).epsilon(1e-5));
  CHECK(log_m(p, 1) == 0.0);
  CHECK(log_m(p, 0) == 0.0);
  for (double t : kTaus)
    for (double s : kSigmas)
      for (int q = 0; q <= 5; ++q)
        CHECK(log_m(ClassParams::make(t, s), q) == doctest::Approx(oracle_log_m(t, s, q)).epsilon(1e-12));
}

TEST_CASE("log_m monotone in tau and sigma") {
  for (int p = 2; p < 40; ++p) {
    CHECK(log_m(ClassParams::make(1.0, 2.0), p) < log_m(ClassParams::make(1.5, 2.0), p));
    CHECK(log_m(ClassParams::make(1.0, 2.0), p) < log_m(ClassParams::make(1.0, 2.5), p));
  }
  auto s = log_sequence(ClassParams::make(0.5, 1.5), 100);
  CHECK(s.log_values[0] == 0.0);
  CHECK(s.log_values[1] == 0.0);
  for (int p = 2; p <= 100; ++p) CHECK(s.log_values[p] > s.log_values[p - 1]);
}

TEST_CASE("M1") {
  auto c = certify_m1(ClassParams::make(1.0, 2.0), 10);
  CHECK(c.holds);
  CHECK(c.tables["slack"][2] == doctest::Approx(9 * std::log(3.0) - 8 * std::log(2.0)).epsilon(1e-12));
  CHECK(c.tables["slack"][2] == doctest::Approx(4.343).epsilon(1e-3));
  CHECK(c.tables["slack"][1] == doctest::Approx(4 * std::log(2.0)));
  CHECK(certify_m1(ClassParams::make(0.5, 3.0), 200).holds);
}

TEST_CASE("M2 tilde prime") {
  auto p = ClassParams::make(1.0, 2.0);
  auto c = certify_m2_tilde_prime(p, 3, 200);
  CHECK(c.holds);
  const auto& lc = c.tables["log_C_q"];
  CHECK(lc[0] == 0.0);
  // p = 1, q = 1 constraint alone forces C_1 >= 16.
  CHECK(lc[1] >= std::log(16.0) - 1e-12);
  // independent sweep of the argmax
  double best = 0.0;
  for (int q = 1; q <= 200; ++q) best = std::max(best, (oracle_log_m(1, 2, q + 1) - oracle_log_m(1, 2, q)) / (q * q));
  CHECK(lc[1] == doctest::Approx(best).epsilon(1e-10));
  CHECK(std::isfinite(lc[3]));
  CHECK_THROWS_AS(certify_m2_tilde_prime(p, 0, 10), ValidationError);
}

TEST_CASE("M2 tilde") {
  auto p = ClassParams::make(1.0, 2.0);
  auto c = certify_m2_tilde(p, 100);
  CHECK(c.holds);
  CHECK(c.constants["C"] >= 4.0 - 1e-12);
  CHECK(std::isfinite(c.constants["C"]));
  // symmetry of the per-pair margin
  auto wide = ClassParams::make(2.0, 2.0);
  for (int a = 1; a < 6; ++a)
    for (int b = 1; b < 6; ++b) {
      double m1 = log_m(p, a + b) - log_m(wide, a) - log_m(wide, b);
      double m2 = log_m(p, b + a) - log_m(wide, b) - log_m(wide, a);
      CHECK(m1 == doctest::Approx(m2));
    }
}

TEST_CASE("M3 prime") {
  auto c = certify_m3_prime(ClassParams::make(1.0, 2.0), 50);
  CHECK(c.holds);
  CHECK(c.tables["terms"][2] == doctest::Approx(0.0625).epsilon(1e-14));
  CHECK(c.tables["partial_sums"][3] == doctest::Approx(1.0 + 0.0625 + 16.0 / 19683.0).epsilon(1e-14));
  CHECK(c.tables["partial_sums"][3] == doctest::Approx(1.06331).epsilon(1e-5));
  CHECK(c.tables["terms"][3] == doctest::Approx(8.13e-4).epsilon(1e-3));
  CHECK(c.tables["dominating"][3] == doctest::Approx(1.0 / 36.0).epsilon(1e-12));
  const auto& ps = c.tables["partial_sums"];
  for (size_t i = 2; i < ps.size(); ++i) CHECK(ps[i] >= ps[i - 1]);
  CHECK(c.constants["upper_bound"] >= ps.back());
  CHECK(std::isfinite(c.constants["upper_bound"]));
}

TEST_CASE("Stirling bounds") {
  auto p = ClassParams::make(1.0, 2.0);
  auto c = certify_stirling_bounds(p, 2);
  // p = 2 allows B >= sqrt(24)/16, p = 1 forces B >= 1
  CHECK(std::sqrt(24.0) / 16.0 == doctest::Approx(0.306).epsilon(1e-2));
  CHECK(c.constants["B"] >= 1.0 - 1e-15);
  CHECK(c.constants["C"] == doctest::Approx(std::exp(0.5)));
  CHECK(certify_stirling_bounds(ClassParams::make(2.0, 2.0), 150).holds);
  CHECK(floor_pow(4.0, 1.5) == 8);
  CHECK(floor_pow(3.0, 2.0) == 9);
}

TEST_CASE("all certificates hold on the default grid") {
  for (double t : kTaus)
    for (double s : kSigmas) {
      auto certs = certify_all(ClassParams::make(t, s), 200, 10);
      for (const auto& c : certs) {
        INFO(c.name << " tau=" << t << " sigma=" << s);
        CHECK(c.holds);
      }
    }
}

TEST_CASE("enumeration") {
  Profile prof;
  for (long long n = 1; n <= 20; ++n) prof.points.push_back({n, 0.3 * double(n * n)});
  prof.log_closed_form = [](double x) { return 0.3 * x * x; };
  auto same = enumerate_profile(prof, EnumMap::identity());
  for (size_t i = 0; i < prof.points.size(); ++i) CHECK(same.points[i].log_value == doctest::Approx(prof.points[i].log_value).epsilon(1e-15));
  auto doubled = enumerate_profile(prof, EnumMap::scale(2.0));
  CHECK(doubled.points[2].log_value == doctest::Approx(prof.points[5].log_value));

  auto m1 = EnumMap::scale(1.5), m2 = EnumMap::power(2.0, 0.5);
  auto seq = enumerate_profile(enumerate_profile(prof, m1), m2);
  auto one = enumerate_profile(prof, EnumMap::compose(m1, m2));
  for (size_t i = 0; i < prof.points.size(); ++i)
    CHECK(seq.points[i].log_value == doctest::Approx(one.points[i].log_value).epsilon(1e-13));

  CHECK_THROWS_AS(EnumMap::scale(-1.0), ValidationError);
  CHECK_THROWS_AS(EnumMap::power(1.0, -1.0), ValidationError);

  Profile samples;
  for (long long n = 1; n <= 8; ++n) samples.points.push_back({n, double(n)});
  auto root = enumerate_profile(samples, EnumMap::power(1.0, 0.5));
  CHECK(root.interpolated);
  CHECK(root.points[3].log_value == doctest::Approx(2.0));
  CHECK(root.points[1].log_value == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(enumerate_profile(samples, EnumMap::scale(2.0)), ValidationError);
}

TEST_CASE("enumeration N -> N/tau reproduces the transformed decay bound") {
  const double tau = 2.0, sigma = 2.0, h = 1.3, xi = 5.0;
  Profile prof;
  auto f = [&](double n) {
    return n * std::log(h) + (tau / sigma) * n * std::log(n) - std::floor(std::pow(n, 1.0 / sigma)) * std::log(xi);
  };
  for (long long n = 1; n <= 30; ++n) prof.points.push_back({n, f(double(n))});
  prof.log_closed_form = f;
  auto out = enumerate_profile(prof, EnumMap::scale(1.0 / tau));
  for (const auto& pt : out.points) {
    const double n = double(pt.n);
    const double expect = (n / tau) * std::log(h) + (n / sigma) * std::log(n / tau) -
                          std::floor(std::pow(n / tau, 1.0 / sigma)) * std::log(xi);
    CHECK(pt.log_value == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("associated weight") {
  auto p = ClassParams::make(1.0, 2.0);
  CHECK(associated_weight(p, 1.0) == 0.0);
  CHECK(associated_weight(p, 0.5) == 0.0);
  const double t = std::exp(4.0);
  double brute = 0.0;
  for (int q = 0; q < 200; ++q) brute = std::max(brute, q * 4.0 - oracle_log_m(1, 2, q));
  CHECK(associated_weight(p, t) == doctest::Approx(brute));
  CHECK(associated_weight(p, t) >= 8.0 - 4.0 * std::log(2.0));
  double prev = 0.0;
  for (double x = 1.0; x < 1e6; x *= 1.7) {
    double v = associated_weight(p, x);
    CHECK(v >= prev);
    CHECK(associated_weight(ClassParams::make(2.0, 2.0), x) <= v);
    prev = v;
  }
  CHECK_THROWS_AS(associated_weight(p, 0.0), ValidationError);
}
