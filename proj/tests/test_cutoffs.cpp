#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mlreg/cutoffs.hpp"

using namespace mlreg;

namespace {

Region region1(double c = 0.0, double r = 1.0) {
  Region g;
  g.center = {c, 0.0};
  g.r = r;
  return g;
}

const ClassParams p12 = ClassParams::make(1.0, 2.0);

SampledSignal line_grid(double lo, double hi, std::size_t n) {
  GridSpec g;
  g.n = {n, 1};
  g.lo = {lo, 0.0};
  g.hi = {hi, 0.0};
  return make_grid(g);
}

}  // namespace

TEST_CASE("bump and box spline are unit mass") {
  double acc = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) acc += bump(-1.0 + 2.0 * (i + 0.5) / n) * 2.0 / n;
  CHECK(acc == doctest::Approx(1.0).epsilon(1e-9));
  for (int m : {1, 3, 8}) {
    CHECK(box_spline(m, -1, 0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(box_spline(m, -1, 0.5 * m) == 1.0);
    CHECK(box_spline(m, 0, 0.5 * m + 1e-9) == 0.0);
  }
  EdgeProfile e;
  e.m = 5;
  e.w = 0.05;
  CHECK(e.kernel(-1, e.half_width()) == 1.0);
  CHECK(e.kernel(-1, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("plateau and support") {
  auto f = build_admissible(region1(0.3, 0.5), p12, {1, 4, 16, 64, 256});
  for (std::size_t i = 0; i < f.members.size(); ++i) {
    CHECK(f.value(i, {0.3, 0}) == 1.0);
    for (double d : {0.0, 0.25, 0.5}) {
      CHECK(f.value(i, {0.3 + d, 0}) == 1.0);
      CHECK(f.value(i, {0.3 - d, 0}) == 1.0);
    }
    for (double d : {1.0, 1.2, 5.0}) {
      CHECK(f.value(i, {0.3 + d, 0}) == 0.0);
      CHECK(f.value(i, {0.3 - d, 0}) == 0.0);
    }
    for (int k = 0; k <= 200; ++k) {
      const double v = f.value(i, {0.3 + k * 0.005, 0});
      CHECK((v >= 0.0 && v <= 1.0));
    }
  }
  CHECK(f.member(1).m == 1);
  CHECK(f.member(256).m == 16);
}

TEST_CASE("budget-one member has unit transitions") {
  auto f = build_admissible(region1(), ClassParams::make(4.0, 2.0), {4});
  REQUIRE(f.members[0].m == 1);
  CHECK(f.members[0].profile.l1(1) <= 2.0 + 1e-9);
  CHECK(f.members[0].profile.l1(1) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("second derivative at N = 16 obeys the certified bound") {
  const double r = 1.0;
  auto f = build_admissible(region1(0.0, r), p12, {16});
  const auto& mb = f.members[0];
  CHECK(mb.m == 4);
  CHECK(mb.profile.w == doctest::Approx(r / 16.0));
  auto cert = verify_admissible(f, 0);
  REQUIRE(cert.holds);
  const double c0 = cert.c_beta[0];
  // Finite-difference scan of the constructed cutoff.
  const double h = 1e-3;
  double fd_sup = 0.0;
  for (double x = 1.0; x <= 2.0; x += 2e-4) {
    const double d2 = (f.value(0, {x + h, 0}) - 2.0 * f.value(0, {x, 0}) + f.value(0, {x - h, 0})) / (h * h);
    fd_sup = std::max(fd_sup, std::abs(d2));
  }
  CHECK(fd_sup <= 16.0 * std::pow(c0, 3));
  CHECK(fd_sup == doctest::Approx(cert.sups[0][2]).epsilon(1e-3));
}

TEST_CASE("analytic derivatives match finite differences") {
  auto f = build_admissible(region1(), p12, {16});
  const double h = 1e-5;
  for (double x : {1.05, 1.3, 1.5, 1.7, -1.4}) {
    for (int d = 1; d <= 6; ++d) {
      const double fd = (f.eval(0, {d - 1, 0}, {x + h, 0}) - f.eval(0, {d - 1, 0}, {x - h, 0})) / (2 * h);
      INFO("x=" << x << " d=" << d);
      CHECK(f.eval(0, {d, 0}, {x, 0}) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("verify_admissible on a constructed family") {
  auto f = build_admissible(region1(), p12, {4, 16, 64});
  auto cert = verify_admissible(f, 3);
  CHECK(cert.invariants_ok);
  CHECK(cert.holds);
  for (int b = 0; b <= 3; ++b) {
    CHECK(std::isfinite(cert.c_beta[b]));
    CHECK(cert.stability[b] <= 2.0);
    // alpha = 0 row: the family is bounded in each C^beta seminorm.
    for (const auto& s : cert.sups) CHECK(s[b] <= cert.c_beta[b] * (1.0 + 1e-12));
  }
}

TEST_CASE("degenerate families fail the invariants first") {
  auto f = build_admissible(region1(), p12, {4, 16});
  for (auto& m : f.members) m.amplitude = 0.0;
  auto cert = verify_admissible(f, 2);
  CHECK_FALSE(cert.invariants_ok);
  CHECK_FALSE(cert.holds);
  CHECK(cert.invariant_failure.find("B_r") != std::string::npos);
  CHECK(cert.c_beta.empty());
}

TEST_CASE("unstable constructions are reported") {
  auto f = build_admissible(region1(), p12, {4, 256});
  // Shrinking the bump with N breaks N-independence of C_beta.
  f.members[1].profile.a /= 8.0;
  auto cert = verify_admissible(f, 2);
  CHECK(cert.invariants_ok);
  CHECK_FALSE(cert.holds);
  REQUIRE_FALSE(cert.violations.empty());
  CHECK(cert.violations[0].find("N=256") != std::string::npos);
}

TEST_CASE("argument validation") {
  CHECK_THROWS_AS(build_admissible(region1(), ClassParams::make(1.0, 1.0), {4}), ValidationError);
  CHECK_THROWS_AS(build_admissible(region1(), p12, {}), ValidationError);
  CHECK_THROWS_AS(build_admissible(region1(0.0, -1.0), p12, {4}), ValidationError);
  CHECK_THROWS_AS(build_admissible(region1(), p12, {0}), ValidationError);
}

TEST_CASE("fourier bounds") {
  auto f = build_admissible(region1(), p12, {4, 16, 64});
  auto r0 = fourier_bound_check(f, 0, 0);
  CHECK(r0.holds);
  for (double a : r0.a_measured) CHECK(a <= 2.0 * f.region.r * 1.5);
  for (const auto& mb : f.members) {
    auto g = build_admissible(region1(), p12, {mb.n});
    auto r = fourier_bound_check(g, mb.m, 2);
    INFO("N=" << mb.n);
    CHECK(r.holds);
    CHECK(r.band_lo == 1.0);
    CHECK(r.band_hi == doctest::Approx(r.nyquist / 4.0));
  }
  CutoffOptions bare;
  bare.smooth = false;
  auto ind = build_admissible(region1(), p12, {16}, bare);
  CHECK(fourier_bound_check(ind, 0, 0).holds);
  CHECK(fourier_bound_check(ind, 0, 1).holds);
  CHECK_FALSE(fourier_bound_check(ind, 0, 2).holds);
  CHECK_FALSE(fourier_bound_check(ind, 1, 1).holds);
  // The measured decay of the bare indicator is only <xi>^-1.
  auto r3 = fourier_bound_check(ind, 0, 3);
  CHECK(r3.a_measured[0] > 100.0);
  auto alias = fourier_bound_check(f, 0, 0, std::make_pair(1.0, 1e6));
  CHECK(alias.aliasing);
  CHECK_FALSE(alias.holds);
}

TEST_CASE("dim-2 tensor cutoffs") {
  Region g;
  g.dim = 2;
  g.center = {0.5, -0.5};
  g.r = 0.5;
  auto f = build_admissible(g, p12, {4, 16, 64});
  for (std::size_t i = 0; i < f.members.size(); ++i) {
    CHECK(f.value(i, {0.5, -0.5}) == 1.0);
    CHECK(f.value(i, {0.5 + 0.5 * M_SQRT1_2, -0.5 + 0.5 * M_SQRT1_2}) == 1.0);
    // Corners of the support square stay inside B_2r.
    const double s = f.members[i].profile.support();
    CHECK(s * M_SQRT2 <= 2.0 * g.r);
    CHECK(f.value(i, {0.5 + 0.99 * M_SQRT2 * g.r, -0.5 + 0.99 * M_SQRT2 * g.r}) == 0.0);
  }
  auto cert = verify_admissible(f, 2);
  CHECK(cert.holds);
  // Tensor derivatives factor exactly.
  const Point x{0.5 + 0.62, -0.5 + 0.3};
  CHECK(f.eval(1, {2, 1}, x) == doctest::Approx(f.members[1].profile.eval(2, 0.62) * f.members[1].profile.eval(1, 0.3)));
  CutoffOptions rad;
  rad.mode = "radial";
  auto fr = build_admissible(g, p12, {4, 16}, rad);
  CHECK(fr.value(0, {0.5, -0.5}) == 1.0);
  CHECK(fr.value(0, {0.5 + 0.99, -0.5}) == 0.0);
  CHECK_THROWS_AS(fr.eval(0, {1, 0}, {0.5, -0.5}), RefusedError);
  auto rc = verify_admissible(fr, 1, g.r / 48.0);
  CHECK(rc.invariants_ok);
  CHECK(std::isfinite(rc.c_beta[0]));
}

TEST_CASE("sampled cutoffs on a grid") {
  auto f = build_admissible(region1(0.25, 0.3), p12, {16});
  auto grid = line_grid(-2.0, 2.0, 1024);
  auto s = sample_cutoff(f, 0, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double d = std::abs(grid.coord(0, i) - 0.25);
    if (d <= 0.3) CHECK(s.samples[i].real() == 1.0);
    if (d >= 0.6) CHECK(s.samples[i].real() == 0.0);
  }
}

TEST_CASE("partition of unity") {
  auto grid = line_grid(-4.0, 4.0, 8192);
  const ClassParams q = ClassParams::make(1.0, 2.0);
  SUBCASE("single region") {
    auto part = build_partition({region1(0.0, 1.0)}, q, 16, interval(-0.8, 0.8), grid);
    REQUIRE(part.members.size() == 1);
    CHECK(part.residual <= 1e-12);
    for (const auto& v : part.members[0].samples) CHECK((v.real() >= -1e-15 && v.real() <= 1.0 + 1e-15));
  }
  SUBCASE("two overlapping intervals") {
    auto part = build_partition({region1(-0.5, 0.7), region1(0.6, 0.6)}, q, 64, interval(-1.0, 1.0), grid);
    REQUIRE(part.members.size() == 2);
    CHECK(part.residual <= 1e-10);
    CHECK(part.mollifier_mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(part.m == 8);
    for (const auto& c : part.member_c)
      for (double v : c) CHECK((std::isfinite(v) && v > 0.0));
    // each member vanishes far from its own region
    CHECK(part.members[0].samples[std::size_t((2.5 + 4.0) / 8.0 * 8192)].real() == 0.0);
  }
  SUBCASE("gaps are rejected") {
    CHECK_THROWS_AS(build_partition({region1(-0.8, 0.3), region1(0.8, 0.3)}, q, 16, interval(-1.0, 1.0), grid),
                    ValidationError);
  }
  SUBCASE("dim 2") {
    GridSpec g2;
    g2.dim = 2;
    g2.n = {512, 512};
    g2.lo = {-2.0, -2.0};
    g2.hi = {2.0, 2.0};
    auto grid2 = make_grid(g2);
    Region a, b;
    a.dim = b.dim = 2;
    a.center = {-0.4, 0.0};
    b.center = {0.4, 0.0};
    a.r = b.r = 0.7;
    Box t;
    t.dim = 2;
    t.lo = {-0.6, -0.3};
    t.hi = {0.6, 0.3};
    auto part = build_partition({a, b}, q, 16, t, grid2);
    CHECK(part.residual <= 1e-10);
  }
}
