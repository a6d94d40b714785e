#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mlreg/params.hpp"
#include "mlreg/signals.hpp"

namespace mlreg {

// Ball B_r(center); cutoffs are 1 on B_r and vanish outside B_2r.
struct Region {
  int dim = 1;
  Point center{0.0, 0.0};
  double r = 1.0;
  void validate() const;
};

// Unit-mass C-infinity bump exp(-4/(1 - t^2)) / Z on [-1, 1].
double bump(double t);
// n-th derivative of bump().
double bump_deriv(int n, double t);
double bump_normalizer();

// Centered cardinal B-spline of order m (m unit boxes convolved) and its
// derivatives (d <= m - 1); d = -1 gives the cumulative distribution.
double box_spline(int m, int d, double t);

// One-dimensional cutoff profile about the origin:
//   chi(s) = 1_[-R, R] * bump_a * box_w^{*m}
// Edges are separated, so every derivative is a single edge kernel term.
struct EdgeProfile {
  double R = 1.5;
  double a = 0.25;   // bump radius
  double w = 0.0625; // box width
  int m = 1;         // number of boxes
  bool smooth = true;  // false: bare indicator (test hook)

  double half_width() const { return smooth ? a + 0.5 * m * w : 0.0; }
  double plateau() const { return R - half_width(); }
  double support() const { return R + half_width(); }
  // d-th derivative of chi at s; d = 0 is the value itself.
  double eval(int d, double s) const;
  // d-th derivative (d >= 0) of the edge kernel bump_a * box_w^{*m};
  // d = -1 gives its cumulative distribution.
  double kernel(int d, double y) const;
  // sup_s |chi^(d)(s)|, found on a probe grid with golden-section refinement.
  double sup(int d, double probe_spacing = 0.0) const;
  // integral of |chi^(d)|; infinite when the bare indicator has d >= 2.
  double l1(int d) const;
};

struct CutoffOptions {
  std::string mode = "tensor";  // tensor | radial (dim 2)
  int m_max = 16;
  bool smooth = true;
};

struct CutoffMember {
  long long n = 1;
  int m = 1;         // derivative budget max(1, floor((N / tau)^(1/sigma)))
  long long k = 1;   // floor(N^(1/sigma))
  EdgeProfile profile;
  double amplitude = 1.0;  // test hook for degenerate families
};

struct CutoffFamily {
  Region region;
  ClassParams params;  // (tau, sigma) here is the admissibility pair
  std::vector<long long> n_list;
  std::string mode = "tensor";
  std::vector<CutoffMember> members;

  const CutoffMember& member(long long n) const;
  // D^alpha chi_N at x; alpha[1] is ignored in dim 1.
  double eval(std::size_t i, std::array<int, 2> alpha, const Point& x) const;
  double value(std::size_t i, const Point& x) const { return eval(i, {0, 0}, x); }
};

CutoffFamily build_admissible(const Region& region, const ClassParams& params, std::vector<long long> n_list,
                              const CutoffOptions& opts = {});

struct AdmissibilityCertificate {
  int beta_max = 4;
  bool invariants_ok = false;
  std::string invariant_failure;
  // sups[i][d] = sup |D^d chi_{N_i}| over total order d <= m + beta_max
  std::vector<std::vector<double>> sups;
  // c_per_n[i][beta] = minimal constant for N_i alone
  std::vector<std::vector<double>> c_per_n;
  std::vector<double> c_beta;
  std::vector<double> stability;  // max / min of c_per_n across N, per beta
  double stability_limit = 4.0;
  std::vector<std::string> violations;
  bool holds = false;
};

AdmissibilityCertificate verify_admissible(const CutoffFamily& family, int beta_max = 4, double probe_spacing = 0.0);

struct FourierBoundReport {
  int alpha_order = 0, beta_order = 0;
  double band_lo = 0.0, band_hi = 0.0, nyquist = 0.0;
  bool aliasing = false;
  std::vector<long long> n;
  std::vector<double> a_predicted;  // from L1 norms of derivatives
  std::vector<double> a_measured;   // smallest constant the DFT needs on the band
  std::vector<double> margin;       // max over band of measured / predicted bound
  bool holds = false;
};

// Checks |chi_N^(xi)| <= A^{alpha+1} k_N^alpha <2 pi xi>^{-alpha-beta} on the band
// (default [1, nyquist/4]) for the one-dimensional profile of each member.
FourierBoundReport fourier_bound_check(const CutoffFamily& family, int alpha_order, int beta_order,
                                       std::optional<std::pair<double, double>> band = std::nullopt,
                                       std::size_t grid_n = 4096);

struct Partition {
  std::vector<Region> cover;
  Box target;
  long long n = 1;
  int m = 1;
  long long k = 1;
  double delta = 0.0;            // collar width around the target
  std::vector<SampledSignal> members;
  double mollifier_mass = 0.0;   // quadrature
  double mollifier_mass_grid = 0.0;
  double residual = 0.0;         // max |sum - 1| on the target
  std::vector<std::vector<double>> member_c;  // per member, C_beta for beta <= 2
};

// chi_{N,k} = phi_N * chi_k on the grid of `grid`, summing to 1 on `target`.
Partition build_partition(const std::vector<Region>& cover, const ClassParams& params, long long n, const Box& target,
                          const SampledSignal& grid);

// chi_N sampled on the grid of `like`.
SampledSignal sample_cutoff(const CutoffFamily& family, std::size_t i, const SampledSignal& like);

}  // namespace mlreg
