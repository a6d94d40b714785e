#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mlreg/classify.hpp"
#include "mlreg/cutoffs.hpp"
#include "mlreg/msequence.hpp"
#include "mlreg/params.hpp"
#include "mlreg/signals.hpp"

namespace mlreg {

// Cone around `direction`; in dim 1 the direction is a sign (+-1, 0).
struct ConeSpec {
  int dim = 1;
  Point direction{1.0, 0.0};
  double half_angle = 0.2617993877991494;  // 15 degrees, dim 2 only
  double band_lo = 1.0, band_hi = 64.0;
  void validate(double nyquist) const;
  bool contains(double fx, double fy) const;
};

// Shape of the decay bound A h^n n!^fact_exp / |xi|^floor((n / n_scale)^(1/sigma)).
struct DecayForm {
  double fact_exp = 0.5;
  double n_scale = 1.0;
  static DecayForm standard(const ClassParams& p);  // tau / sigma, n_scale 1
  static DecayForm tilde(const ClassParams& p);     // tilde-tau^(-1/sigma) / sigma, n_scale tilde-tau
};

struct WfConfig {
  double r = 0.24;  // cutoff radius: chi_N = 1 on B_r(x), supported in B_2r(x)
  std::vector<long long> n_list{8, 16, 32, 64, 128, 256};
  std::optional<std::pair<double, double>> band;  // default [8 / (4 r), nyquist / 4]
  Caps caps;
  double slope_tol = 0.35;
  double window_margin = 2.0;  // slopes this close to the window's own are not evidence
  double majority = 0.6;
  double pw_order = 4.0;       // Paley-Wiener guard M
  double floor_rel = 1e-13;    // spectrum floor relative to the L1 norm of chi_N u
  double noise_factor = 10.0;  // spectrum floor in units of the propagated sample noise
  double fit_from = 0.5;       // slopes use the band above this fraction of its log-width
  int m_max = 16;
  int n_directions = 16;       // dim 2 direction grid
  double half_angle = 0.2617993877991494;
  // singular support by derivative growth
  double ss_guard = 0.3;
  std::vector<double> ss_radii{0.1, 0.05};
  int ss_p_max = 6;
  int threads = 1;
};

struct LocalizedSpectra {
  Point center{0.0, 0.0};
  double r = 0.0;
  std::vector<long long> n;
  std::vector<int> m;
  std::vector<Spectrum> spectra;  // DFT of chi_N u
  std::vector<Spectrum> windows;  // DFT of chi_N alone
  std::vector<double> l1;         // integral of |chi_N u|
  std::vector<double> l1_centred; // integral of |chi_N (u - u(center))|, what the spectra transform
  std::vector<double> noise;      // per-bin magnitude of propagated sample errors
};

// chi_N u for each member; throws RefusedError when B_2r leaves the domain.
LocalizedSpectra localized_spectra(const SampledSignal& u, const CutoffFamily& family);

struct DecayFit {
  ClassParams params;
  ConeSpec cone;
  DecayForm form;
  std::vector<long long> n_list;  // all members
  std::vector<double> index;      // n = a(N) under the enumeration
  std::vector<bool> usable;
  std::vector<int> k;             // floor((n / n_scale)^(1/sigma))
  std::vector<int> slope_cap;     // steepest slope the window itself resolves
  std::vector<double> c_n;        // sup_band ln|u_N| + min(k, cap) ln|xi|
  std::vector<double> s_n;        // regression slope of the upper envelope
  std::vector<double> deficit;    // s_N + min(k, cap)
  double log_a = 0.0, log_h = 0.0;
  bool feasible = false;
  double pw_order = 4.0;
  double pw_bound = 0.0;  // max_N sup |u_N| / <xi>^M
  bool pw_ok = true;
  std::string verdict;  // regular | singular | inconclusive
  std::string reason;

  // Envelope violation of the stored (log_a, log_h) under another factorial
  // exponent; <= 0 means the certificate carries over.
  double substitution_violation(double fact_exp) const;
};

// `enumeration` re-indexes members, N -> a(N), before the bound is applied.
DecayFit decay_fit(const LocalizedSpectra& spectra, const ClassParams& params, const ConeSpec& cone,
                   const WfConfig& config = {}, std::optional<DecayForm> form = std::nullopt,
                   std::optional<EnumMap> enumeration = std::nullopt);

struct WfEntry {
  Point x{0.0, 0.0};
  Point direction{1.0, 0.0};
  ClassParams params;
  DecayFit fit;
};

struct WfReport {
  int dim = 1;
  GridSpec grid;  // of the scanned signal
  std::vector<Point> x_grid;
  std::vector<Point> directions;
  std::vector<ClassParams> params_list;
  WfConfig config;
  std::vector<WfEntry> entries;  // x-major, then params, then direction

  const WfEntry& at(std::size_t xi, std::size_t pi, std::size_t di) const;
};

std::vector<Point> default_directions(int dim, int n_directions = 16);
std::vector<Point> line_grid(double lo, double hi, double step);
std::vector<ClassParams> default_params_grid();

WfReport wf_scan(const SampledSignal& u, const std::vector<Point>& x_grid, const std::vector<Point>& directions,
                 const std::vector<ClassParams>& params_list, const WfConfig& config = {});

// Singular support from derivative growth on shrinking neighborhoods.
struct SingsuppPoint {
  Point x{0.0, 0.0};
  std::vector<DerivSups> sups;   // one per radius that could be placed
  std::vector<bool> singular;    // per params in the report's list
  bool inconclusive = false;
  std::string reason;
};

struct SingsuppReport {
  int dim = 1;
  std::string mode = "fixed";  // fixed | grid-borderline
  std::vector<ClassParams> params_list;
  std::vector<SingsuppPoint> points;
  // fixed: detected set at params_list[0]; grid-borderline: keyed by
  // "0,1", "inf,inf", "0,inf", "inf,1".
  std::vector<Point> detected;
  std::vector<std::pair<std::string, std::vector<Point>>> borderline;
};

SingsuppReport singsupp_detect(const SampledSignal& u, const std::vector<Point>& x_grid,
                               const std::vector<ClassParams>& params_list, const std::string& mode = "fixed",
                               const WfConfig& config = {});

// Borderline sets over a (tau, sigma) grid. Each of the four wave-front
// combinations is projected and compared with the matching singular support.
struct ProjectionPair {
  std::string wf_name, ss_name;
  std::vector<Point> projected, singsupp;
  int symmetric_difference = 0;  // grid points in exactly one of the two sets
  bool holds = false;
};

struct ProjectionReport {
  int dim = 1;
  std::vector<ProjectionPair> pairs;
  std::vector<Point> x_grid;
  bool holds = false;
};

ProjectionReport projection_check(const SampledSignal& u, const std::vector<Point>& x_grid,
                                  const std::vector<ClassParams>& params_grid, const WfConfig& config = {});
ProjectionReport projection_check(const WfReport& wf, const SingsuppReport& ss);

struct RoundtripEntry {
  ClassParams params;
  bool decay_regular = false;    // (3.1) regular in every direction
  bool member = false;           // fit_envelope feasible at (tau, sigma) on the region
  bool decay_tilde_regular = false;  // tilde-enumerated decay
  bool a_pass = false, b_pass = false;
  bool inconclusive = false;
  std::vector<std::string> findings;  // implication failures
  bool agree() const { return a_pass == b_pass; }
};

struct RoundtripReport {
  Box region;
  std::vector<RoundtripEntry> entries;
  int inconclusive = 0;
  int disagreements = 0;
};

RoundtripReport roundtrip_check(const SampledSignal& u, const Box& region, const std::vector<ClassParams>& params_list,
                                const WfConfig& config = {});

// First-order operators with catalog coefficients.
struct OperatorSpec {
  std::string kind = "dx";  // dx | first_order | multiply | identity
  SynthSpec a;              // coefficient of d/dx (first_order)
  SynthSpec b;              // zeroth-order coefficient (first_order, multiply)
};

SampledSignal apply_operator(const SampledSignal& u, const OperatorSpec& op);

struct PseudolocalReport {
  OperatorSpec op;
  WfReport before, after;
  std::vector<std::string> violations;
  int excluded_inconclusive = 0;
  bool holds = false;
};

PseudolocalReport pseudolocal_check(const SampledSignal& u, const OperatorSpec& op, const std::vector<Point>& x_grid,
                                    const std::vector<ClassParams>& params_list, const WfConfig& config = {});

}  // namespace mlreg
