#include "mlreg/cutoffs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mlreg/msequence.hpp"

namespace mlreg {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

struct GaussLegendre {
  std::vector<double> x, w;
  explicit GaussLegendre(int n) : x(n), w(n) {
    for (int i = 0; i < n; ++i) {
      double z = std::cos(M_PI * (i + 0.75) / (n + 0.5)), dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        const double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      x[i] = z;
      w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }
};

const GaussLegendre& gl16() {
  static const GaussLegendre g(16);
  return g;
}

template <class F>
double integrate(F f, double lo, double hi) {
  const auto& g = gl16();
  const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  double acc = 0.0;
  for (std::size_t i = 0; i < g.x.size(); ++i) acc += g.w[i] * f(c + h * g.x[i]);
  return acc * h;
}

// N_q(frac + l), l = 0..q-1, for the uniform B-spline of order q on [0, q].
std::vector<double> spline_table(int q, double frac) {
  std::vector<double> cur{1.0}, next;
  for (int k = 2; k <= q; ++k) {
    next.assign(k, 0.0);
    for (int l = 0; l < k; ++l) {
      const double t = frac + l;
      const double left = l < k - 1 ? cur[l] : 0.0, right = l >= 1 ? cur[l - 1] : 0.0;
      next[l] = (t * left + (k - t) * right) / (k - 1);
    }
    cur.swap(next);
  }
  return cur;
}

double binom(int n, int k) { return std::round(std::exp(log_factorial(n) - log_factorial(k) - log_factorial(n - k))); }

template <class F>
std::pair<double, double> golden_max(F f, double a, double b) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a), d = a + r * (b - a), fc = f(c), fd = f(d);
  for (int it = 0; it < 60 && b - a > 1e-14 * (1.0 + std::abs(a)); ++it) {
    if (fc > fd) {
      b = d; d = c; fd = fc; c = b - r * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd; d = a + r * (b - a); fd = f(d);
    }
  }
  return fc > fd ? std::make_pair(c, fc) : std::make_pair(d, fd);
}

// Larger exponent constants concentrate the bump, so the box smoothing
// changes its derivative sups less from one N to the next.
constexpr double bump_c = 4.0;

double raw_bump(double t) { return std::abs(t) >= 1.0 ? 0.0 : std::exp(-bump_c / (1.0 - t * t)); }

}  // namespace

void Region::validate() const {
  if (dim != 1 && dim != 2) throw ValidationError("region dim must be 1 or 2");
  if (!(r > 0.0) || !std::isfinite(r)) throw ValidationError("region radius must be positive");
  if (!std::isfinite(center[0]) || !std::isfinite(center[1])) throw ValidationError("region center must be finite");
}

double bump_normalizer() {
  static const double z = [] {
    double acc = 0.0;
    const int pieces = 256;
    for (int i = 0; i < pieces; ++i) acc += integrate(raw_bump, -1.0 + 2.0 * i / pieces, -1.0 + 2.0 * (i + 1) / pieces);
    return acc;
  }();
  return z;
}

double bump(double t) { return raw_bump(t) / bump_normalizer(); }

double bump_deriv(int n, double t) {
  if (n < 0) throw ValidationError("derivative order must be >= 0");
  if (std::abs(t) >= 1.0) return 0.0;
  const double g0 = bump(t);
  if (n == 0 || g0 == 0.0) return n == 0 ? g0 : 0.0;
  // g' = phi' g with phi = -c/(1 - t^2); Leibniz on the product gives the recurrence.
  std::vector<double> phi(n + 1, 0.0), g(n + 1, 0.0);
  double fact = 1.0;
  for (int k = 1; k <= n; ++k) {
    fact *= k;
    const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
    phi[k] = -0.5 * bump_c * fact * (std::pow(1.0 - t, -k - 1) + sgn * std::pow(1.0 + t, -k - 1));
  }
  g[0] = g0;
  for (int j = 1; j <= n; ++j) {
    double acc = 0.0;
    for (int k = 0; k <= j - 1; ++k) acc += binom(j - 1, k) * phi[k + 1] * g[j - 1 - k];
    g[j] = acc;
  }
  return g[n];
}

double box_spline(int m, int d, double t) {
  if (m < 1) throw ValidationError("spline order must be >= 1");
  if (d < -1 || d > m - 1) throw ValidationError("spline derivative order out of range");
  const double u = t + 0.5 * m;
  if (d == -1) {
    if (u <= 0.0) return 0.0;
    if (u >= m) return 1.0;
    const int j = int(std::floor(u));
    const auto vals = spline_table(m + 1, u - j);
    double acc = 0.0;
    for (int l = 0; l <= std::min(j, m); ++l) acc += vals[l];
    return std::clamp(acc, 0.0, 1.0);
  }
  if (u < 0.0 || u >= m) return 0.0;
  const int q = m - d, j = int(std::floor(u));
  const auto vals = spline_table(q, u - j);
  double acc = 0.0;
  for (int i = 0; i <= d; ++i) {
    const int l = j - i;
    if (l < 0 || l >= q) continue;
    acc += ((i % 2) ? -1.0 : 1.0) * binom(d, i) * vals[l];
  }
  return acc;
}

double EdgeProfile::kernel(int d, double y) const {
  if (!smooth) throw ValidationError("bare indicator has no edge kernel");
  const double h = half_width();
  if (y <= -h) return d == -1 ? 0.0 : 0.0;
  if (y >= h) return d == -1 ? 1.0 : 0.0;
  // Derivatives go onto the box spline while it can take them, the rest onto the bump.
  const int j = d == -1 ? -1 : std::min(d, m - 1);
  const int b = d == -1 ? 0 : d - j;
  const double bscale = std::pow(a, -1.0 - b), pscale = j == -1 ? 1.0 : std::pow(w, -1.0 - j);
  auto f = [&](double s) { return bscale * bump_deriv(b, s / a) * pscale * box_spline(m, j, (y - s) / w); };
  // Breakpoints: knots of the spline factor, refined so no piece exceeds a / 8.
  std::vector<double> cuts{-a, a};
  for (int i = 0; i <= m; ++i) {
    const double s = y - w * (i - 0.5 * m);
    if (s > -a && s < a) cuts.push_back(s);
  }
  std::sort(cuts.begin(), cuts.end());
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    const int pieces = std::max(1, int(std::ceil((hi - lo) / (a / 8.0))));
    for (int p = 0; p < pieces; ++p) acc += integrate(f, lo + (hi - lo) * p / pieces, lo + (hi - lo) * (p + 1) / pieces);
  }
  return acc;
}

double EdgeProfile::eval(int d, double s) const {
  if (d < 0) throw ValidationError("derivative order must be >= 0");
  if (!smooth) return d == 0 ? (std::abs(s) <= R ? 1.0 : 0.0) : 0.0;
  const double as = std::abs(s);
  if (as >= support()) return 0.0;
  if (as <= plateau()) return d == 0 ? 1.0 : 0.0;
  if (d == 0) return std::clamp(s > 0.0 ? 1.0 - kernel(-1, s - R) : kernel(-1, s + R), 0.0, 1.0);
  return s > 0.0 ? -kernel(d - 1, s - R) : kernel(d - 1, s + R);
}

double EdgeProfile::sup(int d, double probe_spacing) const {
  if (d == 0) return 1.0;
  if (!smooth) return inf;
  const double h = half_width();
  const double step = probe_spacing > 0.0 ? probe_spacing : h / 100.0;
  const int n = std::max(8, int(std::ceil(2.0 * h / step)));
  std::vector<double> v(n + 1);
  for (int i = 0; i <= n; ++i) v[i] = std::abs(kernel(d - 1, -h + 2.0 * h * i / n));
  double best = *std::max_element(v.begin(), v.end());
  // Refine every local maximum within a factor 2 of the grid sup.
  for (int i = 1; i < n; ++i) {
    if (v[i] < v[i - 1] || v[i] < v[i + 1] || v[i] < 0.5 * best) continue;
    const double lo = -h + 2.0 * h * (i - 1) / n, hi = -h + 2.0 * h * (i + 1) / n;
    best = std::max(best, golden_max([&](double y) { return std::abs(kernel(d - 1, y)); }, lo, hi).second);
  }
  return best;
}

double EdgeProfile::l1(int d) const {
  if (d == 0) return 2.0 * R;
  if (!smooth) return d == 1 ? 2.0 : inf;
  const double h = half_width();
  const int pieces = 64;
  double acc = 0.0;
  for (int i = 0; i < pieces; ++i)
    acc += integrate([&](double y) { return std::abs(kernel(d - 1, y)); }, -h + 2.0 * h * i / pieces,
                     -h + 2.0 * h * (i + 1) / pieces);
  return 2.0 * acc;
}

namespace {

EdgeProfile make_profile(int dim, double r, int m, bool smooth) {
  EdgeProfile p;
  p.m = m;
  p.smooth = smooth;
  if (dim == 1) {
    p.R = 1.5 * r;
    p.a = r / 4.0;
    p.w = r / (4.0 * m);
  } else {
    // Tensor factors: the corner of the support square must stay inside B_2r.
    p.R = 1.2 * r;
    p.a = r / 10.0;
    p.w = r / (10.0 * m);
  }
  return p;
}

}  // namespace

const CutoffMember& CutoffFamily::member(long long n) const {
  for (const auto& m : members)
    if (m.n == n) return m;
  throw ValidationError("N = " + std::to_string(n) + " is not in the family");
}

double CutoffFamily::eval(std::size_t i, std::array<int, 2> alpha, const Point& x) const {
  const auto& mb = members.at(i);
  const double dx = x[0] - region.center[0];
  if (region.dim == 1) return mb.amplitude * mb.profile.eval(alpha[0], dx);
  const double dy = x[1] - region.center[1];
  if (mode == "radial") {
    if (alpha[0] != 0 || alpha[1] != 0) throw RefusedError("radial cutoffs are differentiated on samples only");
    return mb.amplitude * mb.profile.eval(0, std::hypot(dx, dy));
  }
  const double fx = mb.profile.eval(alpha[0], dx);
  return fx == 0.0 ? 0.0 : mb.amplitude * fx * mb.profile.eval(alpha[1], dy);
}

CutoffFamily build_admissible(const Region& region, const ClassParams& params, std::vector<long long> n_list,
                              const CutoffOptions& opts) {
  region.validate();
  if (!(params.sigma > 1.0)) throw ValidationError("admissible cutoffs need sigma > 1");
  if (!(params.tau > 0.0)) throw ValidationError("tau must be positive");
  if (n_list.empty()) throw ValidationError("n_list must be nonempty");
  if (opts.mode != "tensor" && opts.mode != "radial") throw ValidationError("mode must be tensor or radial");
  if (opts.m_max < 1) throw ValidationError("m_max must be >= 1");
  std::sort(n_list.begin(), n_list.end());
  n_list.erase(std::unique(n_list.begin(), n_list.end()), n_list.end());
  if (n_list.front() < 1) throw ValidationError("N must be positive");
  CutoffFamily f;
  f.region = region;
  f.params = params;
  f.n_list = n_list;
  f.mode = region.dim == 1 ? "tensor" : opts.mode;
  const int profile_dim = (region.dim == 2 && f.mode == "tensor") ? 2 : 1;
  for (long long n : n_list) {
    CutoffMember mb;
    mb.n = n;
    const long long budget = floor_pow(double(n) / params.tau, 1.0 / params.sigma);
    mb.m = int(std::clamp<long long>(budget, 1, opts.m_max));
    mb.k = std::max<long long>(1, floor_pow(double(n), 1.0 / params.sigma));
    mb.profile = make_profile(profile_dim, region.r, mb.m, opts.smooth);
    f.members.push_back(mb);
  }
  return f;
}

namespace {

// Central finite-difference sups of a sampled 2D function, orders up to d_max.
std::vector<double> sampled_sups_2d(const std::vector<double>& v, std::size_t nx, std::size_t ny, double h,
                                    int d_max) {
  std::vector<double> out(d_max + 1, 0.0);
  for (int d = 0; d <= d_max; ++d)
    for (int a1 = 0; a1 <= d; ++a1) {
      const int a2 = d - a1;
      std::vector<double> cur = v, tmp;
      std::size_t cx = nx, cy = ny;
      for (int k = 0; k < a1; ++k) {
        tmp.assign((cx - 1) * cy, 0.0);
        for (std::size_t i = 0; i + 1 < cx; ++i)
          for (std::size_t j = 0; j < cy; ++j) tmp[i * cy + j] = (cur[(i + 1) * cy + j] - cur[i * cy + j]) / h;
        cur.swap(tmp);
        --cx;
      }
      for (int k = 0; k < a2; ++k) {
        tmp.assign(cx * (cy - 1), 0.0);
        for (std::size_t i = 0; i < cx; ++i)
          for (std::size_t j = 0; j + 1 < cy; ++j) tmp[i * (cy - 1) + j] = (cur[i * cy + j + 1] - cur[i * cy + j]) / h;
        cur.swap(tmp);
        --cy;
      }
      for (double x : cur) out[d] = std::max(out[d], std::abs(x));
    }
  return out;
}

std::string check_invariants(const CutoffFamily& f, std::size_t i) {
  const double r = f.region.r;
  const auto& c = f.region.center;
  std::vector<Point> dirs{{1.0, 0.0}, {-1.0, 0.0}};
  if (f.region.dim == 2) dirs = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}, {M_SQRT1_2, M_SQRT1_2}, {-M_SQRT1_2, M_SQRT1_2}};
  std::ostringstream why;
  const long long n = f.members[i].n;
  for (const auto& u : dirs)
    for (int k = 0; k <= 400; ++k) {
      const double rho = 3.0 * r * k / 400.0;
      const Point x{c[0] + rho * u[0], c[1] + rho * u[1]};
      const double v = f.value(i, x);
      if (!(v >= 0.0 && v <= 1.0)) {
        why << "N=" << n << ": value " << v << " outside [0,1] at distance " << rho;
        return why.str();
      }
      if (rho <= r && v != 1.0) {
        why << "N=" << n << ": not identically 1 on B_r (value " << v << " at distance " << rho << ")";
        return why.str();
      }
      if (rho >= 2.0 * r && v != 0.0) {
        why << "N=" << n << ": nonzero outside B_2r (value " << v << " at distance " << rho << ")";
        return why.str();
      }
    }
  return {};
}

}  // namespace

AdmissibilityCertificate verify_admissible(const CutoffFamily& f, int beta_max, double probe_spacing) {
  if (beta_max < 0) throw ValidationError("beta_max must be >= 0");
  AdmissibilityCertificate cert;
  cert.beta_max = beta_max;
  // Plateau, support and range come first: a degenerate family is rejected here.
  for (std::size_t i = 0; i < f.members.size(); ++i) {
    const auto why = check_invariants(f, i);
    if (!why.empty()) {
      cert.invariant_failure = why;
      cert.violations.push_back(why);
      return cert;
    }
  }
  cert.invariants_ok = true;
  const bool radial = f.region.dim == 2 && f.mode == "radial";
  const int radial_order_cap = 6;
  for (const auto& mb : f.members) {
    const int d_max = mb.m + beta_max;
    std::vector<double> s1(d_max + 1), s(d_max + 1);
    if (radial) {
      const double h = probe_spacing > 0.0 ? probe_spacing : f.region.r / 64.0;
      const double ext = mb.profile.support();
      const std::size_t n = std::size_t(std::ceil(2.0 * ext / h)) + 1;
      std::vector<double> v(n * n);
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) v[a * n + b] = mb.profile.eval(0, std::hypot(-ext + h * a, -ext + h * b));
      const auto fd = sampled_sups_2d(v, n, n, h, std::min(d_max, radial_order_cap));
      for (int d = 0; d <= d_max; ++d) s[d] = d <= radial_order_cap ? mb.amplitude * fd[d] : std::nan("");
    } else {
      for (int d = 0; d <= d_max; ++d) s1[d] = mb.profile.sup(d, probe_spacing);
      for (int d = 0; d <= d_max; ++d) {
        if (f.region.dim == 1) {
          s[d] = s1[d];
        } else {
          s[d] = 0.0;
          for (int g = 0; g <= d; ++g) s[d] = std::max(s[d], s1[g] * s1[d - g]);
        }
        s[d] *= mb.amplitude;
      }
    }
    cert.sups.push_back(s);
    std::vector<double> c(beta_max + 1, 0.0);
    for (int b = 0; b <= beta_max; ++b)
      for (int a = 0; a <= mb.m; ++a) {
        const double sv = s[a + b];
        if (std::isnan(sv)) continue;
        const double need = sv == inf ? inf : std::exp((std::log(sv) - a * std::log(double(mb.k))) / (a + 1));
        c[b] = std::max(c[b], sv == 0.0 ? 0.0 : need);
      }
    cert.c_per_n.push_back(c);
  }
  cert.c_beta.assign(beta_max + 1, 0.0);
  cert.stability.assign(beta_max + 1, 1.0);
  bool ok = true;
  for (int b = 0; b <= beta_max; ++b) {
    double lo = inf, hi = 0.0;
    for (const auto& c : cert.c_per_n) {
      lo = std::min(lo, c[b]);
      hi = std::max(hi, c[b]);
    }
    cert.c_beta[b] = hi;
    cert.stability[b] = lo > 0.0 ? hi / lo : inf;
    std::ostringstream why;
    if (!std::isfinite(hi)) {
      why << "beta=" << b << ": derivative sup is infinite";
    } else if (hi == 0.0) {
      why << "beta=" << b << ": all constants vanish";
    } else if (!(cert.stability[b] <= cert.stability_limit)) {
      std::size_t worst = 0;
      for (std::size_t i = 0; i < cert.c_per_n.size(); ++i)
        if (cert.c_per_n[i][b] > cert.c_per_n[worst][b]) worst = i;
      why << "beta=" << b << ": C_beta varies by factor " << cert.stability[b] << " across N (largest at N="
          << f.members[worst].n << ")";
    }
    if (!why.str().empty()) {
      ok = false;
      cert.violations.push_back(why.str());
    }
  }
  cert.holds = ok;
  return cert;
}

FourierBoundReport fourier_bound_check(const CutoffFamily& f, int alpha_order, int beta_order,
                                       std::optional<std::pair<double, double>> band, std::size_t grid_n) {
  if (alpha_order < 0 || beta_order < 0) throw ValidationError("orders must be >= 0");
  if (grid_n < 64) throw ValidationError("grid_n must be >= 64");
  FourierBoundReport rep;
  rep.alpha_order = alpha_order;
  rep.beta_order = beta_order;
  const int n_ord = alpha_order + beta_order;
  bool ok = true;
  for (const auto& mb : f.members) {
    if (mb.profile.smooth && alpha_order > mb.m)
      throw ValidationError("alpha_order exceeds the budget m(N) = " + std::to_string(mb.m));
    const EdgeProfile& p = mb.profile;
    const double ext = 2.0 * std::max(p.support(), p.R);
    SampledSignal s;
    s.dim = 1;
    s.shape = {grid_n, 1};
    s.origin = {-ext, 0.0};
    s.spacing = {2.0 * ext / double(grid_n), 1.0};
    s.samples.resize(grid_n);
    for (std::size_t i = 0; i < grid_n; ++i) s.samples[i] = mb.amplitude * p.eval(0, s.coord(0, i));
    const Spectrum sp = forward(s);
    rep.nyquist = sp.nyquist(0);
    rep.band_lo = band ? band->first : 1.0;
    rep.band_hi = band ? band->second : rep.nyquist / 4.0;
    if (rep.band_hi > rep.nyquist) rep.aliasing = true;

    const double q = std::pow(2.0, 0.5 * n_ord) * std::max(mb.amplitude * p.l1(0), mb.amplitude * p.l1(n_ord));
    const double logk = std::log(double(mb.k));
    const double a_pred = std::exp((std::log(q) - alpha_order * logk) / (alpha_order + 1));
    double mx = 0.0;
    for (const auto& v : sp.values) mx = std::max(mx, std::abs(v));
    double worst = 0.0;
    for (std::size_t i = 0; i < grid_n; ++i) {
      const double xi = std::abs(sp.freq(0, i));
      const double v = std::abs(sp.values[i]);
      if (xi < rep.band_lo || xi > rep.band_hi || v < 1e-13 * mx) continue;
      const double lhs = std::log(v) + 0.5 * n_ord * std::log1p(std::pow(2.0 * M_PI * xi, 2)) - alpha_order * logk;
      worst = std::max(worst, std::exp(lhs / (alpha_order + 1)));
    }
    rep.n.push_back(mb.n);
    rep.a_predicted.push_back(a_pred);
    rep.a_measured.push_back(worst);
    const double margin = std::isfinite(a_pred) ? std::pow(worst / a_pred, alpha_order + 1) : inf;
    rep.margin.push_back(margin);
    if (!(margin <= 1.0 + 1e-6)) ok = false;
  }
  rep.holds = ok && !rep.aliasing;
  return rep;
}

SampledSignal sample_cutoff(const CutoffFamily& f, std::size_t i, const SampledSignal& like) {
  if (like.dim != f.region.dim) throw ValidationError("grid dim does not match the cutoff region");
  SampledSignal out;
  out.dim = like.dim;
  out.origin = like.origin;
  out.spacing = like.spacing;
  out.shape = like.shape;
  out.samples.assign(like.size(), 0.0);
  const auto& mb = f.members.at(i);
  if (f.region.dim == 2 && f.mode == "radial") {
    for (std::size_t a = 0; a < like.shape[0]; ++a)
      for (std::size_t b = 0; b < like.shape[1]; ++b)
        out.samples[a * like.shape[1] + b] = f.value(i, {like.coord(0, a), like.coord(1, b)});
    return out;
  }
  std::vector<double> fx(like.shape[0]), fy(like.shape[1], 1.0);
  for (std::size_t a = 0; a < like.shape[0]; ++a) fx[a] = mb.profile.eval(0, like.coord(0, a) - f.region.center[0]);
  if (like.dim == 2)
    for (std::size_t b = 0; b < like.shape[1]; ++b) fy[b] = mb.profile.eval(0, like.coord(1, b) - f.region.center[1]);
  for (std::size_t a = 0; a < like.shape[0]; ++a)
    for (std::size_t b = 0; b < like.shape[1]; ++b) out.samples[a * like.shape[1] + b] = mb.amplitude * fx[a] * fy[b];
  return out;
}

namespace {

// Forward-difference sups of sampled data along both axes, total orders <= d_max.
std::vector<double> grid_sups(const SampledSignal& s, int d_max) {
  std::vector<double> v(s.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = s.samples[i].real();
  if (s.dim == 2) return sampled_sups_2d(v, s.shape[0], s.shape[1], s.spacing[0], d_max);
  std::vector<double> out(d_max + 1, 0.0);
  for (int d = 0; d <= d_max; ++d) {
    for (double x : v) out[d] = std::max(out[d], std::abs(x));
    for (std::size_t i = 0; i + 1 < v.size(); ++i) v[i] = (v[i + 1] - v[i]) / s.spacing[0];
    v.pop_back();
  }
  return out;
}

// Convolve along one axis with a symmetric kernel of half-length h (in cells).
void convolve_axis(std::vector<double>& v, std::size_t nx, std::size_t ny, int axis, const std::vector<double>& ker) {
  const long h = long(ker.size() / 2);
  std::vector<double> out(v.size(), 0.0);
  const long n = long(axis == 0 ? nx : ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const long c = long(axis == 0 ? i : j);
      double acc = 0.0;
      for (long t = -h; t <= h; ++t) {
        const long q = c - t;
        if (q < 0 || q >= n) continue;
        acc += ker[t + h] * v[axis == 0 ? std::size_t(q) * ny + j : i * ny + std::size_t(q)];
      }
      out[i * ny + j] = acc;
    }
  v.swap(out);
}

}  // namespace

Partition build_partition(const std::vector<Region>& cover, const ClassParams& params, long long n, const Box& target,
                          const SampledSignal& grid) {
  if (cover.empty()) throw ValidationError("cover must be nonempty");
  if (!(params.sigma > 1.0) || !(params.tau > 0.0)) throw ValidationError("partition needs tau > 0 and sigma > 1");
  if (n < 1) throw ValidationError("N must be positive");
  const int dim = grid.dim;
  if (target.dim != dim) throw ValidationError("target dim does not match the grid");
  double r_min = inf;
  for (const auto& c : cover) {
    c.validate();
    if (c.dim != dim) throw ValidationError("cover region dim does not match the grid");
    r_min = std::min(r_min, c.r);
  }
  Partition part;
  part.cover = cover;
  part.target = target;
  part.n = n;
  part.m = int(std::clamp<long long>(floor_pow(double(n) / params.tau, 1.0 / params.sigma), 1, 16));
  part.k = std::max<long long>(1, floor_pow(double(n), 1.0 / params.sigma));
  const double delta = 0.05 * r_min;
  part.delta = delta;
  for (int a = 0; a < dim; ++a) {
    if (delta < 4.0 * grid.spacing[a]) throw RefusedError("grid too coarse for the partition collar");
    const double lo = grid.origin[a], hi = grid.origin[a] + grid.extent(a) - grid.spacing[a];
    if (target.lo[a] - 4.0 * delta < lo || target.hi[a] + 4.0 * delta > hi)
      throw RefusedError("target plus collar leaves the grid");
  }

  // Gap check: every sampled target point must lie in some inner ball.
  const int probes = 200;
  for (int i = 0; i <= probes; ++i)
    for (int j = 0; j <= (dim == 2 ? probes : 0); ++j) {
      const Point x{target.lo[0] + (target.hi[0] - target.lo[0]) * i / probes,
                    dim == 2 ? target.lo[1] + (target.hi[1] - target.lo[1]) * j / probes : 0.0};
      bool hit = false;
      for (const auto& c : cover) {
        const double dist = dim == 2 ? std::hypot(x[0] - c.center[0], x[1] - c.center[1]) : std::abs(x[0] - c.center[0]);
        hit = hit || dist <= c.r;
      }
      if (!hit) {
        std::ostringstream why;
        why << "cover leaves a gap at x = " << x[0];
        if (dim == 2) why << ", " << x[1];
        throw ValidationError(why.str());
      }
    }

  const std::size_t nx = grid.shape[0], ny = grid.shape[1], total = grid.size();
  // psi_k: budget-one cutoffs; eta = 1 on the target widened by 2 delta.
  std::vector<std::vector<double>> psi;
  for (const auto& c : cover) {
    const auto fam = build_admissible(c, ClassParams::make(1.0, params.sigma), {1});
    const auto smp = sample_cutoff(fam, 0, grid);
    std::vector<double> v(total);
    for (std::size_t i = 0; i < total; ++i) v[i] = smp.samples[i].real();
    psi.push_back(v);
  }
  auto axis_eta = [&](int a, std::size_t idx) {
    EdgeProfile e;
    e.R = 0.5 * (target.hi[a] - target.lo[a]) + 2.5 * delta;
    e.a = delta / 4.0;
    e.m = 1;
    e.w = delta / 4.0;
    return e.eval(0, grid.coord(a, idx) - 0.5 * (target.lo[a] + target.hi[a]));
  };
  std::vector<double> ex(nx), ey(ny, 1.0);
  for (std::size_t i = 0; i < nx; ++i) ex[i] = axis_eta(0, i);
  if (dim == 2)
    for (std::size_t j = 0; j < ny; ++j) ey[j] = axis_eta(1, j);

  // Mollifier phi_N: m boxes of width delta / (2m) and a bump of radius delta / 2.
  EdgeProfile mol;
  mol.a = delta / 2.0;
  mol.m = part.m;
  mol.w = delta / (2.0 * part.m);
  part.mollifier_mass = 0.0;
  {
    const double h = mol.half_width();
    const int pieces = 64;
    for (int i = 0; i < pieces; ++i)
      part.mollifier_mass += integrate([&](double y) { return mol.kernel(0, y); }, -h + 2.0 * h * i / pieces,
                                       -h + 2.0 * h * (i + 1) / pieces);
  }
  std::vector<std::vector<double>> kernels(dim);
  for (int a = 0; a < dim; ++a) {
    const long half = long(std::ceil(mol.half_width() / grid.spacing[a]));
    auto& ker = kernels[a];
    ker.resize(2 * half + 1);
    double sum = 0.0;
    for (long t = -half; t <= half; ++t) sum += ker[t + half] = mol.kernel(0, t * grid.spacing[a]);
    if (a == 0) part.mollifier_mass_grid = sum * grid.spacing[a];
    for (auto& k : ker) k /= sum;
  }

  std::vector<double> denom(total);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const std::size_t q = i * ny + j;
      double d = 1.0 - ex[i] * ey[j];
      for (const auto& p : psi) d += p[q];
      denom[q] = d;
    }
  std::vector<double> sum(total, 0.0);
  for (const auto& p : psi) {
    std::vector<double> chi(total);
    for (std::size_t q = 0; q < total; ++q) chi[q] = p[q] / denom[q];
    for (int a = 0; a < dim; ++a) convolve_axis(chi, nx, ny, a, kernels[a]);
    SampledSignal m;
    m.dim = dim;
    m.origin = grid.origin;
    m.spacing = grid.spacing;
    m.shape = grid.shape;
    m.samples.resize(total);
    for (std::size_t q = 0; q < total; ++q) {
      m.samples[q] = chi[q];
      sum[q] += chi[q];
    }
    part.members.push_back(std::move(m));
  }
  part.residual = 0.0;
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const Point x{grid.coord(0, i), dim == 2 ? grid.coord(1, j) : 0.0};
      if (target.contains(x)) part.residual = std::max(part.residual, std::abs(sum[i * ny + j] - 1.0));
    }
  // Members are checked on samples at low orders, where differences are reliable.
  const int d_max = 4, beta_max = 2;
  for (const auto& m : part.members) {
    const auto s = grid_sups(m, d_max);
    std::vector<double> c(beta_max + 1, 0.0);
    for (int b = 0; b <= beta_max; ++b)
      for (int a = 0; a <= std::min(part.m, d_max - b); ++a)
        if (s[a + b] > 0.0)
          c[b] = std::max(c[b], std::exp((std::log(s[a + b]) - a * std::log(double(part.k))) / (a + 1)));
    part.member_c.push_back(c);
  }
  return part;
}

}  // namespace mlreg
