#include <algorithm>
#include <cmath>
#include <array>
#include <limits>
#include <map>
#include <numbers>

#include "mlreg/signals.hpp"

namespace mlreg {

using std::numbers::pi;

bool DerivSups::any_diverging(int p_lo, int p_hi) const {
  for (int p = std::max(p_lo, 0); p <= std::min(p_hi, int(diverging.size()) - 1); ++p)
    if (diverging[p]) return true;
  return false;
}

namespace {

// d^p/du^p exp(-u^2/(2w^2)) via probabilists' Hermite polynomials.
double gaussian_deriv(int p, double u, double w) {
  const double t = u / w;
  double h0 = 1.0, h1 = t;
  double hp = p == 0 ? h0 : h1;
  for (int n = 1; n < p; ++n) {
    const double h2 = t * h1 - double(n) * h0;
    h0 = h1;
    h1 = h2;
    hp = h2;
  }
  const double sign = (p % 2) ? -1.0 : 1.0;
  return sign * std::pow(w, -p) * hp * std::exp(-0.5 * t * t);
}

// d^p/du^p exp(-u^-a) for u > 0.
double gevrey_deriv(int p, double u, double a) {
  if (u <= 0.0) return 0.0;
  std::vector<double> c{1.0};  // c[j]: coefficient of u^-(j(a+1) + (order - j))
  for (int order = 0; order < p; ++order) {
    std::vector<double> nc(c.size() + 1, 0.0);
    for (std::size_t j = 0; j < c.size(); ++j) {
      const double e = double(j) * (a + 1.0) + double(order - int(j));
      nc[j] += -e * c[j];
      nc[j + 1] += a * c[j];
    }
    c = std::move(nc);
  }
  const double lu = std::log(u), base = -std::pow(u, -a);
  double sum = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (c[j] == 0.0) continue;
    const double e = double(j) * (a + 1.0) + double(p - int(j));
    const double mag = std::exp(std::log(std::abs(c[j])) - e * lu + base);
    sum += c[j] > 0.0 ? mag : -mag;
  }
  return sum;
}

double edge_u(const SynthSpec& sp, const Point& x, int dim, double& n0, double& n1) {
  if (dim == 1) {
    n0 = 1.0;
    n1 = 0.0;
    return x[0] - sp.x0[0];
  }
  const double nn = std::hypot(sp.normal[0], sp.normal[1]);
  n0 = sp.normal[0] / nn;
  n1 = sp.normal[1] / nn;
  return (x[0] - sp.x0[0]) * n0 + (x[1] - sp.x0[1]) * n1;
}

}  // namespace

double oracle_derivative(const SynthSpec& sp, std::array<int, 2> alpha, const Point& x, int dim) {
  const std::string& k = sp.kind;
  const int p = alpha[0] + alpha[1];
  if (dim == 1 && alpha[1] != 0) return 0.0;
  if (k == "gaussian") {
    double v = sp.amplitude * gaussian_deriv(alpha[0], x[0] - sp.x0[0], sp.width);
    if (dim == 2) v *= gaussian_deriv(alpha[1], x[1] - sp.x0[1], sp.width);
    return v;
  }
  if (k == "cosine") {
    if (alpha[1] != 0) return 0.0;
    return sp.amplitude * std::pow(sp.lambda, p) * std::cos(sp.lambda * (x[0] - sp.x0[0]) + 0.5 * pi * p);
  }
  if (k == "heaviside" || k == "kink" || k == "gevrey_flat") {
    double n0, n1;
    const double u = edge_u(sp, x, dim, n0, n1);
    const double dir = std::pow(n0, alpha[0]) * std::pow(n1, alpha[1]);
    if (k == "gevrey_flat") {
      if (dim != 1) throw RefusedError("no oracle for 2D gevrey_flat");
      return sp.amplitude * gevrey_deriv(p, u, sp.a);
    }
    if (p >= 1 && u == 0.0) throw RefusedError("derivative undefined at the singular point");
    if (k == "heaviside") return p == 0 ? sp.amplitude * (u > 0.0 ? 1.0 : (u < 0.0 ? 0.0 : 0.5)) : 0.0;
    if (p == 0) return sp.amplitude * std::abs(u);
    if (p == 1) return sp.amplitude * (u > 0.0 ? 1.0 : -1.0) * dir;
    return 0.0;
  }
  if (k == "sum") {
    double v = 0.0;
    for (const auto& part : sp.parts) v += oracle_derivative(part, alpha, x, dim);
    return v;
  }
  throw RefusedError("no closed-form derivatives for kind " + k);
}

namespace {

bool touches_singularity(const SynthSpec& sp, const Box& k, int dim) {
  if (sp.kind == "sum") {
    for (const auto& part : sp.parts)
      if (touches_singularity(part, k, dim)) return true;
    return false;
  }
  if (sp.kind != "heaviside" && sp.kind != "kink") return false;
  if (dim == 1) return k.lo[0] <= sp.x0[0] && sp.x0[0] <= k.hi[0];
  // conservative: edge line meets the box if the corner values of u change sign
  double n0, n1, smin = 1e300, smax = -1e300;
  for (double cx : {k.lo[0], k.hi[0]})
    for (double cy : {k.lo[1], k.hi[1]}) {
      const double u = edge_u(sp, Point{cx, cy}, 2, n0, n1);
      smin = std::min(smin, u);
      smax = std::max(smax, u);
    }
  return smin <= 0.0 && smax >= 0.0;
}

// Maximize f on [a, b] by golden section, starting from the best of the
// endpoints and the midpoint.
template <class F>
std::pair<double, double> golden_max(F f, double a, double b) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a), d = a + r * (b - a), fc = f(c), fd = f(d);
  for (int it = 0; it < 40 && b - a > 1e-13 * (1.0 + std::abs(a)); ++it) {
    if (fc > fd) {
      b = d; d = c; fd = fc; c = b - r * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd; d = a + r * (b - a); fd = f(d);
    }
  }
  return fc > fd ? std::make_pair(c, fc) : std::make_pair(d, fd);
}

double oracle_sup_1d(const SynthSpec& sp, int p, const Box& k) {
  auto f = [&](double x) { return std::abs(oracle_derivative(sp, {p, 0}, Point{x, 0.0}, 1)); };
  const int m = 4000;
  const double a = k.lo[0], b = k.hi[0];
  if (b == a) return f(a);
  const double h = (b - a) / m;
  int best_i = 0;
  double best = -1.0;
  for (int i = 0; i <= m; ++i) {
    const double v = f(a + h * i);
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  // golden-section refinement around the best sample
  double lo = a + h * std::max(0, best_i - 1), hi = a + h * std::min(m, best_i + 1);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 80; ++it) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - g * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + g * (hi - lo);
      fd = f(d);
    }
  }
  return std::max({best, fc, fd});
}

double oracle_sup_2d(const SynthSpec& sp, int p, const Box& k) {
  const int m = 200;
  double best = 0.0;
  const double hx = (k.hi[0] - k.lo[0]) / m, hy = (k.hi[1] - k.lo[1]) / m;
  for (int a1 = 0; a1 <= p; ++a1) {
    auto f = [&](double x, double y) { return std::abs(oracle_derivative(sp, {a1, p - a1}, {x, y}, 2)); };
    double bx = k.lo[0], by = k.lo[1], bv = -1.0;
    for (int i = 0; i <= m; ++i)
      for (int j = 0; j <= m; ++j) {
        const double x = k.lo[0] + hx * i, y = k.lo[1] + hy * j, v = f(x, y);
        if (v > bv) bx = x, by = y, bv = v;
      }
    for (int pass = 0; pass < 3; ++pass) {
      auto mx = golden_max([&](double t) { return f(t, by); }, std::max(k.lo[0], bx - hx), std::min(k.hi[0], bx + hx));
      if (mx.second > bv) bx = mx.first, bv = mx.second;
      auto my = golden_max([&](double t) { return f(bx, t); }, std::max(k.lo[1], by - hy), std::min(k.hi[1], by + hy));
      if (my.second > bv) by = my.first, bv = my.second;
    }
    best = std::max(best, bv);
  }
  return best;
}

// Gaussian-smoothed indicator of [lo - g/2, hi + g/2] with width s = g/12:
// K and the complement of its g-neighborhood both sit six widths from an edge.
std::vector<double> erf_window(double lo, double hi, double g, double x0, double dx, std::size_t n) {
  const double s = g / 12.0, a = lo - 0.5 * g, b = hi + 0.5 * g;
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = x0 + dx * double(i);
    w[i] = 0.5 * (std::erf((x - a) / s) - std::erf((x - b) / s));
  }
  return w;
}

// Trigonometric interpolant of a spectrum at an arbitrary point.
struct Interpolant {
  std::vector<std::array<double, 2>> xi;
  std::vector<cplx> c;
  explicit Interpolant(const Spectrum& sp) {
    const double vol = sp.freq_spacing[0] * (sp.dim == 2 ? sp.freq_spacing[1] : 1.0);
    for (std::size_t i = 0; i < sp.shape[0]; ++i)
      for (std::size_t j = 0; j < sp.shape[1]; ++j) {
        const cplx v = sp.values[i * sp.shape[1] + j];
        if (v == cplx(0.0, 0.0)) continue;
        xi.push_back({sp.freq(0, i), sp.dim == 2 ? sp.freq(1, j) : 0.0});
        c.push_back(v * vol);
      }
  }
  double abs_at(double x, double y) const {
    cplx acc = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) acc += c[k] * std::polar(1.0, 2.0 * pi * (xi[k][0] * x + xi[k][1] * y));
    return std::abs(acc);
  }
};

bool inside(const Box& k, const SampledSignal& s, std::size_t i, std::size_t j) {
  const double x = s.coord(0, i), tx = 1e-9 * s.spacing[0];
  if (x < k.lo[0] - tx || x > k.hi[0] + tx) return false;
  if (s.dim == 1) return true;
  const double y = s.coord(1, j), ty = 1e-9 * s.spacing[1];
  return y >= k.lo[1] - ty && y <= k.hi[1] + ty;
}

// sup over K of |D^alpha| of the interpolant, max over |alpha| = p; `half`
// drops the upper half of the band.
double spectral_sup(const Spectrum& sp, int p, bool half, const Box& k) {
  const int dim = sp.dim;
  double best = 0.0;
  std::vector<std::size_t> in_k;
  for (int a1 = 0; a1 <= (dim == 2 ? p : 0); ++a1) {
    const int ax = dim == 2 ? a1 : p, ay = dim == 2 ? p - a1 : 0;
    Spectrum d = sp;
    for (std::size_t i = 0; i < sp.shape[0]; ++i)
      for (std::size_t j = 0; j < sp.shape[1]; ++j) {
        const double fx = sp.freq(0, i), fy = dim == 2 ? sp.freq(1, j) : 0.0;
        cplx& v = d.values[i * sp.shape[1] + j];
        if (half && (std::abs(fx) > 0.5 * sp.nyquist(0) || (dim == 2 && std::abs(fy) > 0.5 * sp.nyquist(1)))) {
          v = 0.0;
          continue;
        }
        v *= std::pow(cplx(0.0, 2.0 * pi * fx), ax) * std::pow(cplx(0.0, 2.0 * pi * fy), ay);
      }
    const SampledSignal back = inverse(d, true);
    if (in_k.empty()) {
      for (std::size_t i = 0; i < back.shape[0]; ++i)
        for (std::size_t j = 0; j < back.shape[1]; ++j)
          if (inside(k, back, i, j)) in_k.push_back(i * back.shape[1] + j);
      if (in_k.empty()) throw ValidationError("region contains no grid points");
    }
    std::size_t top = in_k[0];
    for (auto idx : in_k)
      if (std::abs(back.samples[idx]) > std::abs(back.samples[top])) top = idx;
    best = std::max(best, std::abs(back.samples[top]));
    // Grid maxima miss the continuous sup by O(dx^2); refine off-grid.
    const Interpolant f(d);
    double x = back.coord(0, top / back.shape[1]), y = dim == 2 ? back.coord(1, top % back.shape[1]) : 0.0;
    for (int pass = 0; pass < (dim == 2 ? 2 : 1); ++pass)
      for (int a = 0; a < dim; ++a) {
        double& c = a == 0 ? x : y;
        const double lo = std::max(k.lo[a], c - back.spacing[a]), hi = std::min(k.hi[a], c + back.spacing[a]);
        if (!(hi > lo)) continue;
        auto m = golden_max([&](double t) { return a == 0 ? f.abs_at(t, y) : f.abs_at(x, t); }, lo, hi);
        if (m.second > f.abs_at(x, y)) c = m.first;
        best = std::max(best, m.second);
      }
  }
  return best;
}

}  // namespace

double dft_noise_level(const SampledSignal& s) {
  double l1 = 0.0;
  for (const auto& v : s.samples) l1 += std::abs(v);
  const double cell = s.spacing[0] * (s.dim == 2 ? s.spacing[1] : 1.0);
  return 4.0 * std::numeric_limits<double>::epsilon() * l1 * cell;
}

std::vector<double> amplified_noise(const Spectrum& spec, double eta, int p_hi) {
  std::vector<double> out(p_hi + 1, 0.0);
  const double cell = spec.freq_spacing[0] * (spec.dim == 2 ? spec.freq_spacing[1] : 1.0);
  for (std::size_t i = 0; i < spec.shape[0]; ++i)
    for (std::size_t j = 0; j < spec.shape[1]; ++j) {
      if (spec.values[i * spec.shape[1] + j] == cplx(0.0, 0.0)) continue;
      double xi = std::abs(spec.freq(0, i));
      if (spec.dim == 2) xi = std::hypot(xi, spec.freq(1, j));
      double amp = eta * cell;
      for (int p = 0; p <= p_hi; ++p) {
        out[p] += amp;
        amp *= 2.0 * pi * xi;
      }
    }
  return out;
}

DerivSups derivative_sups(const SampledSignal& s, const Box& k, int p_max, const DerivOptions& opts) {
  s.validate();
  if (p_max < 0) throw ValidationError("p_max must be >= 0");
  if (k.dim != s.dim) throw ValidationError("region dim does not match signal dim");
  for (int a = 0; a < s.dim; ++a)
    if (!(k.hi[a] >= k.lo[a])) throw ValidationError("region must have lo <= hi");
  DerivSups out;
  out.p_max = p_max;
  out.region = k;
  out.method = opts.method;
  out.values.assign(p_max + 1, 0.0);

  if (opts.method == "oracle" && s.prescribed) {
    const auto& ps = *s.prescribed;
    return spectrum_sups(prescribed_spectrum(ps.params, ps.grid, ps.opts), k, p_max);
  }
  if (opts.method == "oracle") {
    if (!s.source) throw RefusedError("oracle sups need a catalog signal");
    if (touches_singularity(*s.source, k, s.dim)) throw RefusedError("region contains a singular point; sups are infinite");
    for (int p = 0; p <= p_max; ++p)
      out.values[p] = s.dim == 1 ? oracle_sup_1d(*s.source, p, k) : oracle_sup_2d(*s.source, p, k);
    return out;
  }
  if (opts.method != "spectral") throw ValidationError("method must be spectral or oracle");
  if (!(opts.guard >= 0.0)) throw ValidationError("guard must be nonnegative");
  double guard = opts.guard;
  if (guard > 0.0)
    for (int a = 0; a < s.dim; ++a) guard = std::max(guard, 48.0 * s.spacing[a]);
  out.guard = guard;
  for (int a = 0; a < s.dim; ++a) {
    const double lo = s.origin[a], hi = s.origin[a] + s.extent(a) - s.spacing[a];
    if (k.lo[a] - guard < lo || k.hi[a] + guard > hi)
      throw RefusedError("region touches the domain boundary (guard band)");
  }

  SampledSignal loc = s;
  if (guard > 0.0) {
    const auto wx = erf_window(k.lo[0], k.hi[0], guard, s.origin[0], s.spacing[0], s.shape[0]);
    std::vector<double> wy(s.shape[1], 1.0);
    if (s.dim == 2) wy = erf_window(k.lo[1], k.hi[1], guard, s.origin[1], s.spacing[1], s.shape[1]);
    for (std::size_t i = 0; i < s.shape[0]; ++i)
      for (std::size_t j = 0; j < s.shape[1]; ++j) loc.samples[i * s.shape[1] + j] *= wx[i] * wy[j];
  }

  Spectrum sp = forward(loc);
  const double eta = dft_noise_level(loc);
  double mx = 0.0;
  for (const auto& v : sp.values) mx = std::max(mx, std::abs(v));
  const double mask = std::max(eta, opts.noise_floor * mx);
  for (auto& v : sp.values)
    if (std::abs(v) < mask) v = 0.0;

  auto sup_for = [&](int p, bool half) { return spectral_sup(sp, p, half, k); };

  // Orders are computed until round-off, amplified by (2 pi |xi|)^p over the
  // retained bins, exceeds cap_tolerance * S_p; the last clean order is p_cap.
  const int scan_to = std::max(p_max, opts.p_cap_max);
  const auto noise = amplified_noise(sp, eta, scan_to);
  int cap = -1;
  std::vector<double> vals;
  for (int p = 0; p <= scan_to; ++p) {
    const double v = sup_for(p, false);
    const bool clean = noise[p] <= opts.cap_tolerance * v;
    if (clean && cap == p - 1) cap = p;
    if (!clean && (opts.refuse_past_cap || p > p_max)) break;
    vals.push_back(clean ? v : v + noise[p]);
    if (p >= p_max && s.dim == 2) break;  // mixed partials are costly; stop once p_max is certified
  }
  out.p_cap = cap;
  if (opts.refuse_past_cap && p_max > cap)
    throw RefusedError("p_max " + std::to_string(p_max) + " exceeds spectral cap " + std::to_string(cap));
  out.noise.assign(noise.begin(), noise.begin() + p_max + 1);
  out.values.assign(vals.begin(), vals.begin() + p_max + 1);
  out.values_half.assign(p_max + 1, 0.0);
  out.diverging.assign(p_max + 1, false);
  for (int p = 0; p <= p_max; ++p) {
    out.values_half[p] = sup_for(p, true);
    if (p <= cap) out.diverging[p] = p >= 1 && out.values[p] > opts.divergence_ratio * out.values_half[p];
  }
  return out;
}

DerivSups spectrum_sups(const Spectrum& spec, const Box& k, int p_max) {
  if (p_max < 0) throw ValidationError("p_max must be >= 0");
  if (k.dim != spec.dim) throw ValidationError("region dim does not match spectrum dim");
  DerivSups out;
  out.p_max = p_max;
  out.region = k;
  out.method = "oracle";
  for (int p = 0; p <= p_max; ++p) out.values.push_back(spectral_sup(spec, p, false, k));
  return out;
}

}  // namespace mlreg
