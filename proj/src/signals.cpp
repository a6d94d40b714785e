#include "mlreg/signals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "mlreg/msequence.hpp"

namespace mlreg {

using std::numbers::pi;

void SampledSignal::validate() const {
  if (dim != 1 && dim != 2) throw ValidationError("signal dim must be 1 or 2");
  if (shape[0] < 16) throw ValidationError("signal needs at least 16 samples per axis");
  if (dim == 1 && shape[1] != 1) throw ValidationError("1D signal must have shape[1] == 1");
  if (dim == 2 && shape[1] < 16) throw ValidationError("signal needs at least 16 samples per axis");
  for (int a = 0; a < dim; ++a)
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) throw ValidationError("spacing must be positive");
  if (samples.size() != size()) throw ValidationError("sample count does not match shape");
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (!std::isfinite(samples[i].real()) || !std::isfinite(samples[i].imag()))
      throw ValidationError("non-finite sample at index " + std::to_string(i));
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ValidationError("noise must be finite and non-negative");
}

double SampledSignal::noise_level() const {
  if (noise > 0.0) return noise;
  double m = 0.0;
  for (const auto& v : samples) m = std::max(m, std::abs(v));
  // FFT-produced samples carry O(eps log n) rounding
  return std::numeric_limits<double>::epsilon() * m * std::max(1.0, std::log2(double(samples.size())));
}

namespace {

// exp(-2 pi i origin . xi) for bin index flat.
cplx origin_phase(const Spectrum& sp, std::size_t i, std::size_t j) {
  double arg = sp.origin[0] * sp.freq(0, i);
  if (sp.dim == 2) arg += sp.origin[1] * sp.freq(1, j);
  return std::polar(1.0, -2.0 * pi * arg);
}

}  // namespace

Spectrum forward(const SampledSignal& s) {
  s.validate();
  Spectrum sp;
  sp.dim = s.dim;
  sp.shape = s.shape;
  sp.origin = s.origin;
  sp.freq_spacing = {1.0 / s.extent(0), s.dim == 2 ? 1.0 / s.extent(1) : 1.0};
  sp.values = s.samples;
  dft_inplace(sp.values, s.shape, -1);
  const double cell = s.spacing[0] * (s.dim == 2 ? s.spacing[1] : 1.0);
  for (std::size_t i = 0; i < s.shape[0]; ++i)
    for (std::size_t j = 0; j < s.shape[1]; ++j) sp.values[i * s.shape[1] + j] *= cell * origin_phase(sp, i, j);
  return sp;
}

SampledSignal inverse(const Spectrum& sp, bool keep_complex) {
  SampledSignal s;
  s.dim = sp.dim;
  s.shape = sp.shape;
  s.origin = sp.origin;
  s.spacing = {1.0 / (double(sp.shape[0]) * sp.freq_spacing[0]),
               sp.dim == 2 ? 1.0 / (double(sp.shape[1]) * sp.freq_spacing[1]) : 1.0};
  s.samples = sp.values;
  const double vol = sp.freq_spacing[0] * (sp.dim == 2 ? sp.freq_spacing[1] : 1.0);
  for (std::size_t i = 0; i < sp.shape[0]; ++i)
    for (std::size_t j = 0; j < sp.shape[1]; ++j)
      s.samples[i * sp.shape[1] + j] *= vol * std::conj(origin_phase(sp, i, j));
  dft_inplace(s.samples, sp.shape, +1);
  s.is_complex = keep_complex;
  if (!keep_complex)
    for (auto& v : s.samples) v = cplx(v.real(), 0.0);
  return s;
}

SampledSignal make_grid(const GridSpec& g) {
  if (g.dim != 1 && g.dim != 2) throw ValidationError("grid dim must be 1 or 2");
  SampledSignal s;
  s.dim = g.dim;
  s.shape = {g.n[0], g.dim == 2 ? g.n[1] : 1};
  for (int a = 0; a < g.dim; ++a) {
    if (s.shape[a] < 16) throw ValidationError("grid needs at least 16 samples per axis");
    if (!(g.hi[a] > g.lo[a])) throw ValidationError("grid hi must exceed lo");
    s.origin[a] = g.lo[a];
    s.spacing[a] = (g.hi[a] - g.lo[a]) / double(s.shape[a]);
  }
  s.samples.assign(s.size(), cplx(0.0, 0.0));
  return s;
}

namespace {

double edge_coord(const SynthSpec& sp, const Point& x, int dim) {
  if (dim == 1) return x[0] - sp.x0[0];
  const double nn = std::hypot(sp.normal[0], sp.normal[1]);
  return ((x[0] - sp.x0[0]) * sp.normal[0] + (x[1] - sp.x0[1]) * sp.normal[1]) / nn;
}

double synth_value(const SynthSpec& sp, const Point& x, int dim) {
  const std::string& k = sp.kind;
  if (k == "gaussian") {
    double r2 = (x[0] - sp.x0[0]) * (x[0] - sp.x0[0]);
    if (dim == 2) r2 += (x[1] - sp.x0[1]) * (x[1] - sp.x0[1]);
    return sp.amplitude * std::exp(-r2 / (2.0 * sp.width * sp.width));
  }
  if (k == "cosine") return sp.amplitude * std::cos(sp.lambda * (x[0] - sp.x0[0]));
  if (k == "heaviside") {
    const double u = edge_coord(sp, x, dim);
    return sp.amplitude * (u > 0.0 ? 1.0 : (u < 0.0 ? 0.0 : 0.5));
  }
  if (k == "kink") return sp.amplitude * std::abs(edge_coord(sp, x, dim));
  if (k == "gevrey_flat") {
    const double u = edge_coord(sp, x, dim);
    return u > 0.0 ? sp.amplitude * std::exp(-std::pow(u, -sp.a)) : 0.0;
  }
  if (k == "chirp") {
    const double u = x[0] - sp.x0[0];
    return sp.amplitude * std::cos(2.0 * pi * (sp.f0 * u + 0.5 * sp.rate * u * u));
  }
  if (k == "sum") {
    double v = 0.0;
    for (const auto& p : sp.parts) v += synth_value(p, x, dim);
    return v;
  }
  throw ValidationError("unknown signal kind: " + k);
}

void check_spec(const SynthSpec& sp, const GridSpec& g) {
  const std::string& k = sp.kind;
  double dx = (g.hi[0] - g.lo[0]) / double(g.n[0]);
  if (g.dim == 2) dx = std::max(dx, (g.hi[1] - g.lo[1]) / double(g.n[1]));
  auto need = [&](double scale, const char* what) {
    if (!(scale >= 8.0 * dx))
      throw ValidationError(std::string("grid too coarse to resolve ") + what + " (fewer than 8 samples)");
  };
  auto seam = [&]() {
    for (int a = 0; a < g.dim; ++a) {
      if (g.dim == 2 && k != "gaussian" && std::abs(sp.normal[a]) < 1e-12) continue;
      const double len = g.hi[a] - g.lo[a];
      if (sp.x0[a] < g.lo[a] + 0.1 * len || sp.x0[a] > g.hi[a] - 0.1 * len)
        throw ValidationError("feature too close to the periodic seam (needs 10% margin)");
    }
  };
  if (k == "gaussian") {
    if (!(sp.width > 0.0)) throw ValidationError("gaussian width must be positive");
    need(sp.width, "gaussian width");
  } else if (k == "cosine") {
    if (!(sp.lambda > 0.0)) throw ValidationError("cosine lambda must be positive");
    need(2.0 * pi / sp.lambda, "cosine period");
  } else if (k == "heaviside" || k == "kink") {
    seam();
  } else if (k == "gevrey_flat") {
    if (!(sp.a > 0.0)) throw ValidationError("gevrey_flat exponent must be positive");
    seam();
  } else if (k == "chirp") {
    const double span = std::max(std::abs(g.hi[0] - sp.x0[0]), std::abs(g.lo[0] - sp.x0[0]));
    const double fmax = std::abs(sp.f0) + std::abs(sp.rate) * span;
    if (fmax > 0.0) need(1.0 / fmax, "chirp local period");
  } else if (k == "sum") {
    if (sp.parts.empty()) throw ValidationError("sum needs parts");
    for (const auto& p : sp.parts) check_spec(p, g);
  } else {
    throw ValidationError("unknown signal kind: " + k);
  }
}

void merge_label(const SynthSpec& sp, int dim, Label& lab) {
  const std::string& k = sp.kind;
  if (k == "heaviside" || k == "kink") {
    if (dim == 1)
      lab.singular_points.push_back({sp.x0[0], 0.0});
    else
      lab.singular_hyperplanes.push_back({sp.x0, sp.normal});
  } else if (k == "gevrey_flat") {
    lab.gevrey_points.push_back({sp.x0, 1.0 + 1.0 / sp.a});
  } else if (k == "sum") {
    for (const auto& p : sp.parts) merge_label(p, dim, lab);
  }
}

}  // namespace

SampledSignal synth(const SynthSpec& spec, const GridSpec& grid) {
  check_spec(spec, grid);
  SampledSignal s = make_grid(grid);
  for (std::size_t i = 0; i < s.shape[0]; ++i)
    for (std::size_t j = 0; j < s.shape[1]; ++j) {
      const Point x{s.coord(0, i), grid.dim == 2 ? s.coord(1, j) : 0.0};
      s.samples[i * s.shape[1] + j] = synth_value(spec, x, grid.dim);
    }
  Label lab;
  lab.kind = spec.kind;
  merge_label(spec, grid.dim, lab);
  std::sort(lab.singular_points.begin(), lab.singular_points.end());
  s.label = lab;
  s.source = spec;
  return s;
}

double prescribed_freq_scale(const ClassParams& params, const GridSpec& grid) {
  const double target = 16.0 * std::log(10.0);
  double xi_res = 0.5 * double(grid.n[0]) / (grid.hi[0] - grid.lo[0]) / 32.0;
  if (grid.dim == 2) xi_res = std::min(xi_res, 0.5 * double(grid.n[1]) / (grid.hi[1] - grid.lo[1]) / 32.0);
  double lo = 1.0, hi = 2.0;
  while (associated_weight(params, hi) < target) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (associated_weight(params, mid) < target ? lo : hi) = mid;
  }
  return xi_res / hi;
}

Spectrum prescribed_spectrum(const ClassParams& params, const GridSpec& grid, const PrescribedDecay& opts) {
  if (!(params.sigma > 1.0)) throw ValidationError("synth_prescribed_decay needs sigma > 1");
  if (!(opts.amplitude >= 0.0)) throw ValidationError("amplitude must be nonnegative");
  SampledSignal base = make_grid(grid);
  const double xi0 = opts.freq_scale > 0.0 ? opts.freq_scale : prescribed_freq_scale(params, grid);
  Spectrum sp;
  sp.dim = grid.dim;
  sp.shape = base.shape;
  sp.origin = base.origin;
  sp.freq_spacing = {1.0 / base.extent(0), grid.dim == 2 ? 1.0 / base.extent(1) : 1.0};
  sp.values.assign(base.size(), cplx(0.0, 0.0));
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * pi);
  const auto nx = sp.shape[0], ny = sp.shape[1];
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const std::size_t pi_ = (nx - i) % nx, pj = (ny - j) % ny;
      const std::size_t self = i * ny + j, partner = pi_ * ny + pj;
      if (partner < self) continue;
      double xi = std::abs(sp.freq(0, i));
      if (grid.dim == 2) xi = std::hypot(xi, sp.freq(1, j));
      const double mag = xi > 0.0 ? opts.amplitude * std::exp(-associated_weight(params, xi / xi0)) : opts.amplitude;
      if (partner == self) {
        sp.values[self] = mag;
      } else {
        const double ph = phase(rng);
        sp.values[self] = std::polar(mag, ph);
        sp.values[partner] = std::polar(mag, -ph);
      }
    }
  return sp;
}

SampledSignal synth_prescribed_decay(const ClassParams& params, const GridSpec& grid,
                                     const PrescribedDecay& opts) {
  SampledSignal s = inverse(prescribed_spectrum(params, grid, opts));
  s.prescribed = PrescribedSource{params, grid, opts};
  Label lab;
  lab.kind = "prescribed_decay";
  lab.expected_params = std::make_pair(params.tau, params.sigma);
  s.label = lab;
  return s;
}

bool Box::contains(const Point& p) const {
  for (int a = 0; a < dim; ++a)
    if (p[a] < lo[a] || p[a] > hi[a]) return false;
  return true;
}

bool Box::contains(const Box& b) const {
  for (int a = 0; a < dim; ++a)
    if (b.lo[a] < lo[a] || b.hi[a] > hi[a]) return false;
  return true;
}

Box interval(double a, double b) {
  if (!(b >= a)) throw ValidationError("interval needs a <= b");
  Box k;
  k.dim = 1;
  k.lo = {a, 0.0};
  k.hi = {b, 0.0};
  return k;
}

}  // namespace mlreg
