#include "mlreg/wavefront.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>


namespace mlreg {

using std::numbers::pi;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double cell_volume(const SampledSignal& s) { return s.spacing[0] * (s.dim == 2 ? s.spacing[1] : 1.0); }

double min_nyquist(const Spectrum& sp) {
  return sp.dim == 2 ? std::min(sp.nyquist(0), sp.nyquist(1)) : sp.nyquist(0);
}

// Runs f(i) for i < n on up to `threads` workers; results are written by index.
template <class F>
void parallel_for(std::size_t n, int threads, F f) {
  const std::size_t w = std::min<std::size_t>(n, std::max(1, threads));
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex mu;
  for (std::size_t t = 0; t < w; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += w) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

struct ConeProfile {
  std::vector<double> r, v;  // |xi| ascending, upper envelope of |u_hat|
};

ConeProfile cone_profile(const Spectrum& sp, const ConeSpec& cone) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < sp.shape[0]; ++i)
    for (std::size_t j = 0; j < sp.shape[1]; ++j) {
      const double fx = sp.freq(0, i), fy = sp.dim == 2 ? sp.freq(1, j) : 0.0;
      if (!cone.contains(fx, fy)) continue;
      const double rad = std::hypot(fx, fy);
      if (rad < cone.band_lo || rad > cone.band_hi) continue;
      pts.emplace_back(rad, std::abs(sp.values[i * sp.shape[1] + j]));
    }
  std::sort(pts.begin(), pts.end());
  ConeProfile p;
  for (auto& [rad, v] : pts) {
    p.r.push_back(rad);
    p.v.push_back(v);
  }
  for (std::size_t i = p.v.size(); i-- > 1;) p.v[i - 1] = std::max(p.v[i - 1], p.v[i]);
  return p;
}

// Least-squares slope of ln v against ln r over entries above the floor with
// r in [r_from, r_to].
double envelope_slope(const ConeProfile& p, double floor, double r_from, double r_to = inf) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  double last = -1.0;
  int distinct = 0;
  for (std::size_t i = 0; i < p.r.size(); ++i) {
    if (!(p.v[i] > floor) || p.r[i] < r_from || p.r[i] > r_to) continue;
    const double x = std::log(p.r[i]), y = std::log(p.v[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
    if (p.r[i] != last) ++distinct, last = p.r[i];
  }
  if (distinct < 3) return -inf;
  const double den = n * sxx - sx * sx;
  return (n * sxy - sx * sy) / den;
}

int power_index(double n, const DecayForm& e, double sigma) {
  return int(std::floor(std::pow(n / e.n_scale, 1.0 / sigma) + 1e-12));
}

}  // namespace

void ConeSpec::validate(double nyquist) const {
  if (dim != 1 && dim != 2) throw ValidationError("cone dim must be 1 or 2");
  if (!(band_lo > 0.0) || !(band_hi > band_lo)) throw ValidationError("cone band needs 0 < lo < hi");
  if (band_hi > 0.25 * nyquist * (1.0 + 1e-12)) throw ValidationError("cone band exceeds nyquist / 4");
  if (dim == 2 && !(half_angle > 0.0 && half_angle < 0.5 * pi)) throw ValidationError("half_angle must be in (0, pi/2)");
  if (dim == 1 && direction[0] == 0.0) throw ValidationError("dim-1 direction must be +1 or -1");
  if (dim == 2 && std::hypot(direction[0], direction[1]) == 0.0) throw ValidationError("direction must be nonzero");
}

bool ConeSpec::contains(double fx, double fy) const {
  if (dim == 1) return fx * direction[0] > 0.0;
  const double r = std::hypot(fx, fy);
  if (r == 0.0) return false;
  const double c = (fx * direction[0] + fy * direction[1]) / (r * std::hypot(direction[0], direction[1]));
  return c >= std::cos(half_angle) - 1e-12;
}

DecayForm DecayForm::standard(const ClassParams& p) { return {p.tau / p.sigma, 1.0}; }

DecayForm DecayForm::tilde(const ClassParams& p) {
  const double tt = p.tau_tilde ? *p.tau_tilde : std::pow(p.tau, p.sigma / (p.sigma - 1.0));
  return {std::pow(tt, -1.0 / p.sigma) / p.sigma, tt};
}

namespace {

void check_placement(const SampledSignal& u, const Point& c, double r) {
  for (int a = 0; a < u.dim; ++a) {
    const double lo = u.origin[a], hi = u.origin[a] + u.extent(a) - u.spacing[a];
    if (c[a] - 2.0 * r < lo || c[a] + 2.0 * r > hi) throw RefusedError("cutoff support B_2r leaves the sampled domain");
  }
}

LocalizedSpectra localize(const SampledSignal& u, const std::vector<const SampledSignal*>& windows,
                          const std::vector<long long>& n, const std::vector<int>& m, const Point& c, double r) {
  LocalizedSpectra out;
  out.center = c;
  out.r = r;
  out.n = n;
  out.m = m;
  const double cell = cell_volume(u);
  // The sample nearest c is subtracted first; constant times chi_N is smooth
  // and would otherwise mask weak singularities at low frequency.
  std::size_t idx[2] = {0, 0};
  for (int a = 0; a < u.dim; ++a) {
    const double t = std::round((c[a] - u.origin[a]) / u.spacing[a]);
    idx[a] = std::size_t(std::clamp(t, 0.0, double(u.shape[a] - 1)));
  }
  const cplx centre = u.at(idx[0], idx[1]);
  const double noise = u.noise_level();
  for (const auto* w : windows) {
    SampledSignal prod = u;
    prod.label.reset();
    prod.source.reset();
    prod.prescribed.reset();
    double l1 = 0.0, l1c = 0.0, w2 = 0.0;
    for (std::size_t i = 0; i < prod.size(); ++i) {
      const double wi = w->samples[i].real();
      l1 += std::abs(prod.samples[i] * wi);
      w2 += wi * wi;
      prod.samples[i] = (prod.samples[i] - centre) * wi;
      l1c += std::abs(prod.samples[i]);
    }
    out.spectra.push_back(forward(prod));
    out.windows.push_back(forward(*w));
    out.l1.push_back(l1 * cell);
    out.l1_centred.push_back(l1c * cell);
    // rms of sample errors carried into one bin
    out.noise.push_back(noise * std::sqrt(w2) * cell);
  }
  return out;
}

}  // namespace

LocalizedSpectra localized_spectra(const SampledSignal& u, const CutoffFamily& family) {
  u.validate();
  if (family.region.dim != u.dim) throw ValidationError("family dim does not match signal dim");
  check_placement(u, family.region.center, family.region.r);
  std::vector<SampledSignal> ws;
  std::vector<int> m;
  for (std::size_t i = 0; i < family.members.size(); ++i) {
    ws.push_back(sample_cutoff(family, i, u));
    m.push_back(family.members[i].m);
  }
  std::vector<const SampledSignal*> ptr;
  for (auto& w : ws) ptr.push_back(&w);
  return localize(u, ptr, family.n_list, m, family.region.center, family.region.r);
}

double DecayFit::substitution_violation(double fact_exp) const {
  double worst = -inf;
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (!usable[i] || !std::isfinite(c_n[i])) continue;
    const double n = index[i];
    worst = std::max(worst, c_n[i] - fact_exp * log_factorial(n) - log_a - n * log_h);
  }
  return worst;
}

DecayFit decay_fit(const LocalizedSpectra& ls, const ClassParams& params, const ConeSpec& cone, const WfConfig& cfg,
                   std::optional<DecayForm> form, std::optional<EnumMap> enumeration) {
  if (!(params.sigma > 1.0) || !(params.tau > 0.0)) throw ValidationError("decay_fit needs tau > 0, sigma > 1");
  if (ls.spectra.empty()) throw ValidationError("no localized spectra");
  cfg.caps.validate();
  cone.validate(min_nyquist(ls.spectra[0]));
  DecayFit f;
  f.params = params;
  f.cone = cone;
  f.form = form ? *form : DecayForm::standard(params);
  f.n_list = ls.n;
  if (enumeration) enumeration->validate();
  for (auto n : ls.n) f.index.push_back(enumeration ? (*enumeration)(double(n)) : double(n));
  f.pw_order = cfg.pw_order;
  const std::size_t nn = ls.n.size();
  f.usable.assign(nn, false);
  f.k.assign(nn, 0);
  f.slope_cap.assign(nn, 0);
  f.c_n.assign(nn, -inf);
  f.s_n.assign(nn, -inf);
  f.deficit.assign(nn, -inf);
  const double ln_hmax = std::log(cfg.caps.h_max), ln_amax = std::log(cfg.caps.a_max);
  double l1_max = 0.0;
  for (std::size_t i = 0; i < nn; ++i) {
    const double n = f.index[i];
    const int k = power_index(n, f.form, params.sigma);
    f.k[i] = k;
    const ConeProfile pu = cone_profile(ls.spectra[i], cone), pw = cone_profile(ls.windows[i], cone);
    const double floor_u =
        std::max(cfg.floor_rel * ls.l1[i], i < ls.noise.size() ? cfg.noise_factor * ls.noise[i] : 0.0);
    double wl1 = 0.0;
    for (const auto& v : ls.windows[i].values) wl1 = std::max(wl1, std::abs(v));
    const double r_from = cone.band_lo * std::pow(cone.band_hi / cone.band_lo, cfg.fit_from);
    // the window is judged on the same stretch where u_N clears its floor
    double r_to = r_from;
    for (std::size_t j = 0; j < pu.r.size(); ++j)
      if (pu.v[j] > floor_u) r_to = std::max(r_to, pu.r[j]);
    const double sw = envelope_slope(pw, cfg.floor_rel * wl1, r_from, r_to);
    f.slope_cap[i] = std::isfinite(sw) ? std::max(0, int(std::floor(-sw - cfg.window_margin))) : 64;
    // powers beyond what the window resolves on the band cannot be tested
    const int ke = std::min(k, f.slope_cap[i]);
    for (std::size_t j = 0; j < pu.r.size(); ++j)
      if (pu.v[j] > floor_u) f.c_n[i] = std::max(f.c_n[i], std::log(pu.v[j]) + ke * std::log(pu.r[j]));
    f.s_n[i] = envelope_slope(pu, floor_u, r_from);
    if (std::isfinite(f.s_n[i])) f.deficit[i] = f.s_n[i] + ke;
    // the factorial must not swamp what the power term and the h budget can express
    f.usable[i] = k >= 1 && f.form.fact_exp * log_factorial(n) <= k * std::log(cone.band_hi) + n * ln_hmax;
    l1_max = std::max(l1_max, ls.l1_centred[i]);
    for (std::size_t b = 0; b < ls.spectra[i].values.size(); ++b) {
      const auto& sp = ls.spectra[i];
      const std::size_t a0 = b / sp.shape[1], a1 = b % sp.shape[1];
      const double fx = sp.freq(0, a0), fy = sp.dim == 2 ? sp.freq(1, a1) : 0.0;
      const double bracket = std::pow(1.0 + fx * fx + fy * fy, 0.5 * cfg.pw_order);
      f.pw_bound = std::max(f.pw_bound, std::abs(sp.values[b]) / bracket);
    }
  }
  f.pw_ok = std::isfinite(f.pw_bound) && f.pw_bound <= l1_max * (1.0 + 1e-9) + 1e-300;

  // minimal log_h with log_a at its cap, then minimal log_a
  double lh = -inf;
  int used = 0;
  for (std::size_t i = 0; i < nn; ++i) {
    if (!f.usable[i]) continue;
    ++used;
    if (!std::isfinite(f.c_n[i])) continue;
    const double n = f.index[i];
    lh = std::max(lh, (f.c_n[i] - f.form.fact_exp * log_factorial(n) - ln_amax) / n);
  }
  if (!std::isfinite(lh)) {
    f.log_h = 0.0;
    f.log_a = 0.0;
    f.feasible = true;
  } else {
    f.log_h = lh;
    double la = -inf;
    for (std::size_t i = 0; i < nn; ++i) {
      if (!f.usable[i] || !std::isfinite(f.c_n[i])) continue;
      const double n = f.index[i];
      la = std::max(la, f.c_n[i] - f.form.fact_exp * log_factorial(n) - n * lh);
    }
    f.log_a = la;
    f.feasible = lh <= ln_hmax;
  }

  if (used == 0) {
    f.verdict = "inconclusive";
    f.reason = "no usable N";
    return f;
  }
  if (!f.pw_ok) {
    f.verdict = "inconclusive";
    f.reason = "Paley-Wiener guard exceeded";
    return f;
  }
  int steep = 0, shallow = 0;
  for (std::size_t i = 0; i < nn; ++i)
    if (f.usable[i]) (f.deficit[i] > cfg.slope_tol ? shallow : steep) += 1;
  if (f.feasible && shallow == 0) {
    f.verdict = "regular";
  } else if (shallow >= cfg.majority * used) {
    f.verdict = "singular";
  } else {
    f.verdict = "inconclusive";
    f.reason = f.feasible ? "mixed slopes" : "envelope infeasible at caps";
  }
  return f;
}

const WfEntry& WfReport::at(std::size_t xi, std::size_t pi_, std::size_t di) const {
  return entries.at((xi * params_list.size() + pi_) * directions.size() + di);
}

std::vector<Point> default_directions(int dim, int n_directions) {
  if (dim == 1) return {{1.0, 0.0}, {-1.0, 0.0}};
  if (n_directions < 1) throw ValidationError("n_directions must be positive");
  std::vector<Point> d;
  for (int k = 0; k < n_directions; ++k) {
    const double t = 2.0 * pi * k / n_directions;
    d.push_back({std::cos(t), std::sin(t)});
  }
  return d;
}

std::vector<Point> line_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw ValidationError("line grid needs lo <= hi and step > 0");
  std::vector<Point> g;
  for (long i = 0;; ++i) {
    const double x = lo + step * double(i);
    if (x > hi + 1e-9 * step) break;
    g.push_back({x, 0.0});
  }
  return g;
}

std::vector<ClassParams> default_params_grid() {
  std::vector<ClassParams> g;
  for (double s : {1.125, 1.5, 2.0, 3.0})
    for (double t : {0.25, 0.5, 1.0, 2.0, 4.0}) g.push_back(ClassParams::detector(t, s));
  return g;
}

namespace {

double tilde_of(const ClassParams& p) {
  return p.tau_tilde ? *p.tau_tilde : std::pow(p.tau, p.sigma / (p.sigma - 1.0));
}

std::pair<double, double> band_for(const SampledSignal& u, const WfConfig& cfg) {
  if (cfg.band) return *cfg.band;
  double nyq = 0.5 / u.spacing[0];
  if (u.dim == 2) nyq = std::min(nyq, 0.5 / u.spacing[1]);
  return {8.0 / (4.0 * cfg.r), 0.25 * nyq};
}

// Localized spectra for every params entry at one center, sharing windows
// across params with the same derivative budget m.
struct CenterSpectra {
  std::vector<LocalizedSpectra> per_params;
  std::string failure;
};

CenterSpectra spectra_at(const SampledSignal& u, const Point& c, const std::vector<ClassParams>& params,
                         const WfConfig& cfg) {
  CenterSpectra out;
  try {
    check_placement(u, c, cfg.r);
  } catch (const RefusedError& e) {
    out.failure = e.what();
    return out;
  }
  Region reg;
  reg.dim = u.dim;
  reg.center = c;
  reg.r = cfg.r;
  CutoffOptions co;
  co.m_max = cfg.m_max;
  std::map<int, SampledSignal> cache;
  for (const auto& p : params) {
    const auto fam = build_admissible(reg, ClassParams::make(tilde_of(p), p.sigma), cfg.n_list, co);
    std::vector<const SampledSignal*> ws;
    std::vector<int> m;
    for (std::size_t i = 0; i < fam.members.size(); ++i) {
      const int mi = fam.members[i].m;
      auto it = cache.find(mi);
      if (it == cache.end()) it = cache.emplace(mi, sample_cutoff(fam, i, u)).first;
      ws.push_back(&it->second);
      m.push_back(mi);
    }
    out.per_params.push_back(localize(u, ws, fam.n_list, m, c, cfg.r));
  }
  return out;
}

ConeSpec cone_for(const SampledSignal& u, const Point& dir, const WfConfig& cfg) {
  ConeSpec cone;
  cone.dim = u.dim;
  cone.direction = dir;
  cone.half_angle = cfg.half_angle;
  const auto b = band_for(u, cfg);
  cone.band_lo = b.first;
  cone.band_hi = b.second;
  return cone;
}

DecayFit inconclusive_fit(const ClassParams& p, const ConeSpec& cone, const std::string& why) {
  DecayFit f;
  f.params = p;
  f.cone = cone;
  f.form = DecayForm::standard(p);
  f.verdict = "inconclusive";
  f.reason = why;
  return f;
}

}  // namespace

WfReport wf_scan(const SampledSignal& u, const std::vector<Point>& x_grid, const std::vector<Point>& directions,
                 const std::vector<ClassParams>& params_list, const WfConfig& cfg) {
  u.validate();
  if (x_grid.empty() || directions.empty() || params_list.empty())
    throw ValidationError("wf_scan needs nonempty x grid, directions and params");
  for (const auto& p : params_list)
    if (!(p.sigma > 1.0) || !(p.tau > 0.0)) throw ValidationError("wf_scan params need tau > 0, sigma > 1");
  if (!(cfg.r > 0.0)) throw ValidationError("cutoff radius must be positive");
  WfReport rep;
  rep.dim = u.dim;
  rep.grid.dim = u.dim;
  rep.grid.n = u.shape;
  for (int a = 0; a < 2; ++a) {
    rep.grid.lo[a] = u.origin[a];
    rep.grid.hi[a] = u.origin[a] + u.extent(a);
  }
  rep.x_grid = x_grid;
  rep.directions = directions;
  rep.params_list = params_list;
  rep.config = cfg;
  const std::size_t np = params_list.size(), nd = directions.size();
  rep.entries.resize(x_grid.size() * np * nd);
  for (const auto& d : directions) cone_for(u, d, cfg).validate(0.5 / u.spacing[0]);
  parallel_for(x_grid.size(), cfg.threads, [&](std::size_t xi) {
    const CenterSpectra cs = spectra_at(u, x_grid[xi], params_list, cfg);
    for (std::size_t pi_ = 0; pi_ < np; ++pi_)
      for (std::size_t di = 0; di < nd; ++di) {
        WfEntry& e = rep.entries[(xi * np + pi_) * nd + di];
        e.x = x_grid[xi];
        e.direction = directions[di];
        e.params = params_list[pi_];
        const ConeSpec cone = cone_for(u, directions[di], cfg);
        e.fit = cs.failure.empty() ? decay_fit(cs.per_params[pi_], params_list[pi_], cone, cfg)
                                   : inconclusive_fit(params_list[pi_], cone, cs.failure);
      }
  });
  return rep;
}

namespace {

Box neighborhood(const Point& x, double rho, int dim) {
  Box k;
  k.dim = dim;
  k.lo = {x[0] - rho, dim == 2 ? x[1] - rho : 0.0};
  k.hi = {x[0] + rho, dim == 2 ? x[1] + rho : 0.0};
  return k;
}

DerivOptions ss_options(const WfConfig& cfg) {
  DerivOptions o;
  o.guard = cfg.ss_guard;
  o.refuse_past_cap = false;
  return o;
}

DerivSups region_sups(const SampledSignal& u, const Box& k, const WfConfig& cfg) {
  if (u.prescribed) {
    DerivOptions o;
    o.method = "oracle";
    return derivative_sups(u, k, cfg.ss_p_max, o);
  }
  return derivative_sups(u, k, cfg.ss_p_max, ss_options(cfg));
}

bool member_at(const DerivSups& d, const ClassParams& p, const Caps& caps) {
  if (d.any_diverging(1, d.p_max)) return false;
  return feasibility(d.values, p.tau, p.sigma, caps).feasible;
}

// Distinct sigmas in first-seen order, each with the indices of its taus.
std::vector<std::vector<std::size_t>> by_sigma(const std::vector<ClassParams>& params) {
  std::vector<double> sig;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto it = std::find(sig.begin(), sig.end(), params[i].sigma);
    if (it == sig.end()) {
      sig.push_back(params[i].sigma);
      groups.push_back({i});
    } else {
      groups[it - sig.begin()].push_back(i);
    }
  }
  return groups;
}

// Combines per-params flags: outer over sigma groups, inner over taus.
bool combine(const std::vector<std::vector<std::size_t>>& groups, const std::function<bool(std::size_t)>& flag,
             bool outer_all, bool inner_all) {
  bool outer = outer_all;
  for (const auto& g : groups) {
    bool inner = inner_all;
    for (auto i : g) inner = inner_all ? (inner && flag(i)) : (inner || flag(i));
    outer = outer_all ? (outer && inner) : (outer || inner);
  }
  return outer;
}

struct Borderline {
  const char* name;
  bool outer_all, inner_all;
};

// Singular-support names with their set operation; WF partners use the
// same operation and the swapped name.
constexpr Borderline ss_sets[] = {
    {"0,1", false, false},     // union over sigma and tau
    {"inf,inf", true, true},   // intersection over sigma and tau
    {"0,inf", true, false},    // intersection over sigma of unions over tau
    {"inf,1", false, true},    // union over sigma of intersections over tau
};
constexpr const char* wf_partner[] = {"inf,inf", "0,1", "inf,1", "0,inf"};

}  // namespace

SingsuppReport singsupp_detect(const SampledSignal& u, const std::vector<Point>& x_grid,
                               const std::vector<ClassParams>& params_list, const std::string& mode,
                               const WfConfig& cfg) {
  u.validate();
  if (mode != "fixed" && mode != "grid-borderline") throw ValidationError("mode must be fixed or grid-borderline");
  if (params_list.empty() || x_grid.empty()) throw ValidationError("singsupp needs params and an x grid");
  if (mode == "fixed" && params_list.size() != 1) throw ValidationError("fixed mode takes exactly one (tau, sigma)");
  if (cfg.ss_radii.empty()) throw ValidationError("singsupp needs at least one radius");
  cfg.caps.validate();
  SingsuppReport rep;
  rep.dim = u.dim;
  rep.mode = mode;
  rep.params_list = params_list;
  rep.points.resize(x_grid.size());
  parallel_for(x_grid.size(), cfg.threads, [&](std::size_t xi) {
    SingsuppPoint& pt = rep.points[xi];
    pt.x = x_grid[xi];
    std::vector<double> radii = cfg.ss_radii;
    std::sort(radii.rbegin(), radii.rend());
    for (double rho : radii) {
      try {
        pt.sups.push_back(region_sups(u, neighborhood(pt.x, rho, u.dim), cfg));
      } catch (const RefusedError& e) {
        pt.reason = e.what();
      }
    }
    if (pt.sups.empty()) {
      pt.inconclusive = true;
      pt.singular.assign(params_list.size(), false);
      return;
    }
    pt.reason.clear();
    for (const auto& p : params_list) {
      bool regular = false;
      for (const auto& d : pt.sups) regular = regular || member_at(d, p, cfg.caps);
      pt.singular.push_back(!regular);
    }
  });
  const auto groups = by_sigma(params_list);
  if (mode == "fixed") {
    for (const auto& pt : rep.points)
      if (!pt.inconclusive && pt.singular[0]) rep.detected.push_back(pt.x);
  } else {
    for (const auto& b : ss_sets) {
      std::vector<Point> set;
      for (const auto& pt : rep.points)
        if (!pt.inconclusive && combine(groups, [&](std::size_t i) { return bool(pt.singular[i]); }, b.outer_all, b.inner_all))
          set.push_back(pt.x);
      rep.borderline.emplace_back(b.name, set);
    }
  }
  return rep;
}

ProjectionReport projection_check(const WfReport& wf, const SingsuppReport& ss) {
  if (wf.x_grid.size() != ss.points.size()) throw ValidationError("wave-front and singular-support grids differ");
  if (ss.mode != "grid-borderline") throw ValidationError("projection check needs grid-borderline singular supports");
  ProjectionReport rep;
  rep.dim = wf.dim;
  rep.x_grid = wf.x_grid;
  const auto groups = by_sigma(wf.params_list);
  rep.holds = true;
  for (std::size_t b = 0; b < 4; ++b) {
    ProjectionPair pair;
    pair.wf_name = std::string("WF_") + wf_partner[b];
    pair.ss_name = std::string("singsupp_") + ss_sets[b].name;
    std::vector<bool> proj(wf.x_grid.size(), false), sset(wf.x_grid.size(), false);
    for (std::size_t xi = 0; xi < wf.x_grid.size(); ++xi) {
      for (std::size_t di = 0; di < wf.directions.size(); ++di) {
        auto flag = [&](std::size_t pi_) { return wf.at(xi, pi_, di).fit.verdict == "singular"; };
        if (combine(groups, flag, ss_sets[b].outer_all, ss_sets[b].inner_all)) proj[xi] = true;
      }
      for (const auto& p : ss.borderline[b].second)
        if (p == wf.x_grid[xi]) sset[xi] = true;
      if (proj[xi]) pair.projected.push_back(wf.x_grid[xi]);
      if (sset[xi]) pair.singsupp.push_back(wf.x_grid[xi]);
      if (proj[xi] != sset[xi]) ++pair.symmetric_difference;
    }
    pair.holds = pair.symmetric_difference <= 1;
    rep.holds = rep.holds && pair.holds;
    rep.pairs.push_back(pair);
  }
  return rep;
}

ProjectionReport projection_check(const SampledSignal& u, const std::vector<Point>& x_grid,
                                  const std::vector<ClassParams>& params_grid, const WfConfig& cfg) {
  const auto wf = wf_scan(u, x_grid, default_directions(u.dim, cfg.n_directions), params_grid, cfg);
  const auto ss = singsupp_detect(u, x_grid, params_grid, "grid-borderline", cfg);
  return projection_check(wf, ss);
}

RoundtripReport roundtrip_check(const SampledSignal& u, const Box& region, const std::vector<ClassParams>& params_list,
                                const WfConfig& cfg) {
  u.validate();
  if (region.dim != u.dim) throw ValidationError("region dim does not match signal dim");
  if (params_list.empty()) throw ValidationError("roundtrip needs params");
  RoundtripReport rep;
  rep.region = region;
  const Point c{0.5 * (region.lo[0] + region.hi[0]), 0.5 * (region.lo[1] + region.hi[1])};
  const auto dirs = default_directions(u.dim, cfg.n_directions);
  const CenterSpectra cs = spectra_at(u, c, params_list, cfg);
  std::optional<DerivSups> sups;
  std::string sups_failure;
  try {
    sups = region_sups(u, region, cfg);
  } catch (const RefusedError& e) {
    sups_failure = e.what();
  }
  for (std::size_t pi_ = 0; pi_ < params_list.size(); ++pi_) {
    const auto& p = params_list[pi_];
    RoundtripEntry e;
    e.params = p;
    if (!cs.failure.empty() || !sups) {
      e.inconclusive = true;
      e.findings.push_back(!cs.failure.empty() ? cs.failure : sups_failure);
      rep.entries.push_back(e);
      ++rep.inconclusive;
      continue;
    }
    e.member = member_at(*sups, p, cfg.caps);
    // (3.7) after re-indexing N -> tilde-tau N: the same spectra, relabeled
    const EnumMap relabel = EnumMap::scale(std::max(1.0, tilde_of(p)));
    bool dr = true, dt = true;
    for (const auto& d : dirs) {
      const ConeSpec cone = cone_for(u, d, cfg);
      const auto f = decay_fit(cs.per_params[pi_], p, cone, cfg);
      const auto ft = decay_fit(cs.per_params[pi_], p, cone, cfg, DecayForm::tilde(p), relabel);
      if (f.verdict == "inconclusive" || ft.verdict == "inconclusive") e.inconclusive = true;
      dr = dr && f.verdict == "regular";
      dt = dt && ft.verdict == "regular";
    }
    e.decay_regular = dr;
    e.decay_tilde_regular = dt;
    e.a_pass = dr && e.member;
    e.b_pass = e.member && dt;
    if (dr && !e.member) e.findings.push_back("decay regular but membership fails");
    if (e.member && !dt) e.findings.push_back("membership holds but the tilde-indexed decay fails");
    if (e.inconclusive) ++rep.inconclusive;
    else if (!e.agree()) ++rep.disagreements;
    rep.entries.push_back(e);
  }
  return rep;
}

SampledSignal apply_operator(const SampledSignal& u, const OperatorSpec& op) {
  u.validate();
  SampledSignal out = u;
  out.label.reset();
  out.source.reset();
  out.prescribed.reset();
  if (op.kind == "identity") return out;
  if (op.kind != "dx" && op.kind != "first_order" && op.kind != "multiply")
    throw ValidationError("operator kind must be dx, first_order, multiply or identity");
  // central differences along axis 0, periodic
  std::vector<cplx> du(u.size());
  const auto nx = u.shape[0], ny = u.shape[1];
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      du[i * ny + j] = (u.samples[((i + 1) % nx) * ny + j] - u.samples[((i + nx - 1) % nx) * ny + j]) / (2.0 * u.spacing[0]);
  auto coef = [&](const SynthSpec& s, std::size_t i, std::size_t j) {
    return oracle_derivative(s, {0, 0}, {u.coord(0, i), u.dim == 2 ? u.coord(1, j) : 0.0}, u.dim);
  };
  // sample errors pass through with the operator's gain
  const double e = u.noise_level(), ed = e / u.spacing[0];
  double amax = 0.0, bmax = 0.0;
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const std::size_t k = i * ny + j;
      if (op.kind == "dx") out.samples[k] = du[k];
      else if (op.kind == "multiply") {
        const double b = coef(op.b, i, j);
        bmax = std::max(bmax, std::abs(b));
        out.samples[k] = b * u.samples[k];
      } else {
        const double a = coef(op.a, i, j), b = coef(op.b, i, j);
        amax = std::max(amax, std::abs(a));
        bmax = std::max(bmax, std::abs(b));
        out.samples[k] = a * du[k] + b * u.samples[k];
      }
    }
  const double eps = std::numeric_limits<double>::epsilon();
  double omax = 0.0;
  for (const auto& v : out.samples) omax = std::max(omax, std::abs(v));
  const double prop = op.kind == "dx" ? ed : op.kind == "multiply" ? bmax * e : amax * ed + bmax * e;
  out.noise = std::max(prop, eps * omax);
  return out;
}

PseudolocalReport pseudolocal_check(const SampledSignal& u, const OperatorSpec& op, const std::vector<Point>& x_grid,
                                    const std::vector<ClassParams>& params_list, const WfConfig& cfg) {
  PseudolocalReport rep;
  rep.op = op;
  const auto dirs = default_directions(u.dim, cfg.n_directions);
  rep.before = wf_scan(u, x_grid, dirs, params_list, cfg);
  rep.after = wf_scan(apply_operator(u, op), x_grid, dirs, params_list, cfg);
  const std::size_t nx = x_grid.size(), np = params_list.size(), nd = dirs.size();
  // one-cell dilation in x (grid index) and one step in direction
  const double step = nx > 1 ? std::hypot(x_grid[1][0] - x_grid[0][0], x_grid[1][1] - x_grid[0][1]) : 0.0;
  for (std::size_t xi = 0; xi < nx; ++xi)
    for (std::size_t pi_ = 0; pi_ < np; ++pi_)
      for (std::size_t di = 0; di < nd; ++di) {
        const auto& e = rep.after.at(xi, pi_, di);
        if (e.fit.verdict == "inconclusive") {
          ++rep.excluded_inconclusive;
          continue;
        }
        if (e.fit.verdict != "singular") continue;
        bool covered = false;
        for (std::size_t xj = 0; xj < nx && !covered; ++xj) {
          const double dist = std::hypot(x_grid[xj][0] - x_grid[xi][0], x_grid[xj][1] - x_grid[xi][1]);
          if (dist > step * (1.0 + 1e-9)) continue;
          for (std::size_t dj = 0; dj < nd && !covered; ++dj) {
            const std::size_t ddiff = (dj + nd - di) % nd;
            if (nd > 2 && ddiff > 1 && ddiff < nd - 1) continue;
            const auto& v = rep.before.at(xj, pi_, dj).fit.verdict;
            covered = v == "singular" || v == "inconclusive";
          }
        }
        if (!covered) {
          char buf[160];
          std::snprintf(buf, sizeof buf, "x=(%g, %g) dir=(%g, %g) tau=%g sigma=%g", e.x[0], e.x[1], e.direction[0],
                        e.direction[1], e.params.tau, e.params.sigma);
          rep.violations.push_back(buf);
        }
      }
  rep.holds = rep.violations.empty();
  return rep;
}

}  // namespace mlreg
