#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mlreg/fft.hpp"
#include "mlreg/params.hpp"

namespace mlreg {

using Point = std::array<double, 2>;

struct Hyperplane {
  Point point{0.0, 0.0};
  Point normal{1.0, 0.0};
};

struct GevreyPoint {
  Point point{0.0, 0.0};
  double order = 1.0;
};

struct Label {
  std::string kind;
  std::vector<Point> singular_points;
  std::vector<Hyperplane> singular_hyperplanes;  // dim 2 edges
  std::vector<GevreyPoint> gevrey_points;
  std::optional<std::pair<double, double>> expected_params;  // (tau, sigma)
};

struct SynthSpec {
  std::string kind = "gaussian";  // gaussian cosine heaviside kink gevrey_flat chirp sum
  Point x0{0.0, 0.0};
  Point normal{1.0, 0.0};  // dim-2 heaviside/kink edge normal
  double amplitude = 1.0;
  double width = 0.5;      // gaussian standard deviation
  double lambda = 3.0;     // cosine angular frequency
  double a = 1.0;          // gevrey_flat exponent
  double f0 = 1.0;         // chirp start frequency (cycles per unit)
  double rate = 2.0;       // chirp sweep rate
  std::vector<SynthSpec> parts;
};

struct GridSpec {
  int dim = 1;
  std::array<std::size_t, 2> n{4096, 1};
  Point lo{-4.0, -4.0};
  Point hi{4.0, 4.0};
};

struct PrescribedDecay {
  double amplitude = 1.0;
  std::uint64_t seed = 12345;
  // Frequency unit xi_0 so that |u_hat(xi)| = amplitude exp(-T(|xi|/xi_0)).
  // Zero selects it automatically so the spectrum reaches 1e-16 at nyquist/32.
  double freq_scale = 0.0;
};

// Exact description of a synth_prescribed_decay signal.
struct PrescribedSource {
  ClassParams params;
  GridSpec grid;
  PrescribedDecay opts;
};

struct SampledSignal {
  int dim = 1;
  Point origin{0.0, 0.0};
  Point spacing{1.0, 1.0};
  std::array<std::size_t, 2> shape{0, 1};  // row-major, second axis fastest
  std::vector<cplx> samples;
  bool is_complex = false;
  std::optional<Label> label;
  std::optional<SynthSpec> source;  // set by synth; enables oracle derivatives
  std::optional<PrescribedSource> prescribed;  // same, for prescribed decay
  double noise = 0.0;  // absolute per-sample error; 0 means eps log2(n) max|u|

  double noise_level() const;

  std::size_t size() const { return shape[0] * shape[1]; }
  double coord(int axis, std::size_t i) const { return origin[axis] + spacing[axis] * double(i); }
  double extent(int axis) const { return spacing[axis] * double(shape[axis]); }
  cplx at(std::size_t i, std::size_t j = 0) const { return samples[i * shape[1] + j]; }
  void validate() const;
};

struct Spectrum {
  int dim = 1;
  std::array<std::size_t, 2> shape{0, 1};
  Point freq_spacing{1.0, 1.0};
  Point origin{0.0, 0.0};  // spatial origin of the transformed samples
  std::vector<cplx> values;

  double freq(int axis, std::size_t k) const {
    return double(signed_bin(k, shape[axis])) * freq_spacing[axis];
  }
  double nyquist(int axis) const { return 0.5 * double(shape[axis]) * freq_spacing[axis]; }
};

// u_hat(xi) ~ dx * sum_j u_j exp(-2 pi i x_j xi).
Spectrum forward(const SampledSignal& s);
SampledSignal inverse(const Spectrum& spec, bool keep_complex = false);

SampledSignal make_grid(const GridSpec& g);


SampledSignal synth(const SynthSpec& spec, const GridSpec& grid);

// The prescribed spectrum itself, before any inverse transform.
Spectrum prescribed_spectrum(const ClassParams& params, const GridSpec& grid, const PrescribedDecay& opts);
SampledSignal synth_prescribed_decay(const ClassParams& params, const GridSpec& grid,
                                     const PrescribedDecay& opts);
double prescribed_freq_scale(const ClassParams& params, const GridSpec& grid);

// Axis-aligned closed box K.
struct Box {
  int dim = 1;
  Point lo{0.0, 0.0};
  Point hi{0.0, 0.0};
  bool contains(const Point& p) const;
  bool contains(const Box& b) const;
};

Box interval(double a, double b);

struct DerivOptions {
  std::string method = "spectral";  // spectral | oracle
  // Localization reach beyond K; 0 disables the window (periodic box).
  // Raised to 48 cells on coarse grids.
  double guard = 0.6;
  double noise_floor = 1e-14;  // relative bin mask, on top of the DFT round-off level
  int p_cap_max = 24;
  double cap_tolerance = 1e-2;  // max estimated round-off relative to S_p
  double divergence_ratio = 1.25;
  // false: orders past p_cap report S_p + round-off (an upper bound) instead
  // of being refused; divergence is not judged on those orders.
  bool refuse_past_cap = true;
};

struct DerivSups {
  int p_max = 0;
  std::vector<double> values;       // S_p, p = 0..p_max
  std::vector<double> values_half;  // spectral only: same with band halved
  std::vector<bool> diverging;      // spectral only: S_p grows under band refinement
  std::vector<double> noise;        // spectral only: estimated round-off in S_p
  Box region;
  std::string method;
  std::optional<int> p_cap;
  double guard = 0.0;

  bool any_diverging(int p_lo, int p_hi) const;
};

DerivSups derivative_sups(const SampledSignal& s, const Box& k, int p_max, const DerivOptions& opts = {});

// Sups of the trigonometric polynomial with coefficients `spec`, taken without
// masking; exact for spectra known in closed form.
DerivSups spectrum_sups(const Spectrum& spec, const Box& k, int p_max);

// Pointwise closed-form partial derivative of a catalog kind; throws RefusedError if none exists.
double oracle_derivative(const SynthSpec& spec, std::array<int, 2> alpha, const Point& x, int dim = 1);

enum class SignalFormat { json, csv };
SignalFormat format_from_path(const std::string& path);
void save_signal(const SampledSignal& s, const std::string& path, SignalFormat fmt);
SampledSignal load_signal(const std::string& path, SignalFormat fmt);
std::string signal_to_json_text(const SampledSignal& s);
SampledSignal signal_from_json_text(const std::string& text);
SampledSignal signal_from_csv_text(const std::string& text);

}  // namespace mlreg
