#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mlreg/params.hpp"
#include "mlreg/signals.hpp"

namespace mlreg {

struct Caps {
  double a_max = 1e6;
  double h_max = 1e3;
  void validate() const;
};

// sup_p S_p / (h^{p^sigma} p^{tau p^sigma}); may be +inf. The log form is
// what everything else uses.
double log_seminorm(const std::vector<double>& sups, const ClassParams& params, double h);
double seminorm(const std::vector<double>& sups, const ClassParams& params, double h);
double seminorm(const DerivSups& sups, const ClassParams& params, double h);

// max_p (log S_p - a - b p^sigma - tau p^sigma ln p); <= 0 means (a, b) works.
double constraint_violation(const std::vector<double>& sups, double tau, double sigma, double log_a, double log_h);

// Smallest (a, b) certificate at (tau, sigma) within caps: b is minimized with
// a at its cap, then a is minimized for that b.
struct FeasibilityCert {
  double tau = 0.0, sigma = 2.0;
  double log_a = 0.0, log_h = 0.0;
  double residual = 0.0;  // max(0, violation at the caps)
  bool feasible = false;
};
FeasibilityCert feasibility(const std::vector<double>& sups, double tau, double sigma, const Caps& caps,
                            std::optional<double> log_h_cap = std::nullopt);

struct EnvelopeFit {
  double sigma = 2.0;
  double tau_hat = 0.0;  // +inf when not in class at the caps
  double log_h = 0.0, log_a = 0.0;
  double residual = 0.0;
  std::string mode = "roumieu";  // roumieu | beurling
  int p_lo = 0, p_hi = 0;
  Caps caps;
  double tolerance = 1e-3;
  double bracket_hi = 10.0;
  bool feasible = false;
  // analytic-like | in class at caps | not in class at these caps | diverging
  std::string verdict;
  std::vector<double> h_grid;          // beurling only
  std::optional<double> smallest_h;    // beurling: smallest grid h passing at tau_hat
};

EnvelopeFit fit_envelope(const std::vector<double>& sups, double sigma, const Caps& caps = {},
                         const std::string& mode = "roumieu", const std::vector<bool>& diverging = {},
                         double tolerance = 1e-3);
EnvelopeFit fit_envelope(const DerivSups& sups, double sigma, const Caps& caps = {},
                         const std::string& mode = "roumieu", double tolerance = 1e-3);

struct SigmaTransfer {
  double sigma2 = 0.0, tau2 = 0.0;
  bool feasible = false;
};

struct EmbeddingReport {
  double sigma = 2.0, tau1 = 0.0, tau2 = 0.0;
  FeasibilityCert cert1;
  bool substitution_checked = false;  // only when cert1 is feasible
  double substitution_violation = 0.0;
  std::vector<SigmaTransfer> sigma_transfers;
  std::vector<std::string> violations;
  bool holds = true;
};

// tau-embedding by substitution of the tau1 certificate; sigma-embedding by
// refitting every (tau', sigma2 > sigma) on the given grids.
EmbeddingReport check_embedding(const std::vector<double>& sups, double sigma, double tau1, double tau2,
                                const Caps& caps = {}, const std::vector<double>& sigma2_grid = {},
                                const std::vector<double>& tau_grid = {});

struct AlgebraReport {
  double sigma = 2.0, tau = 1.0, h = 1.0, c_h = 1.0;
  std::vector<double> product_sups;  // Leibniz bound
  double lhs = 0.0, rhs = 0.0;       // seminorm(phi psi, 2h) and the product at c_h
  bool holds = false;
};

AlgebraReport check_algebra(const std::vector<double>& sups_phi, const std::vector<double>& sups_psi, double sigma,
                            double tau, double h);

struct OperatorLaw {
  double a = 1.0;
  double l = 1.0;
  ClassParams params;  // (tau, sigma) of the input class
};

struct OperatorResult {
  Spectrum spectrum;
  int order = 0;  // truncation m
  std::vector<double> coeffs;
  double tail_ratio = 0.0;  // dropped / retained mass on the band
};

// P(D) u = sum_p a_p (2 pi i xi)^p u^(xi) with
// a_p = (-1)^p A L^{p^sigma} / p^{tau 2^{sigma-1} p^sigma}.
OperatorResult apply_ultradiff_operator(const Spectrum& spec, const OperatorLaw& law,
                                        std::optional<int> truncation = std::nullopt, int p_cap_max = 24);

struct OperatorMapping {
  double tau_bound = 0.0;  // tau 2^{sigma-1}
  double tolerance = 0.2;
  EnvelopeFit fit_in, fit_out;
  int order = 0;
  bool holds = false;
};

OperatorMapping check_operator_mapping(const SampledSignal& u, const OperatorLaw& law, const Box& region, int p_max,
                                       const Caps& caps = {}, const DerivOptions& opts = {});

}  // namespace mlreg
