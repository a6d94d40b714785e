#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mlreg/params.hpp"

namespace mlreg {

// ln M_p with M_p = p^(tau p^sigma); zero at p = 0, 1.
double log_m(const ClassParams& params, int p);

// ln(n!) via lgamma.
double log_factorial(double n);

// floor(p^sigma), tolerant of pow() landing just below an integer.
long long floor_pow(double p, double sigma);

struct LogMSequence {
  ClassParams params;
  int p_max = 0;
  std::vector<double> log_values;
};

LogMSequence log_sequence(const ClassParams& params, int p_max);

struct InequalityCertificate {
  std::string name;
  ClassParams params;
  std::map<std::string, long long> range;
  std::map<std::string, double> constants;
  std::map<std::string, std::vector<double>> tables;
  std::vector<std::string> notes;
  double margin = 0.0;
  bool holds = false;
};

InequalityCertificate certify_m1(const ClassParams& params, int p_max);
InequalityCertificate certify_m2_tilde_prime(const ClassParams& params, int q_max, int p_max);
InequalityCertificate certify_m2_tilde(const ClassParams& params, int p_max);
InequalityCertificate certify_m3_prime(const ClassParams& params, int p_max);
// C defaults to e^(tau/sigma) when log_c is not supplied.
InequalityCertificate certify_stirling_bounds(const ClassParams& params, int p_max,
                                              std::optional<double> log_c = std::nullopt);

std::vector<InequalityCertificate> certify_all(const ClassParams& params, int p_max, int q_max);

struct EnumMap {
  enum class Kind { identity, scale, power, composed };
  Kind kind = Kind::identity;
  std::vector<double> coefficients;  // scale: {c}; power: {c, e}
  std::vector<EnumMap> parts;        // composed: {first, second}, a(N) = a_first(a_second(N))

  static EnumMap identity();
  static EnumMap scale(double c);
  static EnumMap power(double c, double e);
  static EnumMap compose(const EnumMap& first, const EnumMap& second);

  void validate() const;
  double operator()(double n) const;
};

struct ProfilePoint {
  long long n = 1;
  double log_value = 0.0;
};

struct Profile {
  std::vector<ProfilePoint> points;
  // Optional closed form of the log value at real argument.
  std::function<double(double)> log_closed_form;
  bool interpolated = false;
};

Profile enumerate_profile(const Profile& profile, const EnumMap& map);

// T(t) = sup_p (p ln t - ln M_p).
double associated_weight(const ClassParams& params, double t);

}  // namespace mlreg
