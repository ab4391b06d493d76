#pragma once
// Slowly varying functions built from iterated logarithms, and the de Bruijn
// conjugates of the log-power families.
//
// Throughout, log a means ln(max(a, 2)); the convention is applied at every
// level of an iterated logarithm.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfield {

/// Iterated logarithms a_1 = log x, a_k = log a_{k-1}, k = 1..nu.
inline std::vector<double> iterated_logs(double x, int nu) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(nu, 0)));
  double a = x;
  for (int k = 0; k < nu; ++k) {
    a = std::log(std::max(a, 2.0));
    out.push_back(a);
  }
  return out;
}

/// (log x)(log log x)...(log...log x) with nu factors.
inline double log_nu(double x, int nu) {
  if (nu < 1) throw std::invalid_argument("log_nu: nu must be >= 1");
  double prod = 1.0;
  for (double a : iterated_logs(x, nu)) prod *= a;
  return prod;
}

/// As log_nu with the last factor squared.
inline double log_nu_sq(double x, int nu) {
  if (nu < 1) throw std::invalid_argument("log_nu_sq: nu must be >= 1");
  const auto a = iterated_logs(x, nu);
  double prod = a.back();
  for (double f : a) prod *= f;
  return prod;
}

struct SlowlyVaryingFamily {
  enum class Kind { constant, log_power, loglog_power, iterated_log_product, iterated_log_product_sq };
  Kind kind = Kind::constant;
  double gamma = 0.0;  // log_power, loglog_power; constant: the value
  int nu = 1;          // iterated products

  static SlowlyVaryingFamily constant(double c = 1.0) { return {Kind::constant, c, 1}; }
  static SlowlyVaryingFamily log_power(double g) { return {Kind::log_power, g, 1}; }
  static SlowlyVaryingFamily loglog_power(double g) { return {Kind::loglog_power, g, 1}; }
  static SlowlyVaryingFamily iterated_log_product(int v) { return {Kind::iterated_log_product, 0.0, v}; }
  static SlowlyVaryingFamily iterated_log_product_sq(int v) { return {Kind::iterated_log_product_sq, 0.0, v}; }

  void validate() const {
    if (kind == Kind::constant && !(gamma > 0.0 && std::isfinite(gamma)))
      throw std::invalid_argument("SlowlyVaryingFamily: constant must be positive and finite");
    if ((kind == Kind::log_power || kind == Kind::loglog_power) && !std::isfinite(gamma))
      throw std::invalid_argument("SlowlyVaryingFamily: exponent must be finite");
    if ((kind == Kind::iterated_log_product || kind == Kind::iterated_log_product_sq) && nu < 1)
      throw std::invalid_argument("SlowlyVaryingFamily: nu must be >= 1");
  }

  double operator()(double x) const {
    switch (kind) {
      case Kind::constant: return gamma;
      case Kind::log_power: return std::pow(std::log(std::max(x, 2.0)), gamma);
      case Kind::loglog_power: return std::pow(iterated_logs(x, 2).back(), gamma);
      case Kind::iterated_log_product: return log_nu(x, nu);
      case Kind::iterated_log_product_sq: return log_nu_sq(x, nu);
    }
    return 1.0;
  }

  /// d log L / d log x (right derivative where the max(., 2) kinks sit).
  double elasticity(double x) const {
    const int depth = kind == Kind::iterated_log_product || kind == Kind::iterated_log_product_sq ? nu
                      : kind == Kind::loglog_power                                                ? 2
                                                                                                  : 1;
    if (kind == Kind::constant) return 0.0;
    // e_k = d log a_k / d log x.
    std::vector<double> e;
    double prev = x, de_prev = 1.0;
    for (int k = 0; k < depth; ++k) {
      const double a = std::log(std::max(prev, 2.0));
      const double ek = prev >= 2.0 ? de_prev / a : 0.0;
      e.push_back(ek);
      prev = a;
      de_prev = ek;
    }
    switch (kind) {
      case Kind::log_power: return gamma * e[0];
      case Kind::loglog_power: return gamma * e[1];
      case Kind::iterated_log_product: {
        double s = 0.0;
        for (double v : e) s += v;
        return s;
      }
      case Kind::iterated_log_product_sq: {
        double s = e.back();
        for (double v : e) s += v;
        return s;
      }
      default: return 0.0;
    }
  }

  bool has_conjugate() const {
    return kind == Kind::constant || kind == Kind::log_power || kind == Kind::loglog_power;
  }

  std::string name() const {
    switch (kind) {
      case Kind::constant: return "constant(" + std::to_string(gamma) + ")";
      case Kind::log_power: return "log_power(" + std::to_string(gamma) + ")";
      case Kind::loglog_power: return "loglog_power(" + std::to_string(gamma) + ")";
      case Kind::iterated_log_product: return "log_nu(" + std::to_string(nu) + ")";
      case Kind::iterated_log_product_sq: return "log_nu_sq(" + std::to_string(nu) + ")";
    }
    return "constant";
  }
};

/// De Bruijn conjugate for the closed-form families.
inline SlowlyVaryingFamily debruijn_conjugate(const SlowlyVaryingFamily& f) {
  switch (f.kind) {
    case SlowlyVaryingFamily::Kind::constant: return SlowlyVaryingFamily::constant(1.0 / f.gamma);
    case SlowlyVaryingFamily::Kind::log_power: return SlowlyVaryingFamily::log_power(-f.gamma);
    case SlowlyVaryingFamily::Kind::loglog_power: return SlowlyVaryingFamily::loglog_power(-f.gamma);
    default: throw std::invalid_argument("debruijn_conjugate: no closed-form conjugate for " + f.name());
  }
}

/// |L(x) Lt(x L(x)) - 1|.
inline double debruijn_residual(const SlowlyVaryingFamily& f, double x) {
  if (!(x >= 2.0)) throw std::invalid_argument("debruijn_residual: x must be >= 2");
  const auto g = debruijn_conjugate(f);
  const double l = f(x);
  return std::abs(l * g(x * l) - 1.0);
}

/// |Lt(x) L(x Lt(x)) - 1|, the same property with the roles swapped.
inline double debruijn_residual_swapped(const SlowlyVaryingFamily& f, double x) {
  if (!(x >= 2.0)) throw std::invalid_argument("debruijn_residual: x must be >= 2");
  const auto g = debruijn_conjugate(f);
  const double l = g(x);
  return std::abs(l * f(x * l) - 1.0);
}

}  // namespace rfield
