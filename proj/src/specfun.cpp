#include "ringfiber/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "ringfiber/errors.hpp"

namespace ringfiber::specfun {
namespace {

constexpr double kEulerGamma = 0.57721566490153286061;
constexpr double kPi = std::numbers::pi;

// Switchover points, validated against Boost.Math and the quadrature/series
// oracles in tests/unit/test_specfun.cpp.
constexpr double kJyAsymptoticFrom = 25.0;
constexpr double kISeriesUpTo = 1.0;
constexpr double kKSeriesUpTo = 2.0;

constexpr double kRescaleAbove = 1e250;
constexpr double kRescaleBy = 1e-250;

// Orders 0..kMaxOrder+1 are needed to form derivatives at kMaxOrder.
constexpr int kSequenceLength = kMaxOrder + 2;
using Sequence = std::array<double, kSequenceLength>;

void check_order(int order) {
  if (order < 0 || order > kMaxOrder) {
    throw RangeError("cylinder function order " + std::to_string(order) +
                     " outside supported range 0.." + std::to_string(kMaxOrder));
  }
}

void check_argument(CylinderKind kind, double x) {
  if (std::isnan(x)) throw DomainError("cylinder function argument is NaN");
  const bool singular_at_zero = kind == CylinderKind::Y || kind == CylinderKind::K;
  if (singular_at_zero ? x <= 0.0 : x < 0.0) {
    throw DomainError(std::string("argument of ") + to_string(kind) +
                      " must be " + (singular_at_zero ? "positive" : "non-negative"));
  }
}

struct JySequences {
  Sequence j{};
  Sequence y{};
};

// Miller's algorithm for J_k, k = 0..top, followed by the Neumann series for
// Y_0 and Y_1. Only used for 0 < x < kJyAsymptoticFrom.
JySequences jy_small(double x) {
  const int base = std::max(kSequenceLength, static_cast<int>(x));
  int top = base + 20 + static_cast<int>(std::sqrt(40.0 * base));
  top += top % 2;
  std::vector<double> j(top + 2, 0.0);
  j[top + 1] = 0.0;
  j[top] = 1.0;
  for (int k = top; k >= 1; --k) {
    j[k - 1] = (2.0 * k / x) * j[k] - j[k + 1];
    if (std::abs(j[k - 1]) > kRescaleAbove) {
      for (int m = k - 1; m <= top + 1; ++m) j[m] *= kRescaleBy;
    }
  }
  double norm = j[0];
  for (int k = 2; k <= top; k += 2) norm += 2.0 * j[k];
  for (double& v : j) v /= norm;

  JySequences out;
  for (int k = 0; k < kSequenceLength; ++k) out.j[k] = j[k];

  const double log_term = std::log(0.5 * x) + kEulerGamma;
  double sum0 = 0.0;
  double sum1 = 0.0;
  for (int k = 1; 2 * k + 1 <= top + 1; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    sum0 += sign * j[2 * k] / k;
    sum1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k;
  }
  out.y[0] = (2.0 / kPi) * (log_term * j[0] - 2.0 * sum0);
  out.y[1] = (2.0 / kPi) * (-j[0] / x + log_term * j[1] + sum1);
  for (int k = 1; k + 1 < kSequenceLength; ++k) {
    out.y[k + 1] = (2.0 * k / x) * out.y[k] - out.y[k - 1];
  }
  return out;
}

// Hankel asymptotic expansion for orders 0 and 1, then upward recurrence.
JySequences jy_large(double x) {
  JySequences out;
  const double s = std::sin(x);
  const double c = std::cos(x);
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  const double amplitude = std::sqrt(2.0 / (kPi * x));
  for (int nu = 0; nu <= 1; ++nu) {
    const double mu = 4.0 * nu * nu;
    double p = 1.0;
    double q = 0.0;
    double term = 1.0;
    double previous = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 200; ++k) {
      const double odd = 2.0 * k - 1.0;
      term *= (mu - odd * odd) / (k * 8.0 * x);
      const double magnitude = std::abs(term);
      if (magnitude > previous) break;
      previous = magnitude;
      // a_k / x^k contributes to P for even k and to Q for odd k with
      // alternating signs (-1)^{floor(k/2)}.
      const double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
      if (k % 2 == 0) {
        p += sign * term;
      } else {
        q += sign * term;
      }
      if (magnitude < 1e-18) break;
    }
    double cos_chi;
    double sin_chi;
    if (nu == 0) {  // chi = x - pi/4
      cos_chi = (c + s) * inv_sqrt2;
      sin_chi = (s - c) * inv_sqrt2;
    } else {  // chi = x - 3pi/4
      cos_chi = (s - c) * inv_sqrt2;
      sin_chi = -(s + c) * inv_sqrt2;
    }
    out.j[nu] = amplitude * (p * cos_chi - q * sin_chi);
    out.y[nu] = amplitude * (p * sin_chi + q * cos_chi);
  }
  for (int k = 1; k + 1 < kSequenceLength; ++k) {
    out.j[k + 1] = (2.0 * k / x) * out.j[k] - out.j[k - 1];
    out.y[k + 1] = (2.0 * k / x) * out.y[k] - out.y[k - 1];
  }
  return out;
}

JySequences jy_sequences(double x) {
  return x < kJyAsymptoticFrom ? jy_small(x) : jy_large(x);
}

// e^{-x} I_k(x), k = 0..kSequenceLength-1.
Sequence i_scaled_sequence(double x) {
  Sequence out{};
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }
  if (x <= kISeriesUpTo) {
    const double half = 0.5 * x;
    const double quarter_sq = half * half;
    const double damping = std::exp(-x);
    double lead = 1.0;  // (x/2)^k / k!
    for (int k = 0; k < kSequenceLength; ++k) {
      if (k > 0) lead *= half / k;
      double term = lead;
      double sum = lead;
      for (int m = 1; m < 60; ++m) {
        term *= quarter_sq / (m * (m + k));
        sum += term;
        if (term < 1e-18 * sum) break;
      }
      out[k] = sum * damping;
    }
    return out;
  }
  const int top = kSequenceLength + 30 + static_cast<int>(std::sqrt(80.0 * x));
  std::vector<double> v(top + 2, 0.0);
  v[top] = 1.0;
  for (int k = top; k >= 1; --k) {
    v[k - 1] = (2.0 * k / x) * v[k] + v[k + 1];
    if (v[k - 1] > kRescaleAbove) {
      for (int m = k - 1; m <= top + 1; ++m) v[m] *= kRescaleBy;
    }
  }
  double norm = v[0];
  for (int k = 1; k <= top; ++k) norm += 2.0 * v[k];
  for (int k = 0; k < kSequenceLength; ++k) out[k] = v[k] / norm;
  return out;
}

// e^{x} K_0(x) and e^{x} K_1(x).
std::array<double, 2> k01_scaled(double x) {
  if (x <= kKSeriesUpTo) {
    const double half = 0.5 * x;
    const double quarter_sq = half * half;
    const double log_half = std::log(half);
    // I_0, I_1 and the digamma-weighted sums share the same power series.
    double i0 = 0.0;
    double i1 = 0.0;
    double sum0 = 0.0;
    double sum1 = 0.0;
    double power = 1.0;     // (x^2/4)^k / (k!)^2
    double harmonic = 0.0;  // H_k
    for (int k = 0; k < 60; ++k) {
      if (k > 0) {
        power *= quarter_sq / (static_cast<double>(k) * k);
        harmonic += 1.0 / k;
      }
      const double psi_k1 = -kEulerGamma + harmonic;               // psi(k+1)
      const double psi_k2 = -kEulerGamma + harmonic + 1.0 / (k + 1);  // psi(k+2)
      const double power1 = power / (k + 1);  // (x^2/4)^k / (k! (k+1)!)
      i0 += power;
      i1 += power1;
      sum0 += power * harmonic;
      sum1 += (psi_k1 + psi_k2) * power1;
      if (power < 1e-18 * i0 && k > 2) break;
    }
    i1 *= half;
    const double k0 = -(log_half + kEulerGamma) * i0 + sum0;
    const double k1 = 1.0 / x + log_half * i1 - 0.5 * half * sum1;
    const double growth = std::exp(x);
    return {k0 * growth, k1 * growth};
  }
  // Steed's method on Temme's CF2 for nu = 0.
  constexpr double a1 = 0.25;
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 1; i < 10000; ++i) {
    a -= 2.0 * i;
    c = -a * c / (i + 1.0);
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < 1e-17) break;
  }
  h *= a1;
  const double k0 = std::sqrt(kPi / (2.0 * x)) / s;
  const double k1 = k0 * (x + 0.5 - h) / x;
  return {k0, k1};
}

Sequence k_scaled_sequence(double x) {
  Sequence out{};
  const auto k01 = k01_scaled(x);
  out[0] = k01[0];
  out[1] = k01[1];
  for (int k = 1; k + 1 < kSequenceLength; ++k) {
    out[k + 1] = out[k - 1] + (2.0 * k / x) * out[k];
  }
  return out;
}

// Value/derivative pair from a sequence, using the kind-specific
// derivative recurrence and the reflection f_{-1} = +-f_1.
ValueAndDerivative pick(CylinderKind kind, const Sequence& seq, int n) {
  const double value = seq[n];
  double derivative = 0.0;
  switch (kind) {
    case CylinderKind::J:
    case CylinderKind::Y:
      derivative = n == 0 ? -seq[1] : 0.5 * (seq[n - 1] - seq[n + 1]);
      break;
    case CylinderKind::I:
      derivative = n == 0 ? seq[1] : 0.5 * (seq[n - 1] + seq[n + 1]);
      break;
    case CylinderKind::K:
      derivative = n == 0 ? -seq[1] : -0.5 * (seq[n - 1] + seq[n + 1]);
      break;
  }
  return {value, derivative};
}

ValueAndDerivative at_origin(CylinderKind kind, int order) {
  // Only J and I reach here.
  (void)kind;
  if (order == 0) return {1.0, 0.0};
  if (order == 1) return {0.0, 0.5};
  return {0.0, 0.0};
}

ValueAndDerivative compute(CylinderKind kind, int order, double x, bool scaled) {
  check_order(order);
  check_argument(kind, x);
  if (x == 0.0) return at_origin(kind, order);
  switch (kind) {
    case CylinderKind::J:
      return pick(kind, jy_sequences(x).j, order);
    case CylinderKind::Y:
      return pick(kind, jy_sequences(x).y, order);
    case CylinderKind::I: {
      const auto pair = pick(kind, i_scaled_sequence(x), order);
      if (scaled) return pair;
      if (x > 700.0 && std::log(std::abs(pair.value)) + x > std::log(std::numeric_limits<double>::max())) {
        throw OverflowError("I_" + std::to_string(order) + "(" + std::to_string(x) +
                            ") not representable; use eval_scaled");
      }
      const double growth = std::exp(x);
      return {pair.value * growth, pair.derivative * growth};
    }
    case CylinderKind::K: {
      const auto pair = pick(kind, k_scaled_sequence(x), order);
      if (scaled) return pair;
      const double damping = std::exp(-x);
      ValueAndDerivative out{pair.value * damping, pair.derivative * damping};
      if (!std::isfinite(out.value) || !std::isfinite(out.derivative)) {
        throw OverflowError("K_" + std::to_string(order) + "(" + std::to_string(x) +
                            ") not representable");
      }
      return out;
    }
  }
  return {0.0, 0.0};
}

}  // namespace

double eval(CylinderKind kind, int order, double x) {
  const auto pair = compute(kind, order, x, false);
  if (!std::isfinite(pair.value)) {
    throw OverflowError(std::string(to_string(kind)) + "_" + std::to_string(order) +
                        " not representable at x = " + std::to_string(x));
  }
  return pair.value;
}

double eval_deriv(CylinderKind kind, int order, double x) {
  const auto pair = compute(kind, order, x, false);
  if (!std::isfinite(pair.derivative)) {
    throw OverflowError(std::string("derivative of ") + to_string(kind) + "_" +
                        std::to_string(order) + " not representable at x = " + std::to_string(x));
  }
  return pair.derivative;
}

double eval_scaled(CylinderKind kind, int order, double x) {
  return compute(kind, order, x, true).value;
}

ValueAndDerivative eval_with_deriv(CylinderKind kind, int order, double x) {
  return compute(kind, order, x, false);
}

ValueAndDerivative eval_with_deriv_scaled(CylinderKind kind, int order, double x) {
  return compute(kind, order, x, true);
}

const char* to_string(CylinderKind kind) {
  switch (kind) {
    case CylinderKind::J: return "J";
    case CylinderKind::Y: return "Y";
    case CylinderKind::I: return "I";
    case CylinderKind::K: return "K";
  }
  return "?";
}

}  // namespace ringfiber::specfun
