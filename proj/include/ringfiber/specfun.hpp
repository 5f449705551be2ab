#pragma once

// Cylinder functions J_n, Y_n, I_n, K_n of integer order and positive real
// argument, with first derivatives.
//
// Regimes:
//   J, Y  x < 25   Miller downward recurrence for J normalised by
//                  J_0 + 2 sum J_2k = 1; Y_0, Y_1 from the Neumann series
//                  over the same J sequence; Y_n by upward recurrence.
//         x >= 25  Hankel asymptotic expansion for orders 0 and 1, upward
//                  recurrence for both kinds (stable while n < x).
//   I     x <= 1   ascending series.
//         x > 1    Miller downward recurrence normalised by
//                  I_0 + 2 sum I_k = e^x, carried in e^{-x} scaled form.
//   K     x <= 2   logarithmic ascending series for K_0, K_1.
//         x > 2    Steed/Temme continued fraction for K_0, K_1 in e^{x}
//                  scaled form.
//         K_n by upward recurrence.

#include <array>

namespace ringfiber::specfun {

enum class CylinderKind { J, Y, I, K };

/// Highest order accepted by the public entry points.
inline constexpr int kMaxOrder = 6;

struct ValueAndDerivative {
  double value;
  double derivative;
};

double eval(CylinderKind kind, int order, double x);
double eval_deriv(CylinderKind kind, int order, double x);

/// Exponentially scaled values: e^{-x} I_n(x) and e^{x} K_n(x).
/// J and Y are returned unscaled.
double eval_scaled(CylinderKind kind, int order, double x);

/// Value and derivative together; cheaper than two separate calls.
ValueAndDerivative eval_with_deriv(CylinderKind kind, int order, double x);

/// Same as eval_with_deriv but for I and K the pair is exponentially scaled
/// (both entries multiplied by e^{-x} for I, e^{x} for K).
ValueAndDerivative eval_with_deriv_scaled(CylinderKind kind, int order, double x);

const char* to_string(CylinderKind kind);

}  // namespace ringfiber::specfun
