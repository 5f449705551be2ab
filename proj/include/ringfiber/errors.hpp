#pragma once

#include <stdexcept>
#include <string>

namespace ringfiber {

// Argument outside the mathematical domain of a function (e.g. Y_n at x <= 0,
// effective index outside the guidance window).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Argument outside the supported or tabulated range (wavelength outside a
// Sellmeier fit, Bessel order above the supported cap, frequency outside a
// mode table).
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Result not representable as a finite double.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

// Inputs that cannot produce a meaningful answer: zero-norm amplitudes,
// mismatched degenerate pairs, vanishing phase mismatch.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration or coefficient file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ringfiber
