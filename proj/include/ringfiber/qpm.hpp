#pragma once

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ringfiber {

using cvec3 = std::array<std::complex<double>, 3>;

// Rectangular chi(2) modulation of 2N+1 periods with 50% duty cycle.
class QpmGrating {
 public:
  QpmGrating(double period_um, int n_half, double chi_xxx_pm_per_v = 0.063, double chi_xyy_pm_per_v = 0.021);
  // N chosen so that (2N+1) * period is the closest odd multiple to length.
  static QpmGrating with_length(double period_um, double length_um, double chi_xxx_pm_per_v = 0.063,
                                double chi_xyy_pm_per_v = 0.021);

  double period_um() const { return period_; }
  int n_half() const { return n_half_; }
  int periods() const { return 2 * n_half_ + 1; }
  double length_um() const { return periods() * period_; }
  double chi_xxx() const { return chi_xxx_; }
  double chi_xyy() const { return chi_xyy_; }

  // Set when chi_xxx differs from 3 chi_xyy by more than 10%.
  const std::optional<std::string>& warning() const { return warning_; }

  // Scalar factor multiplying chi(2) in the Fourier transform of the
  // modulation (in um), beta in 1/um.
  std::complex<double> spectrum(double beta_per_um) const;

 private:
  double period_;
  int n_half_;
  double chi_xxx_, chi_xyy_;
  std::optional<std::string> warning_;
};

std::complex<double> spectrum(const QpmGrating& grating, double beta_per_um);

// sum_jkl chi_jkl e_p,j conj(e_s,k) conj(e_i,l) over the elements xxx, xyy,
// yyx, yxy; vectors in (x, y, z) order. Result in pm/V.
std::complex<double> chi_contract(const QpmGrating& grating, const cvec3& e_p, const cvec3& e_s, const cvec3& e_i);

// Full width at half maximum of the peak containing index `peak` (the global
// maximum when peak < 0), with linear interpolation of the crossings. Returns
// NaN when the peak does not fall to half height inside the samples.
double peak_fwhm(const std::vector<double>& x, const std::vector<double>& y, long peak = -1);

// Interpolated positions where the same peak falls to half height; NaN pair
// when it does not.
std::pair<double, double> half_max_crossings(const std::vector<double>& x, const std::vector<double>& y, long peak = -1);

// FWHM in 1/um of |spectrum|^2 around the first-order peak at 2 pi / period,
// found by root bracketing on the continuous function.
double grating_peak_fwhm(const QpmGrating& grating);

}  // namespace ringfiber
