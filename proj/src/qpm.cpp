#include "ringfiber/qpm.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "ringfiber/errors.hpp"
#include "ringfiber/units.hpp"

namespace ringfiber {

QpmGrating::QpmGrating(double period_um, int n_half, double chi_xxx_pm_per_v, double chi_xyy_pm_per_v)
    : period_(period_um), n_half_(n_half), chi_xxx_(chi_xxx_pm_per_v), chi_xyy_(chi_xyy_pm_per_v) {
  if (!(period_ > 0.0) || n_half_ < 0) throw ConfigError("grating needs a positive period and N >= 0");
  if (std::abs(chi_xxx_ - 3.0 * chi_xyy_) > 0.1 * std::abs(3.0 * chi_xyy_)) {
    std::ostringstream msg;
    msg << "chi_xxx = " << chi_xxx_ << " pm/V departs from 3 chi_xyy = " << 3.0 * chi_xyy_ << " pm/V by more than 10%";
    warning_ = msg.str();
  }
}

QpmGrating QpmGrating::with_length(double period_um, double length_um, double chi_xxx_pm_per_v,
                                   double chi_xyy_pm_per_v) {
  if (!(period_um > 0.0) || !(length_um >= period_um)) throw ConfigError("grating length must cover one period");
  const int n_half = static_cast<int>(std::lround((length_um / period_um - 1.0) / 2.0));
  return QpmGrating(period_um, n_half, chi_xxx_pm_per_v, chi_xyy_pm_per_v);
}

std::complex<double> QpmGrating::spectrum(double beta) const {
  const double x = beta * period_;
  const double m = n_half_ + 0.5;
  const std::complex<double> phase = std::polar(1.0, x / 4.0 + n_half_ * x);
  // (2/beta) sin(beta Lambda/4) -> Lambda/2 as beta -> 0.
  const double envelope = std::abs(x) < 1e-6 ? period_ / 2.0 * (1.0 - x * x / 96.0) : 2.0 / beta * std::sin(x / 4.0);
  double dirichlet;
  const double denom = std::sin(x / 2.0);
  if (std::abs(denom) > 1e-6) {
    dirichlet = std::sin(m * x) / denom;
  } else {
    // Near a pole the ratio equals the finite cosine sum.
    dirichlet = 1.0;
    for (int k = 1; k <= n_half_; ++k) dirichlet += 2.0 * std::cos(k * x);
  }
  return envelope * dirichlet / std::sqrt(2.0 * kPi) * phase;
}

std::complex<double> spectrum(const QpmGrating& grating, double beta_per_um) { return grating.spectrum(beta_per_um); }

std::complex<double> chi_contract(const QpmGrating& g, const cvec3& e_p, const cvec3& e_s, const cvec3& e_i) {
  const auto sx = std::conj(e_s[0]);
  const auto sy = std::conj(e_s[1]);
  const auto ix = std::conj(e_i[0]);
  const auto iy = std::conj(e_i[1]);
  return g.chi_xxx() * e_p[0] * sx * ix + g.chi_xyy() * (e_p[0] * sy * iy + e_p[1] * sy * ix + e_p[1] * sx * iy);
}

std::pair<double, double> half_max_crossings(const std::vector<double>& x, const std::vector<double>& y, long peak) {
  if (x.size() != y.size() || x.size() < 3) throw DomainError("FWHM needs matching samples");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const long n = static_cast<long>(y.size());
  if (peak < 0) peak = std::max_element(y.begin(), y.end()) - y.begin();
  const double half = 0.5 * y[peak];
  long a = peak;
  while (a > 0 && y[a] > half) --a;
  long b = peak;
  while (b < n - 1 && y[b] > half) ++b;
  if (y[a] > half || y[b] > half) return {nan, nan};
  const double left = x[a] + (half - y[a]) * (x[a + 1] - x[a]) / (y[a + 1] - y[a]);
  const double right = x[b - 1] + (half - y[b - 1]) * (x[b] - x[b - 1]) / (y[b] - y[b - 1]);
  return {left, right};
}

double peak_fwhm(const std::vector<double>& x, const std::vector<double>& y, long peak) {
  const auto [left, right] = half_max_crossings(x, y, peak);
  return std::abs(right - left);
}

double grating_peak_fwhm(const QpmGrating& g) {
  const double b0 = 2.0 * kPi / g.period_um();
  auto power = [&g](double beta) { return std::norm(g.spectrum(beta)); };
  // Refine the maximum first: the 1/beta envelope shifts it slightly.
  const double lobe = 2.0 * kPi / g.length_um();
  double lo = b0 - 0.5 * lobe;
  double hi = b0 + 0.5 * lobe;
  for (int k = 0; k < 200; ++k) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (power(m1) < power(m2)) lo = m1;
    else hi = m2;
  }
  const double peak = 0.5 * (lo + hi);
  const double half = 0.5 * power(peak);
  auto f = [&](double beta) { return power(beta) - half; };
  boost::math::tools::eps_tolerance<double> tol(50);
  std::uintmax_t iters = 200;
  const auto right = boost::math::tools::toms748_solve(f, peak, peak + lobe, tol, iters);
  iters = 200;
  const auto left = boost::math::tools::toms748_solve(f, peak - lobe, peak, tol, iters);
  return 0.5 * (right.first + right.second) - 0.5 * (left.first + left.second);
}

}  // namespace ringfiber
