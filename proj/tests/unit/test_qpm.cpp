#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "ringfiber/errors.hpp"
#include "ringfiber/qpm.hpp"

using namespace ringfiber;
using cd = std::complex<double>;

namespace {

const double pi = std::acos(-1.0);

// Poled segments [k Lambda, k Lambda + Lambda/2], k = 0..2N, integrated one
// by one against exp(i beta z).
cd segment_sum(double period, int n_half, double beta) {
  cd total = 0.0;
  for (int k = 0; k <= 2 * n_half; ++k) {
    const double a = k * period;
    const double b = a + period / 2.0;
    const double h = (b - a) / 2.0;
    const double width = std::abs(beta * h) < 1e-8 ? 2.0 * h : 2.0 * std::sin(beta * h) / beta;
    total += std::polar(width, beta * (a + h));
  }
  return total / std::sqrt(2.0 * pi);
}

}  // namespace

TEST_CASE("spectrum equals the segment-by-segment transform") {
  for (const int n_half : {0, 1, 7, 40}) {
    const QpmGrating g(3.7, n_half);
    for (const double beta : {-5.1, -1.6981, -0.3, 1e-9, 0.01, 0.8, 2.0 * pi / 3.7, 4.0 * pi / 3.7, 3.3}) {
      CAPTURE(n_half);
      CAPTURE(beta);
      const cd want = segment_sum(3.7, n_half, beta);
      CHECK(std::abs(g.spectrum(beta) - want) <= 1e-10 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("zero-frequency limit is half the length over sqrt(2 pi)") {
  const QpmGrating g(42.0, 1190);
  const double want = g.length_um() / (2.0 * std::sqrt(2.0 * pi));
  CHECK(std::abs(g.spectrum(0.0)) == doctest::Approx(want).epsilon(1e-12));
  CHECK(std::abs(g.spectrum(1e-9)) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("first-order peak grows as 2N + 1") {
  const double period = 40.0;
  const double beta = 2.0 * pi / period;
  for (const int n_half : {0, 3, 50, 1200}) {
    const QpmGrating g(period, n_half);
    const double want = period / pi * (2 * n_half + 1) / std::sqrt(2.0 * pi);
    CHECK(std::abs(g.spectrum(beta)) == doctest::Approx(want).epsilon(1e-10));
    CHECK(std::abs(g.spectrum(-beta)) == doctest::Approx(want).epsilon(1e-10));
  }
  // Even orders vanish at 50% duty cycle.
  const QpmGrating g(period, 20);
  CHECK(std::abs(g.spectrum(2.0 * beta)) < 1e-9 * std::abs(g.spectrum(beta)));
}

TEST_CASE("a real modulation gives a conjugate-symmetric spectrum") {
  const QpmGrating g(41.3, 33);
  for (const double beta : {0.0013, 0.152, 0.31, 1.7}) {
    const cd plus = g.spectrum(beta);
    const cd minus = g.spectrum(-beta);
    CHECK(std::abs(minus - std::conj(plus)) <= 1e-12 * std::abs(plus) + 1e-14);
  }
}

TEST_CASE("inverse transform recovers the square wave") {
  const double period = 1.0;
  const QpmGrating g(period, 2);
  const double b_max = 2000.0;
  const int steps = 400000;
  const double db = 2.0 * b_max / steps;
  auto reconstruct = [&](double z) {
    cd sum = 0.0;
    for (int k = 0; k <= steps; ++k) {
      const double b = -b_max + k * db;
      const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
      sum += w * g.spectrum(b) * std::polar(1.0, -b * z);
    }
    return (sum * db / std::sqrt(2.0 * pi)).real();
  };
  for (int k = 0; k < 5; ++k) {
    CHECK(reconstruct(k + 0.25) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(std::abs(reconstruct(k + 0.75)) < 0.02);
  }
  CHECK(std::abs(reconstruct(-0.5)) < 0.02);
  CHECK(std::abs(reconstruct(5.5)) < 0.02);
}

TEST_CASE("with_length picks the nearest odd period count") {
  const auto g = QpmGrating::with_length(42.15693, 1e5);
  CHECK(g.periods() % 2 == 1);
  CHECK(std::abs(g.length_um() - 1e5) <= g.period_um());
  CHECK_THROWS_AS(QpmGrating::with_length(10.0, 5.0), ConfigError);
  CHECK_THROWS_AS(QpmGrating(-1.0, 3), ConfigError);
}

TEST_CASE("Kleinman mismatch is flagged") {
  CHECK_FALSE(QpmGrating(40.0, 10).warning().has_value());
  CHECK(QpmGrating(40.0, 10, 0.1, 0.021).warning().has_value());
}

TEST_CASE("chi contraction picks the non-zero tensor elements") {
  const QpmGrating g(40.0, 1, 0.063, 0.021);
  const cvec3 x{1.0, 0.0, 0.0}, y{0.0, 1.0, 0.0}, z{0.0, 0.0, 1.0};
  CHECK(std::abs(chi_contract(g, x, x, x) - 0.063) < 1e-15);
  CHECK(std::abs(chi_contract(g, x, y, y) - 0.021) < 1e-15);
  CHECK(std::abs(chi_contract(g, y, y, x) - 0.021) < 1e-15);
  CHECK(std::abs(chi_contract(g, y, x, y) - 0.021) < 1e-15);
  CHECK(std::abs(chi_contract(g, y, y, y)) == 0.0);
  CHECK(std::abs(chi_contract(g, x, x, y)) == 0.0);
  CHECK(std::abs(chi_contract(g, z, z, z)) == 0.0);
  CHECK(std::abs(chi_contract(g, x, z, x)) == 0.0);
  // Signal and idler enter conjugated.
  const cvec3 ix{cd(0.0, 1.0), 0.0, 0.0};
  CHECK(std::abs(chi_contract(g, x, ix, x) - cd(0.0, -0.063)) < 1e-15);
  CHECK(std::abs(chi_contract(g, ix, x, x) - cd(0.0, 0.063)) < 1e-15);
}

TEST_CASE("FWHM of sampled peaks") {
  std::vector<double> x, y;
  for (int k = 0; k <= 4000; ++k) {
    x.push_back(-10.0 + k * 0.005);
    y.push_back(std::exp(-x.back() * x.back() / 2.0) + 0.5 * std::exp(-(x.back() - 6.0) * (x.back() - 6.0) / 0.5));
  }
  const double want = 2.0 * std::sqrt(2.0 * std::log(2.0));
  CHECK(peak_fwhm(x, y) == doctest::Approx(want).epsilon(1e-4));
  const auto second = std::max_element(y.begin() + 3000, y.end()) - y.begin();
  CHECK(peak_fwhm(x, y, second) == doctest::Approx(want / 2.0).epsilon(1e-3));
  const auto [left, right] = half_max_crossings(x, y);
  CHECK(left == doctest::Approx(-want / 2.0).epsilon(1e-4));
  CHECK(right == doctest::Approx(want / 2.0).epsilon(1e-4));

  // A peak that runs off the samples has no width.
  const std::vector<double> edge_x{0.0, 1.0, 2.0, 3.0}, edge_y{1.0, 0.9, 0.8, 0.1};
  CHECK(std::isnan(peak_fwhm(edge_x, edge_y)));
  CHECK_THROWS_AS(peak_fwhm({0.0, 1.0}, {1.0, 0.0}), DomainError);
}

TEST_CASE("grating peak width tracks 1/L") {
  // |sin(m x) / sin(x/2)|^2 around x = 2 pi falls to half height at
  // m dx = 1.39156, so the width in beta is 2 * 1.39156 / (m Lambda).
  for (const int n_half : {200, 1190}) {
    const QpmGrating g(42.0, n_half);
    const double want = 2.0 * 1.391557 / ((n_half + 0.5) * 42.0);
    CHECK(grating_peak_fwhm(g) == doctest::Approx(want).epsilon(2e-3));
  }
}
