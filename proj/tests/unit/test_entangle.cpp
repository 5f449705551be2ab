#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "doctest.h"
#include "ringfiber/entangle.hpp"
#include "ringfiber/errors.hpp"
#include "ringfiber/materials.hpp"
#include "ringfiber/modesolver.hpp"
#include "ringfiber/units.hpp"

using namespace ringfiber;
using cd = std::complex<double>;

namespace {

const double pi = std::acos(-1.0);

Eigen::MatrixXcd random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> d;
  Eigen::MatrixXcd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = cd(d(rng), d(rng));
  return m;
}

Eigen::MatrixXcd random_unitary(std::mt19937_64& rng, int n) {
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(random_matrix(rng, n, n));
  return qr.householderQ();
}

const std::vector<GuidedMode>& census() {
  static const auto modes = mode_census(RingFiber(MaterialLibrary::builtin().default_stack(), FiberGeometry{}),
                                        omega_from_wavelength_um(1.55), 6);
  return modes;
}

const GuidedMode& mode(const std::string& label) {
  for (const auto& m : census())
    if (m.label() == label) return m;
  FAIL("missing " << label);
  return census().front();
}

// Largest CHSH value over measurement directions in the x-z plane, by brute
// force on an angle grid, from expectation values of the state itself.
double chsh_brute(const Eigen::Matrix4cd& rho, int steps) {
  Eigen::Matrix2cd sx, sz;
  sx << 0, 1, 1, 0;
  sz << 1, 0, 0, -1;
  std::vector<Eigen::Matrix2cd> ops;
  for (int k = 0; k < steps; ++k) {
    const double a = 2.0 * pi * k / steps;
    ops.push_back(std::cos(a) * sz + std::sin(a) * sx);
  }
  Eigen::MatrixXd e(steps, steps);
  for (int a = 0; a < steps; ++a) {
    for (int b = 0; b < steps; ++b) {
      Eigen::Matrix4cd k;
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) k.block<2, 2>(2 * r, 2 * c) = ops[a](r, c) * ops[b];
      e(a, b) = (rho * k).trace().real();
    }
  }
  double best = 0.0;
  for (int a = 0; a < steps; ++a)
    for (int a2 = 0; a2 < steps; ++a2)
      for (int b = 0; b < steps; ++b)
        for (int b2 = 0; b2 < steps; ++b2)
          best = std::max(best, std::abs(e(a, b) + e(a, b2) + e(a2, b) - e(a2, b2)));
  return best;
}

JointSpectralAmplitude toy_amplitude(const Eigen::MatrixXcd& values) {
  JointSpectralAmplitude a;
  for (Eigen::Index k = 0; k < values.rows(); ++k) a.omega_s.push_back(1.0 + 0.01 * k);
  for (Eigen::Index k = 0; k < values.cols(); ++k) a.omega_i.push_back(2.0 + 0.02 * k);
  a.n_eff_s.assign(a.omega_s.size(), 1.45);
  a.n_eff_i.assign(a.omega_i.size(), 1.45);
  a.values = values;
  return a;
}

}  // namespace

TEST_CASE("product amplitudes have K = 1, two orthogonal products K = 2") {
  Eigen::VectorXcd u(6), v(5), u2(6), v2(5);
  u << 1, 2, 3, 0, 0, 0;
  v << 0, 1, cd(0, 1), 0, 0;
  u2 << 0, 0, 0, 1, 1, 0;
  v2 << 1, 0, 0, 0, 2;
  const std::vector<double> ws(6, 0.3), wi(5, 0.7);
  CHECK(schmidt(u * v.transpose(), ws, wi).schmidt_number == doctest::Approx(1.0).epsilon(1e-12));
  const Eigen::MatrixXcd two = u.normalized() * v.normalized().transpose() + u2.normalized() * v2.normalized().transpose();
  const auto r = schmidt(two, ws, wi);
  CHECK(r.schmidt_number == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.coefficients[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("Schmidt coefficients match the eigenvalues of the weighted reduced density") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uw(0.1, 2.0);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXcd a = random_matrix(rng, 5, 5);
    std::vector<double> ws(5), wi(5);
    for (auto& w : ws) w = uw(rng);
    for (auto& w : wi) w = uw(rng);
    Eigen::MatrixXcd b = a;
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 5; ++c) b(r, c) *= std::sqrt(ws[r] * wi[c]);
    const Eigen::MatrixXcd rho = b * b.adjoint() / (b * b.adjoint()).trace().real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
    const auto got = schmidt(a, ws, wi);
    double k_inv = 0.0;
    for (int k = 0; k < 5; ++k) {
      CHECK(std::abs(got.coefficients[k] * got.coefficients[k] - es.eigenvalues()(4 - k)) <= 1e-10);
      k_inv += es.eigenvalues()(k) * es.eigenvalues()(k);
    }
    CHECK(got.schmidt_number == doctest::Approx(1.0 / k_inv).epsilon(1e-10));
  }
}

TEST_CASE("local unitaries leave K unchanged") {
  std::mt19937_64 rng(11);
  const Eigen::MatrixXcd a = random_matrix(rng, 7, 4);
  const std::vector<double> ws(7, 1.0), wi(4, 1.0);
  const double k = schmidt(a, ws, wi).schmidt_number;
  const Eigen::MatrixXcd b = random_unitary(rng, 7) * a * random_unitary(rng, 4);
  CHECK(schmidt(b, ws, wi).schmidt_number == doctest::Approx(k).epsilon(1e-10));
}

TEST_CASE("Schmidt modes are orthonormal under the weights and rebuild the amplitude") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXcd a = random_matrix(rng, 6, 4);
  const std::vector<double> ws{0.5, 0.5, 1.0, 1.5, 0.2, 0.9}, wi{0.3, 0.6, 0.9, 1.2};
  const auto r = schmidt(a, ws, wi, true);
  Eigen::VectorXd w_s = Eigen::Map<const Eigen::VectorXd>(ws.data(), 6);
  Eigen::VectorXd w_i = Eigen::Map<const Eigen::VectorXd>(wi.data(), 4);
  const Eigen::MatrixXcd gs = r.signal_modes.adjoint() * w_s.asDiagonal() * r.signal_modes;
  const Eigen::MatrixXcd gi = r.idler_modes.adjoint() * w_i.asDiagonal() * r.idler_modes;
  CHECK((gs - Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((gi - Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::MatrixXcd rebuilt = Eigen::MatrixXcd::Zero(6, 4);
  for (int k = 0; k < 4; ++k) rebuilt += r.coefficients[k] * r.signal_modes.col(k) * r.idler_modes.col(k).transpose();
  Eigen::MatrixXcd b = a;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 4; ++j) b(i, j) *= std::sqrt(ws[i] * wi[j]);
  CHECK((rebuilt - a / b.norm()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("empty rows and columns do not change the decomposition") {
  std::mt19937_64 rng(5);
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(9, 8);
  v.block(2, 3, 5, 4) = random_matrix(rng, 5, 4);
  const auto amp = toy_amplitude(v);
  const auto full = schmidt(amp, true);
  const auto trimmed = schmidt(amp);
  CHECK(trimmed.schmidt_number == doctest::Approx(full.schmidt_number).epsilon(1e-12));
  CHECK_THROWS_AS(schmidt(toy_amplitude(Eigen::MatrixXcd::Zero(3, 3))), DegenerateError);
  CHECK_THROWS_AS(schmidt_number({}), DegenerateError);
}

TEST_CASE("transverse K for one process and for the mirror pair") {
  const auto& r = mode("HE21,R");
  const auto& l = mode("HE21,L");
  const std::vector<TransverseTerm> single{{r, l, 1.0}};
  CHECK(k_theta_harmonic(single).schmidt_number == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(k_theta_exact(single).schmidt_number == doctest::Approx(1.0).epsilon(1e-9));
  const std::vector<TransverseTerm> pair{{r, l, 1.0 / std::sqrt(2.0)}, {l, r, 1.0 / std::sqrt(2.0)}};
  const double kh = k_theta_harmonic(pair).schmidt_number;
  const double ke = k_theta_exact(pair).schmidt_number;
  MESSAGE("mirror pair K_theta: harmonic " << kh << ", exact " << ke);
  CHECK(kh == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(ke == doctest::Approx(2.0).epsilon(1e-3));
  // Unequal weights lower K below 2.
  const std::vector<TransverseTerm> skewed{{r, l, 0.9}, {l, r, std::sqrt(1.0 - 0.81)}};
  const double want = 1.0 / (std::pow(0.81, 2) + std::pow(0.19, 2));
  CHECK(k_theta_exact(skewed).schmidt_number == doctest::Approx(want).epsilon(1e-3));
}

TEST_CASE("exact K_theta equals the Gram-matrix spectrum of the sampled amplitude") {
  // M = A W B^T has the non-zero spectrum of M M^+ equal to that of the
  // small product (W B^T conj(B) W^+)(A^+ A).
  const std::vector<TransverseTerm> terms{
      {mode("HE21,R"), mode("HE21,L"), cd(0.6, 0.1)}, {mode("HE21,L"), mode("HE21,R"), cd(0.5, -0.3)},
      {mode("HE11,R"), mode("TE01"), cd(0.2, 0.0)}};
  const int theta = 16;
  const auto [r_max, tail] = transverse_sampling(terms);
  Eigen::MatrixXcd a, b;
  Eigen::Matrix3cd w = Eigen::Matrix3cd::Zero();
  for (int k = 0; k < 3; ++k) {
    const Eigen::VectorXcd sa = sample_transverse(terms[k].signal, r_max, tail, theta);
    const Eigen::VectorXcd sb = sample_transverse(terms[k].idler, r_max, tail, theta);
    if (k == 0) {
      a.resize(sa.size(), 3);
      b.resize(sb.size(), 3);
    }
    a.col(k) = sa;
    b.col(k) = sb;
    w(k, k) = terms[k].weight;
  }
  const Eigen::Matrix3cd small = (w * b.transpose() * b.conjugate() * w.adjoint()) * (a.adjoint() * a);
  Eigen::ComplexEigenSolver<Eigen::Matrix3cd> es(small);
  std::vector<double> ev;
  for (int k = 0; k < 3; ++k) ev.push_back(es.eigenvalues()(k).real());
  std::sort(ev.begin(), ev.end(), std::greater<>());
  const double total = ev[0] + ev[1] + ev[2];
  const auto got = k_theta_exact(terms, theta);
  REQUIRE(got.coefficients.size() == 3);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(got.coefficients[k] * got.coefficients[k] - ev[k] / total) < 1e-10);
}

TEST_CASE("mirror amplitudes give the Gram-matrix qubit state") {
  std::mt19937_64 rng(13);
  const Eigen::MatrixXcd v = random_matrix(rng, 8, 8);
  const auto a = toy_amplitude(v);
  auto b = a;
  b.values *= std::polar(1.0, 0.7);
  const auto s = oam_state_from_amplitudes(a, b);
  CHECK(std::abs(s.c1) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(std::abs(s.c2) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(std::arg(s.c2) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(s.coherence == doctest::Approx(1.0).epsilon(1e-12));

  Eigen::MatrixXcd left = Eigen::MatrixXcd::Zero(8, 8), right = Eigen::MatrixXcd::Zero(8, 8);
  left.leftCols(4) = v.leftCols(4);
  right.rightCols(4) = 2.0 * v.rightCols(4);
  const auto apart = oam_state_from_amplitudes(toy_amplitude(left), toy_amplitude(right));
  CHECK(apart.coherence == 0.0);
  CHECK(std::norm(apart.c1) + std::norm(apart.c2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(chsh_max(apart) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::isnan(chsh_crossing(apart)));
}

TEST_CASE("CHSH maximum against a brute-force angle search") {
  for (const double c : {1.0, 0.6, 0.2}) {
    OamQubitState s;
    s.coherence = c;
    const double got = chsh_max(s);
    CAPTURE(c);
    CHECK(got == doctest::Approx(2.0 * std::sqrt(1.0 + c * c)).epsilon(1e-12));
    const double brute = chsh_brute(s.density(), 72);
    CHECK(brute <= got + 1e-12);
    CHECK(brute == doctest::Approx(got).epsilon(5e-3));
  }
}

TEST_CASE("CHSH respects the Tsirelson bound on random states") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXcd g = random_matrix(rng, 4, 4);
    Eigen::Matrix4cd rho = g * g.adjoint();
    rho /= rho.trace().real();
    CHECK(chsh_max(rho) <= 2.0 * std::sqrt(2.0) + 1e-12);
  }
}

TEST_CASE("white noise lowers CHSH monotonically to the Werner crossing") {
  OamQubitState s;
  double last = 3.0;
  for (int k = 0; k <= 20; ++k) {
    s.noise = k / 20.0;
    const double v = chsh_max(s);
    CHECK(v <= last + 1e-12);
    CHECK(v == doctest::Approx(2.0 * std::sqrt(2.0) * (1.0 - s.noise)).epsilon(1e-12));
    last = v;
  }
  s.noise = 1.0;
  CHECK(chsh_max(s) < 1e-12);
  s.noise = 0.0;
  CHECK(chsh_crossing(s) == doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)).epsilon(1e-10));
}

TEST_CASE("CHSH ignores the relative phase and the order of the mirror amplitudes") {
  OamQubitState s;
  s.c1 = 0.8;
  s.c2 = std::polar(0.6, 1.3);
  s.coherence = 0.9;
  s.noise = 0.1;
  OamQubitState swapped = s;
  std::swap(swapped.c1, swapped.c2);
  OamQubitState real = s;
  real.c2 = 0.6;
  CHECK(chsh_max(swapped) == doctest::Approx(chsh_max(s)).epsilon(1e-12));
  CHECK(chsh_max(real) == doctest::Approx(chsh_max(s)).epsilon(1e-12));
}
