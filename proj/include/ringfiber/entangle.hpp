#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>
#include <vector>

#include "ringfiber/spdc.hpp"

namespace ringfiber {

struct SchmidtResult {
  std::vector<double> coefficients;  // descending, sum of squares 1
  double schmidt_number = 1.0;
  // Column k holds f_{s,k} (f_{i,k}) on the input grid, orthonormal under the
  // quadrature weights. Empty when modes were not requested.
  Eigen::MatrixXcd signal_modes, idler_modes;
};

// K = 1 / sum lambda^4 for coefficients with sum lambda^2 = 1.
double schmidt_number(const std::vector<double>& coefficients);

// Singular value decomposition of diag(sqrt(ws)) A diag(sqrt(wi)).
SchmidtResult schmidt(const Eigen::MatrixXcd& amplitude, const std::vector<double>& weights_s,
                      const std::vector<double>& weights_i, bool with_modes = false);
// Uniform d_omega weights; rows and columns that carry no amplitude are
// dropped before the decomposition.
SchmidtResult schmidt(const JointSpectralAmplitude& amplitude, bool with_modes = false);

struct KOmegaPoint {
  double sigma_nm;
  double k_omega;
};

struct KOmegaOptions {
  int min_grid_points = 512;
  int max_grid_points = 2048;
  double points_per_sigma = 4.0;  // grid steps per pump sigma
  // Signal window; the default keeps the short-wavelength side of degeneracy.
  double lambda_s_min_um = 0.0;
  double lambda_s_max_um = 0.0;
  double band_floor = 1e-4;
  JsaOptions jsa;
};

// Contiguous signal band around the maximum of the estimate
// m(omega_s) = int |E_p(omega_s + omega_i)|^2 |chi~(-dbeta)|^2 d omega_i
// where m exceeds rel_floor of its peak, searched inside
// [omega_s_min, omega_s_max]. Slowly varying prefactors are left out.
std::pair<double, double> signal_marginal_band(const ProcessTriple& triple, const QpmGrating& grating,
                                               const PumpSpectrum& pump, double omega_s_min, double omega_s_max,
                                               double rel_floor = 1e-4);

// Mirrored grid over the signal band of a Gaussian pump, widened by the pump
// reach and sampled at points_per_sigma.
SpectralGrid k_omega_grid(const ProcessTriple& triple, const QpmGrating& grating, const PumpSpectrum& pump,
                          const KOmegaOptions& options = {});

std::vector<KOmegaPoint> k_omega_vs_pump(const ProcessTriple& triple, const QpmGrating& grating,
                                         double pump_lambda_um, const std::vector<double>& sigmas_nm,
                                         const KOmegaOptions& options = {});

// One process contributing c * e_s(r_s, theta_s) e_i(r_i, theta_i) to the
// transverse two-photon amplitude (x components).
struct TransverseTerm {
  GuidedMode signal;
  GuidedMode idler;
  std::complex<double> weight;
};

// Singular values of the azimuthal matrix F_theta built from OAM harmonic
// pairs (l_s, l_i) with |l| <= l_max, and the resulting Schmidt number.
SchmidtResult k_theta_harmonic(const std::vector<TransverseTerm>& terms, int l_max = 6);

// Schmidt decomposition of the transverse amplitude sampled on radial
// Gauss-Legendre nodes times a uniform azimuthal grid. The sampled matrix has
// rank at most terms.size(), so its singular values are taken from the small
// core left after orthonormalising the sampled signal and idler columns.
SchmidtResult k_theta_exact(const std::vector<TransverseTerm>& terms, int theta_points = 32);

// Outer radius and tail panel width shared by every mode of the terms.
std::pair<double, double> transverse_sampling(const std::vector<TransverseTerm>& terms);

// x component times sqrt(r dr dtheta) on radial Gauss-Legendre nodes (outer
// index) and a uniform azimuthal grid (inner index).
Eigen::VectorXcd sample_transverse(const GuidedMode& mode, double r_max, double tail_width, int theta_points);

// Amplitudes of the mirror processes, with C1 carrying |+1,-1> and C2 |-1,+1>.
struct OamQubitState {
  std::complex<double> c1{1.0 / std::sqrt(2.0), 0.0};
  std::complex<double> c2{1.0 / std::sqrt(2.0), 0.0};
  double coherence = 1.0;  // |<Phi_1|Phi_2>| / (|Phi_1| |Phi_2|)
  double noise = 0.0;      // p

  // (1 - p) rho + p I/4 in the basis |+1,+1>, |+1,-1>, |-1,+1>, |-1,-1>.
  Eigen::Matrix4cd density() const;
};

// Reduced OAM state from the two mirror-process amplitudes on a common grid:
// the Gram matrix of the amplitudes after tracing the frequencies.
OamQubitState oam_state_from_amplitudes(const JointSpectralAmplitude& plus_minus,
                                        const JointSpectralAmplitude& minus_plus);

// 2 sqrt(m1 + m2) from the two largest eigenvalues of T^T T.
double chsh_max(const Eigen::Matrix4cd& rho);
double chsh_max(const OamQubitState& state);

// Noise weight p where chsh_max falls to 2; NaN when it never exceeds 2.
double chsh_crossing(OamQubitState state);

}  // namespace ringfiber
