#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ringfiber/mode_branch.hpp"
#include "ringfiber/qpm.hpp"

namespace ringfiber {

// One mode branch together with the polarization it is excited in.
struct ModeChannel {
  std::shared_ptr<const ModeBranch> branch;
  Polarization pol = Polarization::R;

  std::string label() const;
  double n_eff(double omega) const { return branch->n_eff(omega); }
  double beta(double omega) const { return branch->beta(omega); }  // 1/um
  GuidedMode mode_at(double omega) const { return branch->mode_at(omega, pol); }
};

// Branches of one fiber over a common wavelength band, built on first use.
class ModeLibrary {
 public:
  ModeLibrary(const RingFiber& fiber, double lambda_min_um = 0.7, double lambda_max_um = 2.0, double step_nm = 0.5);

  const RingFiber& fiber() const { return fiber_; }
  std::shared_ptr<const ModeBranch> branch(const ModeId& id) const;
  ModeChannel channel(const std::string& label) const;
  // Every polarized channel guided at lambda_um (R before L), radial order 1.
  std::vector<ModeChannel> channels_at(double lambda_um, int n_max = 6) const;

 private:
  RingFiber fiber_;
  double lambda_min_, lambda_max_, step_nm_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::shared_ptr<const ModeBranch>> cache_;
};

struct ProcessTriple {
  ModeChannel pump, signal, idler;
  std::array<int, 3> oam{};  // dominant x-component OAM of pump, signal, idler

  std::string label() const;
};

// Fills the OAM tuple from the x-components at the given frequencies.
ProcessTriple make_triple(const ModeChannel& pump, const ModeChannel& signal, const ModeChannel& idler,
                          double omega_s, double omega_i);

// Pump amplitude normalised so that the integral of |E_p|^2 over omega is 1.
struct PumpSpectrum {
  enum class Kind { Cw, Gaussian };
  Kind kind = Kind::Cw;
  double omega0 = 0.0;  // rad/s
  double sigma = 0.0;   // rad/s, Gaussian only
  double power_w = 1.0;

  static PumpSpectrum cw(double lambda_um, double power_w);
  // sigma_nm is the wavelength-domain sigma of the amplitude.
  static PumpSpectrum gaussian(double lambda_um, double sigma_nm, double power_w);

  // E_p(omega) with the given Gaussian width standing in for a cw line.
  double amplitude(double omega, double effective_sigma) const;
  double effective_sigma(double grid_step) const;
};

double sigma_omega_from_nm(double lambda_um, double sigma_nm);

// beta_p(omega_s + omega_i) - beta_s(omega_s) - beta_i(omega_i) in 1/um.
double phase_mismatch(const ProcessTriple& triple, double omega_s, double omega_i);

// Transverse part of the coupling: the (r, theta) integral of
// chi : e_p conj(e_s) conj(e_i), in pm/V/um. The azimuthal integral is done
// on the Fourier harmonics of the cartesian components.
std::complex<double> transverse_overlap(const GuidedMode& pump, const GuidedMode& signal, const GuidedMode& idler,
                                        const QpmGrating& grating);

// Full coupling sqrt(2 pi) chi~(-dbeta) times the transverse integral, in m/V.
std::complex<double> overlap(const ProcessTriple& triple, double omega_s, double omega_i, const QpmGrating& grating);

// Transverse overlap along omega_i = omega_p0 - omega_s, interpolated from
// exact evaluations at uniformly spaced signal frequencies.
class OverlapTable {
 public:
  OverlapTable(const ProcessTriple& triple, const QpmGrating& grating, double omega_p0, double omega_s_min,
               double omega_s_max, int nodes = 17, int threads = 0);
  ~OverlapTable();
  OverlapTable(OverlapTable&&) noexcept;
  OverlapTable& operator=(OverlapTable&&) noexcept;

  std::complex<double> operator()(double omega_s) const;
  const std::vector<double>& node_omegas() const { return nodes_; }
  const std::vector<std::complex<double>>& node_values() const { return values_; }

 private:
  struct Splines;
  std::vector<double> nodes_;
  std::vector<std::complex<double>> values_;
  std::unique_ptr<Splines> splines_;
};

// Uniform signal grid between two wavelengths and the idler grid mirrored
// through omega_p0, both ascending, so omega_s[k] + omega_i[n-1-k] = omega_p0.
struct SpectralGrid {
  std::vector<double> omega_s, omega_i;
};
SpectralGrid mirrored_grid(double omega_p0, double lambda_s_min_um, double lambda_s_max_um, int count);

struct JointSpectralAmplitude {
  std::vector<double> omega_s, omega_i;  // uniform, rad/s
  std::vector<double> n_eff_s, n_eff_i;
  Eigen::MatrixXcd values;               // rows omega_s, columns omega_i
  std::string label;
  double omega_p0 = 0.0;
  double pump_n_eff = 0.0;
  double power_w = 0.0;
  bool normalized = false;

  double d_omega_s() const;
  double d_omega_i() const;
  double norm_squared() const;  // sum |Phi|^2 d_omega_s d_omega_i
};

struct JsaOptions {
  int overlap_nodes = 17;
  // A cw pump on a mirrored grid is an exact line on the anti-diagonal; on
  // any other grid it is a Gaussian this many omega_s steps wide.
  double cw_sigma_steps = 3.0;
  int threads = 0;
};

// Phi(omega_s, omega_i) with A_p = sqrt(P), in sqrt(W s)/V. The transverse
// overlap is taken from an OverlapTable at the pump centre frequency.
JointSpectralAmplitude jsa(const ProcessTriple& triple, const PumpSpectrum& pump, const QpmGrating& grating,
                           const std::vector<double>& omega_s, const std::vector<double>& omega_i,
                           const JsaOptions& options = {});

// Copy scaled to unit norm; DegenerateError for a zero amplitude.
JointSpectralAmplitude normalized(const JointSpectralAmplitude& amplitude);

Eigen::MatrixXd pair_density(const JointSpectralAmplitude& amplitude);
std::vector<double> signal_density(const JointSpectralAmplitude& amplitude);
std::vector<double> idler_density(const JointSpectralAmplitude& amplitude);

// Conversion of sum |Phi|^2 d_omega^2 to pairs per second.
double rate_factor(const JointSpectralAmplitude& amplitude);
double pair_rate(const JointSpectralAmplitude& amplitude);
// Pairs s^-1 nm^-1 against signal (idler) wavelength, on the omega grid.
std::vector<double> signal_rate_per_nm(const JointSpectralAmplitude& amplitude);
std::vector<double> idler_rate_per_nm(const JointSpectralAmplitude& amplitude);

struct TripleCandidate {
  ProcessTriple triple;
  int order = 1;              // dbeta = 2 pi order / period at the peak
  double lambda_s_um = 0.0;   // closest approach to phase matching
  double lambda_i_um = 0.0;
  double detuning = 0.0;      // |dbeta - 2 pi order / period| there, 1/um
  double transverse = 0.0;    // |transverse_overlap| there, pm/V/um
  double strength = 0.0;      // |overlap| there, m/V
};

struct EnumerateOptions {
  std::vector<int> orders{1, -1};
  double relative_overlap_floor = 1e-8;
  int scan_points = 600;
};

// Signal/idler pairs (signal on the shorter-wavelength side) whose mismatch
// reaches the main lobe of some grating order with the signal inside
// [lambda_min, lambda_max] and whose transverse overlap is non-negligible.
// Sorted by strength.
std::vector<TripleCandidate> enumerate_triples(const ModeChannel& pump, const std::vector<ModeChannel>& channels,
                                               const QpmGrating& grating, double omega_p0, double lambda_min_um,
                                               double lambda_max_um, const EnumerateOptions& options = {});

// Period putting order m exactly on (lambda_s, lambda_i), which must satisfy
// energy conservation with the pump centre omega_p0.
double recalibrate_period(const ProcessTriple& triple, double lambda_s_um, double lambda_i_um, int order,
                          double omega_p0);

}  // namespace ringfiber
