#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <string>
#include <vector>

#include "ringfiber/materials.hpp"

namespace ringfiber {

using cdouble = std::complex<double>;

struct FiberGeometry {
  double r1_um = 4.0;
  double r2_um = 5.5;
  void validate() const;
};

class RingFiber {
 public:
  RingFiber(RegionStack stack, FiberGeometry geometry);

  const RegionStack& stack() const { return stack_; }
  const FiberGeometry& geometry() const { return geometry_; }
  double cladding_index(double omega) const;
  double core_index(double omega) const;

 private:
  RegionStack stack_;
  FiberGeometry geometry_;
};

enum class ModeFamily { TE, TM, HE, EH };
enum class Polarization { V, H, R, L, TE, TM };
enum class Component { X, Y, Z };
enum class DetBlock { Full, TE, TM };

const char* to_string(ModeFamily family);
const char* to_string(Polarization pol);

struct TransverseWavenumbers {
  double w0;  // inner cladding, 1/um
  double w1;  // ring core
  double w2;  // outer cladding
};

TransverseWavenumbers transverse_wavenumbers(const RingFiber& fiber, double n_eff, double omega);

using BoundaryMatrix = Eigen::Matrix<double, 8, 8>;

// Columns: A0 A1 B1 B2 (h_z) then C0 C1 D1 D2 (e_z). Rows: continuity of
// e_z, h_z, e_theta, h_theta at r1, then the same at r2; each row is divided
// by its largest absolute entry. The inner-cladding columns are scaled by
// 1/I_n(w0 r1) and the outer-cladding ones by 1/K_n(w2 r2).
BoundaryMatrix boundary_matrix(const RingFiber& fiber, int n, double omega, double n_eff);
double dispersion_det(const RingFiber& fiber, int n, double omega, double n_eff);
// n = 0 only: determinant of the uncoupled 4x4 TE (h_z) or TM (e_z) block.
double block_det(const RingFiber& fiber, DetBlock block, double omega, double n_eff);

// Radial parts of the six field components of one ansatz term. The angular
// factors are sin(n theta + phi) for e_z, e_r, h_theta and cos(n theta + phi)
// for h_z, e_theta, h_r; transverse components additionally carry a factor i.
// Magnetic fields are in units of Z0 h.
struct RadialFields {
  double ez, hz, er, eth, hr, hth;
};

// One solved root at a single frequency, independent of the polarization
// phase. Coefficients are stored for the scaled inner/outer basis described at
// boundary_matrix.
struct ModeProfile {
  int n = 0;
  ModeFamily family = ModeFamily::HE;
  int radial_index = 1;
  double omega = 0.0;
  double k0 = 0.0;      // 1/um
  double n_eff = 0.0;
  double beta = 0.0;    // 1/um
  TransverseWavenumbers w{};
  std::array<double, 3> eps{};
  FiberGeometry geometry;
  std::array<double, 8> coeffs{};  // A0 A1 B1 B2 C0 C1 D1 D2, scaled basis
  double r_max = 0.0;              // radius where the normalisation integral was truncated
  double singular_ratio = 0.0;     // smallest/largest singular value at the root

  RadialFields radial(double r) const;
  // Evaluates with the expansion of a given region regardless of r; used to
  // compare the two sides of an interface.
  RadialFields radial_in_region(int region, double r) const;
  // A0 A1 B1 B2 C0 C1 D1 D2 multiplying the unscaled I_n, J_n, Y_n, K_n.
  std::array<double, 8> physical_coefficients() const;
  // Integral of |e|^2 over the cross-section for one pure V/H (or TE/TM) term.
  double norm_squared(double* r_max_out = nullptr) const;
  double wavelength_um() const;
  std::string label() const;  // TE01, HE21, ...
};

struct FieldSample {
  cdouble e_r, e_theta, e_z, h_r, h_theta, h_z;
};

struct CartesianSample {
  cdouble e_x, e_y, e_z;
};

// e^{i l theta} coefficient of one cartesian component, split over the radial
// functions it multiplies: value(r) = c_er er(r) + c_eth eth(r) + c_ez ez(r).
struct HarmonicTerm {
  int l;
  cdouble c_er, c_eth, c_ez;
};

class GuidedMode {
 public:
  GuidedMode(ModeProfile profile, Polarization pol);

  const ModeProfile& profile() const { return profile_; }
  Polarization polarization() const { return pol_; }
  int n() const { return profile_.n; }
  int radial_index() const { return profile_.radial_index; }
  ModeFamily family() const { return profile_.family; }
  double omega() const { return profile_.omega; }
  double n_eff() const { return profile_.n_eff; }
  double beta_per_um() const { return profile_.beta; }
  double beta_per_m() const { return profile_.beta * 1e6; }
  std::string label() const;  // HE21,R  TE01  ...

  // Weights of the phi = 0 and phi = pi/2 terms.
  cdouble weight_v() const { return weight_v_; }
  cdouble weight_h() const { return weight_h_; }

  FieldSample field_at(double r, double theta) const;
  CartesianSample cartesian_field_at(double r, double theta) const;
  std::vector<HarmonicTerm> harmonics(Component component) const;
  cdouble component_harmonic(Component component, int l, const RadialFields& f) const;

 private:
  ModeProfile profile_;
  Polarization pol_;
  cdouble weight_v_, weight_h_;
};

struct SolverOptions {
  int scan_points = 400;
  double n_eff_tolerance = 1e-12;
  double singular_ratio_max = 1e-8;
  double continuity_tolerance = 1e-6;
  double tail_tolerance = 1e-10;
};

// All roots for azimuthal order n at one frequency, sorted by decreasing n_eff,
// normalised and classified. For n = 0 the TE and TM blocks are scanned
// separately.
std::vector<ModeProfile> solve_profiles(const RingFiber& fiber, int n, double omega,
                                        const SolverOptions& options = {});

// One GuidedMode per root: TE/TM for n = 0, the V variant for n >= 1.
std::vector<GuidedMode> find_modes(const RingFiber& fiber, int n, double omega, const SolverOptions& options = {});

// Builds a profile from a root already bracketed in [lo, hi].
ModeProfile solve_bracketed(const RingFiber& fiber, int n, DetBlock block, double omega, double lo, double hi,
                            const SolverOptions& options = {});

// Refines a root in [lo, hi] by bisection on the appropriate determinant.
double bisect_root(const RingFiber& fiber, int n, DetBlock block, double omega, double lo, double hi, double tol);

GuidedMode circular_superposition(const GuidedMode& mode_v, const GuidedMode& mode_h, Polarization handedness);
GuidedMode normalize(const GuidedMode& mode);
std::string classify(const GuidedMode& mode);

// TE, TM and R/L pairs for n = 0..n_max, sorted by decreasing n_eff; the
// right-handed member of each pair precedes the left-handed one.
std::vector<GuidedMode> mode_census(const RingFiber& fiber, double omega, int n_max = 6,
                                    const SolverOptions& options = {});

// Largest relative jump of the tangential components across r1 and r2.
double continuity_residual(const ModeProfile& profile);

// Integral of e_a^* . e_b over the cross-section, by 2-D quadrature.
cdouble field_inner_product(const GuidedMode& a, const GuidedMode& b);

}  // namespace ringfiber
