#include "ringfiber/modesolver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "ringfiber/errors.hpp"
#include "ringfiber/quadrature.hpp"
#include "ringfiber/specfun.hpp"
#include "ringfiber/units.hpp"

namespace ringfiber {

using specfun::CylinderKind;

void FiberGeometry::validate() const {
  if (!(r1_um > 0.0 && r2_um > r1_um)) throw ConfigError("fiber geometry needs 0 < r1 < r2");
}

RingFiber::RingFiber(RegionStack stack, FiberGeometry geometry) : stack_(std::move(stack)), geometry_(geometry) {
  geometry_.validate();
}

double RingFiber::cladding_index(double omega) const {
  const double lambda = wavelength_um_from_omega(omega);
  return std::max(stack_.index_at_wavelength(0, lambda), stack_.index_at_wavelength(2, lambda));
}

double RingFiber::core_index(double omega) const {
  return stack_.index_at_wavelength(1, wavelength_um_from_omega(omega));
}

const char* to_string(ModeFamily family) {
  switch (family) {
    case ModeFamily::TE: return "TE";
    case ModeFamily::TM: return "TM";
    case ModeFamily::HE: return "HE";
    case ModeFamily::EH: return "EH";
  }
  return "?";
}

const char* to_string(Polarization pol) {
  switch (pol) {
    case Polarization::V: return "V";
    case Polarization::H: return "H";
    case Polarization::R: return "R";
    case Polarization::L: return "L";
    case Polarization::TE: return "TE";
    case Polarization::TM: return "TM";
  }
  return "?";
}

TransverseWavenumbers transverse_wavenumbers(const RingFiber& fiber, double n_eff, double omega) {
  const double lambda = wavelength_um_from_omega(omega);
  const auto& stack = fiber.stack();
  const double e0 = stack.permittivity_at_wavelength(0, lambda);
  const double e1 = stack.permittivity_at_wavelength(1, lambda);
  const double e2 = stack.permittivity_at_wavelength(2, lambda);
  const double n2 = n_eff * n_eff;
  if (!(n2 > std::max(e0, e2) && n2 < e1)) {
    std::ostringstream msg;
    msg << "effective index " << n_eff << " outside the guidance window (" << std::sqrt(std::max(e0, e2)) << ", "
        << std::sqrt(e1) << ")";
    throw DomainError(msg.str());
  }
  const double k0 = k0_per_um(omega);
  return {k0 * std::sqrt(n2 - e0), k0 * std::sqrt(e1 - n2), k0 * std::sqrt(n2 - e2)};
}

namespace {

// Column indices in the coefficient octet.
constexpr int kA0 = 0, kA1 = 1, kB1 = 2, kB2 = 3, kC0 = 4, kC1 = 5, kD1 = 6, kD2 = 7;

struct RegionBasis {
  int count = 0;
  double f[2] = {0, 0};
  double df[2] = {0, 0};
  int e_cols[2] = {-1, -1};
  int h_cols[2] = {-1, -1};
  double kappa2 = 0.0;
  double eps = 0.0;
};

struct Setup {
  int n;
  double k0, beta;
  TransverseWavenumbers w;
  std::array<double, 3> eps;
  double r1, r2;
};

Setup make_setup(const RingFiber& fiber, int n, double omega, double n_eff) {
  Setup s;
  s.n = n;
  s.k0 = k0_per_um(omega);
  s.beta = s.k0 * n_eff;
  s.w = transverse_wavenumbers(fiber, n_eff, omega);
  const double lambda = wavelength_um_from_omega(omega);
  for (int q = 0; q < 3; ++q) s.eps[q] = fiber.stack().permittivity_at_wavelength(q, lambda);
  s.r1 = fiber.geometry().r1_um;
  s.r2 = fiber.geometry().r2_um;
  return s;
}

RegionBasis basis(int region, int n, const TransverseWavenumbers& w, const std::array<double, 3>& eps, double r1,
                  double r2, double r) {
  RegionBasis b;
  b.eps = eps[region];
  switch (region) {
    case 0: {
      const auto at = specfun::eval_with_deriv_scaled(CylinderKind::I, n, w.w0 * r);
      const double ref = specfun::eval_scaled(CylinderKind::I, n, w.w0 * r1);
      const double growth = std::exp(w.w0 * (r - r1));
      b.count = 1;
      b.f[0] = growth * at.value / ref;
      b.df[0] = growth * w.w0 * at.derivative / ref;
      b.e_cols[0] = kC0;
      b.h_cols[0] = kA0;
      b.kappa2 = -w.w0 * w.w0;
      break;
    }
    case 1: {
      const auto j = specfun::eval_with_deriv(CylinderKind::J, n, w.w1 * r);
      const auto y = specfun::eval_with_deriv(CylinderKind::Y, n, w.w1 * r);
      b.count = 2;
      b.f[0] = j.value;
      b.df[0] = w.w1 * j.derivative;
      b.f[1] = y.value;
      b.df[1] = w.w1 * y.derivative;
      b.e_cols[0] = kC1;
      b.e_cols[1] = kD1;
      b.h_cols[0] = kA1;
      b.h_cols[1] = kB1;
      b.kappa2 = w.w1 * w.w1;
      break;
    }
    case 2: {
      const auto at = specfun::eval_with_deriv_scaled(CylinderKind::K, n, w.w2 * r);
      const double ref = specfun::eval_scaled(CylinderKind::K, n, w.w2 * r2);
      const double decay = std::exp(-w.w2 * (r - r2));
      b.count = 1;
      b.f[0] = decay * at.value / ref;
      b.df[0] = decay * w.w2 * at.derivative / ref;
      b.e_cols[0] = kD2;
      b.h_cols[0] = kB2;
      b.kappa2 = -w.w2 * w.w2;
      break;
    }
    default: throw DomainError("region index must be 0, 1 or 2");
  }
  return b;
}

// Adds +sign * (e_z, h_z, e_theta, h_theta) rows for one side of an interface.
void add_rows(BoundaryMatrix& m, int row0, const RegionBasis& b, int n, double k0, double beta, double r,
              double sign) {
  const double bn_r = beta * n / r;
  for (int k = 0; k < b.count; ++k) {
    const int ce = b.e_cols[k];
    const int ch = b.h_cols[k];
    m(row0 + 0, ce) += sign * b.f[k];
    m(row0 + 1, ch) += sign * b.f[k];
    m(row0 + 2, ce) += sign * bn_r * b.f[k] / b.kappa2;
    m(row0 + 2, ch) += sign * (-k0 * b.df[k]) / b.kappa2;
    m(row0 + 3, ce) += sign * k0 * b.eps * b.df[k] / b.kappa2;
    m(row0 + 3, ch) += sign * (-bn_r * b.f[k]) / b.kappa2;
  }
}

void normalize_rows(Eigen::Ref<Eigen::MatrixXd> m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double scale = m.row(i).cwiseAbs().maxCoeff();
    if (scale > 0.0) m.row(i) /= scale;
  }
}

constexpr std::array<int, 4> kTeRows = {1, 2, 5, 6};
constexpr std::array<int, 4> kTeCols = {kA0, kA1, kB1, kB2};
constexpr std::array<int, 4> kTmRows = {0, 3, 4, 7};
constexpr std::array<int, 4> kTmCols = {kC0, kC1, kD1, kD2};

BoundaryMatrix raw_boundary_matrix(const Setup& s) {
  BoundaryMatrix m = BoundaryMatrix::Zero();
  const RegionBasis in1 = basis(0, s.n, s.w, s.eps, s.r1, s.r2, s.r1);
  const RegionBasis out1 = basis(1, s.n, s.w, s.eps, s.r1, s.r2, s.r1);
  const RegionBasis in2 = basis(1, s.n, s.w, s.eps, s.r1, s.r2, s.r2);
  const RegionBasis out2 = basis(2, s.n, s.w, s.eps, s.r1, s.r2, s.r2);
  add_rows(m, 0, in1, s.n, s.k0, s.beta, s.r1, +1.0);
  add_rows(m, 0, out1, s.n, s.k0, s.beta, s.r1, -1.0);
  add_rows(m, 4, in2, s.n, s.k0, s.beta, s.r2, +1.0);
  add_rows(m, 4, out2, s.n, s.k0, s.beta, s.r2, -1.0);
  return m;
}

Eigen::Matrix4d block_of(const BoundaryMatrix& m, DetBlock block) {
  const auto& rows = block == DetBlock::TE ? kTeRows : kTmRows;
  const auto& cols = block == DetBlock::TE ? kTeCols : kTmCols;
  Eigen::Matrix4d b;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) b(i, j) = m(rows[i], cols[j]);
  return b;
}

double det_for(const RingFiber& fiber, int n, DetBlock block, double omega, double n_eff) {
  return block == DetBlock::Full ? dispersion_det(fiber, n, omega, n_eff) : block_det(fiber, block, omega, n_eff);
}

}  // namespace

BoundaryMatrix boundary_matrix(const RingFiber& fiber, int n, double omega, double n_eff) {
  if (n < 0 || n > specfun::kMaxOrder) throw RangeError("azimuthal order outside 0..6");
  BoundaryMatrix m = raw_boundary_matrix(make_setup(fiber, n, omega, n_eff));
  normalize_rows(m);
  return m;
}

double dispersion_det(const RingFiber& fiber, int n, double omega, double n_eff) {
  return boundary_matrix(fiber, n, omega, n_eff).determinant();
}

double block_det(const RingFiber& fiber, DetBlock block, double omega, double n_eff) {
  if (block == DetBlock::Full) return dispersion_det(fiber, 0, omega, n_eff);
  Eigen::Matrix4d b = block_of(raw_boundary_matrix(make_setup(fiber, 0, omega, n_eff)), block);
  normalize_rows(b);
  return b.determinant();
}

RadialFields ModeProfile::radial_in_region(int region, double r) const {
  r = std::max(r, 1e-9);
  const RegionBasis b = basis(region, n, w, eps, geometry.r1_um, geometry.r2_um, r);
  double e = 0, de = 0, h = 0, dh = 0;
  for (int k = 0; k < b.count; ++k) {
    e += coeffs[b.e_cols[k]] * b.f[k];
    de += coeffs[b.e_cols[k]] * b.df[k];
    h += coeffs[b.h_cols[k]] * b.f[k];
    dh += coeffs[b.h_cols[k]] * b.df[k];
  }
  const double bn_r = beta * n / r;
  RadialFields f;
  f.ez = e;
  f.hz = h;
  f.er = (beta * de - k0 * n * h / r) / b.kappa2;
  f.eth = (bn_r * e - k0 * dh) / b.kappa2;
  f.hr = (-k0 * b.eps * n * e / r + beta * dh) / b.kappa2;
  f.hth = (k0 * b.eps * de - bn_r * h) / b.kappa2;
  return f;
}

RadialFields ModeProfile::radial(double r) const {
  if (r < 0.0) throw DomainError("radius must be non-negative");
  const int region = r < geometry.r1_um ? 0 : (r <= geometry.r2_um ? 1 : 2);
  return radial_in_region(region, r);
}

std::array<double, 8> ModeProfile::physical_coefficients() const {
  auto c = coeffs;
  const double i_ref = specfun::eval(CylinderKind::I, n, w.w0 * geometry.r1_um);
  const double k_ref = specfun::eval(CylinderKind::K, n, w.w2 * geometry.r2_um);
  c[kA0] /= i_ref;
  c[kC0] /= i_ref;
  c[kB2] /= k_ref;
  c[kD2] /= k_ref;
  return c;
}

double ModeProfile::norm_squared(double* r_max_out) const {
  const double angular = n == 0 ? 2.0 * kPi : kPi;
  const double tail_width = std::clamp(1.0 / w.w2, 0.5, 4.0);
  const double radial_integral = integrate_radial_adaptive(
      [this](double r) {
        const auto f = radial(r);
        return f.er * f.er + f.eth * f.eth + f.ez * f.ez;
      },
      geometry.r1_um, geometry.r2_um, tail_width, 1e-14, r_max_out);
  return angular * radial_integral;
}

double ModeProfile::wavelength_um() const { return wavelength_um_from_omega(omega); }

std::string ModeProfile::label() const { return std::string(to_string(family)) + std::to_string(n) + std::to_string(radial_index); }

double continuity_residual(const ModeProfile& p) {
  double scale = 0.0;
  double jump = 0.0;
  const double radii[2] = {p.geometry.r1_um, p.geometry.r2_um};
  for (int i = 0; i < 2; ++i) {
    const auto a = p.radial_in_region(i, radii[i]);
    const auto b = p.radial_in_region(i + 1, radii[i]);
    const double av[4] = {a.ez, a.hz, a.eth, a.hth};
    const double bv[4] = {b.ez, b.hz, b.eth, b.hth};
    for (int k = 0; k < 4; ++k) {
      scale = std::max({scale, std::abs(av[k]), std::abs(bv[k])});
      jump = std::max(jump, std::abs(av[k] - bv[k]));
    }
  }
  return scale > 0.0 ? jump / scale : 0.0;
}

double bisect_root(const RingFiber& fiber, int n, DetBlock block, double omega, double lo, double hi, double tol) {
  double f_lo = det_for(fiber, n, block, omega, lo);
  const double f_hi = det_for(fiber, n, block, omega, hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo > 0) == (f_hi > 0)) throw DomainError("root is not bracketed");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = det_for(fiber, n, block, omega, mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid > 0) == (f_lo > 0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

// Fills coefficients from the null vector, fixes the sign, normalises.
// Returns false when the root fails the singular-value or continuity test.
bool complete_profile(const RingFiber& fiber, DetBlock block, ModeProfile& p, const SolverOptions& options) {
  const Setup s = make_setup(fiber, p.n, p.omega, p.n_eff);
  BoundaryMatrix m = raw_boundary_matrix(s);
  normalize_rows(m);
  p.coeffs.fill(0.0);
  if (block == DetBlock::Full) {
    Eigen::JacobiSVD<BoundaryMatrix> svd(m, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    p.singular_ratio = sv(7) / sv(0);
    for (int k = 0; k < 8; ++k) p.coeffs[k] = svd.matrixV()(k, 7);
  } else {
    Eigen::Matrix4d b = block_of(m, block);
    Eigen::JacobiSVD<Eigen::Matrix4d> svd(b, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    p.singular_ratio = sv(3) / sv(0);
    const auto& cols = block == DetBlock::TE ? kTeCols : kTmCols;
    for (int k = 0; k < 4; ++k) p.coeffs[cols[k]] = svd.matrixV()(k, 3);
  }
  if (!(p.singular_ratio < options.singular_ratio_max)) return false;

  double largest = 0.0;
  for (double c : p.coeffs) largest = std::max(largest, std::abs(c));
  const double pivot = std::abs(p.coeffs[kC1]) > 1e-12 * largest ? p.coeffs[kC1] : p.coeffs[kA1];
  if (pivot < 0.0)
    for (double& c : p.coeffs) c = -c;

  if (!(continuity_residual(p) < options.continuity_tolerance)) return false;
  const double norm2 = p.norm_squared(&p.r_max);
  const double scale = 1.0 / std::sqrt(norm2);
  for (double& c : p.coeffs) c *= scale;
  return true;
}

ModeFamily hybrid_family(const ModeProfile& p) {
  // HE when the x component of the circular superposition is dominated by the
  // l = n - 1 harmonic, i.e. when er and eth mostly share a sign.
  const double tail_width = std::clamp(1.0 / p.w.w2, 0.5, 4.0);
  const double cross = integrate_radial_adaptive(
      [&p](double r) {
        const auto f = p.radial(r);
        return f.er * f.eth;
      },
      p.geometry.r1_um, p.geometry.r2_um, tail_width, 1e-14);
  return cross > 0.0 ? ModeFamily::HE : ModeFamily::EH;
}

ModeProfile base_profile(const RingFiber& fiber, int n, double omega, double n_eff) {
  ModeProfile p;
  p.n = n;
  p.omega = omega;
  p.k0 = k0_per_um(omega);
  p.n_eff = n_eff;
  p.beta = p.k0 * n_eff;
  p.w = transverse_wavenumbers(fiber, n_eff, omega);
  const double lambda = wavelength_um_from_omega(omega);
  for (int q = 0; q < 3; ++q) p.eps[q] = fiber.stack().permittivity_at_wavelength(q, lambda);
  p.geometry = fiber.geometry();
  return p;
}

std::vector<double> scan_roots(const RingFiber& fiber, int n, DetBlock block, double omega,
                               const SolverOptions& options) {
  if (options.scan_points < 2) throw DomainError("scan needs at least two points");
  const double lo = fiber.cladding_index(omega) + 1e-9;
  const double hi = fiber.core_index(omega) - 1e-9;
  std::vector<double> roots;
  double x_prev = lo;
  double f_prev = det_for(fiber, n, block, omega, lo);
  for (int k = 1; k < options.scan_points; ++k) {
    const double x = lo + (hi - lo) * k / (options.scan_points - 1);
    const double f = det_for(fiber, n, block, omega, x);
    if ((f > 0) != (f_prev > 0) || f == 0.0) {
      roots.push_back(bisect_root(fiber, n, block, omega, x_prev, x, options.n_eff_tolerance));
    }
    x_prev = x;
    f_prev = f;
  }
  return roots;
}

}  // namespace

ModeProfile solve_bracketed(const RingFiber& fiber, int n, DetBlock block, double omega, double lo, double hi,
                            const SolverOptions& options) {
  const double root = bisect_root(fiber, n, block, omega, lo, hi, options.n_eff_tolerance);
  ModeProfile p = base_profile(fiber, n, omega, root);
  if (!complete_profile(fiber, block, p, options)) {
    throw DegenerateError("bracketed sign change is not a mode (singular-value or continuity test failed)");
  }
  p.family = block == DetBlock::TE ? ModeFamily::TE : block == DetBlock::TM ? ModeFamily::TM : hybrid_family(p);
  return p;
}

std::vector<ModeProfile> solve_profiles(const RingFiber& fiber, int n, double omega, const SolverOptions& options) {
  if (n < 0 || n > specfun::kMaxOrder) throw RangeError("azimuthal order outside 0..6");
  std::vector<ModeProfile> out;
  const std::vector<DetBlock> blocks =
      n == 0 ? std::vector<DetBlock>{DetBlock::TE, DetBlock::TM} : std::vector<DetBlock>{DetBlock::Full};
  for (DetBlock block : blocks) {
    for (double root : scan_roots(fiber, n, block, omega, options)) {
      ModeProfile p = base_profile(fiber, n, omega, root);
      if (!complete_profile(fiber, block, p, options)) continue;
      p.family = block == DetBlock::TE ? ModeFamily::TE : block == DetBlock::TM ? ModeFamily::TM : hybrid_family(p);
      out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end(), [](const ModeProfile& a, const ModeProfile& b) { return a.n_eff > b.n_eff; });
  std::map<ModeFamily, int> rank;
  for (auto& p : out) p.radial_index = ++rank[p.family];
  return out;
}

std::vector<GuidedMode> find_modes(const RingFiber& fiber, int n, double omega, const SolverOptions& options) {
  std::vector<GuidedMode> modes;
  for (const auto& p : solve_profiles(fiber, n, omega, options)) {
    const Polarization pol = p.family == ModeFamily::TE   ? Polarization::TE
                             : p.family == ModeFamily::TM ? Polarization::TM
                                                          : Polarization::V;
    modes.emplace_back(p, pol);
  }
  return modes;
}

GuidedMode::GuidedMode(ModeProfile profile, Polarization pol) : profile_(std::move(profile)), pol_(pol) {
  const bool transverse = pol == Polarization::TE || pol == Polarization::TM;
  if (profile_.n == 0) {
    const bool ok = (pol == Polarization::TE && profile_.family == ModeFamily::TE) ||
                    (pol == Polarization::TM && profile_.family == ModeFamily::TM);
    if (!ok) throw DomainError("an n = 0 mode must carry the TE or TM polarization of its family");
  } else if (transverse) {
    throw DomainError("TE/TM polarization requires n = 0");
  }
  const double s = 1.0 / std::sqrt(2.0);
  switch (pol) {
    case Polarization::V:
    case Polarization::TE: weight_v_ = 1.0; weight_h_ = 0.0; break;
    case Polarization::H:
    case Polarization::TM: weight_v_ = 0.0; weight_h_ = 1.0; break;
    case Polarization::R: weight_v_ = s; weight_h_ = cdouble(0.0, -s); break;
    case Polarization::L: weight_v_ = s; weight_h_ = cdouble(0.0, s); break;
  }
}

std::string GuidedMode::label() const {
  if (profile_.n == 0) return profile_.label();
  return profile_.label() + "," + to_string(pol_);
}

FieldSample GuidedMode::field_at(double r, double theta) const {
  if (r < 0.0) throw DomainError("radius must be non-negative");
  const auto f = profile_.radial(r);
  const double arg = profile_.n * theta;
  // phi = 0 and phi = pi/2 terms of sin(n theta + phi) and cos(n theta + phi).
  const cdouble s = weight_v_ * std::sin(arg) + weight_h_ * std::cos(arg);
  const cdouble c = weight_v_ * std::cos(arg) - weight_h_ * std::sin(arg);
  const cdouble i(0.0, 1.0);
  return {i * f.er * s, i * f.eth * c, f.ez * s, i * f.hr * c, i * f.hth * s, f.hz * c};
}

CartesianSample GuidedMode::cartesian_field_at(double r, double theta) const {
  const auto f = field_at(r, theta);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {c * f.e_r - s * f.e_theta, s * f.e_r + c * f.e_theta, f.e_z};
}

namespace {

using Laurent = std::map<int, cdouble>;

Laurent multiply(const Laurent& a, const Laurent& b) {
  Laurent out;
  for (const auto& [la, ca] : a)
    for (const auto& [lb, cb] : b) out[la + lb] += ca * cb;
  return out;
}

Laurent scaled(const Laurent& a, cdouble k) {
  Laurent out;
  for (const auto& [l, c] : a) out[l] = c * k;
  return out;
}

Laurent sin_series(int n) {
  const cdouble half_over_i(0.0, -0.5);
  Laurent out;
  out[n] += half_over_i;
  out[-n] -= half_over_i;
  return out;
}

Laurent cos_series(int n) {
  Laurent out;
  out[n] += 0.5;
  out[-n] += 0.5;
  return out;
}

Laurent sum(const Laurent& a, const Laurent& b) {
  Laurent out = a;
  for (const auto& [l, c] : b) out[l] += c;
  return out;
}

}  // namespace

std::vector<HarmonicTerm> GuidedMode::harmonics(Component component) const {
  const int n = profile_.n;
  const cdouble i(0.0, 1.0);
  const Laurent s = sum(scaled(sin_series(n), weight_v_), scaled(cos_series(n), weight_h_));
  const Laurent c = sum(scaled(cos_series(n), weight_v_), scaled(sin_series(n), -weight_h_));
  Laurent er_part, eth_part, ez_part;
  switch (component) {
    case Component::X:
      er_part = scaled(multiply(s, cos_series(1)), i);
      eth_part = scaled(multiply(c, sin_series(1)), -i);
      break;
    case Component::Y:
      er_part = scaled(multiply(s, sin_series(1)), i);
      eth_part = scaled(multiply(c, cos_series(1)), i);
      break;
    case Component::Z: ez_part = s; break;
  }
  std::map<int, HarmonicTerm> terms;
  auto add = [&terms](const Laurent& part, cdouble HarmonicTerm::*field) {
    for (const auto& [l, coef] : part) {
      if (std::abs(coef) < 1e-14) continue;
      auto [it, inserted] = terms.try_emplace(l, HarmonicTerm{l, 0.0, 0.0, 0.0});
      it->second.*field += coef;
    }
  };
  add(er_part, &HarmonicTerm::c_er);
  add(eth_part, &HarmonicTerm::c_eth);
  add(ez_part, &HarmonicTerm::c_ez);
  std::vector<HarmonicTerm> out;
  for (const auto& [l, t] : terms) out.push_back(t);
  return out;
}

cdouble GuidedMode::component_harmonic(Component component, int l, const RadialFields& f) const {
  for (const auto& t : harmonics(component)) {
    if (t.l == l) return t.c_er * f.er + t.c_eth * f.eth + t.c_ez * f.ez;
  }
  return 0.0;
}

GuidedMode circular_superposition(const GuidedMode& mode_v, const GuidedMode& mode_h, Polarization handedness) {
  if (handedness != Polarization::R && handedness != Polarization::L) {
    throw DomainError("handedness must be R or L");
  }
  const auto& a = mode_v.profile();
  const auto& b = mode_h.profile();
  const bool pair = mode_v.polarization() == Polarization::V && mode_h.polarization() == Polarization::H &&
                    a.n == b.n && a.n >= 1 && a.family == b.family && a.radial_index == b.radial_index &&
                    a.omega == b.omega && std::abs(a.beta - b.beta) <= 1e-10 * a.beta;
  if (!pair) throw DegenerateError("circular superposition needs the V and H variants of one degenerate mode");
  return GuidedMode(a, handedness);
}

GuidedMode normalize(const GuidedMode& mode) {
  ModeProfile p = mode.profile();
  const double norm2 = p.norm_squared(&p.r_max);
  const double scale = 1.0 / std::sqrt(norm2);
  for (double& c : p.coeffs) c *= scale;
  return GuidedMode(p, mode.polarization());
}

std::string classify(const GuidedMode& mode) { return mode.profile().label(); }

std::vector<GuidedMode> mode_census(const RingFiber& fiber, double omega, int n_max, const SolverOptions& options) {
  std::vector<GuidedMode> modes;
  for (int n = 0; n <= n_max; ++n) {
    for (const auto& p : solve_profiles(fiber, n, omega, options)) {
      if (n == 0) {
        modes.emplace_back(p, p.family == ModeFamily::TE ? Polarization::TE : Polarization::TM);
      } else {
        modes.emplace_back(p, Polarization::R);
        modes.emplace_back(p, Polarization::L);
      }
    }
  }
  std::stable_sort(modes.begin(), modes.end(),
                   [](const GuidedMode& a, const GuidedMode& b) { return a.n_eff() > b.n_eff(); });
  return modes;
}

cdouble field_inner_product(const GuidedMode& a, const GuidedMode& b) {
  const auto& g = a.profile().geometry;
  const double r_max = std::max(a.profile().r_max, b.profile().r_max);
  const RadialGrid grid = make_radial_grid(g.r1_um, g.r2_um, std::max(r_max, g.r2_um + 1.0), 2.0);
  constexpr int kTheta = 256;
  cdouble total = 0.0;
  for (std::size_t k = 0; k < grid.r.size(); ++k) {
    cdouble ring = 0.0;
    for (int j = 0; j < kTheta; ++j) {
      const double theta = 2.0 * kPi * j / kTheta;
      const auto fa = a.field_at(grid.r[k], theta);
      const auto fb = b.field_at(grid.r[k], theta);
      ring += std::conj(fa.e_r) * fb.e_r + std::conj(fa.e_theta) * fb.e_theta + std::conj(fa.e_z) * fb.e_z;
    }
    total += ring * (2.0 * kPi / kTheta) * grid.r[k] * grid.w[k];
  }
  return total;
}

}  // namespace ringfiber
