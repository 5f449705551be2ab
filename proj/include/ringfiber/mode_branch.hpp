#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ringfiber/modesolver.hpp"

namespace ringfiber {

// A mode without its polarization: family, azimuthal order, radial index.
struct ModeId {
  ModeFamily family = ModeFamily::HE;
  int n = 1;
  int radial_index = 1;

  std::string label() const;
  // Accepts TE01, TM01, HE21, EH11 ...
  static ModeId parse(const std::string& label);
  bool operator==(const ModeId&) const = default;
};

// Parses "HE21,R", "HE21R", "TE01" into an id and a polarization.
std::pair<ModeId, Polarization> parse_mode_label(const std::string& label);

// Effective index of one mode tabulated on a uniform wavelength grid, followed
// from grid point to grid point by bracketing around a linear prediction, and
// interpolated with a cubic B-spline. A mode that cuts off inside the band is
// tabulated up to the last wavelength where it is still guided.
class ModeBranch {
 public:
  ModeBranch(const RingFiber& fiber, ModeId id, double lambda_min_um, double lambda_max_um, double step_nm = 0.25,
             SolverOptions options = {});
  ~ModeBranch();
  ModeBranch(ModeBranch&&) noexcept;
  ModeBranch& operator=(ModeBranch&&) noexcept;
  ModeBranch(const ModeBranch&) = delete;
  ModeBranch& operator=(const ModeBranch&) = delete;

  const ModeId& id() const { return id_; }
  double lambda_min() const { return lambdas_.front(); }
  double lambda_max() const { return lambdas_.back(); }
  bool covers(double omega) const;

  double n_eff_at_wavelength(double lambda_um) const;
  double n_eff(double omega) const;
  double beta(double omega) const;  // 1/um

  const std::vector<double>& wavelengths() const { return lambdas_; }
  const std::vector<double>& n_eff_table() const { return n_eff_; }

  // Re-solves the root at omega near the interpolated value and returns the
  // normalised fields.
  ModeProfile profile_at(double omega) const;
  GuidedMode mode_at(double omega, Polarization pol) const;

 private:
  struct Spline;
  const RingFiber* fiber_ = nullptr;
  std::shared_ptr<const RingFiber> fiber_copy_;
  ModeId id_;
  SolverOptions options_;
  std::vector<double> lambdas_;
  std::vector<double> n_eff_;
  std::unique_ptr<Spline> spline_;
};

DetBlock block_for(const ModeId& id);

// Finds a root of the mode's determinant near `guess`, expanding a symmetric
// bracket until a sign change appears.
double track_root(const RingFiber& fiber, const ModeId& id, double omega, double guess, double tol);

}  // namespace ringfiber
