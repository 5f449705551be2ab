#include "ringfiber/mode_branch.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <cctype>
#include <cmath>
#include <sstream>

#include "ringfiber/errors.hpp"
#include "ringfiber/units.hpp"

namespace ringfiber {

std::string ModeId::label() const {
  return std::string(to_string(family)) + std::to_string(n) + std::to_string(radial_index);
}

ModeId ModeId::parse(const std::string& label) {
  auto fail = [&label]() -> ModeId { throw ConfigError("unknown mode label '" + label + "'"); };
  if (label.size() != 4) return fail();
  const std::string fam = label.substr(0, 2);
  ModeId id;
  if (fam == "TE") id.family = ModeFamily::TE;
  else if (fam == "TM") id.family = ModeFamily::TM;
  else if (fam == "HE") id.family = ModeFamily::HE;
  else if (fam == "EH") id.family = ModeFamily::EH;
  else return fail();
  if (!std::isdigit(static_cast<unsigned char>(label[2])) || !std::isdigit(static_cast<unsigned char>(label[3]))) {
    return fail();
  }
  id.n = label[2] - '0';
  id.radial_index = label[3] - '0';
  const bool transverse = id.family == ModeFamily::TE || id.family == ModeFamily::TM;
  if (transverse != (id.n == 0) || id.radial_index < 1 || id.n > 6) return fail();
  return id;
}

std::pair<ModeId, Polarization> parse_mode_label(const std::string& label) {
  std::string base = label;
  std::string pol;
  if (const auto comma = label.find(','); comma != std::string::npos) {
    base = label.substr(0, comma);
    pol = label.substr(comma + 1);
  } else if (label.size() == 5) {
    base = label.substr(0, 4);
    pol = label.substr(4);
  }
  const ModeId id = ModeId::parse(base);
  if (id.n == 0) {
    if (!pol.empty()) throw ConfigError("mode label '" + label + "' carries a polarization it cannot have");
    return {id, id.family == ModeFamily::TE ? Polarization::TE : Polarization::TM};
  }
  if (pol == "R") return {id, Polarization::R};
  if (pol == "L") return {id, Polarization::L};
  if (pol == "V") return {id, Polarization::V};
  if (pol == "H") return {id, Polarization::H};
  throw ConfigError("mode label '" + label + "' needs a polarization R, L, V or H");
}

DetBlock block_for(const ModeId& id) {
  if (id.family == ModeFamily::TE) return DetBlock::TE;
  if (id.family == ModeFamily::TM) return DetBlock::TM;
  return DetBlock::Full;
}

namespace {

double det_of(const RingFiber& fiber, const ModeId& id, double omega, double n_eff) {
  const DetBlock block = block_for(id);
  return block == DetBlock::Full ? dispersion_det(fiber, id.n, omega, n_eff) : block_det(fiber, block, omega, n_eff);
}

}  // namespace

double track_root(const RingFiber& fiber, const ModeId& id, double omega, double guess, double tol) {
  const double lo_limit = fiber.cladding_index(omega) + 1e-9;
  const double hi_limit = fiber.core_index(omega) - 1e-9;
  guess = std::clamp(guess, lo_limit, hi_limit);
  const double f0 = det_of(fiber, id, omega, guess);
  if (f0 == 0.0) return guess;
  for (double h = 1e-8; h < 1e-2; h *= 2.0) {
    const double a = std::max(guess - h, lo_limit);
    const double b = std::min(guess + h, hi_limit);
    // Check the nearer side first so the closest root wins.
    const double fa = det_of(fiber, id, omega, a);
    if ((fa > 0) != (f0 > 0)) return bisect_root(fiber, id.n, block_for(id), omega, a, guess, tol);
    const double fb = det_of(fiber, id, omega, b);
    if ((fb > 0) != (f0 > 0)) return bisect_root(fiber, id.n, block_for(id), omega, guess, b, tol);
    if (a == lo_limit && b == hi_limit) break;
  }
  std::ostringstream msg;
  msg << "mode " << id.label() << " not found near n_eff = " << guess << " at " << wavelength_um_from_omega(omega)
      << " um (cut off?)";
  throw RangeError(msg.str());
}

struct ModeBranch::Spline {
  boost::math::interpolators::cardinal_cubic_b_spline<double> spline;
};

ModeBranch::~ModeBranch() = default;
ModeBranch::ModeBranch(ModeBranch&&) noexcept = default;
ModeBranch& ModeBranch::operator=(ModeBranch&&) noexcept = default;

ModeBranch::ModeBranch(const RingFiber& fiber, ModeId id, double lambda_min_um, double lambda_max_um, double step_nm,
                       SolverOptions options)
    : fiber_copy_(std::make_shared<RingFiber>(fiber)), id_(id), options_(options) {
  fiber_ = fiber_copy_.get();
  if (!(lambda_max_um > lambda_min_um) || !(step_nm > 0.0)) throw DomainError("invalid wavelength grid");
  const int steps = static_cast<int>(std::ceil((lambda_max_um - lambda_min_um) / (step_nm * 1e-3) - 1e-9));
  const double h = (lambda_max_um - lambda_min_um) / steps;
  for (int k = 0; k <= steps; ++k) lambdas_.push_back(lambda_min_um + k * h);

  // Identify the mode at the short-wavelength end, where every mode of
  // interest is far from cutoff.
  const double omega0 = omega_from_wavelength_um(lambdas_.front());
  bool found = false;
  for (const auto& p : solve_profiles(*fiber_, id_.n, omega0, options_)) {
    if (p.family == id_.family && p.radial_index == id_.radial_index) {
      n_eff_.push_back(p.n_eff);
      found = true;
      break;
    }
  }
  if (!found) {
    throw RangeError("mode " + id_.label() + " is not guided at " + std::to_string(lambdas_.front()) + " um");
  }
  for (std::size_t k = 1; k < lambdas_.size(); ++k) {
    const double guess = k >= 2 ? 2.0 * n_eff_[k - 1] - n_eff_[k - 2] : n_eff_[k - 1];
    try {
      n_eff_.push_back(
          track_root(*fiber_, id_, omega_from_wavelength_um(lambdas_[k]), guess, options_.n_eff_tolerance));
    } catch (const RangeError&) {
      // Cutoff inside the requested band: keep the guided part.
      if (k < 8) throw;
      lambdas_.resize(k);
      break;
    }
  }
  spline_ = std::make_unique<Spline>(
      Spline{boost::math::interpolators::cardinal_cubic_b_spline<double>(n_eff_.begin(), n_eff_.end(), lambdas_.front(), h)});
}

bool ModeBranch::covers(double omega) const {
  const double lambda = wavelength_um_from_omega(omega);
  return lambda >= lambdas_.front() && lambda <= lambdas_.back();
}

double ModeBranch::n_eff_at_wavelength(double lambda_um) const {
  // Tolerate round-off at the ends of the table.
  const double span = lambdas_.back() - lambdas_.front();
  if (lambda_um < lambdas_.front() - 1e-12 * span || lambda_um > lambdas_.back() + 1e-12 * span) {
    std::ostringstream msg;
    msg << "wavelength " << lambda_um << " um outside the table of " << id_.label() << " [" << lambdas_.front()
        << ", " << lambdas_.back() << "]";
    throw RangeError(msg.str());
  }
  return spline_->spline(std::clamp(lambda_um, lambdas_.front(), lambdas_.back()));
}

double ModeBranch::n_eff(double omega) const { return n_eff_at_wavelength(wavelength_um_from_omega(omega)); }

double ModeBranch::beta(double omega) const { return n_eff(omega) * k0_per_um(omega); }

ModeProfile ModeBranch::profile_at(double omega) const {
  const double root = track_root(*fiber_, id_, omega, n_eff(omega), options_.n_eff_tolerance);
  // A tiny bracket around the refined root hands the rest to the solver.
  const double span = 4.0 * options_.n_eff_tolerance;
  const double lo = root - span;
  const double hi = root + span;
  const double f_lo = det_of(*fiber_, id_, omega, lo);
  const double f_hi = det_of(*fiber_, id_, omega, hi);
  ModeProfile p = (f_lo > 0) != (f_hi > 0) ? solve_bracketed(*fiber_, id_.n, block_for(id_), omega, lo, hi, options_)
                                           : solve_bracketed(*fiber_, id_.n, block_for(id_), omega, root - 1e-9,
                                                             root + 1e-9, options_);
  if (p.family != id_.family) {
    throw DegenerateError("root tracked for " + id_.label() + " classifies as " + to_string(p.family));
  }
  p.radial_index = id_.radial_index;
  return p;
}

GuidedMode ModeBranch::mode_at(double omega, Polarization pol) const { return GuidedMode(profile_at(omega), pol); }

}  // namespace ringfiber
