#include "ringfiber/oam.hpp"

#include <cmath>

#include "ringfiber/errors.hpp"
#include "ringfiber/quadrature.hpp"
#include "ringfiber/units.hpp"

namespace ringfiber {

double OamSpectrum::total() const {
  double s = 0.0;
  for (const auto& [l, p] : probs) s += p;
  return s;
}

double OamSpectrum::top_probability() const {
  double top = 0.0;
  for (const auto& [l, p] : probs) top = std::max(top, p);
  return top;
}

const char* to_string(Component component) {
  switch (component) {
    case Component::X: return "x";
    case Component::Y: return "y";
    case Component::Z: return "z";
  }
  return "?";
}

OamSpectrum decompose(const GuidedMode& mode, Component component, int l_max) {
  if (l_max < 0) throw DomainError("l_max must be non-negative");
  const auto& p = mode.profile();
  const RadialGrid grid = make_radial_grid(p.geometry.r1_um, p.geometry.r2_um, p.r_max, 2.0);
  const auto terms = mode.harmonics(component);

  constexpr int kTheta = 256;
  double norm = 0.0;
  std::map<int, double> weight;
  for (std::size_t k = 0; k < grid.r.size(); ++k) {
    const double r = grid.r[k];
    const double dr = grid.w[k] * r;
    double ring = 0.0;
    for (int j = 0; j < kTheta; ++j) {
      const auto e = mode.cartesian_field_at(r, 2.0 * kPi * j / kTheta);
      const cdouble v = component == Component::X ? e.e_x : component == Component::Y ? e.e_y : e.e_z;
      ring += std::norm(v);
    }
    norm += dr * ring * (2.0 * kPi / kTheta);
    const auto f = p.radial(r);
    for (const auto& t : terms) {
      if (std::abs(t.l) > l_max) continue;
      // |int t_l^* e dtheta|^2 = 2 pi |c_l(r)|^2
      weight[t.l] += dr * 2.0 * kPi * std::norm(t.c_er * f.er + t.c_eth * f.eth + t.c_ez * f.ez);
    }
  }
  OamSpectrum out;
  out.component = component;
  out.mode_label = mode.label();
  out.omega = mode.omega();
  for (int l = -l_max; l <= l_max; ++l) out.probs[l] = 0.0;
  if (norm > 0.0) {
    for (const auto& [l, w] : weight) out.probs[l] = w / norm;
  }
  return out;
}

int dominant_oam(const OamSpectrum& spectrum) {
  if (spectrum.probs.empty()) throw DomainError("empty OAM spectrum");
  int best = spectrum.probs.begin()->first;
  double best_p = -1.0;
  // Relative slack so that numerically equal probabilities count as a tie.
  const double slack = 1e-9;
  for (const auto& [l, p] : spectrum.probs) {
    const bool better = p > best_p * (1.0 + slack) + 1e-300;
    const bool tie = !better && p >= best_p * (1.0 - slack);
    const bool preferred = std::abs(l) < std::abs(best) || (std::abs(l) == std::abs(best) && l > best);
    if (better || (tie && preferred)) {
      best = l;
      best_p = std::max(p, best_p);
    }
  }
  return best;
}

bool is_mixed(const OamSpectrum& spectrum) { return spectrum.top_probability() <= 0.5 + 1e-6; }

bool selection_rule_ok(int l_p, int l_s, int l_i) { return l_p == l_s + l_i; }

}  // namespace ringfiber
