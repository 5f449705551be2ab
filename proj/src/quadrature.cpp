#include "ringfiber/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>

#include "ringfiber/errors.hpp"

namespace ringfiber {

namespace {
using Rule = boost::math::quadrature::gauss<double, kGaussOrder>;
}

void append_gauss_panel(RadialGrid& grid, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  // Boost stores the non-negative half of the symmetric rule.
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] == 0.0) {
      grid.r.push_back(mid);
      grid.w.push_back(half * w[k]);
      continue;
    }
    grid.r.push_back(mid - half * x[k]);
    grid.w.push_back(half * w[k]);
    grid.r.push_back(mid + half * x[k]);
    grid.w.push_back(half * w[k]);
  }
  grid.r_max = std::max(grid.r_max, b);
}

RadialGrid make_radial_grid(double r1, double r2, double r_max, double tail_panel_width) {
  if (!(0.0 < r1 && r1 < r2 && r2 < r_max && tail_panel_width > 0.0)) {
    throw DomainError("radial grid needs 0 < r1 < r2 < r_max and a positive panel width");
  }
  RadialGrid grid;
  append_gauss_panel(grid, 0.0, 0.5 * r1);
  append_gauss_panel(grid, 0.5 * r1, r1);
  append_gauss_panel(grid, r1, 0.5 * (r1 + r2));
  append_gauss_panel(grid, 0.5 * (r1 + r2), r2);
  const int tail_panels = static_cast<int>(std::ceil((r_max - r2) / tail_panel_width));
  const double h = (r_max - r2) / tail_panels;
  for (int k = 0; k < tail_panels; ++k) append_gauss_panel(grid, r2 + k * h, r2 + (k + 1) * h);
  return grid;
}

double integrate_radial_adaptive(const std::function<double(double)>& f, double r1, double r2,
                                 double tail_panel_width, double rel_tol, double* r_max_out) {
  auto panel = [&](double a, double b) {
    return Rule::integrate([&](double r) { return f(r) * r; }, a, b);
  };
  double total = panel(0.0, 0.5 * r1) + panel(0.5 * r1, r1) + panel(r1, 0.5 * (r1 + r2)) + panel(0.5 * (r1 + r2), r2);
  double a = r2;
  // Fields decay at least exponentially outside the ring; a few hundred
  // panels is far beyond any guided mode's reach.
  for (int k = 0; k < 2000; ++k) {
    const double contribution = panel(a, a + tail_panel_width);
    total += contribution;
    a += tail_panel_width;
    if (std::abs(contribution) <= rel_tol * std::abs(total)) break;
  }
  if (r_max_out) *r_max_out = a;
  return total;
}

}  // namespace ringfiber
