#pragma once

#include <functional>
#include <vector>

namespace ringfiber {

// Nodes and plain dr weights of a composite Gauss-Legendre rule. Panel edges
// always include r1 and r2, where the fields have kinks.
struct RadialGrid {
  std::vector<double> r;
  std::vector<double> w;
  double r_max = 0.0;
};

inline constexpr int kGaussOrder = 20;

// Appends one Gauss-Legendre panel on [a, b].
void append_gauss_panel(RadialGrid& grid, double a, double b);

// Two panels on [0, r1], two on [r1, r2], then tail panels of width at most
// tail_panel_width up to r_max.
RadialGrid make_radial_grid(double r1, double r2, double r_max, double tail_panel_width);

// Integrates f r dr over [0, inf) with panels pinned at r1 and r2. Tail panels
// of width tail_panel_width are added until a panel contributes less than
// rel_tol of the running total; the outer radius reached is returned through
// r_max_out.
double integrate_radial_adaptive(const std::function<double(double)>& f, double r1, double r2,
                                 double tail_panel_width, double rel_tol, double* r_max_out = nullptr);

}  // namespace ringfiber
