#include "ringfiber/entangle.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <map>

#include "ringfiber/errors.hpp"
#include "ringfiber/quadrature.hpp"
#include "ringfiber/units.hpp"

namespace ringfiber {

using cdouble = std::complex<double>;

double schmidt_number(const std::vector<double>& c) {
  double s2 = 0.0, s4 = 0.0;
  for (double x : c) {
    s2 += x * x;
    s4 += x * x * x * x;
  }
  if (!(s4 > 0.0)) throw DegenerateError("Schmidt number of an empty spectrum");
  return s2 * s2 / s4;
}

namespace {

SchmidtResult from_singular_values(const Eigen::VectorXd& sv) {
  SchmidtResult out;
  const double norm = sv.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw DegenerateError("cannot decompose a zero amplitude");
  out.coefficients.resize(static_cast<std::size_t>(sv.size()));
  for (Eigen::Index k = 0; k < sv.size(); ++k) out.coefficients[static_cast<std::size_t>(k)] = sv(k) / norm;
  std::sort(out.coefficients.begin(), out.coefficients.end(), std::greater<>());
  out.schmidt_number = schmidt_number(out.coefficients);
  return out;
}

}  // namespace

SchmidtResult schmidt(const Eigen::MatrixXcd& a, const std::vector<double>& ws, const std::vector<double>& wi,
                      bool with_modes) {
  if (static_cast<std::size_t>(a.rows()) != ws.size() || static_cast<std::size_t>(a.cols()) != wi.size()) {
    throw DomainError("quadrature weights do not match the amplitude");
  }
  if (a.size() == 0) throw DegenerateError("cannot decompose an empty amplitude");
  Eigen::VectorXd sws(a.rows()), swi(a.cols());
  for (Eigen::Index k = 0; k < a.rows(); ++k) sws(k) = std::sqrt(ws[static_cast<std::size_t>(k)]);
  for (Eigen::Index k = 0; k < a.cols(); ++k) swi(k) = std::sqrt(wi[static_cast<std::size_t>(k)]);
  const Eigen::MatrixXcd b = sws.asDiagonal() * a * swi.asDiagonal();
  if (!(b.norm() > 0.0)) throw DegenerateError("cannot decompose a zero amplitude");
  const unsigned opts = with_modes ? (Eigen::ComputeThinU | Eigen::ComputeThinV) : 0u;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(b, opts);
  SchmidtResult out = from_singular_values(svd.singularValues());
  if (with_modes) {
    out.signal_modes = sws.cwiseInverse().asDiagonal() * svd.matrixU();
    out.idler_modes = swi.cwiseInverse().asDiagonal() * svd.matrixV().conjugate();
  }
  return out;
}

SchmidtResult schmidt(const JointSpectralAmplitude& amp, bool with_modes) {
  const double ds = amp.d_omega_s(), di = amp.d_omega_i();
  if (with_modes) {
    return schmidt(amp.values, std::vector<double>(amp.omega_s.size(), ds), std::vector<double>(amp.omega_i.size(), di),
                   true);
  }
  // Rows and columns below 1e-24 of the largest carry nothing the
  // coefficients can resolve.
  const Eigen::VectorXd rows = amp.values.rowwise().squaredNorm();
  const Eigen::VectorXd cols = amp.values.colwise().squaredNorm().transpose();
  std::vector<Eigen::Index> keep_r, keep_c;
  for (Eigen::Index k = 0; k < rows.size(); ++k) {
    if (rows(k) > 1e-24 * rows.maxCoeff()) keep_r.push_back(k);
  }
  for (Eigen::Index k = 0; k < cols.size(); ++k) {
    if (cols(k) > 1e-24 * cols.maxCoeff()) keep_c.push_back(k);
  }
  if (keep_r.empty() || keep_c.empty()) throw DegenerateError("cannot decompose a zero amplitude");
  Eigen::MatrixXcd cropped(static_cast<Eigen::Index>(keep_r.size()), static_cast<Eigen::Index>(keep_c.size()));
  for (std::size_t i = 0; i < keep_r.size(); ++i) {
    for (std::size_t j = 0; j < keep_c.size(); ++j) {
      cropped(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = amp.values(keep_r[i], keep_c[j]);
    }
  }
  return schmidt(cropped, std::vector<double>(keep_r.size(), ds), std::vector<double>(keep_c.size(), di), false);
}

std::pair<double, double> signal_marginal_band(const ProcessTriple& t, const QpmGrating& g,
                                               const PumpSpectrum& pump, double omega_s_min, double omega_s_max,
                                               double rel_floor) {
  const double sigma = pump.kind == PumpSpectrum::Kind::Cw ? 0.0 : pump.sigma;
  const double wp0 = pump.omega0;
  const double ws_lo = std::max(omega_s_min, omega_from_wavelength_um(t.signal.branch->lambda_max()));
  const double ws_hi = std::min(omega_s_max, omega_from_wavelength_um(t.signal.branch->lambda_min()));
  if (!(ws_hi > ws_lo)) throw RangeError("signal window outside the tabulated band");
  const int n_s = 6000;
  const int n_p = sigma > 0.0 ? 41 : 1;
  std::vector<double> ws(n_s), m(n_s, 0.0);
  for (int k = 0; k < n_s; ++k) {
    ws[k] = ws_lo + (ws_hi - ws_lo) * k / (n_s - 1);
    for (int a = 0; a < n_p; ++a) {
      const double nu = n_p == 1 ? 0.0 : sigma * (-4.0 + 8.0 * a / (n_p - 1));
      const double wi = wp0 + nu - ws[k];
      if (!t.idler.branch->covers(wi) || !t.pump.branch->covers(wp0 + nu)) continue;
      const double e = sigma > 0.0 ? std::exp(-2.0 * nu * nu / (sigma * sigma)) : 1.0;
      m[k] += e * std::norm(g.spectrum(-phase_mismatch(t, ws[k], wi)));
    }
  }
  const auto peak = std::max_element(m.begin(), m.end()) - m.begin();
  if (!(m[peak] > 0.0)) throw RangeError("no phase matching inside the signal window for " + t.label());
  auto lo = peak, hi = peak;
  while (lo > 0 && m[lo - 1] > rel_floor * m[peak]) --lo;
  while (hi < n_s - 1 && m[hi + 1] > rel_floor * m[peak]) ++hi;
  return {ws[lo], ws[hi]};
}

SpectralGrid k_omega_grid(const ProcessTriple& t, const QpmGrating& g, const PumpSpectrum& pump,
                          const KOmegaOptions& options) {
  const double wp0 = pump.omega0;
  const double ws_min = options.lambda_s_max_um > 0.0 ? omega_from_wavelength_um(options.lambda_s_max_um) : 0.5 * wp0;
  const double ws_max = options.lambda_s_min_um > 0.0 ? omega_from_wavelength_um(options.lambda_s_min_um) : wp0;
  // The idler grid mirrors the signal grid, so both must stay inside the tables.
  const double cover_lo = std::max(omega_from_wavelength_um(t.signal.branch->lambda_max()),
                                   wp0 - omega_from_wavelength_um(t.idler.branch->lambda_min()));
  const double cover_hi = std::min(omega_from_wavelength_um(t.signal.branch->lambda_min()),
                                   wp0 - omega_from_wavelength_um(t.idler.branch->lambda_max()));
  auto [lo, hi] = signal_marginal_band(t, g, pump, std::max(ws_min, cover_lo), std::min(ws_max, cover_hi),
                                       options.band_floor);
  // Room for the pump width on the mirrored idler axis.
  const double reach = 4.0 * pump.sigma;
  lo = std::max(lo - reach, cover_lo);
  hi = std::min(hi + reach, cover_hi);
  const double wanted = std::ceil((hi - lo) / pump.sigma * options.points_per_sigma) + 1.0;
  const int points = static_cast<int>(std::clamp(wanted, static_cast<double>(options.min_grid_points),
                                                 static_cast<double>(options.max_grid_points)));
  return mirrored_grid(wp0, wavelength_um_from_omega(hi), wavelength_um_from_omega(lo), points);
}

std::vector<KOmegaPoint> k_omega_vs_pump(const ProcessTriple& t, const QpmGrating& g, double pump_lambda_um,
                                         const std::vector<double>& sigmas_nm, const KOmegaOptions& options) {
  std::vector<KOmegaPoint> out;
  for (const double s_nm : sigmas_nm) {
    const PumpSpectrum pump = PumpSpectrum::gaussian(pump_lambda_um, s_nm, 1.0);
    const SpectralGrid grid = k_omega_grid(t, g, pump, options);
    const auto amp = jsa(t, pump, g, grid.omega_s, grid.omega_i, options.jsa);
    out.push_back({s_nm, schmidt(amp).schmidt_number});
  }
  return out;
}

namespace {

struct TermRadial {
  std::map<int, Eigen::VectorXcd> signal, idler;  // l -> harmonic values at the nodes
};


std::map<int, Eigen::VectorXcd> harmonic_values(const GuidedMode& mode, const RadialGrid& grid, int l_max) {
  std::map<int, Eigen::VectorXcd> out;
  const auto terms = mode.harmonics(Component::X);
  for (const auto& h : terms) {
    if (std::abs(h.l) > l_max) continue;
    Eigen::VectorXcd v(static_cast<Eigen::Index>(grid.r.size()));
    for (std::size_t k = 0; k < grid.r.size(); ++k) {
      const auto f = mode.profile().radial(grid.r[k]);
      v(static_cast<Eigen::Index>(k)) = h.c_er * f.er + h.c_eth * f.eth + h.c_ez * f.ez;
    }
    out.emplace(h.l, std::move(v));
  }
  return out;
}

}  // namespace

SchmidtResult k_theta_harmonic(const std::vector<TransverseTerm>& terms, int l_max) {
  const auto [r_max, tail] = transverse_sampling(terms);
  const auto& geo = terms.front().signal.profile().geometry;
  const RadialGrid grid = make_radial_grid(geo.r1_um, geo.r2_um, r_max, tail);
  Eigen::VectorXd rw(static_cast<Eigen::Index>(grid.r.size()));
  for (std::size_t k = 0; k < grid.r.size(); ++k) rw(static_cast<Eigen::Index>(k)) = grid.r[k] * grid.w[k];
  std::vector<TermRadial> radial;
  for (const auto& t : terms) radial.push_back({harmonic_values(t.signal, grid, l_max), harmonic_values(t.idler, grid, l_max)});
  const int dim = 2 * l_max + 1;
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(dim, dim);
  for (int ls = -l_max; ls <= l_max; ++ls) {
    for (int li = -l_max; li <= l_max; ++li) {
      cdouble sum = 0.0;
      for (std::size_t k = 0; k < terms.size(); ++k) {
        for (std::size_t q = 0; q < terms.size(); ++q) {
          // sqrt(2 pi) times each Fourier coefficient is the projection on t_l.
          auto inner = [&](const std::map<int, Eigen::VectorXcd>& a, const std::map<int, Eigen::VectorXcd>& b,
                           int l) -> cdouble {
            const auto ia = a.find(l);
            const auto ib = b.find(l);
            if (ia == a.end() || ib == b.end()) return 0.0;
            cdouble acc = 0.0;
            for (Eigen::Index n = 0; n < rw.size(); ++n) acc += rw(n) * ia->second(n) * std::conj(ib->second(n));
            return 2.0 * kPi * acc;
          };
          sum += terms[k].weight * std::conj(terms[q].weight) * inner(radial[k].signal, radial[q].signal, ls) *
                 inner(radial[k].idler, radial[q].idler, li);
        }
      }
      f(ls + l_max, li + l_max) = std::sqrt(std::max(sum.real(), 0.0));
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(f);
  return from_singular_values(svd.singularValues());
}

Eigen::VectorXcd sample_transverse(const GuidedMode& mode, double r_max, double tail_width, int theta_points) {
  const auto& g = mode.profile().geometry;
  const RadialGrid grid = make_radial_grid(g.r1_um, g.r2_um, r_max, tail_width);
  const double dtheta = 2.0 * kPi / theta_points;
  Eigen::VectorXcd v(static_cast<Eigen::Index>(grid.r.size()) * theta_points);
  Eigen::Index idx = 0;
  for (std::size_t k = 0; k < grid.r.size(); ++k) {
    const double w = std::sqrt(grid.r[k] * grid.w[k] * dtheta);
    for (int j = 0; j < theta_points; ++j) v(idx++) = w * mode.cartesian_field_at(grid.r[k], j * dtheta).e_x;
  }
  return v;
}

std::pair<double, double> transverse_sampling(const std::vector<TransverseTerm>& terms) {
  if (terms.empty()) throw DegenerateError("no transverse terms");
  double r_max = terms.front().signal.profile().geometry.r2_um + 1.0;
  double w2 = std::numeric_limits<double>::infinity();
  for (const auto& t : terms) {
    for (const GuidedMode* m : {&t.signal, &t.idler}) {
      r_max = std::max(r_max, m->profile().r_max);
      w2 = std::min(w2, m->profile().w.w2);
    }
  }
  return {r_max, std::clamp(1.0 / w2, 0.5, 4.0)};
}

SchmidtResult k_theta_exact(const std::vector<TransverseTerm>& terms, int theta_points) {
  if (theta_points < 8) throw DomainError("azimuthal grid too coarse");
  const auto [r_max, tail] = transverse_sampling(terms);
  const Eigen::Index m = static_cast<Eigen::Index>(terms.size());
  Eigen::MatrixXcd u, v;
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto& t = terms[static_cast<std::size_t>(k)];
    const auto a = sample_transverse(t.signal, r_max, tail, theta_points);
    const auto b = sample_transverse(t.idler, r_max, tail, theta_points);
    if (k == 0) {
      u.resize(a.size(), m);
      v.resize(b.size(), m);
    }
    u.col(k) = a * t.weight;
    v.col(k) = b;
  }
  // M = U V^T = Q_u (R_u R_v^T) Q_v^T.
  Eigen::HouseholderQR<Eigen::MatrixXcd> qu(u), qv(v);
  const Eigen::MatrixXcd ru = qu.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  const Eigen::MatrixXcd rv = qv.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(ru * rv.transpose());
  return from_singular_values(svd.singularValues());
}

Eigen::Matrix4cd OamQubitState::density() const {
  Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
  rho(1, 1) = std::norm(c1);
  rho(2, 2) = std::norm(c2);
  rho(1, 2) = coherence * c1 * std::conj(c2);
  rho(2, 1) = std::conj(rho(1, 2));
  const double tr = rho.trace().real();
  if (!(tr > 0.0)) throw DegenerateError("OAM state has zero amplitudes");
  rho /= tr;
  return (1.0 - noise) * rho + noise * Eigen::Matrix4cd::Identity() / 4.0;
}

OamQubitState oam_state_from_amplitudes(const JointSpectralAmplitude& a, const JointSpectralAmplitude& b) {
  if (a.omega_s != b.omega_s || a.omega_i != b.omega_i) throw DomainError("mirror amplitudes need a common grid");
  const double w = a.d_omega_s() * a.d_omega_i();
  const double na = a.values.squaredNorm() * w;
  const double nb = b.values.squaredNorm() * w;
  if (!(na + nb > 0.0)) throw DegenerateError("both mirror amplitudes vanish");
  const cdouble cross = (a.values.array() * b.values.array().conjugate()).sum() * w;
  OamQubitState s;
  s.c1 = std::sqrt(na / (na + nb));
  s.c2 = std::polar(std::sqrt(nb / (na + nb)), -std::arg(cross));
  s.coherence = (na > 0.0 && nb > 0.0) ? std::abs(cross) / std::sqrt(na * nb) : 0.0;
  return s;
}

double chsh_max(const Eigen::Matrix4cd& rho) {
  Eigen::Matrix2cd sx, sy, sz;
  sx << 0, 1, 1, 0;
  sy << 0, cdouble(0, -1), cdouble(0, 1), 0;
  sz << 1, 0, 0, -1;
  const Eigen::Matrix2cd sig[3] = {sx, sy, sz};
  Eigen::Matrix3d t;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      Eigen::Matrix4cd k;
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) k.block<2, 2>(2 * a, 2 * b) = sig[i](a, b) * sig[j];
      }
      t(i, j) = (rho * k).trace().real();
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(t.transpose() * t);
  const auto& ev = es.eigenvalues();  // ascending
  return 2.0 * std::sqrt(std::max(ev(1) + ev(2), 0.0));
}

double chsh_max(const OamQubitState& state) { return chsh_max(state.density()); }

double chsh_crossing(OamQubitState state) {
  auto f = [&state](double p) {
    state.noise = p;
    return chsh_max(state) - 2.0;
  };
  if (!(f(0.0) > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  boost::math::tools::eps_tolerance<double> tol(50);
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(f, 0.0, 1.0, tol, iters);
  return 0.5 * (r.first + r.second);
}

}  // namespace ringfiber
