#include "ringfiber/spdc.hpp"

#include <algorithm>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <cmath>
#include <sstream>

#include "ringfiber/errors.hpp"
#include "ringfiber/oam.hpp"
#include "ringfiber/parallel.hpp"
#include "ringfiber/quadrature.hpp"
#include "ringfiber/units.hpp"

namespace ringfiber {

using cdouble = std::complex<double>;

std::string ModeChannel::label() const {
  const ModeId& id = branch->id();
  if (id.n == 0) return id.label();
  return id.label() + "," + to_string(pol);
}

ModeLibrary::ModeLibrary(const RingFiber& fiber, double lambda_min_um, double lambda_max_um, double step_nm)
    : fiber_(fiber), lambda_min_(lambda_min_um), lambda_max_(lambda_max_um), step_nm_(step_nm) {
  if (!(lambda_max_ > lambda_min_) || !(step_nm_ > 0.0)) throw ConfigError("invalid mode-library band");
}

std::shared_ptr<const ModeBranch> ModeLibrary::branch(const ModeId& id) const {
  const std::string key = id.label();
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  // Built outside the lock; a concurrent duplicate build is harmless.
  auto built = std::make_shared<const ModeBranch>(fiber_, id, lambda_min_, lambda_max_, step_nm_);
  std::lock_guard lock(mutex_);
  return cache_.try_emplace(key, std::move(built)).first->second;
}

ModeChannel ModeLibrary::channel(const std::string& label) const {
  const auto [id, pol] = parse_mode_label(label);
  return ModeChannel{branch(id), pol};
}

std::vector<ModeChannel> ModeLibrary::channels_at(double lambda_um, int n_max) const {
  std::vector<ModeChannel> out;
  for (const auto& mode : mode_census(fiber_, omega_from_wavelength_um(lambda_um), n_max)) {
    if (mode.radial_index() != 1) continue;
    const ModeId id{mode.family(), mode.n(), 1};
    out.push_back(ModeChannel{branch(id), mode.polarization()});
  }
  return out;
}

std::string ProcessTriple::label() const {
  return "(" + pump.label() + " | " + signal.label() + " | " + idler.label() + ")";
}

ProcessTriple make_triple(const ModeChannel& pump, const ModeChannel& signal, const ModeChannel& idler,
                          double omega_s, double omega_i) {
  ProcessTriple t{pump, signal, idler, {}};
  t.oam[0] = dominant_oam(decompose(pump.mode_at(omega_s + omega_i), Component::X));
  t.oam[1] = dominant_oam(decompose(signal.mode_at(omega_s), Component::X));
  t.oam[2] = dominant_oam(decompose(idler.mode_at(omega_i), Component::X));
  return t;
}

double sigma_omega_from_nm(double lambda_um, double sigma_nm) {
  const double lambda_m = lambda_um * 1e-6;
  return 2.0 * kPi * kSpeedOfLight * sigma_nm * 1e-9 / (lambda_m * lambda_m);
}

PumpSpectrum PumpSpectrum::cw(double lambda_um, double power_w) {
  if (!(power_w >= 0.0)) throw ConfigError("pump power must be non-negative");
  return PumpSpectrum{Kind::Cw, omega_from_wavelength_um(lambda_um), 0.0, power_w};
}

PumpSpectrum PumpSpectrum::gaussian(double lambda_um, double sigma_nm, double power_w) {
  if (!(sigma_nm > 0.0)) throw ConfigError("pump sigma must be positive");
  if (!(power_w >= 0.0)) throw ConfigError("pump power must be non-negative");
  return PumpSpectrum{Kind::Gaussian, omega_from_wavelength_um(lambda_um), sigma_omega_from_nm(lambda_um, sigma_nm),
                      power_w};
}

double PumpSpectrum::effective_sigma(double grid_step) const {
  return kind == Kind::Cw ? grid_step : sigma;
}

double PumpSpectrum::amplitude(double omega, double s) const {
  const double x = (omega - omega0) / s;
  return std::sqrt(std::sqrt(2.0 / kPi) / s) * std::exp(-x * x);
}

double phase_mismatch(const ProcessTriple& t, double omega_s, double omega_i) {
  return t.pump.beta(omega_s + omega_i) - t.signal.beta(omega_s) - t.idler.beta(omega_i);
}

namespace {

using HarmonicValues = std::vector<std::pair<int, cdouble>>;

HarmonicValues evaluate(const std::vector<HarmonicTerm>& terms, const RadialFields& f) {
  HarmonicValues out;
  out.reserve(terms.size());
  for (const auto& t : terms) out.emplace_back(t.l, t.c_er * f.er + t.c_eth * f.eth + t.c_ez * f.ez);
  return out;
}

// Azimuthal average of a conj(b) conj(c): only l_a = l_b + l_c survives.
cdouble triple_sum(const HarmonicValues& a, const HarmonicValues& b, const HarmonicValues& c) {
  cdouble sum = 0.0;
  for (const auto& [la, va] : a) {
    for (const auto& [lb, vb] : b) {
      for (const auto& [lc, vc] : c) {
        if (la == lb + lc) sum += va * std::conj(vb) * std::conj(vc);
      }
    }
  }
  return sum;
}

}  // namespace

cdouble transverse_overlap(const GuidedMode& pump, const GuidedMode& signal, const GuidedMode& idler,
                           const QpmGrating& grating) {
  const auto& g = pump.profile().geometry;
  const double r_max = std::max({pump.profile().r_max, signal.profile().r_max, idler.profile().r_max, g.r2_um + 1.0});
  const double w2 = std::min({pump.profile().w.w2, signal.profile().w.w2, idler.profile().w.w2});
  const RadialGrid grid = make_radial_grid(g.r1_um, g.r2_um, r_max, std::clamp(1.0 / w2, 0.5, 4.0));
  const auto px = pump.harmonics(Component::X), py = pump.harmonics(Component::Y);
  const auto sx = signal.harmonics(Component::X), sy = signal.harmonics(Component::Y);
  const auto ix = idler.harmonics(Component::X), iy = idler.harmonics(Component::Y);
  cdouble total = 0.0;
  for (std::size_t k = 0; k < grid.r.size(); ++k) {
    const double r = grid.r[k];
    const auto fp = pump.profile().radial(r);
    const auto fs = signal.profile().radial(r);
    const auto fi = idler.profile().radial(r);
    const auto Px = evaluate(px, fp), Py = evaluate(py, fp);
    const auto Sx = evaluate(sx, fs), Sy = evaluate(sy, fs);
    const auto Ix = evaluate(ix, fi), Iy = evaluate(iy, fi);
    const cdouble local = grating.chi_xxx() * triple_sum(Px, Sx, Ix) +
                          grating.chi_xyy() * (triple_sum(Px, Sy, Iy) + triple_sum(Py, Sy, Ix) + triple_sum(Py, Sx, Iy));
    total += grid.w[k] * r * local;
  }
  return 2.0 * kPi * total;
}

namespace {

cdouble coupling(double transverse_scale, cdouble transverse, const QpmGrating& grating, double dbeta) {
  // pm/V/um * um -> 1e-12 m/V
  return std::sqrt(2.0 * kPi) * grating.spectrum(-dbeta) * transverse * transverse_scale * 1e-12;
}

}  // namespace

cdouble overlap(const ProcessTriple& t, double omega_s, double omega_i, const QpmGrating& grating) {
  const cdouble tr = transverse_overlap(t.pump.mode_at(omega_s + omega_i), t.signal.mode_at(omega_s),
                                        t.idler.mode_at(omega_i), grating);
  return coupling(1.0, tr, grating, phase_mismatch(t, omega_s, omega_i));
}

struct OverlapTable::Splines {
  boost::math::interpolators::cardinal_cubic_b_spline<double> re, im;
};

OverlapTable::~OverlapTable() = default;
OverlapTable::OverlapTable(OverlapTable&&) noexcept = default;
OverlapTable& OverlapTable::operator=(OverlapTable&&) noexcept = default;

OverlapTable::OverlapTable(const ProcessTriple& t, const QpmGrating& grating, double omega_p0, double omega_s_min,
                           double omega_s_max, int nodes, int threads) {
  if (nodes < 4 || !(omega_s_max > omega_s_min)) throw DomainError("overlap table needs >= 4 nodes on a range");
  const double h = (omega_s_max - omega_s_min) / (nodes - 1);
  for (int k = 0; k < nodes; ++k) nodes_.push_back(omega_s_min + k * h);
  values_.resize(nodes_.size());
  const GuidedMode pump = t.pump.mode_at(omega_p0);
  parallel_for(nodes_.size(), threads, [&](std::size_t k) {
    const double ws = nodes_[k];
    values_[k] = transverse_overlap(pump, t.signal.mode_at(ws), t.idler.mode_at(omega_p0 - ws), grating);
  });
  std::vector<double> re(values_.size()), im(values_.size());
  for (std::size_t k = 0; k < values_.size(); ++k) {
    re[k] = values_[k].real();
    im[k] = values_[k].imag();
  }
  splines_ = std::make_unique<Splines>(Splines{
      boost::math::interpolators::cardinal_cubic_b_spline<double>(re.begin(), re.end(), omega_s_min, h),
      boost::math::interpolators::cardinal_cubic_b_spline<double>(im.begin(), im.end(), omega_s_min, h)});
}

cdouble OverlapTable::operator()(double omega_s) const {
  const double w = std::clamp(omega_s, nodes_.front(), nodes_.back());
  return {splines_->re(w), splines_->im(w)};
}

SpectralGrid mirrored_grid(double omega_p0, double lambda_s_min_um, double lambda_s_max_um, int count) {
  if (count < 2 || !(lambda_s_max_um > lambda_s_min_um)) throw ConfigError("invalid spectral grid");
  const double w_lo = omega_from_wavelength_um(lambda_s_max_um);
  const double w_hi = omega_from_wavelength_um(lambda_s_min_um);
  if (!(w_hi < omega_p0)) throw ConfigError("signal band must lie below the pump frequency");
  SpectralGrid g;
  g.omega_s.resize(count);
  g.omega_i.resize(count);
  const double h = (w_hi - w_lo) / (count - 1);
  for (int k = 0; k < count; ++k) g.omega_s[k] = w_lo + k * h;
  for (int k = 0; k < count; ++k) g.omega_i[k] = omega_p0 - g.omega_s[count - 1 - k];
  return g;
}

double JointSpectralAmplitude::d_omega_s() const {
  return omega_s.size() > 1 ? (omega_s.back() - omega_s.front()) / (omega_s.size() - 1) : 1.0;
}

double JointSpectralAmplitude::d_omega_i() const {
  return omega_i.size() > 1 ? (omega_i.back() - omega_i.front()) / (omega_i.size() - 1) : 1.0;
}

double JointSpectralAmplitude::norm_squared() const { return values.squaredNorm() * d_omega_s() * d_omega_i(); }

namespace {

// omega_s[k] + omega_i[n-1-k] = omega_p0 for every k, to rounding.
bool mirrored(const std::vector<double>& ws, const std::vector<double>& wi, double omega_p0) {
  if (ws.size() != wi.size()) return false;
  const std::size_t n = ws.size();
  for (std::size_t k = 0; k < n; ++k)
    if (std::abs(ws[k] + wi[n - 1 - k] - omega_p0) > 1e-12 * omega_p0) return false;
  return true;
}

}  // namespace

JointSpectralAmplitude jsa(const ProcessTriple& t, const PumpSpectrum& pump, const QpmGrating& grating,
                           const std::vector<double>& omega_s, const std::vector<double>& omega_i,
                           const JsaOptions& options) {
  if (omega_s.size() < 2 || omega_i.size() < 2) throw ConfigError("JSA grids need at least two points");
  JointSpectralAmplitude out;
  out.omega_s = omega_s;
  out.omega_i = omega_i;
  out.label = t.label();
  out.omega_p0 = pump.omega0;
  out.power_w = pump.power_w;
  out.pump_n_eff = t.pump.n_eff(pump.omega0);
  const std::size_t ns = omega_s.size(), ni = omega_i.size();
  out.n_eff_s.resize(ns);
  out.n_eff_i.resize(ni);
  std::vector<double> beta_s(ns), beta_i(ni);
  for (std::size_t a = 0; a < ns; ++a) {
    out.n_eff_s[a] = t.signal.n_eff(omega_s[a]);
    beta_s[a] = out.n_eff_s[a] * k0_per_um(omega_s[a]);
  }
  for (std::size_t b = 0; b < ni; ++b) {
    out.n_eff_i[b] = t.idler.n_eff(omega_i[b]);
    beta_i[b] = out.n_eff_i[b] * k0_per_um(omega_i[b]);
  }
  const double sigma = pump.effective_sigma(options.cw_sigma_steps * out.d_omega_s());
  const OverlapTable table(t, grating, pump.omega0, omega_s.front(), omega_s.back(), options.overlap_nodes,
                           options.threads);
  const double amp = std::sqrt(pump.power_w);
  const bool line = pump.kind == PumpSpectrum::Kind::Cw && mirrored(omega_s, omega_i, pump.omega0);
  // On a mirrored grid a cw line sits exactly on the anti-diagonal: one cell
  // per row carrying |E_p|^2 = 1 / d_omega_i.
  const double line_amplitude = 1.0 / std::sqrt(out.d_omega_i());
  out.values = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(ni));
  parallel_for(ns, options.threads, [&](std::size_t a) {
    const cdouble tr = table(omega_s[a]);
    const std::size_t first = line ? ni - 1 - a : 0;
    const std::size_t last = line ? ni - a : ni;
    for (std::size_t b = first; b < last; ++b) {
      const double wp = omega_s[a] + omega_i[b];
      // exp(-64) is far below anything resolvable against the peak.
      if (!line && std::abs(wp - pump.omega0) > 8.0 * sigma) continue;
      const double dbeta = t.pump.beta(wp) - beta_s[a] - beta_i[b];
      const cdouble coupling_mv = coupling(1.0, tr, grating, dbeta);
      const double prefactor = std::sqrt(omega_s[a] * omega_i[b]) /
                               (std::sqrt(out.n_eff_s[a] * out.n_eff_i[b]) * kSpeedOfLight);
      const double e_p = line ? line_amplitude : pump.amplitude(wp, sigma);
      out.values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          cdouble(0.0, -1.0) * prefactor * amp * e_p * coupling_mv;
    }
  });
  return out;
}

JointSpectralAmplitude normalized(const JointSpectralAmplitude& in) {
  const double n2 = in.norm_squared();
  if (!(n2 > 0.0) || !std::isfinite(n2)) throw DegenerateError("cannot normalise a zero two-photon amplitude");
  JointSpectralAmplitude out = in;
  out.values /= std::sqrt(n2);
  out.normalized = true;
  return out;
}

Eigen::MatrixXd pair_density(const JointSpectralAmplitude& a) { return a.values.cwiseAbs2(); }

std::vector<double> signal_density(const JointSpectralAmplitude& a) {
  const Eigen::VectorXd v = a.values.cwiseAbs2().rowwise().sum() * a.d_omega_i();
  return {v.data(), v.data() + v.size()};
}

std::vector<double> idler_density(const JointSpectralAmplitude& a) {
  const Eigen::VectorXd v = a.values.cwiseAbs2().colwise().sum().transpose() * a.d_omega_s();
  return {v.data(), v.data() + v.size()};
}

double rate_factor(const JointSpectralAmplitude& a) {
  // |A_p|^2 = P corresponds to a photon flux carried by the pump mode;
  // the field quantisation factor is 1 / (4 pi n_p eps0 c).
  return 1.0 / (4.0 * kPi * a.pump_n_eff * kVacuumPermittivity * kSpeedOfLight);
}

double pair_rate(const JointSpectralAmplitude& a) {
  if (a.normalized) throw DomainError("absolute rates need an unnormalised amplitude");
  return a.norm_squared() * rate_factor(a);
}

namespace {

std::vector<double> per_nm(const std::vector<double>& density, const std::vector<double>& omega, double factor) {
  std::vector<double> out(density.size());
  for (std::size_t k = 0; k < density.size(); ++k) {
    const double lambda_m = wavelength_um_from_omega(omega[k]) * 1e-6;
    out[k] = density[k] * factor * 2.0 * kPi * kSpeedOfLight / (lambda_m * lambda_m) * 1e-9;
  }
  return out;
}

}  // namespace

std::vector<double> signal_rate_per_nm(const JointSpectralAmplitude& a) {
  if (a.normalized) throw DomainError("absolute rates need an unnormalised amplitude");
  return per_nm(signal_density(a), a.omega_s, rate_factor(a));
}

std::vector<double> idler_rate_per_nm(const JointSpectralAmplitude& a) {
  if (a.normalized) throw DomainError("absolute rates need an unnormalised amplitude");
  return per_nm(idler_density(a), a.omega_i, rate_factor(a));
}

namespace {

struct Approach {
  double omega_s;
  double detuning;
};

// Zero crossings of dbeta - k_grating along the energy-conserving line, or
// the closest approach when there is none.
std::vector<Approach> approaches(const ModeChannel& pump, const ModeChannel& s, const ModeChannel& i, double omega_p0,
                                 double w_lo, double w_hi, double k_grating, int points) {
  const ProcessTriple t{pump, s, i, {}};
  auto f = [&](double ws) { return phase_mismatch(t, ws, omega_p0 - ws) - k_grating; };
  std::vector<double> ws, fs;
  for (int k = 0; k < points; ++k) {
    const double w = w_lo + (w_hi - w_lo) * k / (points - 1);
    if (!s.branch->covers(w) || !i.branch->covers(omega_p0 - w)) continue;
    ws.push_back(w);
    fs.push_back(f(w));
  }
  std::vector<Approach> out;
  if (ws.empty()) return out;
  for (std::size_t k = 1; k < ws.size(); ++k) {
    if ((fs[k - 1] > 0) == (fs[k] > 0)) continue;
    double a = ws[k - 1], b = ws[k], fa = fs[k - 1];
    for (int it = 0; it < 200 && b - a > 1e-13 * b; ++it) {
      const double m = 0.5 * (a + b);
      const double fm = f(m);
      if ((fm > 0) == (fa > 0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
      }
    }
    const double root = 0.5 * (a + b);
    out.push_back({root, std::abs(f(root))});
  }
  if (out.empty()) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < fs.size(); ++k) {
      if (std::abs(fs[k]) < std::abs(fs[best])) best = k;
    }
    out.push_back({ws[best], std::abs(fs[best])});
  }
  return out;
}

}  // namespace

std::vector<TripleCandidate> enumerate_triples(const ModeChannel& pump, const std::vector<ModeChannel>& channels,
                                               const QpmGrating& grating, double omega_p0, double lambda_min_um,
                                               double lambda_max_um, const EnumerateOptions& options) {
  const double w_lo = omega_from_wavelength_um(lambda_max_um);
  const double w_hi = std::min(omega_from_wavelength_um(lambda_min_um), omega_p0);
  const double lobe = 2.0 * kPi / grating.length_um();
  struct Raw {
    std::size_t s, i;
    int order;
    Approach a;
  };
  std::vector<Raw> raw;
  for (std::size_t s = 0; s < channels.size(); ++s) {
    for (std::size_t i = 0; i < channels.size(); ++i) {
      for (const int m : options.orders) {
        const double kg = 2.0 * kPi * m / grating.period_um();
        for (const auto& a :
             approaches(pump, channels[s], channels[i], omega_p0, w_lo, w_hi, kg, options.scan_points)) {
          // Signal on the short-wavelength side; the mirror labelling is the same process.
          if (a.omega_s < 0.5 * omega_p0 * (1.0 - 1e-12)) continue;
          if (a.detuning > lobe) continue;
          raw.push_back({s, i, m, a});
        }
      }
    }
  }
  std::vector<TripleCandidate> out(raw.size());
  parallel_for(raw.size(), 0, [&](std::size_t k) {
    const Raw& r = raw[k];
    const double ws = r.a.omega_s, wi = omega_p0 - ws;
    TripleCandidate c;
    c.triple = make_triple(pump, channels[r.s], channels[r.i], ws, wi);
    c.order = r.order;
    c.lambda_s_um = wavelength_um_from_omega(ws);
    c.lambda_i_um = wavelength_um_from_omega(wi);
    c.detuning = r.a.detuning;
    const cdouble tr = transverse_overlap(pump.mode_at(omega_p0), channels[r.s].mode_at(ws),
                                          channels[r.i].mode_at(wi), grating);
    c.transverse = std::abs(tr);
    c.strength = std::abs(coupling(1.0, tr, grating, phase_mismatch(c.triple, ws, wi)));
    out[k] = std::move(c);
  });
  double top = 0.0;
  for (const auto& c : out) top = std::max(top, c.transverse);
  std::erase_if(out, [&](const TripleCandidate& c) { return c.transverse <= options.relative_overlap_floor * top; });
  std::stable_sort(out.begin(), out.end(),
                   [](const TripleCandidate& a, const TripleCandidate& b) { return a.strength > b.strength; });
  return out;
}

double recalibrate_period(const ProcessTriple& t, double lambda_s_um, double lambda_i_um, int order,
                          double omega_p0) {
  const double ws = omega_from_wavelength_um(lambda_s_um);
  const double wi = omega_from_wavelength_um(lambda_i_um);
  if (std::abs(ws + wi - omega_p0) > 1e-9 * omega_p0) {
    throw DomainError("recalibration target violates energy conservation with the pump");
  }
  if (order == 0) throw DomainError("grating order must be nonzero");
  const double dbeta = phase_mismatch(t, ws, omega_p0 - ws);
  if (std::abs(dbeta) < 1e-14) throw DegenerateError("phase matched without a grating: no poling needed");
  const double period = 2.0 * kPi * order / dbeta;
  if (!(period > 0.0)) {
    std::ostringstream msg;
    msg << "order " << order << " cannot compensate dbeta = " << dbeta << " 1/um; use the opposite sign";
    throw DomainError(msg.str());
  }
  return period;
}

}  // namespace ringfiber
