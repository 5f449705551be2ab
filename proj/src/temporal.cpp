#include "ringfiber/temporal.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

#include "ringfiber/errors.hpp"
#include "ringfiber/qpm.hpp"
#include "ringfiber/units.hpp"

namespace ringfiber {

using cdouble = std::complex<double>;

namespace {

// Plan creation in FFTW is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Forward (e^{-i omega t}) transform in place; data is row-major n0 x n1, or
// one-dimensional when n0 == 1.
void forward_fft(std::vector<cdouble>& data, int n0, int n1) {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = n0 == 1 ? fftw_plan_dft_1d(n1, p, p, FFTW_FORWARD, FFTW_ESTIMATE)
                   : fftw_plan_dft_2d(n0, n1, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw DomainError("FFT plan creation failed");
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
}

// Times for a padded length m with t = 0 at index m / 2.
std::vector<double> time_axis(int m, double d_omega) {
  std::vector<double> t(static_cast<std::size_t>(m));
  const double dt = 2.0 * kPi / (m * d_omega);
  for (int j = 0; j < m; ++j) t[static_cast<std::size_t>(j)] = (j - m / 2) * dt;
  return t;
}

// DFT index of the time at shifted position j.
int source_index(int j, int m) { return ((j - m / 2) % m + m) % m; }

ConditionalProfile finish(std::vector<double> t, std::vector<double> p) {
  const double dt = t.size() > 1 ? t[1] - t[0] : 1.0;
  double total = 0.0;
  for (double x : p) total += x;
  total *= dt;
  if (!(total > 0.0)) throw DegenerateError("conditional profile vanishes");
  for (double& x : p) x /= total;
  ConditionalProfile out{std::move(t), std::move(p), 0.0};
  out.fwhm = peak_fwhm(out.t, out.p);
  return out;
}

}  // namespace

Eigen::MatrixXcd weighted_amplitude(const JointSpectralAmplitude& a) {
  Eigen::MatrixXcd w = a.values;
  for (Eigen::Index s = 0; s < w.rows(); ++s) {
    for (Eigen::Index i = 0; i < w.cols(); ++i) {
      const auto ss = static_cast<std::size_t>(s), ii = static_cast<std::size_t>(i);
      w(s, i) *= std::sqrt(a.omega_s[ss] * a.omega_i[ii] / (a.n_eff_s[ss] * a.n_eff_i[ii]));
    }
  }
  return w;
}

TemporalAmplitude temporal_amplitude(const JointSpectralAmplitude& a, int pad_factor) {
  if (pad_factor < 1) throw DomainError("padding factor must be >= 1");
  const Eigen::MatrixXcd w = weighted_amplitude(a);
  const int ms = static_cast<int>(w.rows()) * pad_factor;
  const int mi = static_cast<int>(w.cols()) * pad_factor;
  // Row-major [t_s][t_i].
  std::vector<cdouble> buf(static_cast<std::size_t>(ms) * mi, 0.0);
  for (Eigen::Index s = 0; s < w.rows(); ++s) {
    for (Eigen::Index i = 0; i < w.cols(); ++i) buf[static_cast<std::size_t>(s * mi + i)] = w(s, i);
  }
  forward_fft(buf, ms, mi);
  TemporalAmplitude out;
  out.t_s = time_axis(ms, a.d_omega_s());
  out.t_i = time_axis(mi, a.d_omega_i());
  out.values.resize(ms, mi);
  const double scale = a.d_omega_s() * a.d_omega_i();
  for (int js = 0; js < ms; ++js) {
    const int ks = source_index(js, ms);
    for (int ji = 0; ji < mi; ++ji) {
      out.values(js, ji) = scale * buf[static_cast<std::size_t>(ks) * mi + source_index(ji, mi)];
    }
  }
  return out;
}

ConditionalProfile conditional_profile(const TemporalAmplitude& amp) {
  const Eigen::Index row = static_cast<Eigen::Index>(amp.t_s.size() / 2);
  if (amp.t_s[static_cast<std::size_t>(row)] != 0.0) throw DomainError("t_s = 0 is not on the time grid");
  std::vector<double> p(amp.t_i.size());
  for (std::size_t j = 0; j < p.size(); ++j) p[j] = std::norm(amp.values(row, static_cast<Eigen::Index>(j)));
  return finish(amp.t_i, std::move(p));
}

ConditionalProfile conditional_profile(const JointSpectralAmplitude& a, int min_samples) {
  const Eigen::MatrixXcd w = weighted_amplitude(a);
  // t_s = 0 removes the signal phase factor, leaving a sum over omega_s.
  const Eigen::VectorXcd g = w.colwise().sum().transpose() * a.d_omega_s();
  const int n = static_cast<int>(g.size());
  for (int m = n; m <= (1 << 23); m *= 2) {
    std::vector<cdouble> buf(static_cast<std::size_t>(m), 0.0);
    for (int k = 0; k < n; ++k) buf[static_cast<std::size_t>(k)] = g(k);
    forward_fft(buf, 1, m);
    std::vector<double> p(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) p[static_cast<std::size_t>(j)] = std::norm(buf[static_cast<std::size_t>(source_index(j, m))]);
    ConditionalProfile out = finish(time_axis(m, a.d_omega_i()), std::move(p));
    const double dt = out.t[1] - out.t[0];
    if (std::isfinite(out.fwhm) && out.fwhm >= min_samples * dt) return out;
  }
  throw DomainError("conditional profile unresolved at the maximum padding");
}

}  // namespace ringfiber
