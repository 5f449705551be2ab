#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ringfiber/spdc.hpp"

namespace ringfiber {

// Phi~(t_s, t_i) on the time grids conjugate to the zero-padded frequency
// grids, with t = 0 at the centre index. Overall constants are dropped.
struct TemporalAmplitude {
  std::vector<double> t_s, t_i;  // s
  Eigen::MatrixXcd values;
};

// Weight sqrt(omega_s omega_i) / sqrt(n_s n_i) applied to Phi before the
// transform.
Eigen::MatrixXcd weighted_amplitude(const JointSpectralAmplitude& amplitude);

TemporalAmplitude temporal_amplitude(const JointSpectralAmplitude& amplitude, int pad_factor = 2);

struct ConditionalProfile {
  std::vector<double> t;  // s
  std::vector<double> p;  // 1/s, integrates to 1
  double fwhm = 0.0;      // s
};

// Row t_s = 0 of a temporal amplitude, normalised.
ConditionalProfile conditional_profile(const TemporalAmplitude& amplitude);

// The same row computed directly as a one-dimensional transform; padding is
// doubled until the FWHM spans at least min_samples time steps.
ConditionalProfile conditional_profile(const JointSpectralAmplitude& amplitude, int min_samples = 20);

}  // namespace ringfiber
