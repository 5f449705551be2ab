#pragma once

#include <map>
#include <string>

#include "ringfiber/modesolver.hpp"

namespace ringfiber {

struct OamSpectrum {
  std::map<int, double> probs;  // l -> p_l for |l| <= l_max
  Component component = Component::X;
  std::string mode_label;
  double omega = 0.0;

  double total() const;
  double top_probability() const;
};

inline constexpr int kDefaultLMax = 6;

// p_l of one cartesian component after renormalising that component to unit
// norm. The norm comes from a 256-point azimuthal quadrature of the sampled
// field, so the probabilities sum to one only when l_max captures all content.
OamSpectrum decompose(const GuidedMode& mode, Component component, int l_max = kDefaultLMax);

// argmax p_l; ties go to the smaller |l|, then to positive l.
int dominant_oam(const OamSpectrum& spectrum);

// True when no harmonic holds clearly more than half the probability.
bool is_mixed(const OamSpectrum& spectrum);

bool selection_rule_ok(int l_p, int l_s, int l_i);

const char* to_string(Component component);

}  // namespace ringfiber
