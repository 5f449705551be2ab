#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ringfiber/entangle.hpp"
#include "ringfiber/spdc.hpp"
#include "ringfiber/temporal.hpp"

namespace ringfiber {

// Every physical quantity in the file carries its unit in the key name.
struct ScenarioConfig {
  struct Recalibration {
    std::string signal, idler;
    double lambda_s_um = 0.0;
    int order = 1;
  };
  struct Process {
    std::string signal, idler;
  };

  std::string name;
  FiberGeometry fiber;
  std::string materials_file;  // empty: coefficients compiled into the library

  double modes_lambda_min_um = 0.7;
  double modes_lambda_max_um = 2.2;
  double modes_step_nm = 0.5;
  double census_lambda_um = 1.55;
  int n_max = 6;

  std::string pump_mode;
  double pump_lambda_um = 0.775;
  PumpSpectrum::Kind pump_kind = PumpSpectrum::Kind::Cw;
  double pump_sigma_nm = 0.0;
  double pump_power_w = 1e-6;

  std::optional<double> period_um;
  std::optional<Recalibration> recalibrate;
  std::optional<double> nominal_period_um;  // reference only, never used as the period
  double length_um = 1e5;
  double chi_xxx_pm_per_v = 0.063;
  double chi_xyy_pm_per_v = 0.021;

  bool enumerate = false;
  double enumerate_lambda_min_um = 0.0;  // default: the grid window
  double enumerate_lambda_max_um = 0.0;
  std::vector<Process> processes;

  double grid_lambda_s_min_um = 1.3;
  double grid_lambda_s_max_um = 1.9;
  int grid_points = 2048;
  int mismatch_points = 601;

  int joint_points = 256;
  double joint_lambda_s_min_um = 0.0;  // default: the grid window
  double joint_lambda_s_max_um = 0.0;
  std::optional<double> joint_pump_sigma_nm;  // default: the scenario pump

  int temporal_min_samples = 20;

  std::vector<double> schmidt_sigmas_nm;
  double schmidt_state_sigma_nm = 0.85;

  double chsh_p_min = 0.0;
  double chsh_p_max = 1.0;
  int chsh_p_steps = 101;

  // Every mode label the config mentions, in order of appearance.
  std::vector<std::string> mode_labels() const;

  // ConfigError names the offending key or label. A relative materials_file
  // is resolved against base_dir.
  static ScenarioConfig from_json_text(const std::string& text, const std::string& origin = "config",
                                       const std::string& base_dir = "");
  static ScenarioConfig from_file(const std::string& path);
  static ScenarioConfig preset(const std::string& name);
  static std::vector<std::string> preset_names();
};

// Resolved period with the design point it was pinned to.
struct PeriodDesign {
  double period_um = 0.0;
  std::optional<double> nominal_period_um;
  double lambda_s_um = 0.0;  // zero when the period was given directly
  double lambda_i_um = 0.0;
  double relative_deviation() const;  // |period / nominal - 1|, NaN without a nominal value
};

// A loaded scenario: fiber, branches, grating and processes built on demand.
class Scenario {
 public:
  explicit Scenario(ScenarioConfig config, int threads = 0);

  const ScenarioConfig& config() const { return config_; }
  const ModeLibrary& library() const { return *library_; }
  int threads() const { return threads_; }
  double omega_p0() const;

  // ConfigError for labels that do not parse or are not guided in the band.
  ModeChannel channel(const std::string& label) const;
  ModeChannel pump_channel() const { return channel(config_.pump_mode); }

  const PeriodDesign& design() const;
  const QpmGrating& grating() const;
  PumpSpectrum pump() const;
  PumpSpectrum gaussian_pump(double sigma_nm) const;

  // Explicit processes, or the enumerated ones sorted by strength.
  const std::vector<ProcessTriple>& processes() const;
  const std::vector<TripleCandidate>& candidates() const;
  SpectralGrid grid() const;

  JointSpectralAmplitude amplitude(const ProcessTriple& triple, const PumpSpectrum& pump,
                                   const SpectralGrid& grid) const;

 private:
  ScenarioConfig config_;
  int threads_;
  std::unique_ptr<ModeLibrary> library_;
  mutable std::optional<PeriodDesign> design_;
  mutable std::optional<QpmGrating> grating_;
  mutable std::optional<std::vector<TripleCandidate>> candidates_;
  mutable std::optional<std::vector<ProcessTriple>> processes_;
};

struct ModeRow {
  std::string label;  // HE21, TE01 ...
  int n = 0;
  std::string polarization;
  double lambda_nm = 0.0;
  double n_eff = 0.0;
};
std::vector<ModeRow> mode_table(const Scenario& scenario);

struct ProcessMarginal {
  std::string process;
  std::string twin;  // label of the R/L partner with the same spectrum, if any
  std::vector<double> signal_lambda_nm, signal_rate;  // ascending wavelength, pairs/s/nm
  std::vector<double> idler_lambda_nm, idler_rate;
  double signal_peak_nm = 0.0;
  double signal_center_nm = 0.0;  // midpoint of the half-maximum crossings
  double signal_fwhm_nm = 0.0;
  double idler_peak_nm = 0.0;
  double idler_fwhm_nm = 0.0;
  double peak_rate_per_nm = 0.0;  // pairs/s/nm
  double pair_rate = 0.0;         // pairs/s
};

struct SpectrumReport {
  std::vector<ProcessMarginal> processes;
  std::vector<double> lambda_nm, combined;  // photons/s/nm from every process, both photons
  std::vector<double> peaks_nm;             // resolvable peaks in the combined spectrum
  double main_peak_nm = 0.0;
  double band_min_nm = 0.0;  // main peak +- 3 sigma
  double band_max_nm = 0.0;
  double unwanted_fraction = 0.0;
  double power_w = 0.0;
};
SpectrumReport spdc_spectrum(const Scenario& scenario);

struct MismatchCurve {
  std::string process;
  std::vector<double> lambda_s_nm, lambda_i_nm, delta_beta, detuning, grating_response;
};
std::vector<MismatchCurve> mismatch_curves(const Scenario& scenario);

struct SpectralCut {
  std::vector<double> lambda_s_nm, lambda_i_nm, abs_phi;
};

struct JointReport {
  std::string process;
  JointSpectralAmplitude amplitude;  // normalized
  SpectralCut diagonal;              // omega_s - omega_i fixed at the maximum
  SpectralCut antidiagonal;          // omega_s + omega_i fixed at the maximum
};
std::vector<JointReport> joint_spectra(const Scenario& scenario);

struct TemporalReport {
  std::string process;
  ConditionalProfile profile;
};
std::vector<TemporalReport> temporal_profiles(const Scenario& scenario);

struct EntanglementReport {
  std::vector<KOmegaPoint> sweep;
  SchmidtResult state;  // spectral decomposition at the state pump width
  double state_sigma_nm = 0.0;
  SchmidtResult k_theta_harmonic, k_theta_exact;
  OamQubitState oam;
};
// Needs exactly two processes: the mirror pair carrying |+1,-1> and |-1,+1>.
EntanglementReport entanglement(const Scenario& scenario, bool with_sweep = true);

struct ChshCurve {
  std::vector<double> p, s;
  double crossing = 0.0;
  OamQubitState state;
};
ChshCurve chsh_curve(const Scenario& scenario);

// Commands understood by run_command.
const std::vector<std::string>& command_names();

// Runs one command and writes its CSV files into out_dir; returns the paths.
std::vector<std::string> run_command(const std::string& command, const Scenario& scenario,
                                     const std::string& out_dir);

}  // namespace ringfiber
