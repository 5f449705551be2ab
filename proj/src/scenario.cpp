#include "ringfiber/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "embedded_presets.hpp"
#include "ringfiber/csv.hpp"
#include "ringfiber/errors.hpp"
#include "ringfiber/oam.hpp"
#include "ringfiber/units.hpp"

namespace ringfiber {

namespace {

using nlohmann::json;

// Walks one JSON object, remembering which keys were read so that leftovers
// (typos, keys without units) can be reported.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError("'" + path_ + "' must be an object");
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    seen_.insert(key);
    if (!node_.contains(key)) {
      if (fallback) return *fallback;
      throw ConfigError("missing key '" + where(key) + "'");
    }
    const auto& v = node_.at(key);
    if (!v.is_number()) throw ConfigError("'" + where(key) + "' must be a number");
    return v.get<double>();
  }

  int integer(const std::string& key, std::optional<int> fallback = std::nullopt) {
    seen_.insert(key);
    if (!node_.contains(key)) {
      if (fallback) return *fallback;
      throw ConfigError("missing key '" + where(key) + "'");
    }
    const auto& v = node_.at(key);
    if (!v.is_number_integer()) throw ConfigError("'" + where(key) + "' must be an integer");
    return v.get<int>();
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    seen_.insert(key);
    if (!node_.contains(key)) {
      if (fallback) return *fallback;
      throw ConfigError("missing key '" + where(key) + "'");
    }
    const auto& v = node_.at(key);
    if (!v.is_string()) throw ConfigError("'" + where(key) + "' must be a string");
    return v.get<std::string>();
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return node_.at(key);
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(node_.contains(key) ? node_.at(key) : empty, where(key));
  }

  void finish() const {
    for (const auto& item : node_.items())
      if (!seen_.count(item.key())) throw ConfigError("unknown key '" + where(item.key()) + "'");
  }

 private:
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void check_label(const std::string& label) {
  try {
    parse_mode_label(label);
  } catch (const ConfigError&) {
    throw ConfigError("unknown mode label '" + label + "'");
  }
}

}  // namespace

std::vector<std::string> ScenarioConfig::mode_labels() const {
  std::vector<std::string> out{pump_mode};
  if (recalibrate) {
    out.push_back(recalibrate->signal);
    out.push_back(recalibrate->idler);
  }
  for (const auto& p : processes) {
    out.push_back(p.signal);
    out.push_back(p.idler);
  }
  return out;
}

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text, const std::string& origin,
                                              const std::string& base_dir) {
  json root;
  try {
    root = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  ScenarioConfig c;
  try {
    Section top(root, "");
    c.name = top.text("name", origin);
    top.text("description", "");
    c.materials_file = top.text("materials_file", "");
    if (!c.materials_file.empty() && !base_dir.empty() &&
        std::filesystem::path(c.materials_file).is_relative())
      c.materials_file = (std::filesystem::path(base_dir) / c.materials_file).string();

    auto fiber = top.child("fiber");
    c.fiber.r1_um = fiber.number("r1_um", 4.0);
    c.fiber.r2_um = fiber.number("r2_um", 5.5);
    fiber.finish();
    c.fiber.validate();

    auto modes = top.child("modes");
    c.modes_lambda_min_um = modes.number("lambda_min_um", 0.7);
    c.modes_lambda_max_um = modes.number("lambda_max_um", 2.2);
    c.modes_step_nm = modes.number("step_nm", 0.5);
    c.census_lambda_um = modes.number("census_lambda_um", 1.55);
    c.n_max = modes.integer("n_max", 6);
    modes.finish();
    require(c.modes_lambda_min_um > 0.0 && c.modes_lambda_max_um > c.modes_lambda_min_um,
            "modes: need 0 < lambda_min_um < lambda_max_um");
    require(c.modes_step_nm > 0.0, "modes.step_nm must be positive");
    require(c.census_lambda_um >= c.modes_lambda_min_um && c.census_lambda_um <= c.modes_lambda_max_um,
            "modes.census_lambda_um lies outside the mode band");
    require(c.n_max >= 0 && c.n_max <= 12, "modes.n_max must lie in [0, 12]");

    auto pump = top.child("pump");
    c.pump_mode = pump.text("mode");
    c.pump_lambda_um = pump.number("lambda_um", 0.775);
    const std::string kind = pump.text("kind", "cw");
    if (kind == "cw") {
      c.pump_kind = PumpSpectrum::Kind::Cw;
    } else if (kind == "gaussian") {
      c.pump_kind = PumpSpectrum::Kind::Gaussian;
      c.pump_sigma_nm = pump.number("sigma_nm");
      require(c.pump_sigma_nm > 0.0, "pump.sigma_nm must be positive");
    } else {
      throw ConfigError("pump.kind must be \"cw\" or \"gaussian\", not '" + kind + "'");
    }
    if (c.pump_kind == PumpSpectrum::Kind::Cw && pump.has("sigma_nm"))
      throw ConfigError("pump.sigma_nm is only meaningful for a gaussian pump");
    c.pump_power_w = pump.number("power_w", 1e-6);
    pump.finish();
    require(c.pump_lambda_um >= c.modes_lambda_min_um && c.pump_lambda_um <= c.modes_lambda_max_um,
            "pump.lambda_um lies outside the mode band");
    require(c.pump_power_w > 0.0, "pump.power_w must be positive");

    auto grating = top.child("grating");
    const bool has_period = grating.has("period_um");
    const bool has_recal = grating.has("recalibrate");
    require(has_period != has_recal, "grating needs exactly one of period_um and recalibrate");
    if (has_period) {
      c.period_um = grating.number("period_um");
      require(*c.period_um > 0.0, "grating.period_um must be positive");
    } else {
      auto r = grating.child("recalibrate");
      Recalibration rc;
      rc.signal = r.text("signal");
      rc.idler = r.text("idler");
      rc.lambda_s_um = r.number("lambda_s_um");
      rc.order = r.integer("order", 1);
      r.finish();
      require(rc.order != 0, "grating.recalibrate.order must be nonzero");
      const double lambda_i = wavelength_um_from_omega(omega_from_wavelength_um(c.pump_lambda_um) -
                                                       omega_from_wavelength_um(rc.lambda_s_um));
      require(rc.lambda_s_um > c.pump_lambda_um && lambda_i >= c.modes_lambda_min_um &&
                  lambda_i <= c.modes_lambda_max_um && rc.lambda_s_um <= c.modes_lambda_max_um,
              "grating.recalibrate.lambda_s_um puts signal or idler outside the mode band");
      c.recalibrate = rc;
    }
    if (grating.has("nominal_period_um")) c.nominal_period_um = grating.number("nominal_period_um");
    c.length_um = grating.number("length_um", 1e5);
    c.chi_xxx_pm_per_v = grating.number("chi_xxx_pm_per_v", 0.063);
    c.chi_xyy_pm_per_v = grating.number("chi_xyy_pm_per_v", 0.021);
    grating.finish();
    require(c.length_um > 0.0, "grating.length_um must be positive");

    auto grid = top.child("grid");
    c.grid_lambda_s_min_um = grid.number("lambda_s_min_um");
    c.grid_lambda_s_max_um = grid.number("lambda_s_max_um");
    c.grid_points = grid.integer("points", 2048);
    c.mismatch_points = grid.integer("mismatch_points", 601);
    grid.finish();
    require(c.grid_lambda_s_min_um > c.pump_lambda_um && c.grid_lambda_s_max_um > c.grid_lambda_s_min_um,
            "grid: need pump wavelength < lambda_s_min_um < lambda_s_max_um");
    require(c.grid_points >= 16, "grid.points must be at least 16");
    {
      const double wp = omega_from_wavelength_um(c.pump_lambda_um);
      const double lambda_i_max = wavelength_um_from_omega(wp - omega_from_wavelength_um(c.grid_lambda_s_min_um));
      require(c.grid_lambda_s_max_um <= c.modes_lambda_max_um && lambda_i_max <= c.modes_lambda_max_um,
              "grid: signal or mirrored idler wavelengths reach beyond modes.lambda_max_um");
    }
    require(c.mismatch_points >= 2, "grid.mismatch_points must be at least 2");

    require(top.has("processes"), "missing key 'processes'");
    const json& procs = top.raw("processes");
    if (procs.is_string()) {
      require(procs.get<std::string>() == "enumerate", "processes must be \"enumerate\" or a list");
      c.enumerate = true;
    } else if (procs.is_object()) {
      Section p(procs, "processes");
      auto e = p.child("enumerate");
      c.enumerate = true;
      c.enumerate_lambda_min_um = e.number("lambda_min_um", 0.0);
      c.enumerate_lambda_max_um = e.number("lambda_max_um", 0.0);
      e.finish();
      p.finish();
    } else if (procs.is_array()) {
      require(!procs.empty(), "processes list is empty");
      for (std::size_t k = 0; k < procs.size(); ++k) {
        Section p(procs[k], "processes[" + std::to_string(k) + "]");
        c.processes.push_back({p.text("signal"), p.text("idler")});
        p.finish();
      }
    } else {
      throw ConfigError("processes must be \"enumerate\" or a list");
    }
    if (c.enumerate_lambda_min_um <= 0.0) c.enumerate_lambda_min_um = c.grid_lambda_s_min_um;
    if (c.enumerate_lambda_max_um <= 0.0) c.enumerate_lambda_max_um = c.grid_lambda_s_max_um;
    require(c.enumerate_lambda_max_um > c.enumerate_lambda_min_um, "processes.enumerate window is empty");

    auto joint = top.child("joint");
    c.joint_points = joint.integer("points", 256);
    c.joint_lambda_s_min_um = joint.number("lambda_s_min_um", c.grid_lambda_s_min_um);
    c.joint_lambda_s_max_um = joint.number("lambda_s_max_um", c.grid_lambda_s_max_um);
    if (joint.has("pump_sigma_nm")) c.joint_pump_sigma_nm = joint.number("pump_sigma_nm");
    joint.finish();
    require(c.joint_points >= 16, "joint.points must be at least 16");
    require(c.joint_lambda_s_max_um > c.joint_lambda_s_min_um && c.joint_lambda_s_min_um > c.pump_lambda_um,
            "joint: need pump wavelength < lambda_s_min_um < lambda_s_max_um");
    require(!c.joint_pump_sigma_nm || *c.joint_pump_sigma_nm > 0.0, "joint.pump_sigma_nm must be positive");

    auto temporal = top.child("temporal");
    c.temporal_min_samples = temporal.integer("min_samples", 20);
    temporal.finish();
    require(c.temporal_min_samples >= 4, "temporal.min_samples must be at least 4");

    auto schmidt = top.child("schmidt");
    if (schmidt.has("sigma_nm")) {
      const json& s = schmidt.raw("sigma_nm");
      require(s.is_array(), "schmidt.sigma_nm must be a list of numbers");
      for (const auto& v : s) {
        require(v.is_number() && v.get<double>() > 0.0, "schmidt.sigma_nm entries must be positive numbers");
        c.schmidt_sigmas_nm.push_back(v.get<double>());
      }
    }
    c.schmidt_state_sigma_nm = schmidt.number("state_sigma_nm", 0.85);
    schmidt.finish();
    require(c.schmidt_state_sigma_nm > 0.0, "schmidt.state_sigma_nm must be positive");

    auto chsh = top.child("chsh");
    c.chsh_p_min = chsh.number("p_min", 0.0);
    c.chsh_p_max = chsh.number("p_max", 1.0);
    c.chsh_p_steps = chsh.integer("p_steps", 101);
    chsh.finish();
    require(c.chsh_p_min >= 0.0 && c.chsh_p_max <= 1.0 && c.chsh_p_max > c.chsh_p_min,
            "chsh: need 0 <= p_min < p_max <= 1");
    require(c.chsh_p_steps >= 2, "chsh.p_steps must be at least 2");

    top.finish();
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  for (const auto& label : c.mode_labels()) check_label(label);
  return c;
}

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str(), path, std::filesystem::path(path).parent_path().string());
}

ScenarioConfig ScenarioConfig::preset(const std::string& name) {
  for (const auto& [key, text] : detail::kEmbeddedPresets)
    if (name == key) return from_json_text(text, "preset " + name);
  std::string known;
  for (const auto& [key, text] : detail::kEmbeddedPresets) known += (known.empty() ? "" : ", ") + std::string(key);
  throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
}

std::vector<std::string> ScenarioConfig::preset_names() {
  std::vector<std::string> out;
  for (const auto& [key, text] : detail::kEmbeddedPresets) out.emplace_back(key);
  return out;
}

double PeriodDesign::relative_deviation() const {
  if (!nominal_period_um) return std::numeric_limits<double>::quiet_NaN();
  return std::abs(period_um / *nominal_period_um - 1.0);
}

Scenario::Scenario(ScenarioConfig config, int threads) : config_(std::move(config)), threads_(threads) {
  const MaterialLibrary materials =
      config_.materials_file.empty() ? MaterialLibrary::builtin() : MaterialLibrary::from_file(config_.materials_file);
  RingFiber fiber(materials.default_stack(), config_.fiber);
  library_ = std::make_unique<ModeLibrary>(fiber, config_.modes_lambda_min_um, config_.modes_lambda_max_um,
                                           config_.modes_step_nm);
}

double Scenario::omega_p0() const { return omega_from_wavelength_um(config_.pump_lambda_um); }

ModeChannel Scenario::channel(const std::string& label) const {
  const auto [id, pol] = parse_mode_label(label);
  try {
    return ModeChannel{library_->branch(id), pol};
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("mode '" + label + "' is not guided in the mode band");
  }
}

const PeriodDesign& Scenario::design() const {
  if (design_) return *design_;
  PeriodDesign d;
  d.nominal_period_um = config_.nominal_period_um;
  if (config_.period_um) {
    d.period_um = *config_.period_um;
  } else {
    const auto& rc = *config_.recalibrate;
    const double ws = omega_from_wavelength_um(rc.lambda_s_um);
    const double wi = omega_p0() - ws;
    d.lambda_s_um = rc.lambda_s_um;
    d.lambda_i_um = wavelength_um_from_omega(wi);
    const auto triple = make_triple(pump_channel(), channel(rc.signal), channel(rc.idler), ws, wi);
    d.period_um = recalibrate_period(triple, d.lambda_s_um, d.lambda_i_um, rc.order, omega_p0());
  }
  design_ = d;
  return *design_;
}

const QpmGrating& Scenario::grating() const {
  if (!grating_)
    grating_ = QpmGrating::with_length(design().period_um, config_.length_um, config_.chi_xxx_pm_per_v,
                                       config_.chi_xyy_pm_per_v);
  return *grating_;
}

PumpSpectrum Scenario::pump() const {
  if (config_.pump_kind == PumpSpectrum::Kind::Gaussian)
    return PumpSpectrum::gaussian(config_.pump_lambda_um, config_.pump_sigma_nm, config_.pump_power_w);
  return PumpSpectrum::cw(config_.pump_lambda_um, config_.pump_power_w);
}

PumpSpectrum Scenario::gaussian_pump(double sigma_nm) const {
  return PumpSpectrum::gaussian(config_.pump_lambda_um, sigma_nm, config_.pump_power_w);
}

const std::vector<TripleCandidate>& Scenario::candidates() const {
  if (candidates_) return *candidates_;
  std::vector<TripleCandidate> out;
  if (config_.enumerate) {
    const auto channels = library_->channels_at(config_.census_lambda_um, config_.n_max);
    out = enumerate_triples(pump_channel(), channels, grating(), omega_p0(), config_.enumerate_lambda_min_um,
                            config_.enumerate_lambda_max_um);
    if (out.empty()) throw DegenerateError("no phase-matched process found for period " +
                                           std::to_string(design().period_um) + " um");
  }
  candidates_ = std::move(out);
  return *candidates_;
}

const std::vector<ProcessTriple>& Scenario::processes() const {
  if (processes_) return *processes_;
  std::vector<ProcessTriple> out;
  if (config_.enumerate) {
    for (const auto& c : candidates()) out.push_back(c.triple);
  } else {
    // OAM labels are read at the design point, or mid-grid without one.
    const double ls = design().lambda_s_um > 0.0 ? design().lambda_s_um
                                                 : 0.5 * (config_.grid_lambda_s_min_um + config_.grid_lambda_s_max_um);
    const double ws = omega_from_wavelength_um(ls);
    const double wi = omega_p0() - ws;
    for (const auto& p : config_.processes)
      out.push_back(make_triple(pump_channel(), channel(p.signal), channel(p.idler), ws, wi));
  }
  processes_ = std::move(out);
  return *processes_;
}

SpectralGrid Scenario::grid() const {
  return mirrored_grid(omega_p0(), config_.grid_lambda_s_min_um, config_.grid_lambda_s_max_um, config_.grid_points);
}

JointSpectralAmplitude Scenario::amplitude(const ProcessTriple& triple, const PumpSpectrum& pump,
                                           const SpectralGrid& grid) const {
  JsaOptions options;
  options.threads = threads_;
  return jsa(triple, pump, grating(), grid.omega_s, grid.omega_i, options);
}

std::vector<ModeRow> mode_table(const Scenario& scenario) {
  const auto& c = scenario.config();
  const double omega = omega_from_wavelength_um(c.census_lambda_um);
  std::vector<ModeRow> out;
  for (const auto& mode : mode_census(scenario.library().fiber(), omega, c.n_max)) {
    const ModeId id{mode.family(), mode.n(), mode.radial_index()};
    const bool hybrid = mode.family() == ModeFamily::HE || mode.family() == ModeFamily::EH;
    out.push_back({id.label(), mode.n(), hybrid ? to_string(mode.polarization()) : "-", c.census_lambda_um * 1e3,
                   mode.n_eff()});
  }
  return out;
}

namespace {

std::vector<double> to_nm(const std::vector<double>& omega) {
  std::vector<double> out(omega.size());
  for (std::size_t k = 0; k < omega.size(); ++k) out[k] = wavelength_um_from_omega(omega[k]) * 1e3;
  return out;
}

// Linear interpolation of (x ascending, y) at t, zero outside the samples.
double interpolate(const std::vector<double>& x, const std::vector<double>& y, double t) {
  if (x.empty() || t < x.front() || t > x.back()) return 0.0;
  const auto it = std::upper_bound(x.begin(), x.end(), t);
  if (it == x.end()) return y.back();
  const std::size_t k = static_cast<std::size_t>(it - x.begin());
  if (k == 0) return y.front();
  const double f = (t - x[k - 1]) / (x[k] - x[k - 1]);
  return y[k - 1] + f * (y[k] - y[k - 1]);
}

// Same pump, with the signal, the idler or both swapped between R and L: the
// pairs land in the same spectral band and belong to one superposition.
bool twins(const ProcessTriple& a, const ProcessTriple& b) {
  auto same = [](const ModeChannel& x, const ModeChannel& y) {
    return x.branch->id() == y.branch->id() && x.pol == y.pol;
  };
  auto flipped = [](const ModeChannel& x, const ModeChannel& y) {
    return x.branch->id() == y.branch->id() &&
           ((x.pol == Polarization::R && y.pol == Polarization::L) ||
            (x.pol == Polarization::L && y.pol == Polarization::R));
  };
  if (!same(a.pump, b.pump)) return false;
  return (same(a.signal, b.signal) && flipped(a.idler, b.idler)) ||
         (same(a.idler, b.idler) && flipped(a.signal, b.signal)) ||
         (flipped(a.signal, b.signal) && flipped(a.idler, b.idler));
}

struct Feature {
  double lambda_nm;
  double fwhm_nm;
};

}  // namespace

SpectrumReport spdc_spectrum(const Scenario& scenario) {
  SpectrumReport report;
  report.power_w = scenario.config().pump_power_w;
  const auto& triples = scenario.processes();
  const auto grid = scenario.grid();
  const auto pump = scenario.pump();
  for (const auto& t : triples) {
    const auto amp = scenario.amplitude(t, pump, grid);
    ProcessMarginal m;
    m.process = t.label();
    m.signal_lambda_nm = to_nm(amp.omega_s);
    m.signal_rate = signal_rate_per_nm(amp);
    m.idler_lambda_nm = to_nm(amp.omega_i);
    m.idler_rate = idler_rate_per_nm(amp);
    std::reverse(m.signal_lambda_nm.begin(), m.signal_lambda_nm.end());
    std::reverse(m.signal_rate.begin(), m.signal_rate.end());
    std::reverse(m.idler_lambda_nm.begin(), m.idler_lambda_nm.end());
    std::reverse(m.idler_rate.begin(), m.idler_rate.end());
    const long ps = std::max_element(m.signal_rate.begin(), m.signal_rate.end()) - m.signal_rate.begin();
    const long pi = std::max_element(m.idler_rate.begin(), m.idler_rate.end()) - m.idler_rate.begin();
    m.signal_peak_nm = m.signal_lambda_nm[ps];
    const auto [left, right] = half_max_crossings(m.signal_lambda_nm, m.signal_rate, ps);
    m.signal_center_nm = 0.5 * (left + right);
    m.signal_fwhm_nm = right - left;
    m.idler_peak_nm = m.idler_lambda_nm[pi];
    m.idler_fwhm_nm = peak_fwhm(m.idler_lambda_nm, m.idler_rate, pi);
    m.peak_rate_per_nm = m.signal_rate[ps];
    m.pair_rate = pair_rate(amp);
    report.processes.push_back(std::move(m));
  }
  for (std::size_t a = 0; a < triples.size(); ++a)
    for (std::size_t b = 0; b < triples.size(); ++b)
      if (a != b && twins(triples[a], triples[b])) report.processes[a].twin = triples[b].label();

  // Common wavelength axis for the photons of every process.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double step = std::numeric_limits<double>::infinity();
  for (const auto& m : report.processes) {
    for (const auto* x : {&m.signal_lambda_nm, &m.idler_lambda_nm}) {
      lo = std::min(lo, x->front());
      hi = std::max(hi, x->back());
      for (std::size_t k = 1; k < x->size(); ++k) step = std::min(step, (*x)[k] - (*x)[k - 1]);
    }
  }
  const std::size_t count = static_cast<std::size_t>(std::min(std::ceil((hi - lo) / step), 40000.0)) + 1;
  report.lambda_nm.resize(count);
  report.combined.assign(count, 0.0);
  for (std::size_t k = 0; k < count; ++k) report.lambda_nm[k] = lo + (hi - lo) * k / (count - 1);
  auto add = [&](std::vector<double>& target, const std::vector<double>& x, const std::vector<double>& y) {
    for (std::size_t k = 0; k < count; ++k) target[k] += interpolate(x, y, report.lambda_nm[k]);
  };
  for (const auto& m : report.processes) {
    add(report.combined, m.signal_lambda_nm, m.signal_rate);
    add(report.combined, m.idler_lambda_nm, m.idler_rate);
  }

  // Candidate peaks: every process contributes its signal and idler maxima;
  // features closer than half their width (R/L twins) merge.
  std::vector<Feature> features;
  for (const auto& m : report.processes) {
    features.push_back({m.signal_peak_nm, m.signal_fwhm_nm});
    features.push_back({m.idler_peak_nm, m.idler_fwhm_nm});
  }
  std::sort(features.begin(), features.end(), [](const Feature& a, const Feature& b) { return a.lambda_nm < b.lambda_nm; });
  std::vector<Feature> clusters;
  for (const auto& f : features) {
    const double w = std::isfinite(f.fwhm_nm) ? f.fwhm_nm : 0.0;
    if (!clusters.empty() && f.lambda_nm - clusters.back().lambda_nm < 0.5 * std::max(w, clusters.back().fwhm_nm)) {
      clusters.back().fwhm_nm = std::max(clusters.back().fwhm_nm, w);
      continue;
    }
    clusters.push_back({f.lambda_nm, w});
  }
  // A cluster counts when the combined spectrum has an interior maximum near
  // it and dips below half of the smaller height towards each neighbour.
  struct Located {
    std::size_t index;
    double height;
  };
  std::vector<Located> located;
  for (const auto& c : clusters) {
    const double reach = std::max(c.fwhm_nm, 4.0 * step);
    const auto a = static_cast<std::size_t>(std::lower_bound(report.lambda_nm.begin(), report.lambda_nm.end(),
                                                             c.lambda_nm - reach) - report.lambda_nm.begin());
    const auto b = static_cast<std::size_t>(std::upper_bound(report.lambda_nm.begin(), report.lambda_nm.end(),
                                                             c.lambda_nm + reach) - report.lambda_nm.begin());
    if (b <= a + 2) continue;
    const auto best =
        static_cast<std::size_t>(std::max_element(report.combined.begin() + a, report.combined.begin() + b) -
                                 report.combined.begin());
    if (best == a || best + 1 == b || report.combined[best] <= 0.0) continue;
    located.push_back({best, report.combined[best]});
  }
  for (std::size_t k = 0; k < located.size(); ++k) {
    bool resolved = true;
    for (const std::size_t j : {k - 1, k + 1}) {
      if (j >= located.size()) continue;
      const auto [from, to] = std::minmax(located[k].index, located[j].index);
      if (from == to) {
        resolved = false;
        continue;
      }
      const double dip = *std::min_element(report.combined.begin() + from, report.combined.begin() + to + 1);
      if (dip > 0.5 * std::min(located[k].height, located[j].height)) resolved = false;
    }
    if (resolved) report.peaks_nm.push_back(report.lambda_nm[located[k].index]);
  }

  // Main peak: signal of the brightest process; its R/L twin counts as wanted.
  std::size_t main = 0;
  for (std::size_t k = 1; k < report.processes.size(); ++k)
    if (report.processes[k].peak_rate_per_nm > report.processes[main].peak_rate_per_nm) main = k;
  const auto& mp = report.processes[main];
  report.main_peak_nm = mp.signal_peak_nm;
  const double sigma = mp.signal_fwhm_nm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  report.band_min_nm = mp.signal_center_nm - 3.0 * sigma;
  report.band_max_nm = mp.signal_center_nm + 3.0 * sigma;
  std::vector<double> wanted(count, 0.0);
  for (std::size_t k = 0; k < report.processes.size(); ++k) {
    if (k != main && report.processes[k].twin != mp.process) continue;
    add(wanted, report.processes[k].signal_lambda_nm, report.processes[k].signal_rate);
    // Degenerate pairs: the idler is indistinguishable from the signal.
    const auto& t = triples[k];
    if (t.signal.branch->id() == t.idler.branch->id() && t.signal.pol == t.idler.pol)
      add(wanted, report.processes[k].idler_lambda_nm, report.processes[k].idler_rate);
  }
  double total = 0.0;
  double unwanted = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    if (report.lambda_nm[k] < report.band_min_nm || report.lambda_nm[k] > report.band_max_nm) continue;
    total += report.combined[k];
    unwanted += report.combined[k] - wanted[k];
  }
  report.unwanted_fraction = total > 0.0 ? std::max(unwanted, 0.0) / total : 0.0;
  return report;
}

std::vector<MismatchCurve> mismatch_curves(const Scenario& scenario) {
  const auto& c = scenario.config();
  const auto& g = scenario.grating();
  const double k_grating = 2.0 * kPi / g.period_um();
  const double peak = std::norm(g.spectrum(k_grating));
  const auto grid = mirrored_grid(scenario.omega_p0(), c.grid_lambda_s_min_um, c.grid_lambda_s_max_um,
                                  c.mismatch_points);
  std::vector<MismatchCurve> out;
  for (const auto& t : scenario.processes()) {
    MismatchCurve curve;
    curve.process = t.label();
    // Descending omega_s gives ascending signal wavelength.
    for (std::size_t k = grid.omega_s.size(); k-- > 0;) {
      const double ws = grid.omega_s[k];
      const double wi = scenario.omega_p0() - ws;
      const double db = phase_mismatch(t, ws, wi);
      curve.lambda_s_nm.push_back(wavelength_um_from_omega(ws) * 1e3);
      curve.lambda_i_nm.push_back(wavelength_um_from_omega(wi) * 1e3);
      curve.delta_beta.push_back(db);
      curve.detuning.push_back(db - std::copysign(k_grating, db));
      curve.grating_response.push_back(std::norm(g.spectrum(-db)) / peak);
    }
    out.push_back(std::move(curve));
  }
  return out;
}

namespace {

SpectralCut cut_through(const JointSpectralAmplitude& a, Eigen::Index k0, Eigen::Index l0, int dl) {
  SpectralCut cut;
  const Eigen::Index rows = a.values.rows();
  const Eigen::Index cols = a.values.cols();
  Eigen::Index back = 0;
  while (k0 - back - 1 >= 0 && l0 - dl * (back + 1) >= 0 && l0 - dl * (back + 1) < cols) ++back;
  for (Eigen::Index k = k0 - back, l = l0 - dl * back; k < rows && l >= 0 && l < cols; ++k, l += dl) {
    cut.lambda_s_nm.push_back(wavelength_um_from_omega(a.omega_s[static_cast<std::size_t>(k)]) * 1e3);
    cut.lambda_i_nm.push_back(wavelength_um_from_omega(a.omega_i[static_cast<std::size_t>(l)]) * 1e3);
    cut.abs_phi.push_back(std::abs(a.values(k, l)));
  }
  return cut;
}

}  // namespace

std::vector<JointReport> joint_spectra(const Scenario& scenario) {
  const auto& c = scenario.config();
  const auto grid = mirrored_grid(scenario.omega_p0(), c.joint_lambda_s_min_um, c.joint_lambda_s_max_um,
                                  c.joint_points);
  const auto pump = c.joint_pump_sigma_nm ? scenario.gaussian_pump(*c.joint_pump_sigma_nm) : scenario.pump();
  std::vector<JointReport> out;
  for (const auto& t : scenario.processes()) {
    JointReport r;
    r.process = t.label();
    r.amplitude = normalized(scenario.amplitude(t, pump, grid));
    Eigen::Index k0 = 0;
    Eigen::Index l0 = 0;
    r.amplitude.values.cwiseAbs().maxCoeff(&k0, &l0);
    r.diagonal = cut_through(r.amplitude, k0, l0, +1);
    r.antidiagonal = cut_through(r.amplitude, k0, l0, -1);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TemporalReport> temporal_profiles(const Scenario& scenario) {
  const auto grid = scenario.grid();
  const auto pump = scenario.pump();
  std::vector<TemporalReport> out;
  for (const auto& t : scenario.processes()) {
    const auto amp = scenario.amplitude(t, pump, grid);
    out.push_back({t.label(), conditional_profile(amp, scenario.config().temporal_min_samples)});
  }
  return out;
}

namespace {

const ProcessTriple& mirror_process(const Scenario& scenario, std::size_t k) {
  const auto& p = scenario.processes();
  if (p.size() != 2)
    throw ConfigError("entanglement commands need exactly two processes, found " + std::to_string(p.size()));
  return p[k];
}

OamQubitState oam_state(const Scenario& scenario) {
  const auto grid = scenario.grid();
  const auto pump = scenario.pump();
  const auto a = scenario.amplitude(mirror_process(scenario, 0), pump, grid);
  const auto b = scenario.amplitude(mirror_process(scenario, 1), pump, grid);
  return oam_state_from_amplitudes(a, b);
}

}  // namespace

EntanglementReport entanglement(const Scenario& scenario, bool with_sweep) {
  const auto& c = scenario.config();
  const auto& t1 = mirror_process(scenario, 0);
  const auto& t2 = mirror_process(scenario, 1);
  EntanglementReport r;
  KOmegaOptions options;
  options.jsa.threads = scenario.threads();
  if (with_sweep && !c.schmidt_sigmas_nm.empty())
    r.sweep = k_omega_vs_pump(t1, scenario.grating(), c.pump_lambda_um, c.schmidt_sigmas_nm, options);
  r.state_sigma_nm = c.schmidt_state_sigma_nm;
  {
    const auto pump = PumpSpectrum::gaussian(c.pump_lambda_um, r.state_sigma_nm, 1.0);
    const auto grid = k_omega_grid(t1, scenario.grating(), pump, options);
    r.state = schmidt(jsa(t1, pump, scenario.grating(), grid.omega_s, grid.omega_i, options.jsa));
  }
  r.oam = oam_state(scenario);
  const double ls = scenario.design().lambda_s_um > 0.0 ? scenario.design().lambda_s_um
                                                        : 0.5 * (c.grid_lambda_s_min_um + c.grid_lambda_s_max_um);
  const double ws = omega_from_wavelength_um(ls);
  const double wi = scenario.omega_p0() - ws;
  const std::vector<TransverseTerm> terms{{t1.signal.mode_at(ws), t1.idler.mode_at(wi), r.oam.c1},
                                          {t2.signal.mode_at(ws), t2.idler.mode_at(wi), r.oam.c2 * r.oam.coherence}};
  r.k_theta_harmonic = k_theta_harmonic(terms);
  r.k_theta_exact = k_theta_exact(terms);
  return r;
}

ChshCurve chsh_curve(const Scenario& scenario) {
  const auto& c = scenario.config();
  ChshCurve curve;
  curve.state = oam_state(scenario);
  for (int k = 0; k < c.chsh_p_steps; ++k) {
    OamQubitState s = curve.state;
    s.noise = c.chsh_p_min + (c.chsh_p_max - c.chsh_p_min) * k / (c.chsh_p_steps - 1);
    curve.p.push_back(s.noise);
    curve.s.push_back(chsh_max(s));
  }
  curve.crossing = chsh_crossing(curve.state);
  return curve;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"modes",          "dispersion", "oam",     "mismatch", "spdc-spectrum",
                                              "joint-spectrum", "temporal",   "schmidt", "chsh"};
  return names;
}

namespace {

std::string in_dir(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

std::vector<std::string> write_modes(const Scenario& s, const std::string& dir) {
  CsvWriter out(in_dir(dir, "modes.csv"), {"label", "n", "polarization", "lambda_nm", "n_eff"});
  for (const auto& r : mode_table(s)) out.row({r.label, static_cast<long long>(r.n), r.polarization, r.lambda_nm, r.n_eff});
  return {out.path()};
}

std::vector<ModeId> census_ids(const Scenario& s) {
  std::vector<ModeId> ids;
  for (const auto& m : mode_census(s.library().fiber(), omega_from_wavelength_um(s.config().census_lambda_um),
                                   s.config().n_max)) {
    const ModeId id{m.family(), m.n(), m.radial_index()};
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  }
  return ids;
}

std::vector<std::string> write_dispersion(const Scenario& s, const std::string& dir) {
  CsvWriter modes(in_dir(dir, "dispersion.csv"), {"mode", "lambda_nm", "n_eff"});
  for (const auto& id : census_ids(s)) {
    const auto branch = s.library().branch(id);
    const auto& lam = branch->wavelengths();
    const auto& n = branch->n_eff_table();
    for (std::size_t k = 0; k < lam.size(); ++k) modes.row({id.label(), lam[k] * 1e3, n[k]});
  }
  CsvWriter media(in_dir(dir, "dispersion_materials.csv"), {"lambda_nm", "n_cladding", "n_core"});
  const auto& c = s.config();
  const int count = static_cast<int>(std::round((c.modes_lambda_max_um - c.modes_lambda_min_um) * 1e3 / c.modes_step_nm)) + 1;
  for (int k = 0; k < count; ++k) {
    const double lambda = std::min(c.modes_lambda_min_um + k * c.modes_step_nm * 1e-3, c.modes_lambda_max_um);
    const double omega = omega_from_wavelength_um(lambda);
    media.row({lambda * 1e3, s.library().fiber().cladding_index(omega), s.library().fiber().core_index(omega)});
  }
  return {modes.path(), media.path()};
}

std::vector<std::string> write_oam(const Scenario& s, const std::string& dir) {
  CsvWriter table(in_dir(dir, "oam.csv"), {"mode", "component", "l", "p_l"});
  CsvWriter summary(in_dir(dir, "oam_summary.csv"), {"mode", "component", "dominant_l", "top_probability", "mixed"});
  const double omega = omega_from_wavelength_um(s.config().census_lambda_um);
  for (const auto& mode : mode_census(s.library().fiber(), omega, s.config().n_max)) {
    for (const Component comp : {Component::X, Component::Y, Component::Z}) {
      const auto spec = decompose(mode, comp);
      for (const auto& [l, p] : spec.probs) table.row({mode.label(), to_string(comp), static_cast<long long>(l), p});
      summary.row({mode.label(), to_string(comp), static_cast<long long>(dominant_oam(spec)), spec.top_probability(),
                   static_cast<long long>(is_mixed(spec) ? 1 : 0)});
    }
  }
  return {table.path(), summary.path()};
}

std::vector<std::string> write_mismatch(const Scenario& s, const std::string& dir) {
  CsvWriter out(in_dir(dir, "mismatch.csv"), {"process", "lambda_s_nm", "lambda_i_nm", "delta_beta_per_um",
                                              "detuning_per_um", "grating_response"});
  for (const auto& c : mismatch_curves(s))
    for (std::size_t k = 0; k < c.lambda_s_nm.size(); ++k)
      out.row({c.process, c.lambda_s_nm[k], c.lambda_i_nm[k], c.delta_beta[k], c.detuning[k], c.grating_response[k]});
  CsvWriter design(in_dir(dir, "grating.csv"),
                   {"period_um", "nominal_period_um", "relative_deviation", "lambda_s_nm", "lambda_i_nm", "periods",
                    "length_um", "peak_fwhm_per_um"});
  const auto& d = s.design();
  const auto& g = s.grating();
  design.row({d.period_um, d.nominal_period_um.value_or(std::numeric_limits<double>::quiet_NaN()),
              d.relative_deviation(), d.lambda_s_um * 1e3, d.lambda_i_um * 1e3, static_cast<long long>(g.periods()),
              g.length_um(), grating_peak_fwhm(g)});
  return {out.path(), design.path()};
}

std::vector<std::string> write_spectrum(const Scenario& s, const std::string& dir) {
  const auto r = spdc_spectrum(s);
  CsvWriter marginals(in_dir(dir, "spdc_marginals.csv"), {"process", "photon", "lambda_nm", "rate_per_nm_s"});
  for (const auto& m : r.processes) {
    for (std::size_t k = 0; k < m.signal_lambda_nm.size(); ++k)
      marginals.row({m.process, "signal", m.signal_lambda_nm[k], m.signal_rate[k]});
    for (std::size_t k = 0; k < m.idler_lambda_nm.size(); ++k)
      marginals.row({m.process, "idler", m.idler_lambda_nm[k], m.idler_rate[k]});
  }
  CsvWriter combined(in_dir(dir, "spdc_combined.csv"), {"lambda_nm", "rate_per_nm_s"});
  for (std::size_t k = 0; k < r.lambda_nm.size(); ++k) combined.row({r.lambda_nm[k], r.combined[k]});
  CsvWriter summary(in_dir(dir, "spdc_summary.csv"),
                    {"process", "twin", "signal_peak_nm", "signal_center_nm", "signal_fwhm_nm", "idler_peak_nm",
                     "idler_fwhm_nm", "peak_rate_per_nm_s", "pair_rate_per_s", "power_w"});
  for (const auto& m : r.processes)
    summary.row({m.process, m.twin, m.signal_peak_nm, m.signal_center_nm, m.signal_fwhm_nm, m.idler_peak_nm,
                 m.idler_fwhm_nm, m.peak_rate_per_nm, m.pair_rate, r.power_w});
  CsvWriter peaks(in_dir(dir, "spdc_peaks.csv"), {"lambda_nm", "main"});
  for (const double p : r.peaks_nm)
    peaks.row({p, static_cast<long long>(p >= r.band_min_nm && p <= r.band_max_nm ? 1 : 0)});
  CsvWriter band(in_dir(dir, "spdc_band.csv"), {"main_peak_nm", "band_min_nm", "band_max_nm", "unwanted_fraction"});
  band.row({r.main_peak_nm, r.band_min_nm, r.band_max_nm, r.unwanted_fraction});
  return {marginals.path(), combined.path(), summary.path(), peaks.path(), band.path()};
}

std::vector<std::string> write_joint(const Scenario& s, const std::string& dir) {
  const auto reports = joint_spectra(s);
  CsvWriter grid(in_dir(dir, "joint_spectrum.csv"), {"process", "lambda_s_nm", "lambda_i_nm", "abs2_phi", "arg_phi"});
  CsvWriter cuts(in_dir(dir, "joint_cuts.csv"), {"process", "cut", "lambda_s_nm", "lambda_i_nm", "abs_phi"});
  for (const auto& r : reports) {
    const auto& a = r.amplitude;
    for (Eigen::Index k = 0; k < a.values.rows(); ++k)
      for (Eigen::Index l = 0; l < a.values.cols(); ++l)
        grid.row({r.process, wavelength_um_from_omega(a.omega_s[static_cast<std::size_t>(k)]) * 1e3,
                  wavelength_um_from_omega(a.omega_i[static_cast<std::size_t>(l)]) * 1e3, std::norm(a.values(k, l)),
                  std::arg(a.values(k, l))});
    for (const auto& [name, cut] : {std::pair{"diagonal", &r.diagonal}, std::pair{"antidiagonal", &r.antidiagonal}})
      for (std::size_t k = 0; k < cut->abs_phi.size(); ++k)
        cuts.row({r.process, name, cut->lambda_s_nm[k], cut->lambda_i_nm[k], cut->abs_phi[k]});
  }
  return {grid.path(), cuts.path()};
}

std::vector<std::string> write_temporal(const Scenario& s, const std::string& dir) {
  const auto reports = temporal_profiles(s);
  CsvWriter profile(in_dir(dir, "temporal.csv"), {"process", "t_i_fs", "p_t_i_per_fs"});
  CsvWriter summary(in_dir(dir, "temporal_summary.csv"), {"process", "fwhm_s"});
  for (const auto& r : reports) {
    for (std::size_t k = 0; k < r.profile.t.size(); ++k)
      profile.row({r.process, r.profile.t[k] * 1e15, r.profile.p[k] * 1e-15});
    summary.row({r.process, r.profile.fwhm});
  }
  return {profile.path(), summary.path()};
}

std::vector<std::string> write_schmidt(const Scenario& s, const std::string& dir) {
  const auto r = entanglement(s);
  CsvWriter sweep(in_dir(dir, "schmidt_k_omega.csv"), {"sigma_p_nm", "k_omega"});
  for (const auto& p : r.sweep) sweep.row({p.sigma_nm, p.k_omega});
  CsvWriter table(in_dir(dir, "schmidt_coefficients.csv"), {"k", "lambda_k"});
  for (std::size_t k = 0; k < r.state.coefficients.size(); ++k) {
    if (r.state.coefficients[k] < 1e-8 * r.state.coefficients.front()) break;
    table.row({static_cast<long long>(k + 1), r.state.coefficients[k]});
  }
  CsvWriter theta(in_dir(dir, "schmidt_k_theta.csv"), {"route", "k_theta", "sigma_p_nm", "k_omega", "k_total"});
  for (const auto& [route, res] : {std::pair{"harmonic", &r.k_theta_harmonic}, std::pair{"exact", &r.k_theta_exact}})
    theta.row({route, res->schmidt_number, r.state_sigma_nm, r.state.schmidt_number,
               res->schmidt_number * r.state.schmidt_number});
  return {sweep.path(), table.path(), theta.path()};
}

std::vector<std::string> write_chsh(const Scenario& s, const std::string& dir) {
  const auto c = chsh_curve(s);
  CsvWriter curve(in_dir(dir, "chsh.csv"), {"p", "s"});
  for (std::size_t k = 0; k < c.p.size(); ++k) curve.row({c.p[k], c.s[k]});
  CsvWriter summary(in_dir(dir, "chsh_summary.csv"), {"abs_c1", "abs_c2", "coherence", "s_max", "crossing_p"});
  summary.row({std::abs(c.state.c1), std::abs(c.state.c2), c.state.coherence, chsh_max(c.state), c.crossing});
  return {curve.path(), summary.path()};
}

}  // namespace

std::vector<std::string> run_command(const std::string& command, const Scenario& scenario, const std::string& out_dir) {
  using Runner = std::vector<std::string> (*)(const Scenario&, const std::string&);
  static const std::map<std::string, Runner> runners{
      {"modes", write_modes},       {"dispersion", write_dispersion}, {"oam", write_oam},
      {"mismatch", write_mismatch}, {"spdc-spectrum", write_spectrum}, {"joint-spectrum", write_joint},
      {"temporal", write_temporal}, {"schmidt", write_schmidt},       {"chsh", write_chsh}};
  const auto it = runners.find(command);
  if (it == runners.end()) throw ConfigError("unknown command '" + command + "'");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + out_dir + "': " + ec.message());
  return it->second(scenario, out_dir);
}

}  // namespace ringfiber
