#include "ringfiber/materials.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "embedded_materials.hpp"
#include "json.hpp"
#include "ringfiber/errors.hpp"
#include "ringfiber/units.hpp"

namespace ringfiber {

SellmeierModel::SellmeierModel(std::string name, std::vector<SellmeierTerm> terms, double lambda_min_um,
                               double lambda_max_um)
    : name_(std::move(name)), terms_(std::move(terms)), lambda_min_(lambda_min_um), lambda_max_(lambda_max_um) {
  if (terms_.empty()) throw ConfigError("Sellmeier model '" + name_ + "' has no terms");
  if (!(lambda_min_ > 0.0 && lambda_max_ > lambda_min_)) {
    throw ConfigError("Sellmeier model '" + name_ + "' has an invalid wavelength range");
  }
  for (const auto& t : terms_) {
    if (t.lambda_um > lambda_min_ && t.lambda_um < lambda_max_) {
      throw ConfigError("Sellmeier model '" + name_ + "' has a resonance inside its valid range");
    }
  }
}

double SellmeierModel::index_squared(double lambda_um) const {
  if (!in_range(lambda_um)) {
    std::ostringstream msg;
    msg << "wavelength " << lambda_um << " um outside the range [" << lambda_min_ << ", " << lambda_max_
        << "] of model '" << name_ << "'";
    throw RangeError(msg.str());
  }
  const double l2 = lambda_um * lambda_um;
  double n2 = 1.0;
  for (const auto& t : terms_) n2 += t.b * l2 / (l2 - t.lambda_um * t.lambda_um);
  return n2;
}

double SellmeierModel::index(double lambda_um) const { return std::sqrt(index_squared(lambda_um)); }

SellmeierModel SellmeierModel::mix(const SellmeierModel& base, const SellmeierModel& dopant, double mol_fraction,
                                   std::string name) {
  if (base.terms_.size() != dopant.terms_.size()) {
    throw ConfigError("cannot mix '" + base.name_ + "' and '" + dopant.name_ + "': term counts differ");
  }
  if (!(mol_fraction >= 0.0 && mol_fraction <= 1.0)) throw ConfigError("mole fraction must lie in [0, 1]");
  std::vector<SellmeierTerm> terms;
  for (std::size_t j = 0; j < base.terms_.size(); ++j) {
    const auto& a = base.terms_[j];
    const auto& b = dopant.terms_[j];
    terms.push_back({a.b + mol_fraction * (b.b - a.b), a.lambda_um + mol_fraction * (b.lambda_um - a.lambda_um)});
  }
  return SellmeierModel(std::move(name), std::move(terms), std::max(base.lambda_min_, dopant.lambda_min_),
                        std::min(base.lambda_max_, dopant.lambda_max_));
}

double index(const SellmeierModel& model, double lambda_um) { return model.index(lambda_um); }

RegionStack::RegionStack(SellmeierModel inner, SellmeierModel core, SellmeierModel outer, double doping_mol_fraction)
    : inner_(std::move(inner)), core_(std::move(core)), outer_(std::move(outer)), doping_(doping_mol_fraction) {
  const auto [lo, hi] = valid_range();
  if (!(hi > lo)) throw ConfigError("region models have no common wavelength range");
  // Guiding requires the ring to be the high-index layer; probe the range.
  for (int i = 0; i <= 64; ++i) {
    const double lambda = lo + (hi - lo) * i / 64.0;
    if (!(core_.index(lambda) > std::max(inner_.index(lambda), outer_.index(lambda)))) {
      throw ConfigError("core index does not exceed cladding index at " + std::to_string(lambda) + " um");
    }
  }
}

const SellmeierModel& RegionStack::model(int region) const {
  switch (region) {
    case 0: return inner_;
    case 1: return core_;
    case 2: return outer_;
  }
  throw DomainError("region index must be 0, 1 or 2");
}

double RegionStack::index_at_wavelength(int region, double lambda_um) const { return model(region).index(lambda_um); }

double RegionStack::permittivity_at_wavelength(int region, double lambda_um) const {
  return model(region).index_squared(lambda_um);
}

double RegionStack::permittivity(int region, double omega) const {
  return permittivity_at_wavelength(region, wavelength_um_from_omega(omega));
}

double RegionStack::cladding_index(double lambda_um) const {
  return std::max(inner_.index(lambda_um), outer_.index(lambda_um));
}

double RegionStack::core_index(double lambda_um) const { return core_.index(lambda_um); }

std::pair<double, double> RegionStack::valid_range() const {
  double lo = 0.0;
  double hi = 1e300;
  for (const auto* m : {&inner_, &core_, &outer_}) {
    lo = std::max(lo, m->valid_range().first);
    hi = std::min(hi, m->valid_range().second);
  }
  return {lo, hi};
}

MaterialLibrary MaterialLibrary::from_json_text(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("material file is not valid JSON: ") + e.what());
  }
  MaterialLibrary lib;
  try {
    lib.version_ = doc.at("version").get<std::string>();
    const auto& models = doc.at("models");
    // Plain models first; mixtures refer to them by name.
    for (const auto& [name, entry] : models.items()) {
      if (entry.contains("mix")) continue;
      std::vector<SellmeierTerm> terms;
      for (const auto& t : entry.at("terms")) terms.push_back({t.at("B").get<double>(), t.at("lambda_um").get<double>()});
      const auto& range = entry.at("valid_range_um");
      lib.models_.emplace(name, SellmeierModel(name, terms, range.at(0).get<double>(), range.at(1).get<double>()));
      lib.doping_[name] = 0.0;
    }
    for (const auto& [name, entry] : models.items()) {
      if (!entry.contains("mix")) continue;
      const auto& mix = entry.at("mix");
      const std::string base = mix.at("base").get<std::string>();
      const std::string dopant = mix.at("dopant").get<std::string>();
      if (!lib.has_model(base) || !lib.has_model(dopant)) {
        throw ConfigError("mixture '" + name + "' refers to an unknown model");
      }
      const double x = mix.at("mol_fraction").get<double>();
      lib.models_.emplace(name, SellmeierModel::mix(lib.models_.at(base), lib.models_.at(dopant), x, name));
      lib.doping_[name] = x;
    }
    const auto& stack = doc.at("stack");
    lib.inner_ = stack.at("inner").get<std::string>();
    lib.core_ = stack.at("core").get<std::string>();
    lib.outer_ = stack.at("outer").get<std::string>();
    for (const auto* n : {&lib.inner_, &lib.core_, &lib.outer_}) {
      if (!lib.has_model(*n)) throw ConfigError("stack refers to unknown model '" + *n + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed material file: ") + e.what());
  }
  return lib;
}

MaterialLibrary MaterialLibrary::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open material file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

MaterialLibrary MaterialLibrary::builtin() { return from_json_text(detail::kEmbeddedMaterials); }

const SellmeierModel& MaterialLibrary::model(const std::string& name) const {
  auto it = models_.find(name);
  if (it == models_.end()) throw ConfigError("unknown material model '" + name + "'");
  return it->second;
}

RegionStack MaterialLibrary::default_stack() const {
  return RegionStack(model(inner_), model(core_), model(outer_), doping_.at(core_));
}

}  // namespace ringfiber
