#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace ringfiber {

struct SellmeierTerm {
  double b;          // oscillator strength
  double lambda_um;  // resonance wavelength
};

// n^2(lambda) = 1 + sum B_j lambda^2 / (lambda^2 - lambda_j^2), defined only on
// the fitted wavelength range.
class SellmeierModel {
 public:
  SellmeierModel() = default;
  SellmeierModel(std::string name, std::vector<SellmeierTerm> terms, double lambda_min_um, double lambda_max_um);

  const std::string& name() const { return name_; }
  const std::vector<SellmeierTerm>& terms() const { return terms_; }
  std::pair<double, double> valid_range() const { return {lambda_min_, lambda_max_}; }
  bool in_range(double lambda_um) const { return lambda_um >= lambda_min_ && lambda_um <= lambda_max_; }

  double index_squared(double lambda_um) const;
  double index(double lambda_um) const;

  // Linear interpolation of every (B, lambda) pair; both models must have the
  // same number of terms. The valid range is the intersection.
  static SellmeierModel mix(const SellmeierModel& base, const SellmeierModel& dopant, double mol_fraction,
                            std::string name);

 private:
  std::string name_;
  std::vector<SellmeierTerm> terms_;
  double lambda_min_ = 0.0;
  double lambda_max_ = 0.0;
};

double index(const SellmeierModel& model, double lambda_um);

// Three radial regions: 0 inner cladding, 1 ring core, 2 outer cladding.
class RegionStack {
 public:
  RegionStack(SellmeierModel inner, SellmeierModel core, SellmeierModel outer, double doping_mol_fraction);

  const SellmeierModel& model(int region) const;
  double doping_mol_fraction() const { return doping_; }

  double index_at_wavelength(int region, double lambda_um) const;
  double permittivity_at_wavelength(int region, double lambda_um) const;
  double permittivity(int region, double omega) const;

  double cladding_index(double lambda_um) const;
  double core_index(double lambda_um) const;

  // Common range over which all three models are valid.
  std::pair<double, double> valid_range() const;

 private:
  SellmeierModel inner_, core_, outer_;
  double doping_;
};

class MaterialLibrary {
 public:
  static MaterialLibrary from_json_text(const std::string& text);
  static MaterialLibrary from_file(const std::string& path);
  // Coefficients compiled into the library from data/materials.json.
  static MaterialLibrary builtin();

  const std::string& version() const { return version_; }
  const SellmeierModel& model(const std::string& name) const;
  bool has_model(const std::string& name) const { return models_.count(name) != 0; }

  // Stack named in the file's "stack" section.
  RegionStack default_stack() const;

 private:
  std::string version_;
  std::map<std::string, SellmeierModel> models_;
  std::map<std::string, double> doping_;
  std::string inner_, core_, outer_;
};

}  // namespace ringfiber
