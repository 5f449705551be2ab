// Command-line front end: loads a scenario (file or built-in preset), runs
// one command and writes its CSV files.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <string>

#include "ringfiber/errors.hpp"
#include "ringfiber/parallel.hpp"
#include "ringfiber/scenario.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

int fail(int code, const std::string& message) {
  std::fprintf(stderr, "ringfiber: %s\n", message.c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Photon-pair generation in a poled ring fiber"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string preset;
  std::string out_dir = "out";
  int threads = 0;
  long long seed = 0;
  app.add_option("--config", config_path, "Scenario file (JSON)")->envname("RINGFIBER_CONFIG");
  app.add_option("--preset", preset, "Built-in scenario")->envname("RINGFIBER_PRESET");
  app.add_option("--out", out_dir, "Output directory")->envname("RINGFIBER_OUT");
  app.add_option("--threads", threads, "Worker threads, 0 for all cores")
      ->envname("RINGFIBER_THREADS")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "Reserved; no stage is stochastic")->envname("RINGFIBER_SEED");
  app.fallthrough();

  const std::map<std::string, std::string> blurbs{
      {"modes", "Guided-mode census"},
      {"dispersion", "Effective index against wavelength"},
      {"oam", "Angular-harmonic content of each mode"},
      {"mismatch", "Phase mismatch and grating period"},
      {"spdc-spectrum", "Pair spectra, rates and filtering"},
      {"joint-spectrum", "Joint spectral amplitude and cuts"},
      {"temporal", "Conditional idler arrival time"},
      {"schmidt", "Frequency and angular Schmidt numbers"},
      {"chsh", "CHSH value under white noise"}};
  for (const auto& name : ringfiber::command_names()) {
    const auto it = blurbs.find(name);
    app.add_subcommand(name, it == blurbs.end() ? name : it->second);
  }
  app.add_subcommand("presets", "List the built-in scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  if (command == "presets") {
    for (const auto& name : ringfiber::ScenarioConfig::preset_names()) std::printf("%s\n", name.c_str());
    return 0;
  }

  try {
    if (config_path.empty() == preset.empty()) throw ringfiber::ConfigError("give exactly one of --config and --preset");
    auto config = config_path.empty() ? ringfiber::ScenarioConfig::preset(preset)
                                      : ringfiber::ScenarioConfig::from_file(config_path);
    if (threads > 0) ringfiber::set_default_threads(threads);
    const ringfiber::Scenario scenario(std::move(config), threads);
    for (const auto& path : ringfiber::run_command(command, scenario, out_dir)) std::printf("%s\n", path.c_str());
    return 0;
  } catch (const ringfiber::ConfigError& e) {
    return fail(kExitConfig, e.what());
  } catch (const std::exception& e) {
    return fail(kExitNumeric, e.what());
  }
}
