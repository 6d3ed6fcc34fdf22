// Batch runner: pathctl <experiment> --config FILE [--seed N] [--out DIR] [--override key=value]...
#include "pathctl/pathctl.h"

#include "CLI11.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

enum Exit { kOk = 0, kInternal = 1, kConfig = 2, kViolation = 3, kPropertyFailure = 4 };

int exit_code(pc_status s) {
  switch (s) {
    case PC_OK:
      return kOk;
    case PC_ERR_CONFIG:
    case PC_ERR_INVALID_ARGUMENT:
    case PC_ERR_DIMENSION:
    case PC_ERR_OUT_OF_RANGE:
      return kConfig;
    case PC_ERR_CAP_EXCEEDED:
    case PC_ERR_CONTRACT:
    case PC_ERR_DIVERGENCE:
    case PC_ERR_NON_FINITE:
      return kViolation;
    default:
      return kInternal;
  }
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

bool write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  return static_cast<bool>(out);
}

struct Options {
  std::string config;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;
};

int run(const std::string& name, const Options& opt, bool has_seed) {
  std::string text;
  if (!read_file(opt.config, text)) {
    std::cerr << "error: cannot read config file '" << opt.config << "'\n";
    return kConfig;
  }
  std::vector<std::string> overrides = opt.overrides;
  if (has_seed) {
    const std::string preset = pc_experiment_preset(name.c_str());
    if (preset.find("\"seed\"") == std::string::npos) {
      std::cerr << "error: --seed: " << name << " is deterministic and takes no seed\n";
      return kConfig;
    }
    overrides.push_back("seed=" + std::to_string(opt.seed));
  }
  std::vector<const char*> argv;
  for (const auto& o : overrides) argv.push_back(o.c_str());

  pc_report* report = nullptr;
  const pc_status s = pc_experiment_run(name.c_str(), text.c_str(), argv.data(), argv.size(), &report);
  if (s != PC_OK) {
    std::cerr << "error: " << pc_last_error() << "\n";
    return exit_code(s);
  }

  std::error_code ec;
  std::filesystem::create_directories(opt.out_dir, ec);
  const std::filesystem::path dir(opt.out_dir);
  const bool ok = write_file(dir / (name + ".csv"), pc_report_csv(report)) &&
                  write_file(dir / (name + "_summary.txt"), pc_report_summary(report));
  std::cout << pc_report_summary(report);
  const bool passed = pc_report_passed(report) != 0;
  pc_report_free(report);
  if (!ok) {
    std::cerr << "error: cannot write results to '" << opt.out_dir << "'\n";
    return kInternal;
  }
  return passed ? kOk : kPropertyFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Path-dependent stochastic control experiments. Each subcommand reads a JSON config whose keys "
               "default to the preset shown in its --help; unknown keys are rejected."};
  app.require_subcommand(1);
  app.footer(
      "Exit status: 0 success, 2 config error, 3 cap or contract violation, 4 property check failed.\n"
      "Outputs: <out>/<experiment>.csv and <out>/<experiment>_summary.txt.");

  Options opt;
  std::string chosen;
  bool has_seed = false;
  for (std::size_t i = 0; i < pc_experiment_count(); ++i) {
    const std::string name = pc_experiment_name(i);
    CLI::App* sub = app.add_subcommand(name, pc_experiment_description(name.c_str()));
    sub->footer(std::string("Preset: ") + pc_experiment_preset(name.c_str()));
    sub->add_option("--config", opt.config, "JSON config file ({} runs the preset)")->required();
    sub->add_option("--seed", opt.seed, "Overrides the config seed")->each([&](const std::string&) { has_seed = true; });
    sub->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--override", opt.overrides, "dotted.key=value applied to the config (repeatable)");
    sub->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  return run(chosen, opt, has_seed);
}
