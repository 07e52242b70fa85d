// Copyright 2026 The linfel Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     https://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "linfel/cli_io.hpp"
#include "linfel/errors.hpp"
#include "linfel/version.hpp"

namespace {

int run_mode(linfel::RunMode mode, const std::string& config_path, const std::string& out,
             const std::optional<std::uint64_t>& seed) {
  linfel::RunConfig config = linfel::load_config(config_path);
  if (config.mode != mode) {
    std::cerr << "linfel: config mode '" << linfel::to_string(config.mode) << "' overridden by subcommand '"
              << linfel::to_string(mode) << "'\n";
    config.mode = mode;
  }
  if (seed) config.seed = *seed;
  std::filesystem::path dir = out;
  if (dir.empty()) dir = config.output.empty() ? std::filesystem::path("linfel-out") : config.base_dir / config.output;
  const linfel::RunArtifact art = linfel::run(config, dir);
  if (art.exit_code != linfel::kExitOk) std::cerr << "linfel: " << art.message << "\n";
  std::cout << (dir / "report.yaml").string() << "\n";
  return art.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"L-infinity variational solver and Euler-Lagrange certifier"};
  app.set_version_flag("--version", linfel::kVersion);
  app.require_subcommand(1);

  std::string config_path, out;
  std::optional<std::uint64_t> seed;
  const std::pair<const char*, linfel::RunMode> modes[] = {
      {"solve", linfel::RunMode::kSolve},
      {"certify", linfel::RunMode::kCertify},
      {"diagnose", linfel::RunMode::kDiagnose},
      {"oracle1d", linfel::RunMode::kOracle1D}};
  const char* help[] = {"p-continuation toward the L-infinity minimiser",
                        "continuation with the anchored penalty and a full certificate",
                        "solve plus Monte-Carlo, Aronsson and boundary-corrector diagnostics",
                        "closed-form one-dimensional bang-bang solution"};
  std::vector<std::pair<CLI::App*, linfel::RunMode>> subs;
  for (std::size_t i = 0; i < 4; ++i) {
    CLI::App* sub = app.add_subcommand(modes[i].first, help[i]);
    sub->add_option("--config", config_path, "YAML run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "master seed, overrides the config");
    subs.emplace_back(sub, modes[i].second);
  }
  std::string dir_a, dir_b;
  double tolerance = 0.0;
  CLI::App* cmp = app.add_subcommand("compare", "diff two artifact directories");
  cmp->add_option("a", dir_a, "first artifact directory")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("b", dir_b, "second artifact directory")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("--tolerance", tolerance, "largest accepted distance");
  cmp->add_option("--out", out, "write the diff report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : linfel::kExitConfig;
  }

  try {
    for (const auto& [sub, mode] : subs) {
      if (sub->parsed()) return run_mode(mode, config_path, out, seed);
    }
    const linfel::CompareReport rep = linfel::compare(dir_a, dir_b, tolerance);
    const std::string text = linfel::to_yaml(rep);
    if (!out.empty()) linfel::write_text(out, text);
    std::cout << text;
    return rep.pass() ? linfel::kExitOk : linfel::kExitFailure;
  } catch (const linfel::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return linfel::kExitConfig;
  } catch (const linfel::InvariantError& e) {
    std::cerr << "linfel: invariant violated: " << e.what() << "\n";
    return linfel::kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "linfel: " << e.what() << "\n";
    return linfel::kExitFailure;
  }
}
