// Copyright 2026 The qvna Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// qvna: batch front end. One subcommand per experiment; see README.md.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qvna/cli.hpp"

namespace {

struct Common {
  std::string config;
  qvna::Overrides over;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "run configuration (JSON, comments allowed)")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", c.over.seed, "RNG seed, overrides the config");
  sub->add_option("--out", c.over.out, "output directory, overrides the config");
  sub->add_option("--workers", c.over.workers, "concurrent sweep points")->check(CLI::PositiveNumber);
  sub->add_option("--shots", c.over.shots, "shots per tomography axis (0 = exact expectations)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qvna: transfer-function measurement with a simulated qubit"};
  app.set_version_flag("--version", std::string(QVNA_VERSION));
  app.require_subcommand(1);

  using Command = int (*)(const qvna::RunConfig&);
  const std::pair<const char*, std::pair<const char*, Command>> table[] = {
      {"trace", {"Rabi scan, dressed scan and second-frame data at one frequency", qvna::cmd_trace}},
      {"point", {"one transfer-function point", qvna::cmd_point}},
      {"sweep", {"transfer function over the frequency list", qvna::cmd_sweep}},
      {"deembed", {"element response from baseline and element sweeps", qvna::cmd_deembed}},
      {"phase-scan", {"extracted against programmed phase", qvna::cmd_phase_scan}},
  };
  Common common;
  Command chosen = nullptr;
  for (const auto& [name, entry] : table) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    add_common(sub, common);
    sub->callback([&chosen, cmd = entry.second] { chosen = cmd; });
  }
  CLI11_PARSE(app, argc, argv);

  try {
    qvna::RunConfig cfg = qvna::load_config(common.config);
    qvna::apply(cfg, common.over);
    return chosen(cfg);
  } catch (const qvna::ValidationError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return qvna::kExitInvalid;
  } catch (const qvna::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return qvna::kExitPointFailures;
  }
}
