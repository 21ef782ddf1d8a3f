//
// Copyright 2026 The pdpreg Authors
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
//

// pdpreg <subcommand> --config <path> [--out <dir>] [--seed <u64>]

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "pdpreg/runner.h"

int main(int argc, char** argv) {
  CLI::App app{"Noise-injection and regularization experiments for private SGD"};
  app.set_version_flag("--version", std::string("pdpreg ") + pdpreg::kVersion);
  app.require_subcommand(1);

  pdpreg::RunOptions options;
  std::string out_dir;
  uint64_t seed = 0;
  const struct {
    const char* name;
    const char* help;
  } commands[] = {
      {"train", "train a model under a noise/regularization mechanism"},
      {"verify", "run every identity and oracle check"},
      {"attack", "gradient-inversion and membership-inference sweep"},
      {"moments", "Gaussian moment and product-density checks"},
      {"report", "aggregate result CSVs into a summary table"},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", options.config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides $PDPREG_OUT_DIR)");
    sub->add_option("--seed", seed, "override the top-level seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << nlohmann::json{{"error", "usage_error"}, {"message", e.what()}}.dump()
              << '\n';
    return pdpreg::kExitConfig;
  }

  for (CLI::App* sub : app.get_subcommands()) {
    options.subcommand = sub->get_name();
    if (sub->count("--out") > 0) options.out_dir = out_dir;
    if (sub->count("--seed") > 0) options.seed = seed;
  }
  return pdpreg::Run(options, std::cout, std::cerr);
}
