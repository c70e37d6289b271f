/*
 * Copyright 2026 The maxlin Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// maxlin command-line front end. See README.md for usage.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "maxlin/cli.hpp"

int main(int argc, char** argv) {
    using namespace maxlin;
    cli::RunConfig config;
    std::string norm = "inf";
    std::string rule = "maxlin";
    std::string format;
    double eps = 0.0;

    CLI::App app{"Robustness certification of CNNs with MaxPool layers"};
    app.require_subcommand(1);

    const std::map<std::string, std::string> norms{{"1", "1"}, {"2", "2"}, {"inf", "inf"}};
    const std::map<std::string, std::string> rules{{"maxlin", "maxlin"}, {"deeppoly", "deeppoly"}, {"interval", "interval"}};
    const std::map<std::string, std::string> formats{{"json", "json"}, {"csv", "csv"}};

    auto add_common = [&](CLI::App* sub, bool needs_inputs) {
        sub->add_option("--model", config.model_path, "Model JSON")->required();
        if (needs_inputs) sub->add_option("--inputs", config.inputs_path, "Input file (JSON or CSV)")->required();
        sub->add_option("--norm", norm, "Perturbation norm {1,2,inf}")->check(CLI::IsMember(norms));
        sub->add_option("--maxpool-rule", rule, "MaxPool relaxation {maxlin,deeppoly,interval}")
            ->check(CLI::IsMember(rules));
        sub->add_option("--workers", config.workers, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", config.seed, "Random seed");
        sub->add_option("--out", config.out_path, "Report path (default stdout)");
        sub->add_option("--format", format, "Report format {json,csv}")->check(CLI::IsMember(formats));
        sub->add_option("--unsafe-slack", config.unsafe_slack,
                        "Test only: add this to every lower bound (breaks soundness)");
    };

    auto* verify = app.add_subcommand("verify", "Fixed-radius verification (or binary search with --search)");
    add_common(verify, true);
    auto* eps_opt = verify->add_option("--eps", eps, "Perturbation radius")->check(CLI::NonNegativeNumber);
    auto* search_flag = verify->add_flag("--search", config.search, "Binary search for the certified radius");
    eps_opt->excludes(search_flag);
    verify->add_option("--eps0", config.eps0, "Initial search radius")->check(CLI::PositiveNumber);

    auto* search = app.add_subcommand("search", "Binary search for the certified radius of each query");
    add_common(search, true);
    search->add_option("--eps0", config.eps0, "Initial search radius")->check(CLI::PositiveNumber);

    auto* volume = app.add_subcommand("volume-bench", "Activation+MaxPool block volume benchmark");
    volume->add_option("--trials", config.trials, "Trials per configuration");
    volume->add_option("--seed", config.seed, "Random seed");
    volume->add_option("--out", config.out_path, "Report path (default stdout)");
    volume->add_option("--format", format, "Report format {json,csv}")->check(CLI::IsMember(formats));

    auto* soundness = app.add_subcommand("check-soundness", "Search, then sample each certified ball");
    add_common(soundness, true);
    soundness->add_option("--samples", config.samples, "Samples per query");
    soundness->add_option("--eps0", config.eps0, "Initial search radius")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kExitError;
    }

    CLI::App* chosen = app.get_subcommands().front();
    config.subcommand = chosen->get_name();
    config.norm = parse_norm(norm);
    config.rule = parse_pool_rule(rule);
    if (format.empty()) format = config.subcommand == "volume-bench" ? "csv" : "json";
    config.format = format == "csv" ? cli::Format::Csv : cli::Format::Json;

    if (config.subcommand == "verify") {
        if (config.search) {
            config.subcommand = "search";
        } else if (eps_opt->count() == 0) {
            std::cerr << "maxlin verify: one of --eps or --search is required\n";
            return cli::kExitError;
        } else {
            config.eps = eps;
        }
    }
    if (config.subcommand == "search") config.search = true;
    return cli::run(config);
}
