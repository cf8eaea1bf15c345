#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "promptforge/cli.hpp"
#include "promptforge/errors.hpp"

namespace pf = promptforge;

int main(int argc, char **argv) {
    CLI::App app{"Discrete prompt search for a frozen sequence-to-sequence recommender"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::int64_t> seed;
    std::optional<std::string> out_dir;

    using Command = void (*)(const pf::RunConfig &, std::ostream &);
    const std::map<std::string, std::pair<Command, std::string>> commands = {
        {"synth", {pf::cmd_synth, "Generate the synthetic interaction dataset"}},
        {"train-backbone", {pf::cmd_train_backbone, "Train the frozen backbone and write its weight file"}},
        {"search", {pf::cmd_search, "Search trigger tokens and write the best checkpoint"}},
        {"eval", {pf::cmd_eval, "Evaluate a checkpoint against manual and default prompts"}},
        {"ablate", {pf::cmd_ablate, "Run a structure or criterion ablation sweep"}},
    };
    for (const auto &[name, entry] : commands) {
        auto *sub = app.add_subcommand(name, entry.second);
        sub->add_option("--config", config_path, "Run configuration file")->required();
        sub->add_option("--seed", seed, "Master seed (overrides the config)");
        sub->add_option("--out", out_dir, "Output directory (overrides the config)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        pf::RunConfig config = pf::load_run_config(config_path);
        if (seed) {
            config.apply_seed(*seed);
        }
        if (out_dir) {
            config.out_dir = *out_dir;
        }
        for (const auto &[name, entry] : commands) {
            if (app.got_subcommand(name)) {
                entry.first(config, std::cout);
            }
        }
    } catch (const pf::ValidationError &e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 1;
    } catch (const pf::ParseError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
