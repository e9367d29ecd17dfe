#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "rdelab/parallel.hpp"

using namespace rdelab;
using namespace rdelab::cli;

int main(int argc, char** argv) {
    if (const char* t = std::getenv("RDE_LAB_THREADS")) {
        const int n = std::atoi(t);
        if (n < 1) {
            std::cerr << "RDE_LAB_THREADS must be a positive integer\n";
            return kConfigError;
        }
        set_threads(n);
    }

    CLI::App app{"rde-lab: recursive distributional equations, cut-off schedules and endogeny checks"};
    app.require_subcommand(1);

    struct Slot {
        std::string config;
        std::vector<std::string> sets;
        std::map<std::string, std::string> flags;
        std::map<std::string, CLI::Option*> opts;
    };
    std::map<std::string, Slot> slots;
    std::map<std::string, CLI::App*> subs;
    for (const auto& c : commands()) {
        auto* sub = app.add_subcommand(c.name, c.help);
        // fields such as 'h' would clash with the short help flag
        sub->set_help_flag("--help", "print this help and exit");
        auto& s = slots[c.name];
        sub->add_option("--config", s.config, "TOML config file")->check(CLI::ExistingFile);
        sub->add_option("--set", s.sets, "override key=value (repeatable)");
        for (const auto& f : c.schema.fields())
            s.opts[f.name] = sub->add_option("--" + f.name, s.flags[f.name], f.help);
        subs[c.name] = sub;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kPass : kConfigError;
    }

    for (const auto& c : commands()) {
        if (!subs[c.name]->parsed()) continue;
        auto& s = slots[c.name];
        std::vector<std::pair<std::string, std::string>> given;
        for (const auto& f : c.schema.fields())
            if (s.opts[f.name]->count() > 0) given.emplace_back(f.name, s.flags[f.name]);
        try {
            Json cfg = c.schema.resolve(s.config, given, s.sets);
            return c.run(cfg);
        } catch (const ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return kConfigError;
        } catch (const std::invalid_argument& e) {
            std::cerr << "invalid parameter: " << e.what() << "\n";
            return kConfigError;
        } catch (const std::exception& e) {
            // NotConverged, CertificationFailed, SearchFailed and friends
            std::cerr << c.name << " failed: " << e.what() << "\n";
            return kNumericFailure;
        }
    }
    return kConfigError;
}
