// alef: Ricci-DeTurck flow laboratory on ALE backgrounds.
// Subcommands:
//   alef run --config <path> [--out <dir>]
//   alef scenario <name> [--out <dir>]
//   alef list-scenarios

#include "alef/scenario.hpp"

#include <cstdio>
#include <iostream>

using namespace alef;

namespace {

int usage() {
    std::cout << "usage:\n"
              << "  alef run --config <path> [--out <dir>]\n"
              << "  alef scenario <name> [--out <dir>]\n"
              << "  alef list-scenarios\n";
    return 2;
}

int execute(RunConfig cfg, const std::string& out_override) {
    if (!out_override.empty()) cfg.out_dir = out_override;
    Report rep = run_scenario(cfg);
    const std::string path = emit_report(rep, cfg.out_dir);
    std::cout << "summary: " << path << "\n";
    for (const auto& kv : rep.keys) std::cout << kv.first << " = " << kv.second << "\n";
    return rep.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (args.empty()) return usage();
    try {
        if (args[0] == "list-scenarios") {
            for (const auto& s : list_scenarios()) std::cout << s << "\n";
            return 0;
        }
        if (args[0] == "run") {
            std::string config_path, out;
            for (size_t i = 1; i < args.size(); ++i) {
                if (args[i] == "--config" && i + 1 < args.size()) config_path = args[++i];
                else if (args[i] == "--out" && i + 1 < args.size()) out = args[++i];
                else return usage();
            }
            if (config_path.empty()) return usage();
            return execute(load_config_file(config_path), out);
        }
        if (args[0] == "scenario") {
            if (args.size() < 2) return usage();
            std::string out;
            for (size_t i = 2; i < args.size(); ++i) {
                if (args[i] == "--out" && i + 1 < args.size()) out = args[++i];
                else return usage();
            }
            return execute(scenario_config(args[1]), out);
        }
        return usage();
    } catch (const InputError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
