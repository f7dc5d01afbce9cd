#include "elab/harness/config.hpp"
#include "elab/harness/experiments.hpp"
#include "elab/types.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

using namespace elab::harness;

namespace {

const char* type_name(ParamType t) {
    switch (t) {
        case ParamType::Int: return "int";
        case ParamType::UInt: return "uint";
        case ParamType::Double: return "double";
        case ParamType::Bool: return "bool";
        case ParamType::String: return "string";
        case ParamType::DoubleList: return "double list";
        case ParamType::IntList: return "int list";
        case ParamType::StringList: return "string list";
    }
    return "?";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entropy and GENERIC experiments"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "run an experiment from an INI config or a result manifest");
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    run_cmd->add_option("--config", config_path, "config file (.ini) or manifest.json")->required();
    run_cmd->add_option("--out", out_dir, "output directory (overrides the config)");
    run_cmd->add_option("--seed", seed, "seed (overrides the config)");
    run_cmd->add_option("--threads", threads, "worker threads, 0 for all cores (overrides the config)");

    auto* list_cmd = app.add_subcommand("list", "list experiments");
    bool verbose = false;
    list_cmd->add_flag("-v,--verbose", verbose, "show parts and parameters");

    auto* defaults_cmd = app.add_subcommand("defaults", "print the default config of an experiment");
    std::string defaults_name;
    defaults_cmd->add_option("experiment", defaults_name)->required();
    bool smoke = false;
    defaults_cmd->add_flag("--smoke", smoke, "apply the experiment's reduced-size overrides");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*list_cmd) {
            for (const auto& e : experiments()) {
                std::cout << e.name << "  " << e.description << "\n";
                if (!verbose) continue;
                std::cout << "  parts:";
                for (const auto& p : e.parts) std::cout << ' ' << p;
                std::cout << "\n";
                for (const auto& s : e.schema)
                    std::cout << "  " << s.key << " (" << type_name(s.type) << ", default " << s.default_value
                              << "): " << s.doc << "\n";
            }
            return 0;
        }
        if (*defaults_cmd) {
            ExperimentConfig cfg = default_config(defaults_name);
            if (smoke)
                for (const auto& [k, v] : experiment(defaults_name).smoke) cfg.set(k, v);
            std::cout << serialize_config(cfg);
            return 0;
        }

        ExperimentConfig cfg = load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (threads) cfg.threads = *threads;
        const Manifest m = run(cfg, out_dir);
        for (const auto& c : m.checks) {
            const char* tag = c.informational ? "INFO" : (c.pass ? "PASS" : "FAIL");
            std::cout << tag << "  " << (c.criterion.empty() ? "-" : c.criterion) << "  " << c.name << ": "
                      << num(c.value);
            if (!c.informational) std::cout << " (threshold " << num(c.threshold) << ")";
            if (!c.detail.empty()) std::cout << "  " << c.detail;
            std::cout << "\n";
        }
        std::cout << m.experiment << ": " << (m.all_pass() ? "all checks pass" : "some checks fail") << " in "
                  << num(m.wall_seconds) << " s, outputs in " << m.config.out_dir << "\n";
        return m.all_pass() ? 0 : 1;
    } catch (const elab::ValidationError& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
