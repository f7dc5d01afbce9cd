// Acceptance suite: one PASS/FAIL line per criterion A1..A16.
//
//   acceptance [--only A<k>] [--threads N] [--configs DIR]
//
// A1..A14 run the relevant parts of the shipped configs and collect the checks tagged
// with the criterion. A15 runs the structure validators directly; A16 replays smoke-size
// runs of every experiment at several thread counts and from their manifests.

#include "elab/generic_core.hpp"
#include "elab/harness/config.hpp"
#include "elab/harness/experiments.hpp"
#include "elab/harness/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace elab;
using namespace elab::harness;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string summary;
};

struct Criterion {
    std::string id;
    std::string experiment;  // empty for criteria evaluated here
    std::string parts;
};

const std::vector<Criterion> kCriteria = {
    {"A1", "core-example", "drift"},      {"A2", "core-example", "density"},
    {"A3", "core-example", "beta"},       {"A4", "heat-bath", "energy"},
    {"A5", "heat-bath", "entropy"},       {"A6", "kernel-noise", "kernel"},
    {"A7", "kernel-noise", "noise"},      {"A8", "heat-bath", "sde"},
    {"A9", "oscillator-sde", "energy"},   {"A10", "oscillator-sde", "gibbs"},
    {"A11", "particles", "anisotropy"},   {"A12", "sanov", "stirling,tail"},
    {"A13", "rate-functional", "all"},    {"A14", "pde", "fp,refine"},
    {"A15", "", ""},                      {"A16", "", ""},
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ExperimentConfig shipped_config(const fs::path& dir, const std::string& name) {
    const fs::path p = dir / (name + ".ini");
    return fs::exists(p) ? parse_config_file(p.string()) : default_config(name);
}

Outcome from_experiment(const Criterion& c, const fs::path& config_dir, const fs::path& work, unsigned threads) {
    ExperimentConfig cfg = shipped_config(config_dir, c.experiment);
    cfg.set("run.parts", c.parts);
    cfg.threads = threads;
    const fs::path out = work / c.id;
    fs::remove_all(out);
    const Manifest m = run(cfg, out);
    Outcome o{true, ""};
    std::size_t n = 0;
    for (const auto& ch : m.checks) {
        if (ch.criterion != c.id || ch.informational) continue;
        ++n;
        o.pass = o.pass && ch.pass;
        if (!o.summary.empty()) o.summary += "; ";
        o.summary += ch.name + " " + num(ch.value) + (ch.pass ? " ok" : " FAILED") + " (threshold " +
                     num(ch.threshold) + ")";
    }
    if (n == 0) return {false, "no checks recorded"};
    o.summary += "; " + num(m.wall_seconds) + " s";
    return o;
}

Outcome structure_validators() {
    Outcome o{true, ""};
    double worst_fd = 0, worst_jacobi = 0;
    std::string failed;
    std::uint64_t seed = 1;
    for (const auto& s : shipped_systems()) {
        const auto states = gaussian_cloud(s.system.d, 100, seed++);
        const StructureReport r = check_structure(s.system, states, 1e-10);
        worst_fd = std::max(worst_fd, r.fluctuation_dissipation);
        const double jac = check_jacobi(s.system.J, states);
        worst_jacobi = std::max(worst_jacobi, jac);
        if (!r.pass || r.fluctuation_dissipation > 1e-10 || jac > 1e-8) {
            o.pass = false;
            failed += (failed.empty() ? "" : ", ") + s.name;
        }
    }
    o.summary = std::to_string(shipped_systems().size()) + " systems at 100 states; max |Sigma Sigma^T - K| " +
                num(worst_fd) + " (threshold 1e-10); max Jacobi residual " + num(worst_jacobi) + " (threshold 1e-8)";
    if (!failed.empty()) o.summary += "; failing: " + failed;
    return o;
}

Outcome determinism(const fs::path& work) {
    Outcome o{true, ""};
    std::size_t files = 0;
    std::string bad;
    for (const auto& e : experiments()) {
        ExperimentConfig cfg = default_config(e.name);
        for (const auto& [k, v] : e.smoke) cfg.set(k, v);
        cfg.seed = 20240611;
        const fs::path base = work / "A16" / e.name;
        fs::remove_all(base);
        cfg.threads = 1;
        const Manifest ref = run(cfg, base / "t1");
        cfg.threads = 3;
        run(cfg, base / "t3");
        ExperimentConfig replay = load_config((base / "t1" / "manifest.json").string());
        replay.threads = 2;
        run(replay, base / "replay");
        for (const auto& a : ref.artifacts) {
            if (!a.ends_with(".csv")) continue;
            ++files;
            const std::string want = slurp(base / "t1" / a);
            if (want != slurp(base / "t3" / a) || want != slurp(base / "replay" / a)) {
                o.pass = false;
                bad += (bad.empty() ? "" : ", ") + e.name + "/" + a;
            }
        }
    }
    o.summary = std::to_string(files) + " CSVs compared across threads 1, 3 and a manifest replay at 2";
    if (!bad.empty()) o.summary += "; differing: " + bad;
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria A1..A16"};
    std::string only;
    unsigned threads = 0;
    std::string config_dir = ELAB_CONFIG_DIR;
    std::string work = ELAB_WORK_DIR;
    app.add_option("--only", only, "run a single criterion, e.g. A7");
    app.add_option("--threads", threads, "worker threads for the experiment runs (0 = all cores)");
    app.add_option("--configs", config_dir, "directory of shipped experiment configs");
    app.add_option("--work", work, "scratch directory for outputs");
    CLI11_PARSE(app, argc, argv);

    bool all_pass = true, matched = false;
    for (const auto& c : kCriteria) {
        if (!only.empty() && c.id != only) continue;
        matched = true;
        Outcome o;
        try {
            if (c.id == "A15")
                o = structure_validators();
            else if (c.id == "A16")
                o = determinism(work);
            else
                o = from_experiment(c, config_dir, work, threads);
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        all_pass = all_pass && o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << c.id << "  " << o.summary << std::endl;
    }
    if (!matched) {
        std::cerr << "unknown criterion '" << only << "'\n";
        return 2;
    }
    return all_pass ? 0 : 1;
}
