#include "elab/harness/config.hpp"
#include "elab/harness/experiments.hpp"
#include "elab/harness/io.hpp"
#include "elab/types.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

using namespace elab;
using namespace elab::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("elab_harness_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ExperimentConfig smoke(const std::string& name) {
    ExperimentConfig cfg = default_config(name);
    for (const auto& [k, v] : experiment(name).smoke) cfg.set(k, v);
    cfg.seed = 17;
    return cfg;
}

int cli(const std::string& args) {
    const std::string cmd = std::string(ELAB_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("shortest round-trip doubles") {
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int k = 0; k < 2000; ++k) {
        const double v = u(g) * std::pow(10.0, static_cast<int>(g() % 40) - 20);
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1e-3) == "0.001");
}

TEST_CASE("config round trip for every experiment") {
    for (const auto& e : experiments()) {
        ExperimentConfig cfg = smoke(e.name);
        cfg.threads = 3;
        cfg.out_dir = "some/dir";
        const ExperimentConfig back = parse_config_text(serialize_config(cfg));
        CHECK(back == cfg);
        CHECK(serialize_config(back) == serialize_config(cfg));
    }
}

TEST_CASE("config parsing and canonical values") {
    const std::string text =
        "; comment\n[experiment]\nname = pde\nseed = 9\n\n[fp]\ndt = 5.0e-4\nsnapshots = 0.5, 1\n[run]\nparts = fp,heat\n";
    const ExperimentConfig cfg = parse_config_text(text);
    CHECK(cfg.seed == 9);
    CHECK(cfg.values.at("fp.dt") == format_double(5e-4));
    CHECK(cfg.get_doubles("fp.snapshots") == std::vector<double>{0.5, 1.0});
    CHECK(cfg.has_part("fp"));
    CHECK_FALSE(cfg.has_part("refine"));
    CHECK(cfg.get_uint("fp.cells") == 200);  // schema default

    CHECK_THROWS_AS(parse_config_text("[experiment]\nname = pde\n[fp]\nbogus = 1\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("[experiment]\nname = pde\n[fp]\ncells = -3\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("[experiment]\nname = pde\n[fp]\ndt = fast\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("[experiment]\nname = nope\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("[fp]\ndt = 1\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("[experiment]\nname = pde\n[run]\nparts = fp,bogus\n"), ValidationError);
    CHECK_THROWS_AS(cfg.get_double("fp.nothing"), ValidationError);
}

TEST_CASE("CSV writer and reader") {
    const fs::path dir = scratch("csv");
    fs::create_directories(dir);
    {
        CsvWriter w(dir / "a.csv", {"x", "name", "k"});
        w << 0.1 << std::string("a") << std::size_t{3};
        w.end_row();
        w << -2.5e-300 << "b" << 4;
        w.end_row();
        w << 1.0;
        CHECK_THROWS_AS(w.end_row(), std::logic_error);
    }
    const std::string raw = slurp(dir / "a.csv");
    CHECK(raw.rfind("x,name,k\n0.1,a,3\n-2.5e-300,b,4\n", 0) == 0);
    const CsvTable t = read_csv(dir / "a.csv");
    CHECK(t.header == std::vector<std::string>{"x", "name", "k"});
    CHECK(t.rows.at(1).at(t.column("name")) == "b");
    CHECK_THROWS_AS(t.column("missing"), ValidationError);
    fs::remove_all(dir);
}

TEST_CASE("manifest JSON round trip") {
    Manifest m;
    m.experiment = "sanov";
    m.config = smoke("sanov");
    m.config.out_dir = "x";
    m.git_rev = "abc";
    m.wall_seconds = 1.5;
    m.checks.push_back({"A12", "gap", true, false, 0.1, 0.15, "detail"});
    m.checks.push_back({"", "info", true, true, std::numeric_limits<double>::infinity(), 0, ""});
    m.artifacts = {"a.csv"};
    m.overlays["a.csv"] = "y = x";
    const Manifest back = manifest_from_json(m.to_json());
    CHECK(back.config == m.config);
    CHECK(back.checks.size() == 2);
    CHECK(back.checks[0].criterion == "A12");
    CHECK(back.checks[0].threshold == 0.15);
    CHECK(std::isinf(back.checks[1].value));
    CHECK(back.overlays.at("a.csv") == "y = x");
    CHECK(back.to_json() == m.to_json());
    CHECK(m.all_pass());
    m.checks[0].pass = false;
    CHECK_FALSE(m.all_pass());
    CHECK_THROWS_AS(manifest_from_json("{not json"), ValidationError);
}

TEST_CASE("run context never writes outside its directory") {
    const fs::path dir = scratch("ctx");
    RunContext ctx(smoke("sanov"), dir);
    CHECK_THROWS_AS(ctx.csv("../escape.csv", {"a"}), std::logic_error);
    CHECK_THROWS_AS(ctx.csv("sub/x.csv", {"a"}), std::logic_error);
    CHECK_THROWS_AS(ctx.csv("/tmp/x.csv", {"a"}), std::logic_error);
    ctx.csv("ok.csv", {"a"});
    CHECK_THROWS_AS(ctx.csv("ok.csv", {"a"}), std::logic_error);
    ctx.remove_outputs();
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("documented CSV header contracts") {
    const std::map<std::string, std::vector<std::string>> contract = {
        {"drift.csv", {"bin_center", "estimate", "stderr", "count", "beta", "bin_lo", "bin_hi", "predicted", "reliable"}},
        {"histogram.csv", {"bin_center", "empirical", "predicted", "potential", "bin_lo", "bin_hi", "count", "predicted_mass"}},
        {"cg_trajectory.csv", {"t", "Q", "P", "e", "E", "H_total"}},
        {"kernel.csv", {"t", "kappa11"}},
        {"noise_paths.csv", {"t", "sample", "B1", "B2"}},
        {"ode.csv", {"t", "Q", "P", "e", "E", "S"}},
        {"oscillator_paths.csv", {"t", "path_id", "z_1", "z_2", "z_3"}},
        {"stirling.csv", {"n", "gap"}},
        {"sanov_tail.csv", {"n", "exponent", "rate"}},
        {"pde_fp_snapshots.csv", {"t", "x", "rho"}},
        {"pde_entropy.csv", {"t", "S"}},
        {"hist2d.csv", {"sigma", "x_lo", "x_hi", "y_lo", "y_hi", "count", "empirical_mass", "predicted_mass"}},
    };
    std::size_t seen = 0;
    for (const auto& e : experiments()) {
        const fs::path dir = scratch("contract_" + e.name);
        const Manifest m = run(smoke(e.name), dir);
        CHECK(fs::exists(dir / "manifest.json"));
        for (const auto& a : m.artifacts) {
            CHECK(fs::exists(dir / a));
            const auto it = contract.find(a);
            if (it == contract.end() || a.ends_with(".json")) continue;
            CHECK_MESSAGE(read_csv(dir / a).header == it->second, a);
            ++seen;
        }
        for (const auto& [artifact, formula] : m.overlays) {
            CHECK(std::find(m.artifacts.begin(), m.artifacts.end(), artifact) != m.artifacts.end());
            CHECK_FALSE(formula.empty());
        }
        fs::remove_all(dir);
    }
    CHECK(seen == contract.size());
}

TEST_CASE("identical configs give identical bytes at any thread count") {
    for (const std::string name : {"oscillator-sde", "particles"}) {
        const fs::path a = scratch("det_a"), b = scratch("det_b");
        ExperimentConfig cfg = smoke(name);
        cfg.threads = 1;
        const Manifest ma = run(cfg, a);
        cfg.threads = 3;
        run(cfg, b);
        for (const auto& f : ma.artifacts) CHECK_MESSAGE(slurp(a / f) == slurp(b / f), std::string(name + "/" + f));
        fs::remove_all(a);
        fs::remove_all(b);
    }
}

TEST_CASE("invalid configs fail before compute and leave nothing behind") {
    const fs::path dir = scratch("invalid");
    ExperimentConfig cfg = smoke("pde");
    cfg.set("fp.dt", "0");
    CHECK_THROWS_AS(run(cfg, dir), ValidationError);
    CHECK_FALSE(fs::exists(dir));
    cfg = smoke("oscillator-sde");
    cfg.set("energy.dt", "0");
    CHECK_THROWS_AS(run(cfg, dir), ValidationError);
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("shipped systems satisfy the structural axioms") {
    const auto systems = shipped_systems();
    CHECK(systems.size() >= 5);
    for (const auto& s : systems) {
        const StructureReport r = check_structure(s.system, gaussian_cloud(s.system.d, 50, 1), 1e-10);
        CHECK_MESSAGE(r.pass, s.name);
    }
}

TEST_CASE("seed derivation") {
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    CHECK(derive_seed(5, 3) == derive_seed(5, 3));
}

TEST_CASE("command line: exit codes") {
    const fs::path dir = scratch("cli");
    fs::create_directories(dir);
    ExperimentConfig cfg = smoke("sanov");
    {
        std::ofstream(dir / "ok.ini") << serialize_config(cfg);
        cfg.set("stirling.tolerance", "1e-300");
        std::ofstream(dir / "fail.ini") << serialize_config(cfg);
        std::ofstream(dir / "bad.ini") << "[experiment]\nname = sanov\n[tail]\nmu1 = 2\n";
    }
    CHECK(cli("list") == 0);
    CHECK(cli("run --config " + (dir / "ok.ini").string() + " --out " + (dir / "ok").string()) == 0);
    CHECK(cli("run --config " + (dir / "fail.ini").string() + " --out " + (dir / "fail").string()) == 1);
    CHECK(cli("run --config " + (dir / "bad.ini").string() + " --out " + (dir / "bad").string()) == 2);
    CHECK(cli("run --config " + (dir / "missing.ini").string()) == 2);
    // A manifest is itself a valid config and reproduces the run.
    CHECK(cli("run --config " + (dir / "ok" / "manifest.json").string() + " --out " + (dir / "again").string()) == 0);
    CHECK(slurp(dir / "ok" / "stirling.csv") == slurp(dir / "again" / "stirling.csv"));
    fs::remove_all(dir);
}
