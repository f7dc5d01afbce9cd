#include "elab/harness/experiments.hpp"

#include "elab/types.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

namespace elab::harness {

namespace {

std::vector<ExperimentInfo> build_registry() {
    std::vector<ExperimentInfo> r;
    r.push_back({"core-example",
                 "reflected diffusion in the unit ball coarse-grained to its radius",
                 {"drift", "density", "beta", "scaling"},
                 core_example_schema(),
                 run_core_example,
                 {{"drift.paths", "40"},
                  {"drift.chunk", "10"},
                  {"drift.T", "0.1"},
                  {"density.paths", "20"},
                  {"density.T", "2"},
                  {"beta.paths", "20"},
                  {"beta.T", "0.1"},
                  {"scaling.paths", "10"},
                  {"scaling.n_list", "2,8"}}});
    r.push_back({"heat-bath",
                 "oscillator coupled to a harmonic bath: energy, entropy limit, limit SDE, stationary law",
                 {"energy", "entropy", "sde", "stationary"},
                 heat_bath_schema(),
                 run_heat_bath,
                 {{"energy.n", "64"},
                  {"energy.T", "0.5"},
                  {"entropy.points", "201"},
                  {"entropy.csv_stride", "10"},
                  {"sde.n", "128"},
                  {"sde.T", "1"},
                  {"sde.realizations", "20"},
                  {"sde.paths", "50"},
                  {"sde.bootstrap", "10"},
                  {"stationary.n", "32"},
                  {"stationary.samples", "2000"},
                  {"stationary.burn_in", "1000"}}});
    r.push_back({"kernel-noise",
                 "memory kernel and white-noise limit of the bath force",
                 {"kernel", "noise"},
                 kernel_noise_schema(),
                 run_kernel_noise,
                 {{"kernel.n", "2000"},
                  {"kernel.t_max", "2"},
                  {"noise.n", "400"},
                  {"noise.samples", "20"},
                  {"noise.increments", "20"},
                  {"noise.group", "8"}}});
    r.push_back({"oscillator-sde",
                 "damped oscillator: ODE, almost-sure energy conservation, Gibbs marginals",
                 {"ode", "energy", "gibbs"},
                 oscillator_sde_schema(),
                 run_oscillator_sde,
                 {{"ode.T", "2"},
                  {"energy.paths", "20"},
                  {"energy.T", "1"},
                  {"energy.twin_states", "50"},
                  {"gibbs.paths", "10"},
                  {"gibbs.T", "10"}}});
    r.push_back({"particles",
                 "anisotropic and mean-field particle SDEs",
                 {"anisotropy", "kl", "meanfield"},
                 particles_schema(),
                 run_particles,
                 {{"anisotropy.paths", "500"},
                  {"anisotropy.T", "1.4"},
                  {"kl.paths", "500"},
                  {"meanfield.n", "8"},
                  {"meanfield.paths", "3"},
                  {"meanfield.T", "1"}}});
    r.push_back({"sanov",
                 "Stirling gap, binomial tail exponents and empirical measures",
                 {"stirling", "tail", "empirical"},
                 sanov_schema(),
                 run_sanov,
                 {{"empirical.n", "1000"}}});
    r.push_back({"rate-functional",
                 "quadratic rate functional on random paths and on the gradient flow",
                 {"random", "gradient-flow", "shift"},
                 rate_functional_schema(),
                 run_rate_functional,
                 {{"random.count", "5"}, {"flow.T", "1"}}});
    r.push_back({"pde",
                 "finite-volume gradient flows: Fokker-Planck, structure refinement, heat equation",
                 {"fp", "refine", "heat"},
                 pde_schema(),
                 run_pde,
                 {{"fp.T", "0.5"},
                  {"fp.snapshots", "0.25,0.5"},
                  {"refine.cells", "50,100"},
                  {"heat.T", "0.5"},
                  {"heat.times", "0.25,0.5"}}});
    return r;
}

}  // namespace

const std::vector<ExperimentInfo>& experiments() {
    static const std::vector<ExperimentInfo> registry = build_registry();
    return registry;
}

const ExperimentInfo& experiment(const std::string& name) {
    for (const auto& e : experiments())
        if (e.name == name) return e;
    std::string known;
    for (const auto& e : experiments()) known += (known.empty() ? "" : ", ") + e.name;
    throw ValidationError("unknown experiment '" + name + "' (known: " + known + ")");
}

Manifest run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    const ExperimentInfo& info = experiment(cfg.experiment);
    const std::filesystem::path dir = out_dir.empty() ? std::filesystem::path(cfg.out_dir) : out_dir;
    if (dir.empty()) throw ValidationError("no output directory");

    ExperimentConfig echo = cfg;
    echo.out_dir = dir.string();
    RunContext ctx(echo, dir);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        info.run(ctx);
    } catch (...) {
        ctx.remove_outputs();
        throw;
    }
    Manifest m;
    m.experiment = info.name;
    m.config = echo;
    m.git_rev = git_revision();
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m.checks = ctx.checks();
    m.artifacts = ctx.artifacts();
    m.overlays = ctx.overlays();
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << m.to_json();
    if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
    return m;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t part) {
    // splitmix64 finalizer over the seed offset by the part index.
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (part + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

void write_ensemble(RunContext& ctx, const std::string& name, const PathEnsemble& ens, std::size_t max_paths) {
    std::vector<std::string> header = {"t", "path_id"};
    for (std::size_t i = 0; i < ens.dim; ++i) header.push_back("z_" + std::to_string(i + 1));
    auto w = ctx.csv(name, header);
    const std::size_t shown = std::min(max_paths, ens.n_paths());
    for (std::size_t p = 0; p < shown; ++p)
        for (std::size_t k = 0; k < ens.n_times(); ++k) {
            *w << ens.times[k] << static_cast<std::size_t>(ens.stream_ids[p]);
            for (std::size_t i = 0; i < ens.dim; ++i)
                *w << ens.paths[p](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
            w->end_row();
        }
}

std::vector<NamedSystem> shipped_systems() {
    std::vector<NamedSystem> out;
    const auto get = [](const std::string& exp, const std::string& key) {
        return default_config(exp).get_double(key);
    };

    OscillatorParams osc;
    osc.k = get("oscillator-sde", "osc.k");
    osc.m = get("oscillator-sde", "osc.m");
    osc.gamma = get("oscillator-sde", "osc.gamma");
    osc.beta = get("oscillator-sde", "osc.beta");
    out.push_back({"oscillator-sde", damped_oscillator_system(osc)});

    OscillatorParams bath;
    bath.k = get("heat-bath", "bath.k");
    bath.m = get("heat-bath", "bath.m");
    bath.gamma = get("heat-bath", "bath.gamma");
    bath.beta = get("heat-bath", "bath.beta");
    out.push_back({"heat-bath limit", damped_oscillator_system(bath)});

    out.push_back({"rate-functional gradient flow", rate_functional_flow_system(get("rate-functional", "system.K"))});

    Mat aniso = Mat::Identity(2, 2);
    aniso(1, 1) = get("particles", "anisotropy.sigma2");
    out.push_back({"particles Sigma = I", particle_generic_system(quadratic_particle_spec(2, 1, Mat::Identity(2, 2), false))});
    out.push_back({"particles Sigma = diag", particle_generic_system(quadratic_particle_spec(2, 1, aniso, false))});
    out.push_back({"particles OU", particle_generic_system(quadratic_particle_spec(1, 1, Mat::Identity(1, 1), false))});
    const auto n = static_cast<std::size_t>(default_config("particles").get_uint("meanfield.n"));
    out.push_back({"particles mean field", particle_generic_system(quadratic_particle_spec(1, n, Mat::Identity(1, 1), true))});
    return out;
}

}  // namespace elab::harness
