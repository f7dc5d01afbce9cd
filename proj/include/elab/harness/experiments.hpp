#pragma once

#include "elab/generic_core.hpp"
#include "elab/generic_sde.hpp"
#include "elab/harness/config.hpp"
#include "elab/harness/io.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace elab::harness {

struct ExperimentInfo {
    std::string name;
    std::string description;
    std::vector<std::string> parts;
    Schema schema;
    std::function<void(RunContext&)> run;
    /// Overrides that shrink the run to seconds; used by the determinism checks.
    std::vector<std::pair<std::string, std::string>> smoke;
};

const std::vector<ExperimentInfo>& experiments();
const ExperimentInfo& experiment(const std::string& name);

/// Validates, runs, writes the CSVs and manifest.json under out_dir (cfg.out_dir when empty).
/// On error the partial outputs are removed and the exception propagates.
Manifest run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir = {});

/// Every GenericSystem the experiments build, with their default parameters.
struct NamedSystem {
    std::string name;
    GenericSystem system;
};
std::vector<NamedSystem> shipped_systems();

/// Independent seed for one part of an experiment.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t part);

/// Columnar dump (t, path_id, z_1..z_d) of the first max_paths paths.
void write_ensemble(RunContext& ctx, const std::string& name, const PathEnsemble& ens, std::size_t max_paths);

/// Gradient flow zdot = K grad S / 2 for S(z) = -z^2 as a GENERIC system (E = 0, J = 0, Onsager K / 2).
GenericSystem rate_functional_flow_system(double K);
/// V = |x|^2 / 2 confinement, optionally with the pair potential psi = |x|^2 / 2.
ParticleSystemSpec quadratic_particle_spec(std::size_t d, std::size_t n, const Mat& Sigma, bool interacting);

/// Short human-readable number for check details ("%.4g").
std::string num(double v);

// Experiment bodies and their schemas, one translation unit each.
Schema core_example_schema();
void run_core_example(RunContext& ctx);
Schema heat_bath_schema();
void run_heat_bath(RunContext& ctx);
Schema kernel_noise_schema();
void run_kernel_noise(RunContext& ctx);
Schema oscillator_sde_schema();
void run_oscillator_sde(RunContext& ctx);
Schema particles_schema();
void run_particles(RunContext& ctx);
Schema sanov_schema();
void run_sanov(RunContext& ctx);
Schema rate_functional_schema();
void run_rate_functional(RunContext& ctx);
Schema pde_schema();
void run_pde(RunContext& ctx);

}  // namespace elab::harness
