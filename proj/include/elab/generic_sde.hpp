#pragma once

#include "elab/generic_core.hpp"
#include "elab/rng.hpp"
#include "elab/stats.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace elab {

struct SdeRunConfig {
    double dt = 1e-3;
    double T = 1.0;
    std::size_t n_paths = 1;
    std::uint64_t seed = 0;
    std::size_t record_stride = 1;  // keep every k-th step; T/dt must be a multiple of it
    unsigned threads = 1;

    void validate() const;
    std::size_t steps() const;
};

/// Seeded trajectories on a shared recorded grid. Path p is a dim x n_times matrix.
struct PathEnsemble {
    std::string system_name;
    std::size_t dim = 0;
    std::uint64_t seed = 0;
    SdeRunConfig cfg;
    std::vector<double> times;
    std::vector<Mat> paths;
    std::vector<std::uint64_t> stream_ids;
    std::vector<bool> diverged;
    std::size_t n_diverged = 0;

    std::size_t n_times() const { return times.size(); }
    std::size_t n_paths() const { return paths.size(); }
    /// First grid index with time >= fraction * T.
    std::size_t burn_in_index(double fraction) const;
};

using InitialLaw = std::function<Vec(Stream&)>;

/// Euler-Maruyama for dz = [J grad E + K grad S + (1/a) div(aK)] dt + sqrt(2) Sigma dW.
/// Paths leaving |z|_inf <= 1e8 are flagged and excluded; more than 0.1% flagged throws.
PathEnsemble integrate_sde(const GenericSystem& sys, const Vec& z0, const SdeRunConfig& cfg);
PathEnsemble integrate_sde(const GenericSystem& sys, const InitialLaw& init, const SdeRunConfig& cfg);

/// (1/a) div(aK): the analytic closure when present, else centered differences with
/// step 1e-4 * (1 + |z|) of the rows of aK.
Vec divergence_term(const GenericSystem& sys, const Vec& z);

/// max_i |div(aJ)_i| by centered differences; zero for constant J and a.
double unimodularity_residual(const GenericSystem& sys, const Vec& z);

/// Full SDE drift at z.
Vec sde_drift(const GenericSystem& sys, const Vec& z);

struct EnergyDriftSummary {
    double mean_max = 0, max_max = 0;  // over paths of max_t |E(z_t) - E(z_0)|
    double mean_terminal = 0;          // over paths of |E(z_T) - E(z_0)|
    std::size_t paths_used = 0;
};

EnergyDriftSummary check_as_energy_conservation(const PathEnsemble& ens, const GenericSystem& sys);

struct TwinIncrementGap {
    double linear = 0;  // max |grad E(z).dz(+xi) - grad E(z).dz(-xi)|
    double exact = 0;   // max |[E(z+dz(+xi)) - E(z)] - [E(z+dz(-xi)) - E(z)]|
};

/// One Euler-Maruyama step from each state with noise +xi and -xi (same drift).
TwinIncrementGap twin_energy_increment_gap(const GenericSystem& sys, const std::vector<Vec>& states, double dt,
                                           std::uint64_t seed);

/// Pools post-burn-in values of proj(z) over non-diverged paths.
Histogram1D stationary_histogram(const PathEnsemble& ens, const std::function<double(const Vec&)>& proj,
                                 double burn_in, double lo, double hi, std::size_t bins);

Histogram2D stationary_histogram_2d(const PathEnsemble& ens, std::size_t ix, std::size_t iy, double burn_in,
                                    double lo, double hi, std::size_t bins);

/// Interacting particles dX_i = -Sigma Sigma^T grad V(X_i) dt - (1/n) sum_j grad psi(X_i - X_j) dt
/// + sqrt(2) Sigma dW_i. State vector stacks the n particles (particle-major).
struct ParticleSystemSpec {
    std::size_t d = 1;
    std::size_t n = 1;
    ScalarField V;
    std::optional<ScalarField> psi;
    Mat Sigma;

    void validate() const;  // shapes, and psi evenness on sampled points
};

/// With mean_field_scaling the pair force carries 1/n, otherwise it is unscaled.
PathEnsemble simulate_particles(const ParticleSystemSpec& spec, const SdeRunConfig& cfg, const InitialLaw& init,
                                bool mean_field_scaling = true);

/// The particle system as a GenericSystem with E = 0 and S = -(sum V + interaction energy),
/// K = I_n (x) Sigma Sigma^T. Only meaningful for structure checks and mean_field_scaling.
GenericSystem particle_generic_system(const ParticleSystemSpec& spec);

/// KL(empirical law of coordinate at checkpoint || stationary) on a shared binning;
/// bins receive 1/(n_paths * bins) before normalization. Rejects systems with Sigma = 0.
std::vector<double> kl_to_stationary_checkpoints(const PathEnsemble& ens, const GenericSystem& sys,
                                                 std::size_t coordinate,
                                                 const std::function<double(double)>& stationary_density,
                                                 double lo, double hi, std::size_t bins,
                                                 const std::vector<double>& checkpoints);

/// Bin masses of a density by composite Simpson quadrature (renormalized over [lo, hi)).
std::vector<double> bin_masses(const std::function<double(double)>& density, double lo, double hi,
                               std::size_t bins, std::size_t panels_per_bin = 32);

}  // namespace elab
