#pragma once

#include "elab/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace elab {

/// Real function on R^d with an optional analytic gradient. Without one, gradients are
/// centered finite differences with step 1e-5 * (1 + |z|).
struct ScalarField {
    std::size_t d = 0;
    std::function<double(const Vec&)> value;
    std::function<void(const Vec&, Vec&)> gradient;

    double operator()(const Vec& z) const { return value(z); }
    void grad(const Vec& z, Vec& out) const;
    Vec grad(const Vec& z) const;
};

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& z, double h);

/// Matrix-valued field z -> rows x cols.
struct OperatorField {
    std::size_t rows = 0, cols = 0;
    std::function<void(const Vec&, Mat&)> eval;

    Mat operator()(const Vec& z) const;
    void operator()(const Vec& z, Mat& out) const;
};

OperatorField constant_operator(const Mat& m);

/// Energy, entropy, Poisson operator J, Onsager operator K, noise factor Sigma with
/// Sigma Sigma^T = K, reference density a (constant 1 when absent) and optionally the
/// closed form of (1/a) div(a K).
struct GenericSystem {
    std::string name;
    std::size_t d = 0;
    ScalarField E, S;
    OperatorField J, K, Sigma;
    std::optional<ScalarField> a;
    std::function<void(const Vec&, Vec&)> divAK;
};

struct StructureReport {
    double antisymmetry_J = 0;   // max |J + J^T|
    double symmetry_K = 0;       // max |K - K^T|
    double min_eigenvalue_K = 0; // min over samples
    double J_gradS = 0;          // max |J grad S|
    double K_gradE = 0;          // max |K grad E|
    double fluctuation_dissipation = 0;  // max |Sigma Sigma^T - K|
    bool pass = false;
};

/// Pointwise check of the structural axioms at the sample states (max norms).
/// Throws DomainError naming the state if any matrix entry is non-finite.
StructureReport check_structure(const GenericSystem& sys, const std::vector<Vec>& samples, double tol);

/// Max absolute cyclic-sum residual of the bracket {F,G} = grad F^T J grad G over all
/// triples of coordinate functions, derivatives of J by centered differences.
double check_jacobi(const OperatorField& J, const std::vector<Vec>& samples);

/// Standard Gaussian states in R^d.
std::vector<Vec> gaussian_cloud(std::size_t d, std::size_t count, std::uint64_t seed);

struct OscillatorParams {
    double k = 1.0, m = 1.0, gamma = 0.5, beta = 1.0;
    void validate() const;
};

/// Damped harmonic oscillator on (Q, P, e).
GenericSystem damped_oscillator_system(const OscillatorParams& p);

/// J grad E + K grad S.
Vec generic_vector_field(const GenericSystem& sys, const Vec& z);

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
};

/// Number of uniform steps of size dt covering [0, T]; T/dt must be an integer up to 1e-9 relative.
std::size_t step_count(double dt, double T);

/// Classical RK4 on a uniform grid, including t = 0.
Trajectory integrate_ode(const GenericSystem& sys, const Vec& z0, double dt, double T);

struct EnergyEntropyMonitor {
    double energy_drift = 0;          // max |E(z_t) - E(z_0)|
    double min_entropy_increment = 0; // min S(z_{t+1}) - S(z_t)
};

EnergyEntropyMonitor monitor_energy_entropy(const Trajectory& traj, const GenericSystem& sys);

}  // namespace elab
