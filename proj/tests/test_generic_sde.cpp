#include "elab/generic_sde.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace elab;

namespace {

// dz = -z dt + sqrt(2) dW in one dimension: S = -z^2/2, K = Sigma = 1.
GenericSystem ou_system() {
    GenericSystem s;
    s.name = "ou";
    s.d = 1;
    s.E = ScalarField{1, [](const Vec&) { return 0.0; }, [](const Vec&, Vec& g) { g.setZero(1); }};
    s.S = ScalarField{1, [](const Vec& z) { return -0.5 * z.squaredNorm(); }, [](const Vec& z, Vec& g) { g = -z; }};
    s.J = constant_operator(Mat::Zero(1, 1));
    s.K = constant_operator(Mat::Identity(1, 1));
    s.Sigma = constant_operator(Mat::Identity(1, 1));
    return s;
}

OscillatorParams osc() {
    OscillatorParams p;
    p.gamma = 0.5;
    return p;
}

ScalarField half_square(std::size_t d) {
    return ScalarField{d, [](const Vec& x) { return 0.5 * x.squaredNorm(); }, [](const Vec& x, Vec& g) { g = x; }};
}

Vec scalar(double x) {
    Vec z(1);
    z << x;
    return z;
}

}  // namespace

TEST_CASE("config validation") {
    SdeRunConfig c;
    c.dt = 0.01;
    c.T = 1;
    c.n_paths = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.n_paths = 2;
    c.record_stride = 3;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.record_stride = 4;
    CHECK_NOTHROW(c.validate());
    CHECK(c.steps() == 100);
}

TEST_CASE("recorded grid and burn-in index") {
    SdeRunConfig c;
    c.dt = 0.01;
    c.T = 1;
    c.n_paths = 2;
    c.record_stride = 10;
    const PathEnsemble e = integrate_sde(ou_system(), scalar(1.0), c);
    REQUIRE(e.n_times() == 11);
    CHECK(e.times[10] == doctest::Approx(1.0));
    CHECK(e.burn_in_index(0.5) == 5);
    CHECK(e.burn_in_index(0.0) == 0);
    CHECK_THROWS_AS(e.burn_in_index(1.0), ValidationError);
    CHECK(e.paths[0](0, 0) == 1.0);
}

TEST_CASE("results do not depend on the thread count or the ensemble size") {
    SdeRunConfig c;
    c.dt = 1e-2;
    c.T = 1;
    c.n_paths = 9;
    c.seed = 42;
    c.threads = 1;
    const GenericSystem sys = damped_oscillator_system(osc());
    Vec z0(3);
    z0 << 1, 0, 0;
    const PathEnsemble a = integrate_sde(sys, z0, c);
    c.threads = 3;
    const PathEnsemble b = integrate_sde(sys, z0, c);
    c.n_paths = 4;
    const PathEnsemble s = integrate_sde(sys, z0, c);
    for (std::size_t p = 0; p < a.n_paths(); ++p) CHECK((a.paths[p].array() == b.paths[p].array()).all());
    for (std::size_t p = 0; p < s.n_paths(); ++p) CHECK((a.paths[p].array() == s.paths[p].array()).all());
    c.seed = 43;
    const PathEnsemble other = integrate_sde(sys, z0, c);
    CHECK_FALSE((other.paths[0].array() == s.paths[0].array()).all());
}

TEST_CASE("Euler-Maruyama OU variance matches the discrete stationary value") {
    // z' = (1 - dt) z + sqrt(2 dt) xi has stationary variance 2 dt / (1 - (1 - dt)^2).
    SdeRunConfig c;
    c.dt = 0.02;
    c.T = 8;
    c.n_paths = 4000;
    c.seed = 7;
    c.record_stride = 400;
    const PathEnsemble e = integrate_sde(ou_system(), scalar(0.0), c);
    double s1 = 0, s2 = 0;
    for (const auto& p : e.paths) {
        const double x = p(0, static_cast<Eigen::Index>(e.n_times() - 1));
        s1 += x;
        s2 += x * x;
    }
    const double n = static_cast<double>(e.n_paths());
    const double var = s2 / n - (s1 / n) * (s1 / n);
    const double target = 2 * c.dt / (1 - (1 - c.dt) * (1 - c.dt));
    // OU relaxation from 0 over T = 8 leaves a deficit of target * (1 - dt)^(2 T/dt), negligible here.
    CHECK(std::abs(var - target) <= 4 * target * std::sqrt(2.0 / n));
    CHECK(std::abs(s1 / n) <= 4 * std::sqrt(target / n));
}

TEST_CASE("escaping paths raise DivergenceError") {
    GenericSystem s = ou_system();
    s.S = ScalarField{1, [](const Vec& z) { return 10 * z.squaredNorm(); }, [](const Vec& z, Vec& g) { g = 20 * z; }};
    SdeRunConfig c;
    c.dt = 0.1;
    c.T = 10;
    c.n_paths = 4;
    CHECK_THROWS_AS(integrate_sde(s, scalar(1.0), c), DivergenceError);
}

TEST_CASE("divergence term: finite differences agree with the oscillator closure") {
    const GenericSystem sys = damped_oscillator_system(osc());
    GenericSystem fd = sys;
    fd.divAK = nullptr;
    for (const auto& z : gaussian_cloud(3, 20, 9)) {
        const Vec a = divergence_term(sys, z);
        const Vec b = divergence_term(fd, z);
        CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK(a(2) == doctest::Approx(-osc().gamma / osc().beta / osc().m));
    }
    CHECK(unimodularity_residual(sys, gaussian_cloud(3, 1, 1)[0]) == 0.0);
}

TEST_CASE("noise along the energy level set: first-order twin increments coincide") {
    const GenericSystem sys = damped_oscillator_system(osc());
    const TwinIncrementGap g = twin_energy_increment_gap(sys, gaussian_cloud(3, 200, 4), 1e-3, 5);
    CHECK(g.linear <= 1e-12);
    CHECK(g.exact > 0.0);
}

TEST_CASE("energy drift summary is exact for a deterministic oscillator") {
    OscillatorParams p = osc();
    p.gamma = 0;
    const GenericSystem sys = damped_oscillator_system(p);
    SdeRunConfig c;
    c.dt = 0.01;
    c.T = 1;
    c.n_paths = 3;
    Vec z0(3);
    z0 << 1, 0, 0;
    const PathEnsemble e = integrate_sde(sys, z0, c);
    // Explicit Euler on the undamped oscillator multiplies Q^2 + P^2 by (1 + dt^2) per step.
    const double grow = 0.5 * (std::pow(1 + c.dt * c.dt, 100) - 1);
    const EnergyDriftSummary s = check_as_energy_conservation(e, sys);
    CHECK(s.mean_terminal == doctest::Approx(grow).epsilon(1e-10));
    CHECK(s.max_max == doctest::Approx(grow).epsilon(1e-10));
    CHECK(s.paths_used == 3);
}

TEST_CASE("bin masses of a standard Gaussian") {
    const auto m = bin_masses([](double x) { return std::exp(-0.5 * x * x); }, -2, 2, 4);
    const double total = std::erf(2 / std::numbers::sqrt2);
    const double inner = 0.5 * std::erf(1 / std::numbers::sqrt2) / total;
    CHECK(m[1] == doctest::Approx(inner).epsilon(1e-7));
    CHECK(m[2] == doctest::Approx(inner).epsilon(1e-7));
    CHECK(m[0] + m[1] + m[2] + m[3] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(bin_masses([](double) { return 0.0; }, 0, 1, 3), DomainError);
}

TEST_CASE("particle system with a single particle reproduces the OU generic system") {
    ParticleSystemSpec spec;
    spec.d = 1;
    spec.n = 1;
    spec.V = half_square(1);
    spec.Sigma = Mat::Identity(1, 1);
    SdeRunConfig c;
    c.dt = 0.01;
    c.T = 1;
    c.n_paths = 5;
    c.seed = 3;
    const InitialLaw init = [](Stream&) { return scalar(0.5); };
    const PathEnsemble a = simulate_particles(spec, c, init);
    const PathEnsemble b = integrate_sde(particle_generic_system(spec), init, c);
    // Same draws and drift; only the floating-point evaluation order differs.
    for (std::size_t p = 0; p < a.n_paths(); ++p) CHECK((a.paths[p] - b.paths[p]).cwiseAbs().maxCoeff() <= 1e-11);
}

TEST_CASE("particle spec validation") {
    ParticleSystemSpec spec;
    spec.d = 2;
    spec.n = 3;
    spec.V = half_square(2);
    spec.Sigma = Mat::Identity(2, 2);
    CHECK_NOTHROW(spec.validate());
    spec.psi = ScalarField{2, [](const Vec& x) { return x(0); }, {}};
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    spec.psi.reset();
    spec.Sigma = Mat::Identity(3, 3);
    CHECK_THROWS_AS(spec.validate(), ValidationError);
}

TEST_CASE("particle structure: K = I (x) Sigma Sigma^T, E = 0") {
    ParticleSystemSpec spec;
    spec.d = 2;
    spec.n = 3;
    spec.V = half_square(2);
    spec.psi = half_square(2);
    spec.Sigma = Mat::Identity(2, 2);
    spec.Sigma(1, 1) = std::sqrt(2.0);
    const GenericSystem sys = particle_generic_system(spec);
    const StructureReport r = check_structure(sys, gaussian_cloud(6, 20, 8), 1e-10);
    CHECK(r.pass);
    CHECK(r.min_eigenvalue_K == doctest::Approx(1.0));
    const Mat K = sys.K(gaussian_cloud(6, 1, 1)[0]);
    CHECK(K(3, 3) == doctest::Approx(2.0));
    CHECK(K(0, 2) == 0.0);
}

TEST_CASE("KL to the OU stationary law decreases from an offset start") {
    const GenericSystem sys = ou_system();
    SdeRunConfig c;
    c.dt = 0.01;
    c.T = 4;
    c.n_paths = 2000;
    c.seed = 11;
    c.record_stride = 50;
    const PathEnsemble e = integrate_sde(sys, scalar(3.0), c);
    const auto kl = kl_to_stationary_checkpoints(
        e, sys, 0, [](double x) { return std::exp(-0.5 * x * x); }, -5, 6, 44, {0.5, 1, 2, 4});
    REQUIRE(kl.size() == 4);
    for (std::size_t i = 1; i < kl.size(); ++i) CHECK(kl[i] < kl[i - 1]);
    CHECK(kl.back() < 0.02);

    GenericSystem still = sys;
    still.Sigma = constant_operator(Mat::Zero(1, 1));
    CHECK_THROWS_AS(kl_to_stationary_checkpoints(e, still, 0, [](double) { return 1.0; }, -5, 5, 10, {1.0}),
                    ValidationError);
}

TEST_CASE("stationary histograms pool only post-burn-in samples") {
    SdeRunConfig c;
    c.dt = 0.01;
    c.T = 1;
    c.n_paths = 3;
    c.record_stride = 10;
    const PathEnsemble e = integrate_sde(ou_system(), scalar(0.0), c);
    const Histogram1D h = stationary_histogram(e, [](const Vec& z) { return z(0); }, 0.5, -10, 10, 20);
    CHECK(h.in_range() + h.outside() == doctest::Approx(3 * 6));
}
