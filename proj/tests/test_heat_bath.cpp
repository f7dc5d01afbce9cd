#include "elab/heat_bath.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace elab;

namespace {

HeatBathParams bath(std::size_t n, double gamma = 0.5) {
    HeatBathParams p;
    p.n = n;
    p.gamma = gamma;
    p.E0 = 0.5;
    return p;
}

}  // namespace

TEST_CASE("default frequency schedule and coupling") {
    const HeatBathParams p = bath(64);
    CHECK(p.dw() == doctest::Approx(0.5));
    CHECK(p.omega(3) == doctest::Approx(1.5));
    CHECK(p.coupling() == doctest::Approx(std::sqrt(1.0 / std::numbers::pi)));
    HeatBathParams q = p;
    q.delta_omega = 0.01;
    CHECK(q.dw() == 0.01);
    q.beta = 0;
    CHECK_THROWS_AS(q.validate(), ValidationError);
    q = p;
    q.n = 0;
    CHECK_THROWS_AS(q.validate(), ValidationError);
}

TEST_CASE("conditional sample sits on the energy shell") {
    const HeatBathParams p = bath(100);
    Stream rng(1, 0, StreamTag::Initial);
    const MicroState s = sample_conditional(p, 0.8, -0.3, rng);
    CHECK(H_total(p, s) == doctest::Approx(p.E0 + 100.0 / p.beta).epsilon(1e-12));
    const CgState c = coarse_grain_state(p, s);
    CHECK(c.Q == 0.8);
    CHECK(c.e == doctest::Approx(p.E0 - H_A(p, 0.8, -0.3)).epsilon(1e-10));
    CHECK(cg_energy(p, c) == doctest::Approx(p.E0).epsilon(1e-10));

    HeatBathParams tight = bath(1);
    tight.E0 = -10;
    Stream r2(1, 0);
    CHECK_THROWS_AS(sample_conditional(tight, 0, 0, r2), DomainError);
}

TEST_CASE("stationary weight") {
    HeatBathParams p = bath(10);
    CHECK(stationary_log_weight(p, 0, 0) == doctest::Approx(9 * std::log(20 + 1.0)));
    CHECK(stationary_log_weight(p, 100, 0) == -std::numeric_limits<double>::infinity());
    CHECK(stationary_log_weight(bath(1), 0.3, 0.1) == 0.0);  // constant weight on the support
}

TEST_CASE("large-n Metropolis marginal approaches the Gibbs law") {
    // Weight (2n + 1 - 2 H_A)^{n-1} behaves like exp(-H_A (n - 1) / (n + 1/2)).
    const HeatBathParams p = bath(400);
    Stream rng(2, 0, StreamTag::Sampler);
    const MhChain ch = mh_stationary_Z(p, rng, 20000, 5, 4000);
    double sq = 0, sp = 0;
    for (const auto& z : ch.samples) {
        sq += z(0) * z(0);
        sp += z(1) * z(1);
    }
    const double target = (400 + 0.5) / 399.0;
    CHECK(sq / 20000 == doctest::Approx(target).epsilon(0.06));
    CHECK(sp / 20000 == doctest::Approx(target).epsilon(0.06));
    CHECK(ch.acceptance >= 0.1);
    CHECK(ch.acceptance <= 0.7);
    CHECK_FALSE(ch.acceptance_warning);
}

TEST_CASE("decoupled bath: oscillator rotates, bath energy constant") {
    const HeatBathParams p = bath(32, 0.0);
    Stream rng(3, 0);
    MicroState s0 = sample_conditional(p, 1.0, 0.0, rng);
    const MicroTrajectory tr = evolve_micro(s0, p, 1e-3, 1.0, 100);
    const MicroState& last = tr.states.back();
    CHECK(last.Q == doctest::Approx(std::cos(1.0)).epsilon(1e-9));
    CHECK(last.P == doctest::Approx(-std::sin(1.0)).epsilon(1e-9));
    const CgTrajectory cg = coarse_grain(tr, p);
    for (const auto& c : cg.states) CHECK(c.e == doctest::Approx(cg.states.front().e).epsilon(1e-12));
}

TEST_CASE("Strang splitting conserves H_total and is second order") {
    const HeatBathParams p = bath(64);
    Stream rng(4, 0);
    const MicroState s0 = sample_conditional(p, 1.0, 0.0, rng);
    const double T = 1.0;
    auto terminal = [&](double dt) { return evolve_micro(s0, p, dt, T, 1).states.back(); };
    const MicroState ref = terminal(1.25e-4);
    const MicroState a = terminal(1e-3), b = terminal(5e-4);
    const double ea = std::hypot(a.Q - ref.Q, a.P - ref.P);
    const double eb = std::hypot(b.Q - ref.Q, b.P - ref.P);
    CHECK(ea / eb == doctest::Approx(4.0).epsilon(0.15));

    BathIntegrator it(p, s0, 1e-3);
    const double H0 = it.H_total();
    double worst = 0;
    for (int k = 0; k < 1000; ++k) {
        it.step();
        worst = std::max(worst, std::abs(it.H_total() - H0));
    }
    CHECK(worst / std::abs(H0) <= 1e-5);
    CHECK(it.time() == doctest::Approx(1.0));
    CHECK(it.cg().e + H_A(p, it.cg().Q, it.cg().P) == doctest::Approx(p.E0).epsilon(1e-4));
}

TEST_CASE("integration step and stride validation") {
    const HeatBathParams p = bath(64);
    Stream rng(4, 0);
    const MicroState s0 = sample_conditional(p, 1.0, 0.0, rng);
    CHECK_THROWS_AS(evolve_micro(s0, p, 0.01, 1.0), ValidationError);  // above 0.1 / (n dw)
    CHECK_THROWS_AS(evolve_micro(s0, p, 1e-3, 1.0, 3), ValidationError);
    MicroState bad = s0;
    bad.q.resize(3);
    CHECK_THROWS_AS(H_total(p, bad), ValidationError);
}

TEST_CASE("centered entropy (n - 1) log(1 + beta e / n)") {
    CHECK(entropy_Snbeta_centered(10, 1, 0) == 0.0);
    CHECK(entropy_Snbeta_centered(10, 2, 5) == doctest::Approx(9 * std::log(2.0)));
    CHECK(entropy_Snbeta_centered(1e8, 1.5, 2.0) == doctest::Approx(3.0).epsilon(1e-6));
    CHECK_THROWS_AS(entropy_Snbeta_centered(10, 1, -10), DomainError);
    CHECK_THROWS_AS(entropy_Snbeta_centered(10, 1, -20), DomainError);
}

TEST_CASE("memory kernel") {
    HeatBathParams p = bath(4000);
    p.delta_omega = 0.01;
    CHECK(kappa11(0, p) == doctest::Approx(2 * 0.5 / std::numbers::pi * 0.01 * 4000));
    for (double t : {0.3, 1.7, 3.9})
        CHECK(std::abs(kappa11(t, p) - kappa11(t, p, true)) <= 1e-10);
    // Closed form of the cosine sum.
    const double t = 0.7, a = 0.01 * t;
    const double sum = std::sin(4000 * a / 2) * std::cos(4001 * a / 2) / std::sin(a / 2);
    CHECK(kappa11(t, p, true) == doctest::Approx(1 / std::numbers::pi * 0.01 * sum).epsilon(1e-9));
    const Eigen::Matrix2d K = kappa_n(t, p);
    CHECK(K(1, 1) == 0.0);
    CHECK(K(0, 1) == 0.0);

    const KernelTest kt = kappa_convergence_test(p, [](double s) { return std::exp(-s * s); }, 4, 1e-3);
    CHECK(kt.target_one_sided == doctest::Approx(0.5));
    CHECK(kt.target_two_sided == doctest::Approx(1.0));
    CHECK(kt.error_one_sided <= 0.05 * 0.5);
    CHECK(kt.error_two_sided <= 0.05 * 1.0);
    CHECK_THROWS_AS(kappa_convergence_test(p, [](double) { return 1.0; }, 4, 0.1), ValidationError);
}

TEST_CASE("noise process: batch and single-state forms agree, B' = Y") {
    HeatBathParams p = bath(200);
    Stream rng(6, 0);
    const MicroState s = sample_conditional(p, 0.4, 0.2, rng);
    std::vector<double> grid;
    for (int k = 0; k <= 100; ++k) grid.push_back(0.01 * k);
    const NoisePaths np = noise_process(s, p, grid);
    CHECK(np.B(0, 0) == 0.0);
    CHECK(np.B.row(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(np.Y.row(1).cwiseAbs().maxCoeff() == 0.0);

    Mat zq(200, 1), zp(200, 1);
    for (Eigen::Index j = 0; j < 200; ++j) {
        zq(j, 0) = s.q(j) - p.coupling() * s.Q;
        zp(j, 0) = s.p(j);
    }
    const Mat B = bn_first_coordinate(p, zq, zp, grid);
    CHECK((B.col(0).transpose() - np.B.row(0)).cwiseAbs().maxCoeff() <= 1e-10);

    // B = sqrt(beta / 2 gamma) int Y: central differences with a step far below 1 / max omega.
    const double scale = std::sqrt(p.beta / (2 * p.gamma));
    const double eps = 1e-5;
    for (double t : {0.1, 0.35, 0.8}) {
        const NoisePaths q = noise_process(s, p, {t - eps, t, t + eps});
        const double dB = (q.B(0, 2) - q.B(0, 0)) / (2 * eps);
        CHECK(dB == doctest::Approx(scale * q.Y(0, 1)).epsilon(1e-6));
    }
}

TEST_CASE("white-noise statistics") {
    const int G = 101, S = 400;
    const double delta = 0.05;
    Mat W = Mat::Zero(G, S);
    Stream rng(8, 0, StreamTag::Misc);
    for (int s = 0; s < S; ++s)
        for (int g = 1; g < G; ++g) W(g, s) = W(g - 1, s) + std::sqrt(delta) * rng.normal();
    const WhiteNoiseReport r = white_noise_tests(W, delta, 0.0);
    CHECK(r.increments == 100 * 400);
    CHECK(r.pass());
    CHECK(r.variance == doctest::Approx(delta).epsilon(0.05));

    // Doubled increments fail the variance and the second coordinate must vanish exactly.
    CHECK_FALSE(white_noise_tests(2 * W, delta, 0.0).pass_variance);
    CHECK_FALSE(white_noise_tests(W, delta, 1e-20).pass_second);
    CHECK_THROWS_AS(white_noise_tests(Mat::Zero(2, 3), delta, 0.0), ValidationError);
}

TEST_CASE("limit comparison of identical ensembles has zero distance") {
    PathEnsemble e;
    e.dim = 3;
    e.times = {0, 0.5, 1};
    for (int p = 0; p < 20; ++p) {
        Mat m(3, 3);
        m << p, p + 1, p + 2, 0.1 * p, 0.2 * p, 0.3 * p, 1, 1, 1;
        e.paths.push_back(m);
    }
    e.diverged.assign(20, false);
    const auto d = compare_to_limit_sde(e, e, {CgMoment::SecondP, CgMoment::MeanQ}, 20, 1);
    REQUIRE(d.size() == 2);
    CHECK(d[0].sup_distance == 0.0);
    CHECK(d[0].sup_reference > 0.0);
    CHECK(moment_name(d[0].moment) == "E[P^2]");
    PathEnsemble shorter = e;
    shorter.times.pop_back();
    CHECK_THROWS_AS(compare_to_limit_sde(e, shorter, {CgMoment::MeanQ}, 5, 1), ValidationError);
}
