#include "elab/ball_cg.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace elab;

namespace {

BallDiffusionParams params(int n, std::size_t paths, double T) {
    BallDiffusionParams p;
    p.n = n;
    p.beta = 1;
    p.dt = 1e-3;
    p.T = T;
    p.n_paths = paths;
    p.seed = 5;
    return p;
}

RadialPotential quadratic() { return {[](double y) { return y * y; }, [](double y) { return 2 * y; }}; }

}  // namespace

TEST_CASE("unit ball volumes") {
    CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
    CHECK(unit_ball_volume(2) == doctest::Approx(std::numbers::pi));
    CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * std::numbers::pi / 3.0));
    CHECK(unit_ball_volume(4) == doctest::Approx(std::numbers::pi * std::numbers::pi / 2.0));
}

TEST_CASE("sphere measure: closed form and shell limit") {
    CHECK(pdelta_mass_radial(3, 0.5).mass == doctest::Approx(std::numbers::pi));
    CHECK(pdelta_mass_radial(2, 0.25).mass == doctest::Approx(0.5 * std::numbers::pi));
    const PdeltaMass big = pdelta_mass_radial(2000, 0.5);
    CHECK(std::isfinite(big.log_mass));
    for (int n : {2, 3, 10}) {
        const double exact = pdelta_mass_radial(n, 0.6).mass;
        const double e1 = std::abs(pdelta_shell_estimate(n, 0.6, 1e-3) - exact);
        const double e2 = std::abs(pdelta_shell_estimate(n, 0.6, 5e-4) - exact);
        CHECK(e1 / exact <= 1e-2);
        CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.01));  // first-order in h
    }
    CHECK_THROWS_AS(pdelta_mass_radial(3, 0.0), DomainError);
    CHECK_THROWS_AS(pdelta_shell_estimate(3, 0.5, 0.0), DomainError);
}

TEST_CASE("radial entropy (n - 1) log y") {
    const EntropyValue v = entropy_Sn(3, 0.5);
    CHECK(v.value == doctest::Approx(2 * std::log(0.5)));
    CHECK(v.derivative == doctest::Approx(4.0));
    CHECK(entropy_Sn(1, 0.3).value == 0.0);
    CHECK_THROWS_AS(entropy_Sn(3, 0.0), DomainError);
    CHECK_THROWS_AS(entropy_Sn(3, -1.0), DomainError);
}

TEST_CASE("parameter validation") {
    BallDiffusionParams p = params(3, 1, 1);
    CHECK_NOTHROW(p.validate());
    p.beta = 2;
    CHECK_THROWS_AS(p.validate(), ValidationError);  // dt must be <= 1e-3 / beta
    p = params(3, 1, 1);
    p.start = BallStart::Point;
    p.start_radius = 1.5;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = params(0, 1, 1);
    CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("paths stay in the closed unit ball") {
    BallDiffusionParams p = params(3, 20, 2);
    p.record_stride = 1;
    const PathEnsemble e = simulate_ball(p);
    for (const auto& path : e.paths)
        for (Eigen::Index k = 0; k < path.cols(); ++k) CHECK_LE(path.col(k).norm(), 1.0);
    CHECK(e.paths[0].col(0).norm() == 0.0);  // origin start
}

TEST_CASE("chunked radial runs concatenate to the full run") {
    BallDiffusionParams p = params(4, 10, 0.2);
    p.record_stride = 10;
    const RadialEnsemble all = simulate_ball_radial(p, 0, 10);
    const RadialEnsemble a = simulate_ball_radial(p, 0, 4);
    const RadialEnsemble b = simulate_ball_radial(p, 4, 6);
    for (std::size_t i = 0; i < 4; ++i) CHECK(all.y[i] == a.y[i]);
    for (std::size_t i = 0; i < 6; ++i) CHECK(all.y[4 + i] == b.y[i]);
    const RadialEnsemble cg = coarse_grain_radius(simulate_ball(p));
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t k = 0; k < cg.y[i].size(); ++k) CHECK(cg.y[i][k] == doctest::Approx(all.y[i][k]).epsilon(1e-15));
}

TEST_CASE("invariant radial density: closed form and normalization") {
    const auto f = predicted_radial_density(params(3, 1, 1));
    CHECK(f(0.5) == doctest::Approx(3 * 0.25).epsilon(1e-6));
    CHECK(f(1.2) == 0.0);
    BallDiffusionParams p = params(2, 1, 1);
    p.Vtilde = quadratic();
    const auto g = predicted_radial_density(p);
    // y exp(-y^2) normalizes by (1 - e^{-1}) / 2.
    const double z = 0.5 * (1 - std::exp(-1.0));
    CHECK(g(0.7) == doctest::Approx(0.7 * std::exp(-0.49) / z).epsilon(1e-6));
}

TEST_CASE("stationary start is already distributed by the invariant law") {
    BallDiffusionParams p = params(3, 4000, 0.01);
    p.Vtilde = quadratic();
    p.start = BallStart::Stationary;
    p.record_stride = 10;
    const RadialEnsemble r = simulate_ball_radial(p, 0, p.n_paths);
    const DensityCheck c = invariant_density_check(r, p, 20, 0.0);
    // Expected L1 of a 20-bin histogram of 8000 draws is about 0.04.
    CHECK(c.l1 <= 0.08);
    double total = 0;
    for (double m : c.predicted_mass) total += m;
    CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("drift estimator recovers a deterministic slope") {
    RadialEnsemble r;
    r.dt_record = 0.01;
    for (int k = 0; k <= 50; ++k) r.times.push_back(0.01 * k);
    for (int p = 0; p < 3; ++p) {
        std::vector<double> y;
        for (double t : r.times) y.push_back(0.1 + 0.2 * p + 0.4 * t);
        r.y.push_back(y);
    }
    const BinnedStats s = estimate_drift(r, 0, 1, 5);
    for (std::size_t i = 0; i < s.mean.size(); ++i)
        if (s.count[i] > 0) CHECK(s.mean[i] == doctest::Approx(0.4));
    CHECK_FALSE(s.reliable[0]);  // fewer than 100 pairs per bin
    CHECK_THROWS_AS(estimate_drift(r, 0, 1, 5, 0), ValidationError);
}

TEST_CASE("deterministic scaling limit is approached as n grows") {
    const auto rows = scaling_limit_demo(1.0, 0.3, {2, 16, 64}, 0.2, 5, 9);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].beta_n == 2.0);
    CHECK(rows[2].median_sup_distance < rows[0].median_sup_distance);
    CHECK_THROWS_AS(scaling_limit_demo(1.0, 0.3, {4, 2}, 0.2, 5, 9), ValidationError);
}
