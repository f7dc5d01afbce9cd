#include "elab/pde_gf.hpp"
#include "elab/types.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace elab;

namespace {

double quad(double x) { return 0.5 * x * x; }
double dquad(double x) { return x; }

CellDensity1D gaussian(double lo, double hi, std::size_t cells, double sigma) {
    return CellDensity1D::sample(lo, hi, cells, [sigma](double x) {
        return std::exp(-0.5 * x * x / (sigma * sigma)) / (sigma * std::sqrt(2 * std::numbers::pi));
    });
}

double variance(const CellDensity1D& r) {
    double m0 = 0, m1 = 0, m2 = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        m0 += r.values[i];
        m1 += r.values[i] * r.x(i);
        m2 += r.values[i] * r.x(i) * r.x(i);
    }
    return m2 / m0 - (m1 / m0) * (m1 / m0);
}

}  // namespace

TEST_CASE("structure constructors") {
    const GradientStructure1D w2 = wasserstein_power(2.0);
    CHECK(w2.ds(1.0) == doctest::Approx(2.0));
    CHECK(w2.ds(3.0) == doctest::Approx(6.0));
    CHECK(w2.s(1.0) == doctest::Approx(0.0));
    const GradientStructure1D w1 = wasserstein_power(1.0);
    CHECK(w1.ds(std::exp(2.0)) == doctest::Approx(3.0));
    const GradientStructure1D gen = wasserstein([](double u) { return u * u; }, [](double u) { return 2 * u; });
    for (double u : {0.1, 0.5, 2.0, 7.0}) CHECK(gen.ds(u) == doctest::Approx(w2.ds(u)).epsilon(1e-8));
    CHECK_THROWS_AS(wasserstein_power(0.0), ValidationError);

    const GradientStructure1D zr = zero_range([](double u) { return u * u; }, [](double u) { return 2 * u; });
    CHECK(zr.mobility(3.0) == doctest::Approx(9.0));
    CHECK(zr.ds(3.0) == doctest::Approx(2 * std::log(3.0)));
    CHECK(zr.s(1.0) == doctest::Approx(-2.0));
    const GradientStructure1D hc = heat_conduction([](double u) { return u * u; });
    CHECK(hc.s(2.0) == doctest::Approx(-std::log(2.0)));
    CHECK(hc.ds(2.0) == doctest::Approx(-0.5));
    CHECK(hc.d2s(2.0) == doctest::Approx(0.25));

    GradientStructure1D bad = w1;
    bad.mobility = [](double u) { return -u; };
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = w1;
    bad.dV = dquad;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("discrete Gibbs state is an exact steady state of Fokker-Planck") {
    const GradientStructure1D fp = fokker_planck(quad, dquad);
    const CellDensity1D g = CellDensity1D::sample(-5, 5, 100, [](double x) { return std::exp(-0.5 * x * x); });
    double worst = 0;
    for (double v : rhs(fp, g)) worst = std::max(worst, std::abs(v));
    CHECK(worst <= 1e-12);
}

TEST_CASE("no-flux boundaries conserve mass exactly") {
    const GradientStructure1D fp = fokker_planck(quad, dquad);
    const CellDensity1D r = CellDensity1D::sample(-3, 4, 70, [](double x) { return 1.0 + std::sin(x); });
    double total = 0;
    for (double v : rhs(fp, r)) total += v;
    CHECK(std::abs(total) * r.dx() <= 1e-12);
}

TEST_CASE("Fokker-Planck: entropy increases, mass is conserved, limit is Gibbs") {
    const GradientStructure1D fp = fokker_planck(quad, dquad);
    const CellDensity1D r0 = CellDensity1D::sample(-5, 5, 100, [](double) { return 0.1; });
    std::vector<double> every;
    for (int k = 1; k <= 800; ++k) every.push_back(k * 1e-2);
    const auto snaps = solve(fp, r0, 1e-3, 8, every);
    const auto S = entropy_monitor(snaps, fp);
    for (std::size_t k = 1; k < S.size(); ++k) {
        CHECK(S[k] >= S[k - 1] - 1e-12);
        CHECK(std::abs(snaps[k].rho.mass() - r0.mass()) <= 1e-12);
    }
    CellDensity1D gibbs = CellDensity1D::sample(-5, 5, 100, [](double x) { return std::exp(-0.5 * x * x); });
    const double Z = gibbs.mass();
    for (auto& v : gibbs.values) v /= Z;
    CHECK(l1_distance(snaps.back().rho, gibbs) <= 1e-3);
}

TEST_CASE("heat equation variance grows as 2t") {
    const GradientStructure1D w1 = wasserstein_power(1.0);
    const CellDensity1D r0 = gaussian(-10, 10, 200, 0.5);
    const auto snaps = solve(w1, r0, 1e-3, 1, {0.5, 1.0});
    CHECK(variance(snaps[1].rho) - variance(r0) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(variance(snaps[2].rho) - variance(r0) == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("two discretizations of d_xx(u^2) converge to each other") {
    const GradientStructure1D wp = wasserstein_power(2.0);
    const GradientStructure1D zr = zero_range([](double u) { return u * u; }, [](double u) { return 2 * u; });
    auto bump = [](double x) { return 0.5 + std::exp(-x * x); };
    std::vector<double> d;
    for (std::size_t N : {50, 100, 200}) {
        const CellDensity1D r = CellDensity1D::sample(-5, 5, N, bump);
        d.push_back(sup_distance(rhs(wp, r), rhs(zr, r)));
    }
    CHECK(d[1] < d[0]);
    CHECK(d[2] < d[1]);
    CHECK(std::log2(d[1] / d[2]) >= 1.0);
}

TEST_CASE("stability bound is enforced") {
    const GradientStructure1D w1 = wasserstein_power(1.0);
    const CellDensity1D r0 = gaussian(-10, 10, 200, 0.5);
    const double limit = max_stable_dt(w1, r0);
    CHECK(limit == doctest::Approx(0.4 * 0.01));  // m s'' = 1 for the linear heat equation
    CHECK_THROWS_AS(solve(w1, r0, 2 * limit, 1, {}), ValidationError);
    CHECK_THROWS_AS(solve(w1, r0, 1e-3, 1, {2.0}), ValidationError);
}

TEST_CASE("cell densities") {
    const CellDensity1D r = CellDensity1D::sample(0, 1, 4, [](double x) { return x; });
    CHECK(r.x(0) == doctest::Approx(0.125));
    CHECK(r.mass() == doctest::Approx(0.5));
    CHECK_THROWS_AS(CellDensity1D::sample(0, 1, 1, [](double) { return 1.0; }), ValidationError);
    CellDensity1D neg = r;
    neg.values[1] = -1;
    CHECK_THROWS_AS(rhs(wasserstein_power(1.0), neg), DomainError);
    CHECK_THROWS_AS(l1_distance(r, CellDensity1D::sample(0, 2, 4, [](double) { return 1.0; })), ValidationError);
}
