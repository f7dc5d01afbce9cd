#include "elab/parallel.hpp"
#include "elab/rng.hpp"
#include "elab/stats.hpp"
#include "elab/types.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>

using namespace elab;

TEST_CASE("streams are keyed mt19937_64 engines") {
    const std::uint64_t seed = 0x0123456789abcdefULL, index = 77;
    const auto tag = static_cast<std::uint64_t>(StreamTag::Sampler);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 ref(seq);
    Stream s(seed, index, StreamTag::Sampler);
    for (int k = 0; k < 5; ++k) CHECK(s.engine()() == ref());
}

TEST_CASE("distinct keys give distinct streams; equal keys replay") {
    Stream a(1, 0), b(1, 1), c(2, 0), d(1, 0, StreamTag::Initial), e(1, 0);
    const double x = a.normal();
    CHECK(x != b.normal());
    CHECK(x != c.normal());
    CHECK(x != d.normal());
    CHECK(x == e.normal());
    Stream f(9, 3);
    for (int k = 0; k < 1000; ++k) {
        const double u = f.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("normal draws have unit variance") {
    Stream s(4, 0, StreamTag::Misc);
    std::vector<double> x(20000);
    s.normals(x.data(), x.size());
    const MomentReport r = moment_tests(x, {Tolerance{0, 0.03}, Tolerance{1, 0.03}, Tolerance{0, 0.1}});
    CHECK(r.pass);
    CHECK(r.se_kurtosis == doctest::Approx(std::sqrt(24.0 / 20000)));
}

TEST_CASE("moment tests: tolerance or three standard errors") {
    std::vector<double> x;
    for (int i = 0; i < 100; ++i) x.push_back(i % 2 ? 1.0 : -1.0);
    const MomentReport r = moment_tests(x, {Tolerance{0.5, 0.01}, Tolerance{1.0, 0.02}, std::nullopt});
    CHECK(r.mean == 0.0);
    CHECK(r.variance == doctest::Approx(100.0 / 99.0));
    CHECK(r.excess_kurtosis == doctest::Approx(-2.0));
    CHECK_FALSE(r.mean_check->pass);  // 0.5 is far beyond 3 se = 0.3
    CHECK(r.variance_check->pass);
    CHECK_FALSE(r.kurtosis_check.has_value());
    CHECK_FALSE(r.pass);
    CHECK_THROWS_AS(moment_tests(std::vector<double>(10, 1.0)), ValidationError);
}

TEST_CASE("histograms") {
    Histogram1D h(0, 1, 4);
    for (double x : {0.1, 0.2, 0.3, 0.6, 0.99, 1.0, -0.1}) h.add(x);
    CHECK(h.counts() == std::vector<double>{2, 1, 1, 1});
    CHECK(h.in_range() == 5);
    CHECK(h.outside() == 2);
    const auto mass = h.normalized(Normalization::Mass);
    const auto dens = h.normalized(Normalization::Density);
    CHECK(mass[0] == doctest::Approx(0.4));
    CHECK(dens[0] == doctest::Approx(1.6));
    Histogram1D g(0, 1, 4);
    g.add(0.9);
    h.merge(g);
    CHECK(h.counts()[3] == 2);
    CHECK_THROWS_AS(h.merge(Histogram1D(0, 2, 4)), ValidationError);

    Histogram2D h2(0, 1, 2, 0, 1, 2);
    h2.add(0.25, 0.75);
    h2.add(0.75, 0.25);
    h2.add(0.75, 0.3);
    h2.add(2, 2);
    CHECK(h2.count(0, 1) == 1);
    CHECK(h2.count(1, 0) == 2);
    CHECK(h2.mass()[2] == doctest::Approx(2.0 / 3.0));
    CHECK(l1_mass_distance({0.5, 0.5}, {1, 0}) == 1.0);
}

TEST_CASE("binned accumulators merge like a single pass") {
    Stream s(5, 0, StreamTag::Misc);
    BinnedAccumulator all(0, 1, 5), a(0, 1, 5), b(0, 1, 5);
    for (int k = 0; k < 2000; ++k) {
        const double x = s.uniform(), y = 3 * x + s.normal();
        all.add(x, y);
        (k < 700 ? a : b).add(x, y);
    }
    a.merge(b);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(a.count(i) == all.count(i));
        CHECK(a.mean(i) == doctest::Approx(all.mean(i)).epsilon(1e-12));
        CHECK(a.variance(i) == doctest::Approx(all.variance(i)).epsilon(1e-10));
    }
    const BinnedStats st = summarize(all);
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(st.mean[i] - 3 * st.center[i]) <= 4 * st.stderr[i] + 0.1);

    CHECK_THROWS_AS(binned_regression({1, 2}, {1}, 0, 1, 2), ValidationError);
    CHECK_THROWS_AS(binned_regression({5, 6}, {1, 1}, 0, 1, 2), DomainError);
}

TEST_CASE("smoothed KL") {
    CHECK(kl_smoothed({50, 50}, 1e12, {0.5, 0.5}) == doctest::Approx(0.0).epsilon(1e-10));
    const double p = 0.8;
    CHECK(kl_smoothed({80, 20}, 1e12, {0.5, 0.5}) ==
          doctest::Approx(p * std::log(p / 0.5) + (1 - p) * std::log((1 - p) / 0.5)).epsilon(1e-9));
    // An empty bin is charged 1 / (n_paths * bins) instead of zero.
    CHECK(std::isfinite(kl_smoothed({100, 0}, 10, {0.5, 0.5})));
    CHECK(std::isinf(kl_smoothed({100, 0}, 10, {1.0, 0.0})));
}

TEST_CASE("parallel_for covers every index once and rethrows the lowest failure") {
    for (unsigned threads : {1u, 2u, 3u, 8u}) {
        std::vector<int> hits(101, 0);
        parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i] += 1; });
        for (int h : hits) CHECK(h == 1);
    }
    const auto fail = [](std::size_t i) {
        if (i == 5 || i == 90) throw std::runtime_error("at " + std::to_string(i));
    };
    try {
        parallel_for(100, 4, fail);
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "at 5");
    }
    CHECK(resolve_threads(3) == 3);
    CHECK(resolve_threads(0) >= 1);
}
