#include "elab/generic_core.hpp"
#include "elab/harness/experiments.hpp"
#include "elab/ldp.hpp"
#include "elab/rng.hpp"
#include "elab/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace elab::harness {

Schema sanov_schema() {
    using T = ParamType;
    return {
        {"run.parts", T::StringList, "all", "subset of stirling, tail, empirical"},
        {"stirling.mu", T::DoubleList, "0.5,0.3,0.2", "reference measure"},
        {"stirling.rho", T::DoubleList, "0.333333333333333333,0.333333333333333333,0.333333333333333333",
         "type; n * rho must be integral for every n"},
        {"stirling.n_list", T::IntList, "30,60,120", "sample sizes"},
        {"stirling.check_n", T::Int, "60", "n at which the gap is bounded"},
        {"stirling.tolerance", T::Double, "0.15", "bound on the gap at check_n"},
        {"tail.mu1", T::Double, "0.7", "probability of the first letter"},
        {"tail.threshold", T::Double, "0.5", "A = {rho_1 <= threshold}"},
        {"tail.n_list", T::IntList, "25,50,100,200,400,800", "sample sizes"},
        {"tail.check_n", T::Int, "400", "n at which exponent and rate are compared"},
        {"tail.tolerance", T::Double, "0.02", "allowed |exponent - rate| at check_n"},
        {"empirical.mu", T::DoubleList, "0.5,0.3,0.2", "sampling law"},
        {"empirical.n", T::UInt, "100000", "draws"},
        {"empirical.tolerance", T::Double, "0.01", "total-variation tolerance"},
    };
}

Schema rate_functional_schema() {
    using T = ParamType;
    return {
        {"run.parts", T::StringList, "all", "subset of random, gradient-flow, shift"},
        {"system.K", T::Double, "1", "constant Onsager operator of S(z) = -z^2"},
        {"random.count", T::UInt, "100", "random trajectories"},
        {"random.modes", T::UInt, "5", "Fourier modes per trajectory"},
        {"random.amplitude", T::Double, "1", "coefficient scale"},
        {"random.dt", T::Double, "1e-3", "grid step"},
        {"random.T", T::Double, "1", "horizon"},
        {"random.floor", T::Double, "-1e-10", "lower bound on J"},
        {"flow.z0", T::Double, "1", "initial value of the gradient flow"},
        {"flow.dt", T::Double, "1e-3", "RK4 step"},
        {"flow.T", T::Double, "5", "horizon"},
        {"flow.tolerance", T::Double, "1e-3", "upper bound on J along the flow"},
        {"shift.constant", T::Double, "7.5", "constant added to S"},
        {"shift.tolerance", T::Double, "1e-12", "allowed change of J"},
    };
}

GenericSystem rate_functional_flow_system(double K) {
    const ScalarField S{1, [](const Vec& z) { return -z(0) * z(0); }, [](const Vec& z, Vec& g) {
                            g.resize(1);
                            g(0) = -2.0 * z(0);
                        }};
    GenericSystem gs;
    gs.name = "gradient-flow";
    gs.d = 1;
    gs.E = ScalarField{1, [](const Vec&) { return 0.0; }, [](const Vec&, Vec& g) { g.setZero(1); }};
    gs.S = S;
    gs.J = constant_operator(Mat::Zero(1, 1));
    gs.K = constant_operator(Mat::Constant(1, 1, 0.5 * K));
    gs.Sigma = constant_operator(Mat::Constant(1, 1, std::sqrt(0.5 * K)));
    return gs;
}

namespace {

std::vector<std::uint64_t> counts_for(const std::vector<double>& rho, long long n) {
    std::vector<std::uint64_t> c(rho.size());
    long long total = 0;
    for (std::size_t j = 0; j < rho.size(); ++j) {
        const double x = rho[j] * static_cast<double>(n);
        const long long k = std::llround(x);
        if (std::abs(x - static_cast<double>(k)) > 1e-6 || k < 0)
            throw ValidationError("stirling: n * rho is not integral for n = " + std::to_string(n));
        c[j] = static_cast<std::uint64_t>(k);
        total += k;
    }
    if (total != n) throw ValidationError("stirling: counts do not sum to n = " + std::to_string(n));
    return c;
}

void require_probability(const std::vector<double>& p, const std::string& key) {
    DiscreteMeasure m{p, {}};
    try {
        m.validate();
    } catch (const std::exception& e) {
        throw ValidationError(key + ": " + e.what());
    }
}

}  // namespace

void run_sanov(RunContext& ctx) {
    const auto& cfg = ctx.config();
    const auto mu = cfg.get_doubles("stirling.mu");
    auto rho = cfg.get_doubles("stirling.rho");
    const auto n_list = cfg.get_ints("stirling.n_list");
    const long long check_n = cfg.get_int("stirling.check_n");
    const double mu1 = cfg.get_double("tail.mu1"), thr = cfg.get_double("tail.threshold");
    const auto tail_n = cfg.get_ints("tail.n_list");
    const long long tail_check = cfg.get_int("tail.check_n");
    const auto emu = cfg.get_doubles("empirical.mu");
    const std::size_t en = cfg.get_uint("empirical.n");

    std::vector<std::vector<std::uint64_t>> counts;
    if (cfg.has_part("stirling")) {
        require_probability(mu, "stirling.mu");
        if (rho.size() != mu.size()) throw ValidationError("stirling.rho and stirling.mu differ in length");
        if (std::find(n_list.begin(), n_list.end(), check_n) == n_list.end())
            throw ValidationError("stirling.check_n must be in stirling.n_list");
        for (long long n : n_list) {
            if (n <= 0) throw ValidationError("stirling.n_list entries must be positive");
            counts.push_back(counts_for(rho, n));
        }
    }
    if (cfg.has_part("tail")) {
        if (!(mu1 > 0 && mu1 < 1) || !(thr >= 0 && thr <= 1))
            throw ValidationError("tail.mu1 must be in (0, 1) and tail.threshold in [0, 1]");
        if (std::find(tail_n.begin(), tail_n.end(), tail_check) == tail_n.end())
            throw ValidationError("tail.check_n must be in tail.n_list");
        for (long long n : tail_n)
            if (n <= 0) throw ValidationError("tail.n_list entries must be positive");
    }
    if (cfg.has_part("empirical")) {
        require_probability(emu, "empirical.mu");
        if (en == 0) throw ValidationError("empirical.n must be positive");
    }

    if (cfg.has_part("stirling")) {
        auto w = ctx.csv("stirling.csv", {"n", "gap"});
        std::vector<double> gaps;
        for (std::size_t i = 0; i < n_list.size(); ++i) {
            gaps.push_back(stirling_gap(counts[i], mu));
            *w << n_list[i] << gaps.back();
            w->end_row();
        }
        const auto at = static_cast<std::size_t>(std::find(n_list.begin(), n_list.end(), check_n) - n_list.begin());
        const double tol = cfg.get_double("stirling.tolerance");
        ctx.check("A12", "Stirling gap at n = " + std::to_string(check_n), gaps[at] <= tol, gaps[at], tol);
        bool decreasing = true;
        for (std::size_t i = 1; i < gaps.size(); ++i)
            if (!(n_list[i] > n_list[i - 1] && gaps[i] < gaps[i - 1])) decreasing = false;
        ctx.check("A12", "Stirling gap strictly decreasing in n", decreasing, decreasing ? 1.0 : 0.0, 1.0);
    }

    if (cfg.has_part("tail")) {
        auto w = ctx.csv("sanov_tail.csv", {"n", "exponent", "rate"});
        for (long long n : tail_n) {
            const SanovTail t = sanov_tail(static_cast<std::uint64_t>(n), mu1, thr);
            *w << n << t.exponent << t.rate;
            w->end_row();
            if (n == tail_check) {
                const double d = std::abs(t.exponent - t.rate);
                const double tol = cfg.get_double("tail.tolerance");
                ctx.check("A12", "binomial tail exponent vs rate at n = " + std::to_string(n), d <= tol, d, tol,
                          num(t.exponent) + " vs " + num(t.rate));
            }
        }
    }

    if (cfg.has_part("empirical")) {
        std::vector<double> cdf(emu.size());
        std::partial_sum(emu.begin(), emu.end(), cdf.begin());
        Stream rng(derive_seed(cfg.seed, 1), 0, StreamTag::Misc);
        std::vector<std::size_t> samples(en);
        for (auto& s : samples) {
            const double u = rng.uniform() * cdf.back();
            s = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            s = std::min(s, emu.size() - 1);
        }
        const DiscreteMeasure emp = empirical_measure(samples, emu.size());
        const double tv = total_variation(emp, DiscreteMeasure{emu, {}});
        auto w = ctx.csv("empirical.csv", {"symbol", "mu", "empirical"});
        for (std::size_t j = 0; j < emu.size(); ++j) {
            *w << j << emu[j] << emp.weights[j];
            w->end_row();
        }
        const double tol = cfg.get_double("empirical.tolerance");
        ctx.check("", "total variation of the empirical measure", tv <= tol, tv, tol);
    }
}

void run_rate_functional(RunContext& ctx) {
    const auto& cfg = ctx.config();
    const double Kc = cfg.get_double("system.K");
    const std::size_t count = cfg.get_uint("random.count");
    const std::size_t modes = cfg.get_uint("random.modes");
    const double amp = cfg.get_double("random.amplitude");
    const double rdt = cfg.get_double("random.dt"), rT = cfg.get_double("random.T");
    const double z0 = cfg.get_double("flow.z0");
    const double fdt = cfg.get_double("flow.dt"), fT = cfg.get_double("flow.T");
    const double shift = cfg.get_double("shift.constant");

    if (!(Kc > 0)) throw ValidationError("system.K must be positive");
    if (cfg.has_part("random") || cfg.has_part("shift")) {
        step_count(rdt, rT);
        if (count == 0) throw ValidationError("random.count must be positive");
    }
    if (cfg.has_part("gradient-flow") || cfg.has_part("shift")) step_count(fdt, fT);

    const ScalarField S = rate_functional_flow_system(Kc).S;
    const ScalarField S_shift{1, [shift](const Vec& z) { return -z(0) * z(0) + shift; }, S.gradient};
    const OperatorField K = constant_operator(Mat::Constant(1, 1, Kc));

    // Random smooth trajectories: a constant plus a few sine and cosine modes.
    std::vector<Trajectory> random;
    if (cfg.has_part("random") || cfg.has_part("shift")) {
        const std::size_t steps = step_count(rdt, rT);
        for (std::size_t r = 0; r < count; ++r) {
            Stream rng(derive_seed(cfg.seed, 1), r, StreamTag::Misc);
            std::vector<double> c(2 * modes + 1);
            rng.normals(c.data(), c.size());
            Trajectory tr;
            for (std::size_t k = 0; k <= steps; ++k) {
                const double t = static_cast<double>(k) * rdt;
                double z = amp * c[0];
                for (std::size_t m = 1; m <= modes; ++m) {
                    const double w = std::numbers::pi * static_cast<double>(m) * t / rT;
                    z += amp * (c[2 * m - 1] * std::sin(w) + c[2 * m] * std::cos(w)) / static_cast<double>(m);
                }
                tr.times.push_back(t);
                tr.states.push_back(Vec::Constant(1, z));
            }
            random.push_back(std::move(tr));
        }
    }

    // Gradient flow zdot = K grad S / 2 through the GENERIC integrator with E = 0, J = 0, K / 2.
    Trajectory flow, reversed;
    if (cfg.has_part("gradient-flow") || cfg.has_part("shift")) {
        const GenericSystem gs = rate_functional_flow_system(Kc);
        flow = integrate_ode(gs, Vec::Constant(1, z0), fdt, fT);
        reversed = flow;
        std::reverse(reversed.states.begin(), reversed.states.end());
    }

    auto w = ctx.csv("rate_functional.csv", {"trajectory", "J", "J_shifted"});
    if (cfg.has_part("random")) {
        double lowest = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < random.size(); ++r) {
            const double J = rate_functional_J(random[r], S, K);
            lowest = std::min(lowest, J);
            *w << "random_" + std::to_string(r) << J << rate_functional_J(random[r], S_shift, K);
            w->end_row();
        }
        const double floor = cfg.get_double("random.floor");
        ctx.check("A13", "J on random trajectories", lowest >= floor, lowest, floor);
    }
    if (cfg.has_part("gradient-flow")) {
        const double Jf = rate_functional_J(flow, S, K);
        const double Jr = rate_functional_J(reversed, S, K);
        *w << std::string("gradient_flow") << Jf << rate_functional_J(flow, S_shift, K);
        w->end_row();
        *w << std::string("reversed") << Jr << rate_functional_J(reversed, S_shift, K);
        w->end_row();
        const double tol = cfg.get_double("flow.tolerance");
        ctx.check("A13", "J on the RK4 gradient flow", Jf <= tol, Jf, tol);
        const double gap = S(flow.states.back()) - S(flow.states.front());
        ctx.check("", "reversed flow J minus entropy gap", std::abs(Jr - gap - Jf) <= 1e-9, std::abs(Jr - gap - Jf),
                  1e-9);
    }
    if (cfg.has_part("shift")) {
        double worst = 0;
        for (const auto& tr : random) worst = std::max(worst, std::abs(rate_functional_J(tr, S, K) -
                                                                         rate_functional_J(tr, S_shift, K)));
        worst = std::max(worst, std::abs(rate_functional_J(flow, S, K) - rate_functional_J(flow, S_shift, K)));
        const double tol = cfg.get_double("shift.tolerance");
        ctx.check("A13", "J invariant under S + constant", worst <= tol, worst, tol);
    }
}

}  // namespace elab::harness
