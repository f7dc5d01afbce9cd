#include "elab/ball_cg.hpp"
#include "elab/harness/experiments.hpp"
#include "elab/parallel.hpp"
#include "elab/types.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace elab::harness {

Schema core_example_schema() {
    using T = ParamType;
    return {
        {"run.parts", T::StringList, "all", "subset of drift, density, beta, scaling"},
        {"ball.n", T::Int, "3", "dimension of the ball"},
        {"ball.beta", T::Double, "1", "inverse temperature for the drift and density parts"},
        {"drift.dt", T::Double, "1e-4", "time step"},
        {"drift.T", T::Double, "1.5", "horizon per path (stationary start)"},
        {"drift.paths", T::UInt, "2000", "number of paths"},
        {"drift.chunk", T::UInt, "50", "paths per work unit; fixes the merge order"},
        {"drift.lo", T::Double, "0.05", "left edge of the drift bins"},
        {"drift.hi", T::Double, "0.95", "right edge of the drift bins"},
        {"drift.bins", T::UInt, "9", "number of drift bins"},
        {"drift.min_increments", T::UInt, "200000", "minimum increments in the bin around y = 0.5"},
        {"drift.tolerance", T::Double, "0.1", "relative tolerance of the drift at y = 0.5"},
        {"drift.max_runtime", T::Double, "180", "runtime budget in seconds"},
        {"density.dt", T::Double, "1e-3", "time step"},
        {"density.T", T::Double, "20", "horizon per path (start at the origin)"},
        {"density.paths", T::UInt, "2000", "number of paths"},
        {"density.stride", T::UInt, "20", "steps between pooled samples"},
        {"density.burn_in", T::Double, "0.5", "discarded fraction of each path"},
        {"density.bins", T::UInt, "50", "histogram bins on [0, 1]"},
        {"density.tolerance", T::Double, "0.05", "L1 tolerance"},
        {"beta.values", T::DoubleList, "0.5,1,2", "inverse temperatures; the one equal to 1 is the reference"},
        {"beta.dt", T::Double, "1e-4", "time step"},
        {"beta.T", T::Double, "1.5", "horizon per path (stationary start)"},
        {"beta.paths", T::UInt, "2000", "paths per beta"},
        {"beta.check_centers", T::DoubleList, "0.3,0.5,0.7", "bin centres compared across beta"},
        {"beta.z", T::Double, "2", "allowed difference in combined standard errors"},
        {"scaling.beta_inf", T::Double, "1", "limit inverse temperature per dimension"},
        {"scaling.y0", T::Double, "0.2", "initial radius"},
        {"scaling.n_list", T::IntList, "2,8,32", "dimensions"},
        {"scaling.T", T::Double, "0.4", "horizon (before the limit ODE reaches the boundary)"},
        {"scaling.paths", T::UInt, "100", "paths per dimension"},
    };
}

namespace {

struct DriftRun {
    BinnedAccumulator acc;
    double seconds;
};

// Chunks of a fixed size are simulated independently and merged in chunk order, so the
// floating-point sums do not depend on the thread count.
DriftRun run_drift(const BallDiffusionParams& base, std::size_t paths, std::size_t chunk, double lo, double hi,
                   std::size_t bins, unsigned threads) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n_chunks = (paths + chunk - 1) / chunk;
    std::vector<BinnedAccumulator> parts(n_chunks, BinnedAccumulator(lo, hi, bins));
    BallDiffusionParams p = base;
    p.threads = 1;
    parallel_for(n_chunks, threads, [&](std::size_t c) {
        const std::size_t first = c * chunk;
        const std::size_t count = std::min(chunk, paths - first);
        const RadialEnsemble r = simulate_ball_radial(p, first, count);
        accumulate_drift(r, parts[c], 1, 0.0);
    });
    BinnedAccumulator acc(lo, hi, bins);
    for (const auto& a : parts) acc.merge(a);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {acc, secs};
}

std::size_t bin_near(const BinnedAccumulator& acc, double y) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < acc.bins(); ++i)
        if (std::abs(acc.center(i) - y) < std::abs(acc.center(best) - y)) best = i;
    return best;
}

void write_drift_rows(CsvWriter& w, const BinnedAccumulator& acc, int n, double beta) {
    const BinnedStats s = summarize(acc, 100.0);
    const double width = (acc.hi() - acc.lo()) / static_cast<double>(acc.bins());
    for (std::size_t i = 0; i < acc.bins(); ++i) {
        w << s.center[i] << s.mean[i] << s.stderr[i] << s.count[i] << beta
          << acc.lo() + static_cast<double>(i) * width << acc.lo() + static_cast<double>(i + 1) * width
          << (n - 1) / (beta * s.center[i]) << (s.reliable[i] ? 1 : 0);
        w.end_row();
    }
}

const std::vector<std::string> kDriftHeader = {"bin_center", "estimate",  "stderr",   "count", "beta",
                                               "bin_lo",     "bin_hi",    "predicted", "reliable"};

RadialPotential quadratic_potential() {
    return {[](double y) { return 0.5 * y * y; }, [](double y) { return y; }};
}

}  // namespace

void run_core_example(RunContext& ctx) {
    const auto& cfg = ctx.config();
    const unsigned threads = resolve_threads(ctx.threads());

    BallDiffusionParams base;
    base.n = static_cast<int>(cfg.get_int("ball.n"));
    base.beta = cfg.get_double("ball.beta");

    BallDiffusionParams drift = base;
    drift.dt = cfg.get_double("drift.dt");
    drift.T = cfg.get_double("drift.T");
    drift.n_paths = cfg.get_uint("drift.paths");
    drift.start = BallStart::Stationary;
    drift.seed = derive_seed(cfg.seed, 1);
    const std::size_t drift_chunk = cfg.get_uint("drift.chunk");
    if (drift_chunk == 0) throw ValidationError("drift.chunk must be positive");

    BallDiffusionParams dens = base;
    dens.dt = cfg.get_double("density.dt");
    dens.T = cfg.get_double("density.T");
    dens.n_paths = cfg.get_uint("density.paths");
    dens.record_stride = cfg.get_uint("density.stride");
    dens.start = BallStart::Origin;
    dens.seed = derive_seed(cfg.seed, 2);

    const auto betas = cfg.get_doubles("beta.values");
    if (std::find(betas.begin(), betas.end(), 1.0) == betas.end())
        throw ValidationError("beta.values must contain the reference value 1");

    if (cfg.has_part("drift")) drift.validate();
    if (cfg.has_part("density")) dens.validate();
    if (cfg.has_part("beta"))
        for (double b : betas) {
            BallDiffusionParams p = base;
            p.beta = b;
            p.dt = cfg.get_double("beta.dt");
            p.T = cfg.get_double("beta.T");
            p.n_paths = cfg.get_uint("beta.paths");
            p.validate();
        }

    if (cfg.has_part("drift")) {
        const double lo = cfg.get_double("drift.lo"), hi = cfg.get_double("drift.hi");
        const auto bins = static_cast<std::size_t>(cfg.get_uint("drift.bins"));
        const DriftRun r = run_drift(drift, drift.n_paths, drift_chunk, lo, hi, bins, threads);
        auto w = ctx.csv("drift.csv", kDriftHeader);
        write_drift_rows(*w, r.acc, drift.n, drift.beta);
        ctx.overlay("drift.csv", "(n - 1) / (beta * y), n = " + std::to_string(drift.n) + ", beta = " + num(drift.beta));
        const std::size_t b = bin_near(r.acc, 0.5);
        const double target = (drift.n - 1) / (drift.beta * 0.5);
        const double est = r.acc.mean(b);
        const double rel = std::abs(est - target) / target;
        const double tol = cfg.get_double("drift.tolerance");
        ctx.check("A1", "drift near y = 0.5", rel <= tol, rel, tol,
                  "estimate " + num(est) + " +- " + num(r.acc.stderr_of_mean(b)) + " vs " + num(target) + " from " +
                      num(r.acc.count(b)) + " increments");
        const double need = static_cast<double>(cfg.get_uint("drift.min_increments"));
        ctx.check("A1", "increments in bin", r.acc.count(b) >= need, r.acc.count(b), need);
        const double budget = cfg.get_double("drift.max_runtime");
        ctx.check("A1", "runtime seconds", r.seconds <= budget, r.seconds, budget);
    }

    if (cfg.has_part("density")) {
        const auto bins = static_cast<std::size_t>(cfg.get_uint("density.bins"));
        const double burn = cfg.get_double("density.burn_in");
        const double tol = cfg.get_double("density.tolerance");
        auto w = ctx.csv("histogram.csv", {"bin_center", "empirical", "predicted", "potential", "bin_lo", "bin_hi",
                                           "count", "predicted_mass"});
        ctx.overlay("histogram.csv", "none: n * y^(n - 1); quadratic: y^(n - 1) * exp(-beta * y^2 / 2) / Z, n = " +
                                         std::to_string(dens.n) + ", beta = " + num(dens.beta));
        for (int variant = 0; variant < 2; ++variant) {
            BallDiffusionParams p = dens;
            if (variant == 1) p.Vtilde = quadratic_potential();
            p.seed = derive_seed(cfg.seed, 2 + static_cast<std::uint64_t>(variant));
            Histogram1D h(0.0, 1.0 + 1e-12, bins);
            const std::size_t chunk = 50;
            const std::size_t n_chunks = (p.n_paths + chunk - 1) / chunk;
            std::vector<Histogram1D> parts(n_chunks, Histogram1D(0.0, 1.0 + 1e-12, bins));
            BallDiffusionParams q = p;
            q.threads = 1;
            parallel_for(n_chunks, threads, [&](std::size_t c) {
                const std::size_t first = c * chunk;
                const RadialEnsemble r = simulate_ball_radial(q, first, std::min(chunk, p.n_paths - first));
                accumulate_radial_histogram(r, parts[c], burn);
            });
            for (const auto& part : parts) h.merge(part);
            const DensityCheck dc = density_check_from_histogram(h, p);
            const auto dens_emp = h.normalized(Normalization::Density);
            const std::string name = variant == 0 ? "none" : "quadratic";
            for (std::size_t i = 0; i < h.bins(); ++i) {
                *w << h.center(i) << dens_emp[i] << dc.predicted_density[i] << name << h.edge(i) << h.edge(i + 1)
                   << h.counts()[i] << dc.predicted_mass[i];
                w->end_row();
            }
            ctx.check("A2", "radial histogram L1, potential " + name, dc.l1 <= tol, dc.l1, tol,
                      num(h.in_range()) + " pooled samples");
        }
    }

    if (cfg.has_part("beta")) {
        const double lo = cfg.get_double("drift.lo"), hi = cfg.get_double("drift.hi");
        const auto bins = static_cast<std::size_t>(cfg.get_uint("drift.bins"));
        std::vector<BinnedAccumulator> accs;
        auto w = ctx.csv("drift_beta.csv", kDriftHeader);
        for (std::size_t i = 0; i < betas.size(); ++i) {
            BallDiffusionParams p = base;
            p.beta = betas[i];
            p.dt = cfg.get_double("beta.dt");
            p.T = cfg.get_double("beta.T");
            p.n_paths = cfg.get_uint("beta.paths");
            p.start = BallStart::Stationary;
            p.seed = derive_seed(cfg.seed, 10 + i);
            accs.push_back(run_drift(p, p.n_paths, drift_chunk, lo, hi, bins, threads).acc);
            write_drift_rows(*w, accs.back(), p.n, p.beta);
        }
        const std::size_t ref = static_cast<std::size_t>(std::find(betas.begin(), betas.end(), 1.0) - betas.begin());
        const double z = cfg.get_double("beta.z");
        for (std::size_t i = 0; i < betas.size(); ++i) {
            if (i == ref) continue;
            for (double c : cfg.get_doubles("beta.check_centers")) {
                const std::size_t b = bin_near(accs[i], c);
                const double scaled = betas[i] * accs[i].mean(b);
                const double se = std::hypot(betas[i] * accs[i].stderr_of_mean(b), accs[ref].stderr_of_mean(b));
                const double diff = std::abs(scaled - accs[ref].mean(b));
                ctx.check("A3", "beta " + num(betas[i]) + " bin " + num(accs[i].center(b)), diff <= z * se,
                          se > 0 ? diff / se : diff, z,
                          "beta*drift " + num(scaled) + " vs " + num(accs[ref].mean(b)) + ", value in standard errors");
            }
        }
    }

    if (cfg.has_part("scaling")) {
        std::vector<int> ns;
        for (auto v : cfg.get_ints("scaling.n_list")) ns.push_back(static_cast<int>(v));
        const auto rows = scaling_limit_demo(cfg.get_double("scaling.beta_inf"), cfg.get_double("scaling.y0"), ns,
                                             cfg.get_double("scaling.T"), cfg.get_uint("scaling.paths"),
                                             derive_seed(cfg.seed, 20), threads);
        auto w = ctx.csv("scaling.csv", {"n", "beta_n", "median_sup_distance"});
        bool decreasing = true;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            *w << rows[i].n << rows[i].beta_n << rows[i].median_sup_distance;
            w->end_row();
            if (i > 0 && rows[i].median_sup_distance >= rows[i - 1].median_sup_distance) decreasing = false;
        }
        ctx.info("", "scaling limit distance decreases with n", decreasing ? 1.0 : 0.0,
                 "last median sup distance " + num(rows.back().median_sup_distance));

        auto pw = ctx.csv("pdelta.csv", {"n", "y", "pdelta_mass", "shell_estimate"});
        for (int n : {1, 2, 3, 5, 10})
            for (double y : {0.25, 0.5, 0.75}) {
                *pw << n << y << pdelta_mass_radial(n, y).mass << pdelta_shell_estimate(n, y, 1e-6);
                pw->end_row();
            }
    }
}

}  // namespace elab::harness
