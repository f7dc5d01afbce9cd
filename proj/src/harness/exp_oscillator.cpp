#include "elab/generic_core.hpp"
#include "elab/generic_sde.hpp"
#include "elab/harness/experiments.hpp"
#include "elab/parallel.hpp"
#include "elab/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace elab::harness {

Schema oscillator_sde_schema() {
    using T = ParamType;
    return {
        {"run.parts", T::StringList, "all", "subset of ode, energy, gibbs"},
        {"osc.k", T::Double, "1", "spring constant"},
        {"osc.m", T::Double, "1", "mass"},
        {"osc.gamma", T::Double, "0.5", "friction"},
        {"osc.beta", T::Double, "1", "inverse temperature"},
        {"osc.Q0", T::Double, "1", "initial Q"},
        {"osc.P0", T::Double, "0", "initial P"},
        {"osc.e0", T::Double, "0", "initial e"},
        {"ode.dt", T::Double, "1e-3", "RK4 step"},
        {"ode.T", T::Double, "20", "horizon"},
        {"ode.csv_stride", T::UInt, "10", "write every k-th step"},
        {"ode.energy_tolerance", T::Double, "1e-8", "max |E(t) - E(0)|"},
        {"ode.entropy_tolerance", T::Double, "1e-12", "allowed negative entropy increment"},
        {"energy.paths", T::UInt, "1000", "SDE paths per step size"},
        {"energy.dt", T::Double, "1e-3", "coarse step; dt/2 is also run"},
        {"energy.T", T::Double, "10", "horizon"},
        {"energy.record", T::Double, "0.1", "spacing of the recorded grid"},
        {"energy.C", T::Double, "10", "constant in mean |E_T - E_0| <= C dt"},
        {"energy.ratio_lo", T::Double, "1.6", "lower end of the accepted halving ratio"},
        {"energy.ratio_hi", T::Double, "2.6", "upper end of the accepted halving ratio"},
        {"energy.twin_states", T::UInt, "1000", "states for the negated-noise comparison"},
        {"energy.twin_tolerance", T::Double, "1e-12", "max energy-increment gap of the twin steps"},
        {"gibbs.paths", T::UInt, "500", "SDE paths"},
        {"gibbs.dt", T::Double, "2e-3", "step"},
        {"gibbs.T", T::Double, "200", "horizon"},
        {"gibbs.burn_in", T::Double, "0.5", "discarded fraction of each path"},
        {"gibbs.stride", T::UInt, "50", "steps between pooled samples"},
        {"gibbs.bins", T::UInt, "60", "histogram bins on [-5, 5]"},
        {"gibbs.tolerance", T::Double, "0.05", "relative tolerance of Var(Q) and Var(P)"},
        {"gibbs.csv_paths", T::UInt, "3", "paths written to oscillator_paths.csv"},
    };
}

namespace {

std::size_t stride_for(double record, double dt) {
    const double r = record / dt;
    const auto s = static_cast<std::size_t>(std::llround(r));
    if (s == 0 || std::abs(r - static_cast<double>(s)) > 1e-9 * r)
        throw ValidationError("record spacing must be a positive multiple of dt");
    return s;
}

}  // namespace

void run_oscillator_sde(RunContext& ctx) {
    const auto& cfg = ctx.config();
    const unsigned threads = resolve_threads(ctx.threads());

    OscillatorParams op;
    op.k = cfg.get_double("osc.k");
    op.m = cfg.get_double("osc.m");
    op.gamma = cfg.get_double("osc.gamma");
    op.beta = cfg.get_double("osc.beta");
    op.validate();
    Vec z0(3);
    z0 << cfg.get_double("osc.Q0"), cfg.get_double("osc.P0"), cfg.get_double("osc.e0");
    const GenericSystem sys = damped_oscillator_system(op);

    const double ode_dt = cfg.get_double("ode.dt"), ode_T = cfg.get_double("ode.T");
    SdeRunConfig e1;
    e1.dt = cfg.get_double("energy.dt");
    e1.T = cfg.get_double("energy.T");
    e1.n_paths = cfg.get_uint("energy.paths");
    e1.threads = threads;
    e1.seed = derive_seed(cfg.seed, 1);
    SdeRunConfig e2 = e1;
    e2.dt = 0.5 * e1.dt;
    e2.seed = derive_seed(cfg.seed, 2);
    SdeRunConfig gb;
    gb.dt = cfg.get_double("gibbs.dt");
    gb.T = cfg.get_double("gibbs.T");
    gb.n_paths = cfg.get_uint("gibbs.paths");
    gb.record_stride = cfg.get_uint("gibbs.stride");
    gb.threads = threads;
    gb.seed = derive_seed(cfg.seed, 3);
    const double burn = cfg.get_double("gibbs.burn_in");

    if (cfg.has_part("ode")) {
        step_count(ode_dt, ode_T);
        if (cfg.get_uint("ode.csv_stride") == 0) throw ValidationError("ode.csv_stride must be positive");
    }
    if (cfg.has_part("energy")) {
        const double rec = cfg.get_double("energy.record");
        e1.record_stride = stride_for(rec, e1.dt);
        e2.record_stride = stride_for(rec, e2.dt);
        e1.validate();
        e2.validate();
    }
    if (cfg.has_part("gibbs")) {
        gb.validate();
        if (!(burn >= 0.0 && burn < 1.0)) throw ValidationError("gibbs.burn_in must be in [0, 1)");
    }

    if (cfg.has_part("ode")) {
        const Trajectory tr = integrate_ode(sys, z0, ode_dt, ode_T);
        const EnergyEntropyMonitor mon = monitor_energy_entropy(tr, sys);
        auto w = ctx.csv("ode.csv", {"t", "Q", "P", "e", "E", "S"});
        const std::size_t stride = cfg.get_uint("ode.csv_stride");
        for (std::size_t k = 0; k < tr.times.size(); k += stride) {
            const Vec& z = tr.states[k];
            *w << tr.times[k] << z(0) << z(1) << z(2) << sys.E(z) << sys.S(z);
            w->end_row();
        }
        const double etol = cfg.get_double("ode.energy_tolerance");
        const double stol = cfg.get_double("ode.entropy_tolerance");
        ctx.check("", "ODE energy drift", mon.energy_drift <= etol, mon.energy_drift, etol);
        ctx.check("", "ODE entropy increments", mon.min_entropy_increment >= -stol, mon.min_entropy_increment, -stol);
    }

    if (cfg.has_part("energy")) {
        const PathEnsemble a = integrate_sde(sys, z0, e1);
        const PathEnsemble b = integrate_sde(sys, z0, e2);
        const EnergyDriftSummary da = check_as_energy_conservation(a, sys);
        const EnergyDriftSummary db = check_as_energy_conservation(b, sys);
        auto w = ctx.csv("energy_drift.csv", {"dt", "paths", "mean_terminal", "mean_max", "max_max"});
        for (const auto& [dt, d] : {std::pair{e1.dt, da}, std::pair{e2.dt, db}}) {
            *w << dt << d.paths_used << d.mean_terminal << d.mean_max << d.max_max;
            w->end_row();
        }
        const double C = cfg.get_double("energy.C");
        ctx.check("A9", "mean |E_T - E_0| <= C dt", da.mean_terminal <= C * e1.dt, da.mean_terminal, C * e1.dt,
                  "mean / dt = " + num(da.mean_terminal / e1.dt));
        const double ratio = db.mean_terminal > 0 ? da.mean_terminal / db.mean_terminal : 0.0;
        const double lo = cfg.get_double("energy.ratio_lo"), hi = cfg.get_double("energy.ratio_hi");
        ctx.check("A9", "drift ratio dt vs dt/2", ratio >= lo && ratio <= hi, ratio, lo,
                  "accepted [" + num(lo) + ", " + num(hi) + "]");

        // States visited by the coarse ensemble, spread over paths and times.
        const std::size_t want = cfg.get_uint("energy.twin_states");
        std::vector<Vec> states;
        for (std::size_t i = 0; i < want; ++i) {
            const std::size_t p = i % a.n_paths();
            const std::size_t k = (i / a.n_paths() * 7 + i * 13) % a.n_times();
            states.push_back(a.paths[p].col(static_cast<Eigen::Index>(k)));
        }
        const TwinIncrementGap gap = twin_energy_increment_gap(sys, states, e1.dt, derive_seed(cfg.seed, 4));
        const double ttol = cfg.get_double("energy.twin_tolerance");
        ctx.check("A9", "negated-noise energy increment gap", gap.linear <= ttol, gap.linear, ttol,
                  "first-order increment");
        ctx.info("A9", "negated-noise exact energy gap", gap.exact, "includes the second-order term");
    }

    if (cfg.has_part("gibbs")) {
        const PathEnsemble ens = integrate_sde(sys, z0, gb);
        const auto bins = static_cast<std::size_t>(cfg.get_uint("gibbs.bins"));
        const std::size_t k0 = ens.burn_in_index(burn);
        const double tol = cfg.get_double("gibbs.tolerance");
        const double target[2] = {1.0 / (op.beta * op.k), op.m / op.beta};
        const char* label[2] = {"Q", "P"};
        auto w = ctx.csv("gibbs_marginals.csv",
                         {"coordinate", "bin_lo", "bin_hi", "center", "empirical_density", "predicted_density"});
        ctx.overlay("gibbs_marginals.csv", "Q: N(0, 1 / (beta k)); P: N(0, m / beta)");
        for (int c = 0; c < 2; ++c) {
            // Pooled second moment about the sample mean, summed in path order.
            double n = 0, s1 = 0, s2 = 0;
            for (std::size_t p = 0; p < ens.n_paths(); ++p) {
                if (ens.diverged[p]) continue;
                for (std::size_t k = k0; k < ens.n_times(); ++k) {
                    const double x = ens.paths[p](c, static_cast<Eigen::Index>(k));
                    n += 1;
                    s1 += x;
                    s2 += x * x;
                }
            }
            const double mean = s1 / n;
            const double var = s2 / n - mean * mean;
            const double rel = std::abs(var - target[c]) / target[c];
            ctx.check("A10", std::string("Var(") + label[c] + ")", rel <= tol, rel, tol,
                      num(var) + " vs " + num(target[c]) + " from " + num(n) + " pooled samples");

            const Histogram1D h = stationary_histogram(
                ens, [c](const Vec& z) { return z(c); }, burn, -5.0, 5.0, bins);
            const auto dens = h.normalized(Normalization::Density);
            for (std::size_t i = 0; i < h.bins(); ++i) {
                const double x = h.center(i);
                const double pred = std::exp(-0.5 * x * x / target[c]) / std::sqrt(2.0 * std::numbers::pi * target[c]);
                *w << std::string(label[c]) << h.edge(i) << h.edge(i + 1) << x << dens[i] << pred;
                w->end_row();
            }
        }
        write_ensemble(ctx, "oscillator_paths.csv", ens, cfg.get_uint("gibbs.csv_paths"));
    }
}

}  // namespace elab::harness
