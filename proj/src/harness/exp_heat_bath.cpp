#include "elab/generic_sde.hpp"
#include "elab/harness/experiments.hpp"
#include "elab/heat_bath.hpp"
#include "elab/parallel.hpp"
#include "elab/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace elab::harness {

Schema heat_bath_schema() {
    using T = ParamType;
    return {
        {"run.parts", T::StringList, "all", "subset of energy, entropy, sde, stationary"},
        {"bath.beta", T::Double, "1", "inverse temperature"},
        {"bath.gamma", T::Double, "0.5", "coupling strength"},
        {"bath.k", T::Double, "1", "spring constant"},
        {"bath.m", T::Double, "1", "mass"},
        {"bath.Q0", T::Double, "1", "initial Q"},
        {"bath.P0", T::Double, "0", "initial P"},
        {"bath.e0", T::Double, "0", "initial e; E0 = H_A(Q0, P0) + e0"},
        {"energy.n", T::UInt, "512", "bath modes"},
        {"energy.delta_omega", T::Double, "0.1", "frequency spacing"},
        {"energy.dt", T::Double, "1e-3", "coarse time step; dt/2 and dt/4 are also run"},
        {"energy.T", T::Double, "10", "horizon"},
        {"energy.record", T::Double, "0.01", "spacing of the recorded grid"},
        {"energy.tolerance", T::Double, "1e-5", "relative H_total drift tolerance"},
        {"energy.ratio_lo", T::Double, "3", "lower end of the accepted halving ratio"},
        {"energy.ratio_hi", T::Double, "5", "upper end of the accepted halving ratio"},
        {"entropy.n_list", T::DoubleList, "100,1000,10000", "mode counts"},
        {"entropy.beta_list", T::DoubleList, "0.5,2", "inverse temperatures"},
        {"entropy.e_max", T::Double, "10", "right end of the e range (left end -0.9 n / beta)"},
        {"entropy.points", T::UInt, "20001", "grid points per (n, beta)"},
        {"entropy.csv_stride", T::UInt, "100", "write every k-th grid point"},
        {"sde.n", T::UInt, "1024", "bath modes"},
        {"sde.delta_omega", T::Double, "0.05", "frequency spacing"},
        {"sde.micro_dt", T::Double, "1.25e-3", "micro time step"},
        {"sde.sde_dt", T::Double, "2.5e-3", "limit SDE time step"},
        {"sde.T", T::Double, "10", "horizon"},
        {"sde.record", T::Double, "0.05", "spacing of the compared grid"},
        {"sde.realizations", T::UInt, "1000", "micro realizations"},
        {"sde.paths", T::UInt, "10000", "limit SDE paths"},
        {"sde.bootstrap", T::UInt, "100", "bootstrap resamples"},
        {"sde.tolerance", T::Double, "0.15", "relative sup distance of E[P^2]"},
        {"stationary.n", T::UInt, "256", "bath modes"},
        {"stationary.samples", T::UInt, "100000", "chain samples"},
        {"stationary.thin", T::UInt, "10", "steps between samples"},
        {"stationary.burn_in", T::UInt, "10000", "burn-in steps (first half tunes the proposal)"},
        {"stationary.bins", T::UInt, "10", "bins per axis on [-4, 4]^2"},
        {"stationary.E0", T::Double, "0", "energy offset"},
        {"stationary.tolerance", T::Double, "0.05", "L1 tolerance"},
    };
}

namespace {

HeatBathParams bath_params(const ExperimentConfig& cfg) {
    HeatBathParams p;
    p.beta = cfg.get_double("bath.beta");
    p.gamma = cfg.get_double("bath.gamma");
    p.k = cfg.get_double("bath.k");
    p.m = cfg.get_double("bath.m");
    p.E0 = H_A(p, cfg.get_double("bath.Q0"), cfg.get_double("bath.P0")) + cfg.get_double("bath.e0");
    return p;
}

std::size_t stride_for(double record, double dt) {
    const double r = record / dt;
    const auto s = static_cast<std::size_t>(std::llround(r));
    if (s == 0 || std::abs(r - static_cast<double>(s)) > 1e-9 * r)
        throw ValidationError("record spacing " + num(record) + " is not a multiple of dt " + num(dt));
    return s;
}

struct EnergyRun {
    double max_rel_drift = 0.0;
    double max_E_dev = 0.0;
    double Q_T = 0.0, P_T = 0.0;
};

EnergyRun energy_run(const MicroState& s0, const HeatBathParams& p, double dt, double T, double record,
                     CsvWriter* traj) {
    EnergyRun r;
    double H0 = std::numeric_limits<double>::quiet_NaN();
    evolve_micro_observed(s0, p, dt, T, stride_for(record, dt), [&](double t, const BathIntegrator& integ) {
        const double H = integ.H_total();
        if (std::isnan(H0)) H0 = H;
        r.max_rel_drift = std::max(r.max_rel_drift, std::abs(H - H0) / std::abs(H0));
        const CgState c = integ.cg();
        const double E = cg_energy(p, c);
        r.max_E_dev = std::max(r.max_E_dev, std::abs(E - p.E0));
        r.Q_T = c.Q;
        r.P_T = c.P;
        if (traj) {
            *traj << t << c.Q << c.P << c.e << E << H;
            traj->end_row();
        }
    });
    return r;
}

// Mass of the exact Z-marginal weight in each bin by midpoint sub-sampling.
std::vector<double> stationary_bin_masses(const HeatBathParams& p, double lo, double hi, std::size_t bins) {
    const std::size_t sub = 16;
    const double w = (hi - lo) / static_cast<double>(bins);
    std::vector<double> logw(bins * bins * sub * sub);
    double mx = -std::numeric_limits<double>::infinity();
    std::size_t idx = 0;
    for (std::size_t i = 0; i < bins; ++i)
        for (std::size_t j = 0; j < bins; ++j)
            for (std::size_t a = 0; a < sub; ++a)
                for (std::size_t b = 0; b < sub; ++b) {
                    const double Q = lo + w * (static_cast<double>(i) + (static_cast<double>(a) + 0.5) / sub);
                    const double P = lo + w * (static_cast<double>(j) + (static_cast<double>(b) + 0.5) / sub);
                    logw[idx] = stationary_log_weight(p, Q, P);
                    mx = std::max(mx, logw[idx]);
                    ++idx;
                }
    std::vector<double> mass(bins * bins, 0.0);
    double total = 0.0;
    idx = 0;
    for (std::size_t c = 0; c < bins * bins; ++c)
        for (std::size_t s = 0; s < sub * sub; ++s, ++idx) {
            const double v = std::exp(logw[idx] - mx);
            mass[c] += v;
            total += v;
        }
    for (double& m : mass) m /= total;
    return mass;
}

}  // namespace

void run_heat_bath(RunContext& ctx) {
    const auto& cfg = ctx.config();
    const unsigned threads = resolve_threads(ctx.threads());
    const HeatBathParams base = bath_params(cfg);
    const double Q0 = cfg.get_double("bath.Q0"), P0 = cfg.get_double("bath.P0");
    base.validate();

    HeatBathParams pe = base;
    pe.n = cfg.get_uint("energy.n");
    pe.delta_omega = cfg.get_double("energy.delta_omega");
    const double dt_e = cfg.get_double("energy.dt"), T_e = cfg.get_double("energy.T");
    const double rec_e = cfg.get_double("energy.record");

    HeatBathParams ps = base;
    ps.n = cfg.get_uint("sde.n");
    ps.delta_omega = cfg.get_double("sde.delta_omega");
    const double micro_dt = cfg.get_double("sde.micro_dt"), sde_dt = cfg.get_double("sde.sde_dt");
    const double T_s = cfg.get_double("sde.T"), rec_s = cfg.get_double("sde.record");

    if (cfg.has_part("energy")) {
        pe.validate();
        if (dt_e > 0.1 / (static_cast<double>(pe.n) * pe.dw()))
            throw ValidationError("energy.dt exceeds 0.1 / (n delta_omega)");
        stride_for(rec_e, dt_e / 4);
        step_count(dt_e, T_e);
    }
    if (cfg.has_part("sde")) {
        ps.validate();
        if (micro_dt > 0.1 / (static_cast<double>(ps.n) * ps.dw()))
            throw ValidationError("sde.micro_dt exceeds 0.1 / (n delta_omega)");
        stride_for(rec_s, micro_dt);
        stride_for(rec_s, sde_dt);
        step_count(micro_dt, T_s);
    }

    if (cfg.has_part("energy")) {
        Stream rng(derive_seed(cfg.seed, 1), 0, StreamTag::Initial);
        const MicroState s0 = sample_conditional(pe, Q0, P0, rng);
        auto traj = ctx.csv("cg_trajectory.csv", {"t", "Q", "P", "e", "E", "H_total"});
        const EnergyRun a = energy_run(s0, pe, dt_e, T_e, rec_e, traj.get());
        const EnergyRun b = energy_run(s0, pe, dt_e / 2, T_e, rec_e, nullptr);
        const EnergyRun ref = energy_run(s0, pe, dt_e / 4, T_e, rec_e, nullptr);
        const double tol = cfg.get_double("energy.tolerance");
        ctx.check("A4", "relative H_total drift", a.max_rel_drift <= tol, a.max_rel_drift, tol,
                  "dt/2 drift " + num(b.max_rel_drift));
        const double ratio = b.max_rel_drift > 0 ? a.max_rel_drift / b.max_rel_drift
                                                 : std::numeric_limits<double>::infinity();
        const double lo = cfg.get_double("energy.ratio_lo"), hi = cfg.get_double("energy.ratio_hi");
        ctx.check("A4", "H_total drift ratio dt vs dt/2", ratio >= lo && ratio <= hi, ratio, hi,
                  "drifts " + num(a.max_rel_drift) + " and " + num(b.max_rel_drift) + ", accepted range [" + num(lo) +
                      ", " + num(hi) + "]");
        const double ea = std::hypot(a.Q_T - ref.Q_T, a.P_T - ref.P_T);
        const double eb = std::hypot(b.Q_T - ref.Q_T, b.P_T - ref.P_T);
        ctx.info("A4", "trajectory error ratio against dt/4 reference", eb > 0 ? ea / eb : 0.0,
                 "|Z_T| errors " + num(ea) + " and " + num(eb));
        ctx.info("", "max |E(Q,P,e) - E0| along the trajectory", a.max_E_dev);
    }

    if (cfg.has_part("entropy")) {
        const auto n_list = cfg.get_doubles("entropy.n_list");
        const auto beta_list = cfg.get_doubles("entropy.beta_list");
        const double e_max = cfg.get_double("entropy.e_max");
        const auto points = static_cast<std::size_t>(cfg.get_uint("entropy.points"));
        const auto csv_stride = static_cast<std::size_t>(cfg.get_uint("entropy.csv_stride"));
        if (points < 2 || csv_stride == 0) throw ValidationError("entropy.points >= 2 and entropy.csv_stride > 0");
        auto w = ctx.csv("entropy_gap.csv", {"n", "beta", "e", "value", "gap", "bound"});
        double worst = 0.0, worst_contract = 0.0;
        std::string where;
        for (double n : n_list)
            for (double beta : beta_list) {
                const double e_lo = -0.9 * n / beta;
                for (std::size_t i = 0; i < points; ++i) {
                    const double e = e_lo + (e_max - e_lo) * static_cast<double>(i) / static_cast<double>(points - 1);
                    const double v = entropy_Snbeta_centered(n, beta, e);
                    const double gap = std::abs(v - beta * e);
                    const double bound = (beta * e) * (beta * e) / n + beta * std::abs(e) / n;
                    const double excess = bound > 0 ? gap / bound : (gap > 0 ? 1e300 : 0.0);
                    if (excess > worst) {
                        worst = excess;
                        where = "n=" + num(n) + " beta=" + num(beta) + " e=" + num(e);
                    }
                    if (n >= 2.0 * (beta * std::abs(e) + 1.0)) worst_contract = std::max(worst_contract, excess);
                    if (i % csv_stride == 0 || i + 1 == points) {
                        *w << n << beta << e << v << gap << bound;
                        w->end_row();
                    }
                }
            }
        ctx.check("A5", "max gap / bound over the full e range", worst <= 1.0, worst, 1.0, "worst at " + where);
        ctx.info("A5", "max gap / bound where n >= 2(beta|e| + 1)", worst_contract);
    }

    if (cfg.has_part("sde")) {
        const std::size_t R = cfg.get_uint("sde.realizations");
        SdeRunConfig mc;
        mc.dt = micro_dt;
        mc.T = T_s;
        mc.n_paths = R;
        mc.record_stride = stride_for(rec_s, micro_dt);
        mc.seed = derive_seed(cfg.seed, 3);
        PathEnsemble micro;
        micro.system_name = "heat-bath micro";
        micro.dim = 3;
        micro.seed = mc.seed;
        micro.cfg = mc;
        const std::size_t steps = step_count(micro_dt, T_s);
        for (std::size_t k = 0; k <= steps; k += mc.record_stride) micro.times.push_back(static_cast<double>(k) * micro_dt);
        micro.paths.assign(R, Mat());
        micro.stream_ids.resize(R);
        micro.diverged.assign(R, false);
        parallel_for(R, threads, [&](std::size_t r) {
            Stream rng(mc.seed, r, StreamTag::Initial);
            const MicroState s0 = sample_conditional(ps, Q0, P0, rng);
            Mat& path = micro.paths[r];
            path.resize(3, static_cast<Eigen::Index>(micro.times.size()));
            Eigen::Index col = 0;
            evolve_micro_observed(s0, ps, micro_dt, T_s, mc.record_stride, [&](double, const BathIntegrator& integ) {
                const CgState c = integ.cg();
                path(0, col) = c.Q;
                path(1, col) = c.P;
                path(2, col) = c.e;
                ++col;
            });
        });
        for (std::size_t r = 0; r < R; ++r) micro.stream_ids[r] = r;

        OscillatorParams op{ps.k, ps.m, ps.gamma, ps.beta};
        const GenericSystem sys = damped_oscillator_system(op);
        SdeRunConfig sc;
        sc.dt = sde_dt;
        sc.T = T_s;
        sc.n_paths = cfg.get_uint("sde.paths");
        sc.record_stride = stride_for(rec_s, sde_dt);
        sc.seed = derive_seed(cfg.seed, 4);
        sc.threads = threads;
        Vec z0(3);
        z0 << Q0, P0, cfg.get_double("bath.e0");
        const PathEnsemble sde = integrate_sde(sys, z0, sc);

        const std::vector<CgMoment> moments = {CgMoment::MeanQ, CgMoment::SecondQ, CgMoment::SecondP,
                                               CgMoment::MeanE};
        const auto dist = compare_to_limit_sde(micro, sde, moments, cfg.get_uint("sde.bootstrap"),
                                               derive_seed(cfg.seed, 5));
        auto w = ctx.csv("moments.csv", {"t", "micro_EQ", "sde_EQ", "micro_EQ2", "sde_EQ2", "micro_EP2", "sde_EP2",
                                         "micro_Ee", "sde_Ee"});
        for (std::size_t t = 0; t < micro.times.size(); ++t) {
            *w << micro.times[t];
            for (const auto& d : dist) *w << d.micro[t] << d.sde[t];
            w->end_row();
        }
        auto ws = ctx.csv("moment_distance.csv",
                          {"moment", "sup_distance", "sup_reference", "relative", "band_lo", "band_hi"});
        for (const auto& d : dist) {
            *ws << moment_name(d.moment) << d.sup_distance << d.sup_reference << d.relative << d.band_lo << d.band_hi;
            ws->end_row();
        }
        const auto& p2 = dist[2];
        const double tol = cfg.get_double("sde.tolerance");
        ctx.check("A8", "relative sup distance of E[P^2]", p2.relative <= tol, p2.relative, tol,
                  "sup distance " + num(p2.sup_distance) + " (bootstrap 95% band " + num(p2.band_lo) + " to " +
                      num(p2.band_hi) + ") over sup E[P^2] " + num(p2.sup_reference));
    }

    if (cfg.has_part("stationary")) {
        HeatBathParams pz = base;
        pz.n = cfg.get_uint("stationary.n");
        pz.E0 = cfg.get_double("stationary.E0");
        pz.validate();
        const auto bins = static_cast<std::size_t>(cfg.get_uint("stationary.bins"));
        Stream rng(derive_seed(cfg.seed, 6), 0, StreamTag::Sampler);
        const MhChain chain = mh_stationary_Z(pz, rng, cfg.get_uint("stationary.samples"),
                                              cfg.get_uint("stationary.thin"), cfg.get_uint("stationary.burn_in"));
        Histogram2D h(-4.0, 4.0, bins, -4.0, 4.0, bins);
        for (const auto& z : chain.samples) h.add(z(0), z(1));
        const auto emp = h.mass();
        const auto pred = stationary_bin_masses(pz, -4.0, 4.0, bins);
        auto w = ctx.csv("stationary_Z.csv", {"q_lo", "q_hi", "p_lo", "p_hi", "count", "empirical_mass",
                                              "predicted_mass"});
        for (std::size_t i = 0; i < bins; ++i)
            for (std::size_t j = 0; j < bins; ++j) {
                *w << h.xedge(i) << h.xedge(i + 1) << h.yedge(j) << h.yedge(j + 1) << h.count(i, j)
                   << emp[i * bins + j] << pred[i * bins + j];
                w->end_row();
            }
        const double l1 = l1_mass_distance(emp, pred);
        const double tol = cfg.get_double("stationary.tolerance");
        ctx.check("", "stationary Z marginal L1 against quadrature", l1 <= tol, l1, tol,
                  "acceptance " + num(chain.acceptance) + ", proposal scale " + num(chain.proposal_scale));
        ctx.check("", "sampler acceptance in [0.1, 0.7]", !chain.acceptance_warning, chain.acceptance, 0.7);
    }
}

}  // namespace elab::harness
