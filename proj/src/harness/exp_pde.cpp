#include "elab/harness/experiments.hpp"
#include "elab/pde_gf.hpp"
#include "elab/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace elab::harness {

Schema pde_schema() {
    using T = ParamType;
    return {
        {"run.parts", T::StringList, "all", "subset of fp, refine, heat"},
        {"fp.lo", T::Double, "-5", "left end of the domain"},
        {"fp.hi", T::Double, "5", "right end of the domain"},
        {"fp.cells", T::UInt, "200", "cells"},
        {"fp.dt", T::Double, "5e-4", "forward Euler step"},
        {"fp.T", T::Double, "10", "horizon (uniform initial density, V = x^2/2)"},
        {"fp.snapshots", T::DoubleList, "0.5,1,2,5,10", "times written to pde_fp_snapshots.csv"},
        {"fp.entropy_stride", T::UInt, "20", "steps between rows of pde_entropy.csv"},
        {"fp.l1_tolerance", T::Double, "0.01", "L1 distance to the Gibbs density at T"},
        {"fp.entropy_tolerance", T::Double, "1e-10", "allowed entropy decrease per step"},
        {"fp.mass_tolerance", T::Double, "1e-12", "allowed mass change per step"},
        {"refine.cells", T::IntList, "100,200,400", "increasing cell counts"},
        {"refine.lo", T::Double, "-5", "left end of the domain"},
        {"refine.hi", T::Double, "5", "right end of the domain"},
        {"refine.min_order", T::Double, "1", "required observed order of the RHS difference"},
        {"heat.lo", T::Double, "-10", "left end of the domain"},
        {"heat.hi", T::Double, "10", "right end of the domain"},
        {"heat.cells", T::UInt, "400", "cells"},
        {"heat.dt", T::Double, "5e-4", "forward Euler step"},
        {"heat.T", T::Double, "2", "horizon"},
        {"heat.sigma0", T::Double, "0.5", "initial standard deviation"},
        {"heat.times", T::DoubleList, "0.5,1,1.5,2", "times at which the variance is compared"},
        {"heat.tolerance", T::Double, "0.03", "relative tolerance of the variance growth 2t"},
    };
}

namespace {

// Variance of the profile r - base.
double variance(const CellDensity1D& r, double base = 0.0) {
    double m0 = 0, m1 = 0, m2 = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double v = r.values[i] - base;
        m0 += v;
        m1 += v * r.x(i);
        m2 += v * r.x(i) * r.x(i);
    }
    const double mean = m1 / m0;
    return m2 / m0 - mean * mean;
}

std::vector<double> every_step(double dt, double T) {
    const std::size_t n = step_count(dt, T);
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = static_cast<double>(k + 1) * dt;
    return t;
}

void require_domain(double lo, double hi, const std::string& part) {
    if (!(hi > lo)) throw ValidationError(part + ": hi must exceed lo");
}

}  // namespace

void run_pde(RunContext& ctx) {
    const auto& cfg = ctx.config();
    const double flo = cfg.get_double("fp.lo"), fhi = cfg.get_double("fp.hi");
    const std::size_t fcells = cfg.get_uint("fp.cells");
    const double fdt = cfg.get_double("fp.dt"), fT = cfg.get_double("fp.T");
    const auto fsnaps = cfg.get_doubles("fp.snapshots");
    const std::size_t estride = cfg.get_uint("fp.entropy_stride");
    const auto rcells = cfg.get_ints("refine.cells");
    const double rlo = cfg.get_double("refine.lo"), rhi = cfg.get_double("refine.hi");
    const double hlo = cfg.get_double("heat.lo"), hhi = cfg.get_double("heat.hi");
    const std::size_t hcells = cfg.get_uint("heat.cells");
    const double hdt = cfg.get_double("heat.dt"), hT = cfg.get_double("heat.T");
    const double sigma0 = cfg.get_double("heat.sigma0");
    const auto htimes = cfg.get_doubles("heat.times");

    auto V = [](double x) { return 0.5 * x * x; };
    auto dV = [](double x) { return x; };
    const GradientStructure1D fp = fokker_planck(V, dV);

    if (cfg.has_part("fp")) {
        require_domain(flo, fhi, "fp");
        if (fcells < 2 || estride == 0) throw ValidationError("fp: need cells >= 2 and entropy_stride > 0");
        step_count(fdt, fT);
        const CellDensity1D probe = CellDensity1D::sample(flo, fhi, fcells, [](double) { return 1.0; });
        const double limit = max_stable_dt(fp, probe);
        if (fdt > limit) throw ValidationError("fp.dt exceeds the stable step " + num(limit));
        for (double t : fsnaps)
            if (!(t > 0 && t <= fT)) throw ValidationError("fp.snapshots must lie in (0, fp.T]");
    }
    if (cfg.has_part("refine")) {
        require_domain(rlo, rhi, "refine");
        if (rcells.size() < 2) throw ValidationError("refine.cells needs at least two entries");
        for (std::size_t i = 0; i < rcells.size(); ++i)
            if (rcells[i] < 2 || (i > 0 && rcells[i] <= rcells[i - 1]))
                throw ValidationError("refine.cells must increase and be >= 2");
    }
    if (cfg.has_part("heat")) {
        require_domain(hlo, hhi, "heat");
        if (hcells < 2 || !(sigma0 > 0)) throw ValidationError("heat: need cells >= 2 and sigma0 > 0");
        step_count(hdt, hT);
        for (double t : htimes)
            if (!(t > 0 && t <= hT)) throw ValidationError("heat.times must lie in (0, heat.T]");
    }

    if (cfg.has_part("fp")) {
        const double width = fhi - flo;
        const CellDensity1D rho0 = CellDensity1D::sample(flo, fhi, fcells, [width](double) { return 1.0 / width; });
        const auto snaps = solve(fp, rho0, fdt, fT, every_step(fdt, fT));
        const auto S = entropy_monitor(snaps, fp);

        double worst_entropy = 0, worst_mass = 0;
        for (std::size_t k = 1; k < snaps.size(); ++k) {
            worst_entropy = std::min(worst_entropy, S[k] - S[k - 1]);
            worst_mass = std::max(worst_mass, std::abs(snaps[k].rho.mass() - snaps[k - 1].rho.mass()));
        }

        CellDensity1D gibbs = CellDensity1D::sample(flo, fhi, fcells, [&](double x) { return std::exp(-V(x)); });
        const double Z = gibbs.mass();
        for (auto& v : gibbs.values) v /= Z;
        const double l1 = l1_distance(snaps.back().rho, gibbs);
        const double S_gibbs = entropy(fp, gibbs);

        auto ws = ctx.csv("pde_fp_snapshots.csv", {"t", "x", "rho"});
        std::vector<double> wanted = {0.0};
        wanted.insert(wanted.end(), fsnaps.begin(), fsnaps.end());
        for (double t : wanted) {
            const auto k = static_cast<std::size_t>(std::llround(t / fdt));
            const auto& r = snaps[k].rho;
            for (std::size_t i = 0; i < r.size(); ++i) {
                *ws << snaps[k].t << r.x(i) << r.values[i];
                ws->end_row();
            }
        }
        auto we = ctx.csv("pde_entropy.csv", {"t", "S"});
        for (std::size_t k = 0; k < snaps.size(); k += estride) {
            *we << snaps[k].t << S[k];
            we->end_row();
        }
        ctx.overlay("pde_fp_snapshots.csv", "Gibbs limit exp(-x^2 / 2) / Z, Z by cell sums on the grid");
        ctx.overlay("pde_entropy.csv", "plateau S_gibbs = " + format_double(S_gibbs));

        const double ltol = cfg.get_double("fp.l1_tolerance");
        const double etol = cfg.get_double("fp.entropy_tolerance");
        const double mtol = cfg.get_double("fp.mass_tolerance");
        ctx.check("A14", "Fokker-Planck L1 to Gibbs at T", l1 <= ltol, l1, ltol);
        ctx.check("A14", "entropy decrease per step", worst_entropy >= -etol, worst_entropy, -etol);
        ctx.check("A14", "mass change per step", worst_mass <= mtol, worst_mass, mtol);
        ctx.info("", "entropy gap to the Gibbs value at T", S_gibbs - S.back());
    }

    if (cfg.has_part("refine")) {
        const GradientStructure1D wp = wasserstein_power(2.0);
        const GradientStructure1D zr = zero_range([](double u) { return u * u; }, [](double u) { return 2.0 * u; });
        auto bump = [](double x) { return 0.5 + std::exp(-x * x); };
        auto w = ctx.csv("pde_refinement.csv", {"cells", "sup_difference", "order"});
        std::vector<double> diff;
        double worst_order = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < rcells.size(); ++i) {
            const auto N = static_cast<std::size_t>(rcells[i]);
            const CellDensity1D r = CellDensity1D::sample(rlo, rhi, N, bump);
            diff.push_back(sup_distance(rhs(wp, r), rhs(zr, r)));
            double order = std::numeric_limits<double>::quiet_NaN();
            if (i > 0) {
                order = std::log(diff[i - 1] / diff[i]) /
                        std::log(static_cast<double>(rcells[i]) / static_cast<double>(rcells[i - 1]));
                worst_order = std::min(worst_order, order);
            }
            *w << N << diff.back() << order;
            w->end_row();
        }
        const double need = cfg.get_double("refine.min_order");
        ctx.check("A14", "Wasserstein vs zero-range RHS refinement order", worst_order >= need, worst_order, need);
    }

    if (cfg.has_part("heat")) {
        auto gauss = [sigma0](double x) {
            return std::exp(-0.5 * x * x / (sigma0 * sigma0)) / (sigma0 * std::sqrt(2.0 * std::numbers::pi));
        };
        const CellDensity1D rho0 = CellDensity1D::sample(hlo, hhi, hcells, gauss);
        const GradientStructure1D heat = wasserstein_power(1.0);
        const auto snaps = solve(heat, rho0, hdt, hT, htimes);
        const double v0 = variance(rho0);
        auto w = ctx.csv("pde_heat.csv", {"structure", "t", "variance_growth", "predicted"});
        double worst = 0;
        for (const auto& s : snaps) {
            const double growth = variance(s.rho) - v0;
            *w << std::string("wasserstein") << s.t << growth << 2.0 * s.t;
            w->end_row();
            if (s.t > 0) worst = std::max(worst, std::abs(growth - 2.0 * s.t) / (2.0 * s.t));
        }
        const double tol = cfg.get_double("heat.tolerance");
        ctx.check("", "heat variance growth 2t", worst <= tol, worst, tol);

        // Heat-conduction structure alpha(u) = u^2 on a profile bounded away from vacuum.
        const GradientStructure1D hc = heat_conduction([](double u) { return u * u; });
        const CellDensity1D lifted = CellDensity1D::sample(hlo, hhi, hcells, [&](double x) { return 1.0 + gauss(x); });
        const auto hs = solve(hc, lifted, hdt, hT, every_step(hdt, hT));
        const auto hw = solve(heat, lifted, hdt, hT, htimes);
        const auto S = entropy_monitor(hs, hc);
        double worst_step = 0;
        for (std::size_t k = 1; k < S.size(); ++k) worst_step = std::min(worst_step, S[k] - S[k - 1]);
        ctx.check("", "heat-conduction entropy decrease per step", worst_step >= -1e-10, worst_step, -1e-10);
        const auto idx = [&](double t) { return static_cast<std::size_t>(std::llround(t / hdt)); };
        for (std::size_t j = 1; j < hw.size(); ++j) {
            const auto& r = hs[idx(hw[j].t)].rho;
            *w << std::string("heat_conduction") << hw[j].t << variance(r, 1.0) - variance(lifted, 1.0) << 2.0 * hw[j].t;
            w->end_row();
        }
        ctx.info("", "heat-conduction vs Wasserstein L1 at T", l1_distance(hs.back().rho, hw.back().rho));
    }
}

}  // namespace elab::harness
