#include "elab/harness/experiments.hpp"
#include "elab/heat_bath.hpp"
#include "elab/parallel.hpp"
#include "elab/types.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace elab::harness {

Schema kernel_noise_schema() {
    using T = ParamType;
    return {
        {"run.parts", T::StringList, "all", "subset of kernel, noise"},
        {"kernel.n", T::UInt, "4000", "bath modes"},
        {"kernel.delta_omega", T::Double, "0.01", "frequency spacing"},
        {"kernel.gamma", T::Double, "1", "coupling strength"},
        {"kernel.sigma", T::Double, "0.5", "width of the Gaussian test function"},
        {"kernel.t_max", T::Double, "4", "quadrature range [0, t_max] and [-t_max, t_max]"},
        {"kernel.h", T::Double, "1e-3", "quadrature step"},
        {"kernel.table_h", T::Double, "0.005", "spacing of the written kernel table"},
        {"kernel.tolerance", T::Double, "0.05", "absolute tolerance of both integrals"},
        {"noise.n", T::UInt, "80000", "bath modes"},
        {"noise.delta_omega", T::Double, "0.05", "frequency spacing"},
        {"noise.beta", T::Double, "1", "inverse temperature"},
        {"noise.gamma", T::Double, "1", "coupling strength"},
        {"noise.Q0", T::Double, "1", "initial Q"},
        {"noise.P0", T::Double, "0", "initial P"},
        {"noise.e0", T::Double, "0", "initial e"},
        {"noise.samples", T::UInt, "400", "conditional bath samples"},
        {"noise.increments", T::UInt, "200", "disjoint increments per sample"},
        {"noise.delta", T::Double, "0.05", "increment length"},
        {"noise.group", T::UInt, "50", "samples per batched evaluation"},
        {"noise.variance_rel", T::Double, "0.15", "relative variance tolerance"},
        {"noise.kurtosis", T::Double, "0.5", "excess kurtosis tolerance"},
        {"noise.se", T::Double, "3", "tolerance of mean and lag-1 covariance in standard errors"},
        {"noise.csv_samples", T::UInt, "5", "sample paths written to noise_paths.csv"},
    };
}

namespace {

void require_regime(const HeatBathParams& p, const std::string& part) {
    if (!(p.dw() <= 0.05 + 1e-15) || !(static_cast<double>(p.n) * p.dw() >= 20.0 - 1e-12))
        throw ValidationError(part + ": needs delta_omega <= 0.05 and n * delta_omega >= 20");
}

}  // namespace

void run_kernel_noise(RunContext& ctx) {
    const auto& cfg = ctx.config();
    const unsigned threads = resolve_threads(ctx.threads());

    HeatBathParams pk;
    pk.n = cfg.get_uint("kernel.n");
    pk.delta_omega = cfg.get_double("kernel.delta_omega");
    pk.gamma = cfg.get_double("kernel.gamma");
    const double sigma = cfg.get_double("kernel.sigma");
    const double t_max = cfg.get_double("kernel.t_max"), h = cfg.get_double("kernel.h");
    const double table_h = cfg.get_double("kernel.table_h");

    HeatBathParams pn;
    pn.n = cfg.get_uint("noise.n");
    pn.delta_omega = cfg.get_double("noise.delta_omega");
    pn.beta = cfg.get_double("noise.beta");
    pn.gamma = cfg.get_double("noise.gamma");
    const double Q0 = cfg.get_double("noise.Q0"), P0 = cfg.get_double("noise.P0");
    pn.E0 = H_A(pn, Q0, P0) + cfg.get_double("noise.e0");
    const std::size_t S = cfg.get_uint("noise.samples");
    const std::size_t M = cfg.get_uint("noise.increments");
    const double delta = cfg.get_double("noise.delta");
    const std::size_t group = cfg.get_uint("noise.group");

    if (cfg.has_part("kernel")) {
        pk.validate();
        require_regime(pk, "kernel");
        if (!(sigma > 0) || !(table_h > 0)) throw ValidationError("kernel.sigma and kernel.table_h must be positive");
        if (h * static_cast<double>(pk.n) * pk.dw() > 0.5)
            throw ValidationError("kernel.h too coarse: h * n * delta_omega > 0.5");
    }
    if (cfg.has_part("noise")) {
        pn.validate();
        require_regime(pn, "noise");
        if (S < 2 || M < 2 || !(delta > 0) || group == 0)
            throw ValidationError("noise: need samples >= 2, increments >= 2, delta > 0, group > 0");
    }

    if (cfg.has_part("kernel")) {
        auto phi = [sigma](double t) { return std::exp(-0.5 * t * t / (sigma * sigma)); };
        const KernelTest kt = kappa_convergence_test(pk, phi, t_max, h);
        const double tol = cfg.get_double("kernel.tolerance");
        ctx.check("A6", "one-sided integral error", kt.error_one_sided <= tol, kt.error_one_sided, tol,
                  "integral " + num(kt.one_sided) + " vs " + num(kt.target_one_sided));
        ctx.check("A6", "two-sided integral error", kt.error_two_sided <= tol, kt.error_two_sided, tol,
                  "integral " + num(kt.two_sided) + " vs " + num(kt.target_two_sided));

        const auto rows = static_cast<std::size_t>(std::llround(t_max / table_h)) + 1;
        std::vector<double> naive(rows), comp(rows);
        parallel_for(rows, threads, [&](std::size_t i) {
            const double t = static_cast<double>(i) * table_h;
            naive[i] = kappa11(t, pk, false);
            comp[i] = kappa11(t, pk, true);
        });
        auto w = ctx.csv("kernel.csv", {"t", "kappa11"});
        double worst = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
            *w << static_cast<double>(i) * table_h << comp[i];
            w->end_row();
            worst = std::max(worst, std::abs(naive[i] - comp[i]));
        }
        ctx.check("", "naive vs compensated kernel sums", worst <= 1e-10, worst, 1e-10);
    }

    if (cfg.has_part("noise")) {
        std::vector<double> grid(M + 1);
        for (std::size_t k = 0; k <= M; ++k) grid[k] = static_cast<double>(k) * delta;
        const std::uint64_t seed = derive_seed(cfg.seed, 1);
        const double c = pn.coupling();
        const auto n = static_cast<Eigen::Index>(pn.n);
        Mat W(static_cast<Eigen::Index>(M + 1), static_cast<Eigen::Index>(S));
        for (std::size_t g0 = 0; g0 < S; g0 += group) {
            const std::size_t gs = std::min(group, S - g0);
            Mat zq(n, static_cast<Eigen::Index>(gs)), zp(n, static_cast<Eigen::Index>(gs));
            parallel_for(gs, threads, [&](std::size_t j) {
                Stream rng(seed, g0 + j, StreamTag::Initial);
                const MicroState s = sample_conditional(pn, Q0, P0, rng);
                zq.col(static_cast<Eigen::Index>(j)) = (s.q - c * s.Q).matrix();
                zp.col(static_cast<Eigen::Index>(j)) = s.p.matrix();
            });
            W.middleCols(static_cast<Eigen::Index>(g0), static_cast<Eigen::Index>(gs)) =
                bn_first_coordinate(pn, zq, zp, grid);
        }

        // Closed-form single-sample evaluation: second coordinates and agreement with the batch.
        Stream rng0(seed, 0, StreamTag::Initial);
        const MicroState s0 = sample_conditional(pn, Q0, P0, rng0);
        const NoisePaths np = noise_process(s0, pn, grid);
        const double second = std::max(np.Y.row(1).cwiseAbs().maxCoeff(), np.B.row(1).cwiseAbs().maxCoeff());
        const double agree = (np.B.row(0).transpose() - W.col(0)).cwiseAbs().maxCoeff();
        ctx.info("", "closed-form B_n vs batched evaluation", agree);

        WhiteNoiseThresholds thr;
        thr.variance_rel = cfg.get_double("noise.variance_rel");
        thr.kurtosis = cfg.get_double("noise.kurtosis");
        thr.mean_se = cfg.get_double("noise.se");
        thr.lag1_se = cfg.get_double("noise.se");
        const WhiteNoiseReport r = white_noise_tests(W, delta, second, thr);
        ctx.check("A7", "increment variance vs delta", r.pass_variance, r.variance_rel_error, thr.variance_rel,
                  "variance " + num(r.variance) + " vs " + num(delta));
        ctx.check("A7", "increment mean in standard errors", r.pass_mean, r.se_mean > 0 ? std::abs(r.mean) / r.se_mean : 0.0,
                  thr.mean_se, "mean " + num(r.mean));
        ctx.check("A7", "excess kurtosis", r.pass_kurtosis, std::abs(r.excess_kurtosis), thr.kurtosis);
        ctx.check("A7", "lag-1 covariance in standard errors", r.pass_lag1,
                  r.se_lag1 > 0 ? std::abs(r.lag1_cov) / r.se_lag1 : 0.0, thr.lag1_se, "covariance " + num(r.lag1_cov));
        ctx.check("A7", "second coordinate identically zero", r.pass_second, second, 0.0);

        nlohmann::ordered_json j;
        j["increments"] = r.increments;
        j["delta"] = r.delta;
        j["mean"] = r.mean;
        j["se_mean"] = r.se_mean;
        j["variance"] = r.variance;
        j["variance_rel_error"] = r.variance_rel_error;
        j["excess_kurtosis"] = r.excess_kurtosis;
        j["lag1_cov"] = r.lag1_cov;
        j["se_lag1"] = r.se_lag1;
        j["second_coordinate_max"] = r.second_coordinate_max;
        j["pass"] = r.pass();
        ctx.write_text("noise_report.json", j.dump(2) + "\n");

        auto w = ctx.csv("noise_paths.csv", {"t", "sample", "B1", "B2"});
        const std::size_t shown = std::min<std::size_t>(cfg.get_uint("noise.csv_samples"), S);
        for (std::size_t s = 0; s < shown; ++s)
            for (std::size_t k = 0; k <= M; ++k) {
                *w << grid[k] << s << W(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(s)) << 0.0;
                w->end_row();
            }
    }
}

}  // namespace elab::harness
