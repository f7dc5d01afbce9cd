#include "elab/generic_sde.hpp"
#include "elab/harness/experiments.hpp"
#include "elab/parallel.hpp"
#include "elab/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace elab::harness {

Schema particles_schema() {
    using T = ParamType;
    return {
        {"run.parts", T::StringList, "all", "subset of anisotropy, kl, meanfield"},
        {"anisotropy.sigma2", T::Double, "2", "second diagonal entry of the anisotropic Sigma"},
        {"anisotropy.paths", T::UInt, "100000", "paths per Sigma"},
        {"anisotropy.dt", T::Double, "5e-3", "step"},
        {"anisotropy.T", T::Double, "12.6", "horizon (start at the origin)"},
        {"anisotropy.stride", T::UInt, "140", "steps between pooled samples"},
        {"anisotropy.burn_in", T::Double, "0.5", "discarded fraction of each path"},
        {"anisotropy.bins", T::UInt, "40", "bins per axis on [-4, 4]^2"},
        {"anisotropy.tolerance", T::Double, "0.05", "L1 tolerance"},
        {"kl.x0", T::Double, "3", "initial position"},
        {"kl.paths", T::UInt, "100000", "paths"},
        {"kl.dt", T::Double, "1e-2", "step"},
        {"kl.checkpoints", T::DoubleList, "0.5,1,2,4,8", "increasing times; the last one is the horizon"},
        {"kl.record", T::Double, "0.5", "spacing of the recorded grid; must contain the checkpoints"},
        {"kl.bins", T::UInt, "60", "bins on [-6, 6]"},
        {"kl.final_tolerance", T::Double, "0.01", "bound on the last KL value"},
        {"meanfield.n", T::UInt, "64", "particles"},
        {"meanfield.paths", T::UInt, "10", "independent particle systems"},
        {"meanfield.dt", T::Double, "1e-2", "step"},
        {"meanfield.T", T::Double, "10", "horizon"},
        {"meanfield.stride", T::UInt, "10", "steps between pooled samples"},
        {"meanfield.burn_in", T::Double, "0.5", "discarded fraction of each path"},
        {"meanfield.tolerance", T::Double, "0.1", "relative tolerance of the empirical variance"},
    };
}

namespace {

ScalarField half_square(std::size_t d) {
    return {d, [](const Vec& x) { return 0.5 * x.squaredNorm(); }, [](const Vec& x, Vec& g) { g = x; }};
}

}  // namespace

ParticleSystemSpec quadratic_particle_spec(std::size_t d, std::size_t n, const Mat& Sigma, bool interacting) {
    ParticleSystemSpec spec;
    spec.d = d;
    spec.n = n;
    spec.V = half_square(d);
    if (interacting) spec.psi = half_square(d);
    spec.Sigma = Sigma;
    return spec;
}

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Standard normal mass of each bin, renormalized over [lo, hi).
std::vector<double> gaussian_bin_masses(double lo, double hi, std::size_t bins) {
    std::vector<double> m(bins);
    const double w = (hi - lo) / static_cast<double>(bins);
    double total = 0;
    for (std::size_t i = 0; i < bins; ++i) {
        m[i] = normal_cdf(lo + static_cast<double>(i + 1) * w) - normal_cdf(lo + static_cast<double>(i) * w);
        total += m[i];
    }
    for (auto& v : m) v /= total;
    return m;
}

// Stationary Gaussian of dX = -X dt - (X - E X) dt + sqrt(2) dW: E X = 0, drift rate 2, variance 1/2.
constexpr double kMeanFieldVariance = 0.5;

}  // namespace

void run_particles(RunContext& ctx) {
    const auto& cfg = ctx.config();
    const unsigned threads = resolve_threads(ctx.threads());

    SdeRunConfig an;
    an.dt = cfg.get_double("anisotropy.dt");
    an.T = cfg.get_double("anisotropy.T");
    an.n_paths = cfg.get_uint("anisotropy.paths");
    an.record_stride = cfg.get_uint("anisotropy.stride");
    an.threads = threads;
    const double an_burn = cfg.get_double("anisotropy.burn_in");
    const double sigma2 = cfg.get_double("anisotropy.sigma2");
    const auto an_bins = static_cast<std::size_t>(cfg.get_uint("anisotropy.bins"));

    const auto checkpoints = cfg.get_doubles("kl.checkpoints");
    SdeRunConfig kc;
    kc.dt = cfg.get_double("kl.dt");
    kc.n_paths = cfg.get_uint("kl.paths");
    kc.threads = threads;
    kc.seed = derive_seed(cfg.seed, 3);

    SdeRunConfig mf;
    mf.dt = cfg.get_double("meanfield.dt");
    mf.T = cfg.get_double("meanfield.T");
    mf.n_paths = cfg.get_uint("meanfield.paths");
    mf.record_stride = cfg.get_uint("meanfield.stride");
    mf.threads = threads;
    mf.seed = derive_seed(cfg.seed, 4);
    const double mf_burn = cfg.get_double("meanfield.burn_in");
    const std::size_t mf_n = cfg.get_uint("meanfield.n");

    if (cfg.has_part("anisotropy")) {
        an.validate();
        if (!(sigma2 > 0)) throw ValidationError("anisotropy.sigma2 must be positive");
        if (!(an_burn >= 0 && an_burn < 1)) throw ValidationError("anisotropy.burn_in must be in [0, 1)");
        if (an_bins == 0) throw ValidationError("anisotropy.bins must be positive");
    }
    if (cfg.has_part("kl")) {
        if (checkpoints.empty()) throw ValidationError("kl.checkpoints must not be empty");
        for (std::size_t i = 1; i < checkpoints.size(); ++i)
            if (!(checkpoints[i] > checkpoints[i - 1])) throw ValidationError("kl.checkpoints must increase");
        kc.T = checkpoints.back();
        const double r = cfg.get_double("kl.record") / kc.dt;
        kc.record_stride = static_cast<std::size_t>(std::llround(r));
        if (kc.record_stride == 0 || std::abs(r - static_cast<double>(kc.record_stride)) > 1e-9 * r)
            throw ValidationError("kl.record must be a positive multiple of kl.dt");
        kc.validate();
    }
    if (cfg.has_part("meanfield")) {
        mf.validate();
        if (mf_n < 2) throw ValidationError("meanfield.n must be >= 2");
        if (!(mf_burn >= 0 && mf_burn < 1)) throw ValidationError("meanfield.burn_in must be in [0, 1)");
    }

    if (cfg.has_part("anisotropy")) {
        const double lo = -4.0, hi = 4.0;
        const auto m1 = gaussian_bin_masses(lo, hi, an_bins);
        auto w = ctx.csv("hist2d.csv", {"sigma", "x_lo", "x_hi", "y_lo", "y_hi", "count", "empirical_mass",
                                        "predicted_mass"});
        ctx.overlay("hist2d.csv", "exp(-|x|^2 / 2) / (2 pi), renormalized over [-4, 4]^2");
        std::size_t mode[2][2] = {};
        double width = 0;
        for (int variant = 0; variant < 2; ++variant) {
            Mat Sigma = Mat::Identity(2, 2);
            if (variant == 1) Sigma(1, 1) = sigma2;
            const ParticleSystemSpec spec = quadratic_particle_spec(2, 1, Sigma, false);
            SdeRunConfig rc = an;
            rc.seed = derive_seed(cfg.seed, 1 + static_cast<std::uint64_t>(variant));
            const PathEnsemble ens = simulate_particles(spec, rc, [](Stream&) { return Vec::Zero(2).eval(); });
            const Histogram2D h = stationary_histogram_2d(ens, 0, 1, an_burn, lo, hi, an_bins);
            const auto mass = h.mass();
            std::vector<double> pred(mass.size());
            double l1 = 0;
            std::size_t best = 0;
            for (std::size_t i = 0; i < an_bins; ++i)
                for (std::size_t j = 0; j < an_bins; ++j) {
                    const std::size_t b = i * an_bins + j;
                    pred[b] = m1[i] * m1[j];
                    l1 += std::abs(mass[b] - pred[b]);
                    if (mass[b] > mass[best]) best = b;
                }
            mode[variant][0] = best / an_bins;
            mode[variant][1] = best % an_bins;
            width = h.xedge(1) - h.xedge(0);
            const std::string name = variant == 0 ? "identity" : "diagonal";
            for (std::size_t i = 0; i < an_bins; ++i)
                for (std::size_t j = 0; j < an_bins; ++j) {
                    const std::size_t b = i * an_bins + j;
                    *w << name << h.xedge(i) << h.xedge(i + 1) << h.yedge(j) << h.yedge(j + 1) << h.count(i, j)
                       << mass[b] << pred[b];
                    w->end_row();
                }
            const double tol = cfg.get_double("anisotropy.tolerance");
            ctx.check("A11", "2-D histogram L1, Sigma = " + name, l1 <= tol, l1, tol,
                      num(h.in_range()) + " pooled samples in range");
        }
        const auto di = static_cast<double>(std::max(
            {mode[0][0] > mode[1][0] ? mode[0][0] - mode[1][0] : mode[1][0] - mode[0][0],
             mode[0][1] > mode[1][1] ? mode[0][1] - mode[1][1] : mode[1][1] - mode[0][1]}));
        ctx.check("", "mode bins agree across Sigma", di <= 1.0, di * width, width);
    }

    if (cfg.has_part("kl")) {
        const ParticleSystemSpec spec = quadratic_particle_spec(1, 1, Mat::Identity(1, 1), false);
        const double x0 = cfg.get_double("kl.x0");
        const PathEnsemble ens = simulate_particles(spec, kc, [x0](Stream&) { return Vec::Constant(1, x0).eval(); });
        const GenericSystem sys = particle_generic_system(spec);
        const auto bins = static_cast<std::size_t>(cfg.get_uint("kl.bins"));
        const auto kl = kl_to_stationary_checkpoints(
            ens, sys, 0, [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi); }, -6.0,
            6.0, bins, checkpoints);
        auto w = ctx.csv("kl.csv", {"t", "kl_binned", "kl_gaussian"});
        ctx.overlay("kl.csv", "kl_gaussian: KL(N(x0 e^-t, 1 - e^-2t) || N(0, 1))");
        bool decreasing = true;
        for (std::size_t i = 0; i < kl.size(); ++i) {
            const double t = checkpoints[i];
            const double mu = x0 * std::exp(-t), s2 = 1.0 - std::exp(-2.0 * t);
            *w << t << kl[i] << 0.5 * (s2 + mu * mu - 1.0 - std::log(s2));
            w->end_row();
            if (i > 0 && !(kl[i] < kl[i - 1])) decreasing = false;
        }
        ctx.check("", "KL strictly decreasing over checkpoints", decreasing, decreasing ? 1.0 : 0.0, 1.0);
        const double ftol = cfg.get_double("kl.final_tolerance");
        ctx.check("", "final KL", kl.back() <= ftol, kl.back(), ftol);
    }

    if (cfg.has_part("meanfield")) {
        const ParticleSystemSpec spec = quadratic_particle_spec(1, mf_n, Mat::Identity(1, 1), true);
        const auto N = static_cast<Eigen::Index>(mf_n);
        const PathEnsemble ens = simulate_particles(spec, mf, [N](Stream& rng) {
            Vec z(N);
            rng.normals(z.data(), static_cast<std::size_t>(N));
            return z;
        });
        const std::size_t k0 = ens.burn_in_index(mf_burn);
        double count = 0, sum_mean = 0, sum_var = 0;
        auto w = ctx.csv("meanfield.csv", {"path", "t", "empirical_mean", "empirical_variance"});
        for (std::size_t p = 0; p < ens.n_paths(); ++p) {
            if (ens.diverged[p]) continue;
            for (std::size_t k = 0; k < ens.n_times(); ++k) {
                const auto col = ens.paths[p].col(static_cast<Eigen::Index>(k));
                const double mean = col.mean();
                const double var = (col.array() - mean).square().mean();
                *w << p << ens.times[k] << mean << var;
                w->end_row();
                if (k < k0) continue;
                count += 1;
                sum_mean += mean;
                sum_var += var + mean * mean;  // spread about the origin
            }
        }
        const double target = kMeanFieldVariance;
        const double var = sum_var / count;
        const double rel = std::abs(var - target) / target;
        const double tol = cfg.get_double("meanfield.tolerance");
        ctx.check("", "mean-field empirical variance", rel <= tol, rel, tol, num(var) + " vs " + num(target));
        ctx.info("", "mean-field empirical mean", sum_mean / count);
    }
}

}  // namespace elab::harness
