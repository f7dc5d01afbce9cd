#include "elab/generic_sde.hpp"

#include "elab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace elab {

namespace {
constexpr double kDivergenceBound = 1e8;

bool escaped(const Vec& z) { return !z.allFinite() || z.cwiseAbs().maxCoeff() > kDivergenceBound; }

double reference_density(const GenericSystem& sys, const Vec& z) { return sys.a ? (*sys.a)(z) : 1.0; }

void finalize_divergence(PathEnsemble& ens) {
    ens.n_diverged = static_cast<std::size_t>(std::count(ens.diverged.begin(), ens.diverged.end(), true));
    if (static_cast<double>(ens.n_diverged) > 1e-3 * static_cast<double>(ens.paths.size())) {
        double first = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < ens.paths.size(); ++p) {
            if (!ens.diverged[p]) continue;
            for (std::size_t k = 0; k < ens.times.size(); ++k)
                if (!ens.paths[p].col(static_cast<Eigen::Index>(k)).allFinite()) {
                    first = std::min(first, ens.times[k]);
                    break;
                }
        }
        throw DivergenceError(std::to_string(ens.n_diverged) + " of " + std::to_string(ens.paths.size()) +
                                  " paths diverged (limit 0.1%)",
                              first);
    }
}

PathEnsemble make_ensemble(const std::string& name, std::size_t dim, const SdeRunConfig& cfg) {
    PathEnsemble ens;
    ens.system_name = name;
    ens.dim = dim;
    ens.seed = cfg.seed;
    ens.cfg = cfg;
    const std::size_t steps = cfg.steps();
    for (std::size_t k = 0; k <= steps; k += cfg.record_stride) ens.times.push_back(static_cast<double>(k) * cfg.dt);
    ens.paths.resize(cfg.n_paths);
    ens.stream_ids.resize(cfg.n_paths);
    ens.diverged.assign(cfg.n_paths, false);
    for (std::size_t p = 0; p < cfg.n_paths; ++p) ens.stream_ids[p] = p;
    return ens;
}

// Shared stepping loop: `step(z, rng)` advances z by one dt in place.
template <class Step>
void run_paths(PathEnsemble& ens, const SdeRunConfig& cfg, const InitialLaw& init, const Step& step) {
    const std::size_t steps = cfg.steps();
    const auto n_rec = static_cast<Eigen::Index>(ens.times.size());
    std::vector<char> bad(cfg.n_paths, 0);
    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t p) {
        Stream rng(cfg.seed, ens.stream_ids[p], StreamTag::Path);
        Vec z = init(rng);
        Mat& out = ens.paths[p];
        out.setConstant(static_cast<Eigen::Index>(ens.dim), n_rec, std::numeric_limits<double>::quiet_NaN());
        out.col(0) = z;
        Eigen::Index rec = 1;
        for (std::size_t k = 1; k <= steps; ++k) {
            step(z, rng);
            if (k % cfg.record_stride == 0) {
                if (escaped(z)) {
                    bad[p] = 1;
                    return;
                }
                out.col(rec++) = z;
            }
        }
    });
    for (std::size_t p = 0; p < cfg.n_paths; ++p) ens.diverged[p] = bad[p] != 0;
    finalize_divergence(ens);
}
}  // namespace

void SdeRunConfig::validate() const {
    if (n_paths < 1) throw ValidationError("n_paths must be >= 1");
    if (record_stride < 1) throw ValidationError("record_stride must be >= 1");
    const std::size_t s = step_count(dt, T);
    if (s % record_stride != 0) throw ValidationError("T/dt must be a multiple of record_stride");
}

std::size_t SdeRunConfig::steps() const { return step_count(dt, T); }

std::size_t PathEnsemble::burn_in_index(double fraction) const {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw ValidationError("burn_in must lie in [0, 1)");
    if (times.empty()) return 0;
    const double t0 = fraction * times.back();
    std::size_t k = 0;
    while (k < times.size() && times[k] < t0 - 1e-12 * std::max(1.0, times.back())) ++k;
    return k;
}

Vec divergence_term(const GenericSystem& sys, const Vec& z) {
    Vec out(z.size());
    if (sys.divAK) {
        sys.divAK(z, out);
        return out;
    }
    out.setZero();
    const double h = 1e-4 * (1.0 + z.norm());
    Vec zp = z;
    Mat Kp, Km;
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        zp[j] = z[j] + h;
        sys.K(zp, Kp);
        Kp *= reference_density(sys, zp);
        zp[j] = z[j] - h;
        sys.K(zp, Km);
        Km *= reference_density(sys, zp);
        zp[j] = z[j];
        out += (Kp.col(j) - Km.col(j)) / (2.0 * h);
    }
    return out / reference_density(sys, z);
}

double unimodularity_residual(const GenericSystem& sys, const Vec& z) {
    Vec div = Vec::Zero(z.size());
    const double h = 1e-4 * (1.0 + z.norm());
    Vec zp = z;
    Mat Jp, Jm;
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        zp[j] = z[j] + h;
        sys.J(zp, Jp);
        Jp *= reference_density(sys, zp);
        zp[j] = z[j] - h;
        sys.J(zp, Jm);
        Jm *= reference_density(sys, zp);
        zp[j] = z[j];
        div += (Jp.col(j) - Jm.col(j)) / (2.0 * h);
    }
    return div.cwiseAbs().maxCoeff();
}

Vec sde_drift(const GenericSystem& sys, const Vec& z) { return generic_vector_field(sys, z) + divergence_term(sys, z); }

PathEnsemble integrate_sde(const GenericSystem& sys, const Vec& z0, const SdeRunConfig& cfg) {
    return integrate_sde(sys, [z0](Stream&) { return z0; }, cfg);
}

PathEnsemble integrate_sde(const GenericSystem& sys, const InitialLaw& init, const SdeRunConfig& cfg) {
    cfg.validate();
    PathEnsemble ens = make_ensemble(sys.name, sys.d, cfg);
    if (sys.a) {
        Stream probe(cfg.seed, 0, StreamTag::Path);
        const Vec z0 = init(probe);
        const double r = unimodularity_residual(sys, z0);
        if (r > 1e-6) std::clog << "warning: div(aJ) = " << r << " at the initial state of path 0\n";
    }
    const double dt = cfg.dt;
    const double noise_scale = std::sqrt(2.0 * dt);
    const auto m = static_cast<Eigen::Index>(sys.Sigma.cols);
    run_paths(ens, cfg, init, [&](Vec& z, Stream& rng) {
        thread_local Vec gE, gS, xi, drift;
        thread_local Mat J, K, Sig;
        sys.E.grad(z, gE);
        sys.S.grad(z, gS);
        sys.J(z, J);
        sys.K(z, K);
        sys.Sigma(z, Sig);
        drift.noalias() = J * gE;
        drift.noalias() += K * gS;
        drift += divergence_term(sys, z);
        xi.resize(m);
        rng.normals(xi.data(), static_cast<std::size_t>(m));
        z += dt * drift;
        z.noalias() += noise_scale * (Sig * xi);
    });
    return ens;
}

EnergyDriftSummary check_as_energy_conservation(const PathEnsemble& ens, const GenericSystem& sys) {
    EnergyDriftSummary s;
    double sum_max = 0.0, sum_term = 0.0;
    for (std::size_t p = 0; p < ens.n_paths(); ++p) {
        if (ens.diverged[p]) continue;
        const Mat& path = ens.paths[p];
        const double E0 = sys.E(path.col(0));
        double worst = 0.0;
        for (Eigen::Index k = 1; k < path.cols(); ++k) worst = std::max(worst, std::abs(sys.E(path.col(k)) - E0));
        sum_max += worst;
        sum_term += std::abs(sys.E(path.col(path.cols() - 1)) - E0);
        s.max_max = std::max(s.max_max, worst);
        ++s.paths_used;
    }
    if (s.paths_used > 0) {
        s.mean_max = sum_max / static_cast<double>(s.paths_used);
        s.mean_terminal = sum_term / static_cast<double>(s.paths_used);
    }
    return s;
}

TwinIncrementGap twin_energy_increment_gap(const GenericSystem& sys, const std::vector<Vec>& states, double dt,
                                           std::uint64_t seed) {
    TwinIncrementGap gap;
    Stream rng(seed, 0, StreamTag::Misc);
    const auto m = static_cast<Eigen::Index>(sys.Sigma.cols);
    for (const auto& z : states) {
        const Vec drift = sde_drift(sys, z);
        Vec xi(m);
        rng.normals(xi.data(), static_cast<std::size_t>(m));
        const Vec noise = std::sqrt(2.0 * dt) * (sys.Sigma(z) * xi);
        const Vec dz_plus = dt * drift + noise;
        const Vec dz_minus = dt * drift - noise;
        const Vec gE = sys.E.grad(z);
        gap.linear = std::max(gap.linear, std::abs(gE.dot(dz_plus) - gE.dot(dz_minus)));
        const double E0 = sys.E(z);
        gap.exact = std::max(gap.exact, std::abs((sys.E(z + dz_plus) - E0) - (sys.E(z + dz_minus) - E0)));
    }
    return gap;
}

Histogram1D stationary_histogram(const PathEnsemble& ens, const std::function<double(const Vec&)>& proj,
                                 double burn_in, double lo, double hi, std::size_t bins) {
    const std::size_t k0 = ens.burn_in_index(burn_in);
    Histogram1D h(lo, hi, bins);
    for (std::size_t p = 0; p < ens.n_paths(); ++p) {
        if (ens.diverged[p]) continue;
        for (std::size_t k = k0; k < ens.n_times(); ++k) h.add(proj(ens.paths[p].col(static_cast<Eigen::Index>(k))));
    }
    if (h.in_range() + h.outside() == 0.0) throw DomainError("stationary_histogram: empty pool");
    return h;
}

Histogram2D stationary_histogram_2d(const PathEnsemble& ens, std::size_t ix, std::size_t iy, double burn_in,
                                    double lo, double hi, std::size_t bins) {
    const std::size_t k0 = ens.burn_in_index(burn_in);
    Histogram2D h(lo, hi, bins, lo, hi, bins);
    std::size_t pooled = 0;
    for (std::size_t p = 0; p < ens.n_paths(); ++p) {
        if (ens.diverged[p]) continue;
        const Mat& path = ens.paths[p];
        for (std::size_t k = k0; k < ens.n_times(); ++k) {
            const auto c = static_cast<Eigen::Index>(k);
            h.add(path(static_cast<Eigen::Index>(ix), c), path(static_cast<Eigen::Index>(iy), c));
            ++pooled;
        }
    }
    if (pooled == 0) throw DomainError("stationary_histogram_2d: empty pool");
    return h;
}

void ParticleSystemSpec::validate() const {
    if (d < 1 || n < 1) throw ValidationError("particles: d and n must be >= 1");
    if (Sigma.rows() != static_cast<Eigen::Index>(d) || Sigma.cols() != static_cast<Eigen::Index>(d))
        throw ValidationError("particles: Sigma must be d x d");
    if (!V.value) throw ValidationError("particles: confinement V is required");
    if (psi) {
        for (const auto& x : gaussian_cloud(d, 32, 977)) {
            const double a = (*psi)(x), b = (*psi)(Vec(-x));
            if (std::abs(a - b) > 1e-10 * (1.0 + std::abs(a))) throw ValidationError("particles: psi must be even");
        }
    }
}

PathEnsemble simulate_particles(const ParticleSystemSpec& spec, const SdeRunConfig& cfg, const InitialLaw& init,
                                bool mean_field_scaling) {
    spec.validate();
    cfg.validate();
    const std::size_t d = spec.d, n = spec.n;
    PathEnsemble ens = make_ensemble("particles", d * n, cfg);
    const Mat D = spec.Sigma * spec.Sigma.transpose();
    const double dt = cfg.dt;
    const double noise_scale = std::sqrt(2.0 * dt);
    const double pair_scale = mean_field_scaling ? 1.0 / static_cast<double>(n) : 1.0;
    const auto di = static_cast<Eigen::Index>(d);
    run_paths(ens, cfg, init, [&](Vec& z, Stream& rng) {
        thread_local Vec drift, g, xi, xj;
        drift.setZero(z.size());
        for (std::size_t i = 0; i < n; ++i) {
            const auto off = static_cast<Eigen::Index>(i * d);
            const Vec x = z.segment(off, di);
            spec.V.grad(x, g);
            drift.segment(off, di).noalias() -= D * g;
            if (spec.psi) {
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    const Vec diff = x - z.segment(static_cast<Eigen::Index>(j * d), di);
                    spec.psi->grad(diff, g);
                    drift.segment(off, di) -= pair_scale * g;
                }
            }
        }
        xi.resize(di);
        z += dt * drift;
        for (std::size_t i = 0; i < n; ++i) {
            rng.normals(xi.data(), d);
            z.segment(static_cast<Eigen::Index>(i * d), di).noalias() += noise_scale * (spec.Sigma * xi);
        }
    });
    return ens;
}

GenericSystem particle_generic_system(const ParticleSystemSpec& spec) {
    spec.validate();
    const std::size_t d = spec.d, n = spec.n;
    const auto di = static_cast<Eigen::Index>(d);
    const auto N = static_cast<Eigen::Index>(d * n);
    GenericSystem sys;
    sys.name = "particles";
    sys.d = d * n;
    sys.E = ScalarField{sys.d, [](const Vec&) { return 0.0; }, [N](const Vec&, Vec& g) { g.setZero(N); }};
    auto energy = [spec, d, n, di](const Vec& z) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Vec x = z.segment(static_cast<Eigen::Index>(i * d), di);
            s += spec.V(x);
            if (spec.psi)
                for (std::size_t j = i + 1; j < n; ++j)
                    s += (*spec.psi)(Vec(x - z.segment(static_cast<Eigen::Index>(j * d), di))) / static_cast<double>(n);
        }
        return s;
    };
    sys.S = ScalarField{sys.d, [energy](const Vec& z) { return -energy(z); }, {}};
    Mat K = Mat::Zero(N, N);
    const Mat D = spec.Sigma * spec.Sigma.transpose();
    Mat Sig = Mat::Zero(N, N);
    for (std::size_t i = 0; i < n; ++i) {
        const auto off = static_cast<Eigen::Index>(i * d);
        K.block(off, off, di, di) = D;
        Sig.block(off, off, di, di) = spec.Sigma;
    }
    sys.J = constant_operator(Mat::Zero(N, N));
    sys.K = constant_operator(K);
    sys.Sigma = constant_operator(Sig);
    sys.divAK = [N](const Vec&, Vec& out) { out.setZero(N); };
    return sys;
}

std::vector<double> bin_masses(const std::function<double(double)>& density, double lo, double hi, std::size_t bins,
                               std::size_t panels_per_bin) {
    if (panels_per_bin % 2 != 0) ++panels_per_bin;
    std::vector<double> mass(bins, 0.0);
    const double w = (hi - lo) / static_cast<double>(bins);
    const double h = w / static_cast<double>(panels_per_bin);
    double total = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        const double a = lo + static_cast<double>(b) * w;
        double s = density(a) + density(a + w);
        for (std::size_t i = 1; i < panels_per_bin; ++i) s += (i % 2 ? 4.0 : 2.0) * density(a + static_cast<double>(i) * h);
        mass[b] = s * h / 3.0;
        total += mass[b];
    }
    if (!(total > 0.0)) throw DomainError("bin_masses: density has no mass on the range");
    for (auto& m : mass) m /= total;
    return mass;
}

std::vector<double> kl_to_stationary_checkpoints(const PathEnsemble& ens, const GenericSystem& sys,
                                                 std::size_t coordinate,
                                                 const std::function<double(double)>& stationary_density,
                                                 double lo, double hi, std::size_t bins,
                                                 const std::vector<double>& checkpoints) {
    if (ens.n_paths() == 0) throw DomainError("kl_to_stationary_checkpoints: empty ensemble");
    const Vec z0 = ens.paths.front().col(0);
    if (sys.Sigma(z0).cwiseAbs().maxCoeff() == 0.0)
        throw ValidationError("kl_to_stationary_checkpoints: deterministic system (Sigma = 0)");
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        if (checkpoints[i] < 0.0 || checkpoints[i] > ens.times.back() + 1e-12)
            throw ValidationError("checkpoints must lie in [0, T]");
        if (i > 0 && !(checkpoints[i] > checkpoints[i - 1])) throw ValidationError("checkpoints must increase");
    }
    const std::vector<double> q = bin_masses(stationary_density, lo, hi, bins);
    std::vector<double> out;
    for (double t : checkpoints) {
        const auto it = std::lower_bound(ens.times.begin(), ens.times.end(), t - 1e-12);
        const auto k = static_cast<Eigen::Index>(std::distance(ens.times.begin(), it));
        Histogram1D h(lo, hi, bins);
        double used = 0.0;
        for (std::size_t p = 0; p < ens.n_paths(); ++p) {
            if (ens.diverged[p]) continue;
            h.add(ens.paths[p](static_cast<Eigen::Index>(coordinate), k));
            used += 1.0;
        }
        out.push_back(kl_smoothed(h.counts(), used, q));
    }
    return out;
}

}  // namespace elab
