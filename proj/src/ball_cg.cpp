#include "elab/ball_cg.hpp"

#include "elab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace elab {

namespace {

double norm(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

double potential_floor(const RadialPotential& V) {
    double lo = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 10000; ++i) lo = std::min(lo, V.value(i / 10000.0));
    return lo;
}

void draw_initial(const BallDiffusionParams& p, double vmin, Stream& rng, std::vector<double>& x) {
    std::fill(x.begin(), x.end(), 0.0);
    switch (p.start) {
        case BallStart::Origin:
            return;
        case BallStart::Point:
            x[0] = p.start_radius;
            return;
        case BallStart::Stationary:
            break;
    }
    for (;;) {
        rng.normals(x.data(), x.size());
        const double g = norm(x);
        if (g == 0.0) continue;
        const double r = std::pow(rng.uniform(), 1.0 / p.n);
        if (p.Vtilde) {
            const double accept = std::exp(-p.beta * (p.Vtilde->value(r) - vmin));
            if (rng.uniform() >= accept) continue;
        }
        for (double& v : x) v *= r / g;
        return;
    }
}

// Simulates one path and calls rec(record_index, x) on the recorded grid.
template <class Rec>
void ball_path(const BallDiffusionParams& p, double vmin, std::size_t index, Rec&& rec) {
    Stream rng(p.seed, index, StreamTag::Path);
    const std::size_t steps = p.run_config().steps();
    std::vector<double> x(static_cast<std::size_t>(p.n));
    std::vector<double> xi(x.size());
    draw_initial(p, vmin, rng, x);
    rec(std::size_t{0}, x);
    const double s = std::sqrt(2.0 * p.dt / p.beta);
    for (std::size_t k = 1; k <= steps; ++k) {
        if (p.Vtilde) {
            const double r = norm(x);
            if (r > 0.0) {
                const double f = p.dt * p.Vtilde->derivative(r) / r;
                for (double& v : x) v -= f * v;
            }
        }
        rng.normals(xi.data(), xi.size());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += s * xi[i];
        const double r = norm(x);
        if (r > 1.0) {
            const double scale = (2.0 - r) / r;
            for (double& v : x) v *= scale;
        }
        if (k % p.record_stride == 0) rec(k / p.record_stride, x);
    }
}

double trapezoid(const std::function<double(double)>& f, double a, double b, std::size_t n) {
    const double h = (b - a) / static_cast<double>(n);
    double s = 0.5 * (f(a) + f(b));
    for (std::size_t i = 1; i < n; ++i) s += f(a + static_cast<double>(i) * h);
    return s * h;
}

}  // namespace

void BallDiffusionParams::validate() const {
    if (n < 1) throw ValidationError("ball: n must be >= 1");
    if (!(beta > 0)) throw ValidationError("ball: beta must be > 0");
    if (!(dt > 0)) throw ValidationError("ball: dt must be > 0");
    if (dt > 1e-3 / beta * (1.0 + 1e-12)) throw ValidationError("ball: dt must be <= 1e-3 / beta");
    if (start == BallStart::Point && !(start_radius >= 0.0 && start_radius <= 1.0))
        throw ValidationError("ball: start_radius must lie in [0, 1]");
    if (Vtilde) {
        if (!Vtilde->value || !Vtilde->derivative) throw ValidationError("ball: potential needs value and derivative");
        for (int i = 0; i <= 100; ++i)
            if (!std::isfinite(Vtilde->value(i / 100.0)))
                throw ValidationError("ball: potential must be finite on [0, 1]");
    }
    run_config().validate();
}

SdeRunConfig BallDiffusionParams::run_config() const {
    SdeRunConfig c;
    c.dt = dt;
    c.T = T;
    c.n_paths = n_paths;
    c.seed = seed;
    c.record_stride = record_stride;
    c.threads = threads;
    return c;
}

PathEnsemble simulate_ball(const BallDiffusionParams& p) {
    p.validate();
    const SdeRunConfig cfg = p.run_config();
    PathEnsemble ens;
    ens.system_name = "ball";
    ens.dim = static_cast<std::size_t>(p.n);
    ens.seed = p.seed;
    ens.cfg = cfg;
    const std::size_t steps = cfg.steps();
    for (std::size_t k = 0; k <= steps; k += p.record_stride) ens.times.push_back(static_cast<double>(k) * p.dt);
    ens.paths.resize(p.n_paths);
    ens.stream_ids.resize(p.n_paths);
    ens.diverged.assign(p.n_paths, false);
    const double vmin = p.Vtilde ? potential_floor(*p.Vtilde) : 0.0;
    parallel_for(p.n_paths, p.threads, [&](std::size_t i) {
        ens.stream_ids[i] = i;
        Mat& out = ens.paths[i];
        out.resize(p.n, static_cast<Eigen::Index>(ens.times.size()));
        ball_path(p, vmin, i, [&](std::size_t k, const std::vector<double>& x) {
            for (int j = 0; j < p.n; ++j) out(j, static_cast<Eigen::Index>(k)) = x[static_cast<std::size_t>(j)];
        });
    });
    return ens;
}

RadialEnsemble coarse_grain_radius(const PathEnsemble& ens) {
    RadialEnsemble r;
    r.times = ens.times;
    r.dt_record = ens.times.size() > 1 ? ens.times[1] - ens.times[0] : 0.0;
    for (std::size_t p = 0; p < ens.n_paths(); ++p) {
        if (ens.diverged[p]) continue;
        std::vector<double> y(ens.n_times());
        for (std::size_t k = 0; k < ens.n_times(); ++k) y[k] = ens.paths[p].col(static_cast<Eigen::Index>(k)).norm();
        r.y.push_back(std::move(y));
    }
    return r;
}

RadialEnsemble simulate_ball_radial(const BallDiffusionParams& p, std::size_t first, std::size_t count) {
    p.validate();
    RadialEnsemble r;
    const std::size_t steps = p.run_config().steps();
    for (std::size_t k = 0; k <= steps; k += p.record_stride) r.times.push_back(static_cast<double>(k) * p.dt);
    r.dt_record = p.dt * static_cast<double>(p.record_stride);
    r.y.assign(count, std::vector<double>(r.times.size()));
    const double vmin = p.Vtilde ? potential_floor(*p.Vtilde) : 0.0;
    parallel_for(count, p.threads, [&](std::size_t i) {
        auto& y = r.y[i];
        ball_path(p, vmin, first + i, [&](std::size_t k, const std::vector<double>& x) { y[k] = norm(x); });
    });
    return r;
}

EntropyValue entropy_Sn(int n, double y) {
    if (!(y > 0.0)) throw DomainError("entropy_Sn: y must be > 0");
    const double c = static_cast<double>(n - 1);
    return {c * std::log(y), c / y};
}

void accumulate_drift(const RadialEnsemble& rens, BinnedAccumulator& acc, std::size_t lag, double burn_in) {
    if (lag < 1) throw ValidationError("estimate_drift: lag must be >= 1");
    if (!(burn_in >= 0.0 && burn_in < 1.0)) throw ValidationError("estimate_drift: burn_in must lie in [0, 1)");
    if (rens.times.size() <= lag) return;
    const double t0 = burn_in * rens.times.back();
    std::size_t k0 = 0;
    while (k0 < rens.times.size() && rens.times[k0] < t0) ++k0;
    const double inv = 1.0 / (static_cast<double>(lag) * rens.dt_record);
    for (const auto& y : rens.y)
        for (std::size_t k = k0; k + lag < y.size(); ++k) acc.add(y[k], (y[k + lag] - y[k]) * inv);
}

BinnedStats estimate_drift(const RadialEnsemble& rens, double lo, double hi, std::size_t bins, std::size_t lag,
                           double burn_in) {
    BinnedAccumulator acc(lo, hi, bins);
    accumulate_drift(rens, acc, lag, burn_in);
    return summarize(acc, 100.0);
}

std::function<double(double)> predicted_radial_density(const BallDiffusionParams& p) {
    const int n = p.n;
    const double beta = p.beta;
    const auto V = p.Vtilde;
    auto raw = [n, beta, V](double y) {
        const double base = n == 1 ? 1.0 : std::pow(y, n - 1);
        return V ? base * std::exp(-beta * V->value(y)) : base;
    };
    const double z = trapezoid(raw, 0.0, 1.0, 20000);
    return [raw, z](double y) { return (y < 0.0 || y > 1.0) ? 0.0 : raw(y) / z; };
}

void accumulate_radial_histogram(const RadialEnsemble& rens, Histogram1D& h, double burn_in) {
    if (!(burn_in >= 0.0 && burn_in < 1.0)) throw ValidationError("burn_in must lie in [0, 1)");
    const double t0 = burn_in * rens.times.back();
    std::size_t k0 = 0;
    while (k0 < rens.times.size() && rens.times[k0] < t0) ++k0;
    for (const auto& y : rens.y)
        for (std::size_t k = k0; k < y.size(); ++k) h.add(y[k]);
}

DensityCheck density_check_from_histogram(const Histogram1D& h, const BallDiffusionParams& params) {
    const auto f = predicted_radial_density(params);
    DensityCheck c{h, bin_masses(f, h.lo(), h.hi(), h.bins()), {}, 0.0};
    for (std::size_t i = 0; i < h.bins(); ++i) c.predicted_density.push_back(f(h.center(i)));
    c.l1 = l1_mass_distance(h.normalized(Normalization::Mass), c.predicted_mass);
    return c;
}

DensityCheck invariant_density_check(const RadialEnsemble& rens, const BallDiffusionParams& params, std::size_t bins,
                                     double burn_in) {
    Histogram1D h(0.0, 1.0 + 1e-12, bins);
    accumulate_radial_histogram(rens, h, burn_in);
    if (h.in_range() == 0.0) throw DomainError("invariant_density_check: empty pool");
    return density_check_from_histogram(h, params);
}

double unit_ball_volume(int n) {
    const double dn = static_cast<double>(n);
    return std::exp(0.5 * dn * std::log(std::numbers::pi) - std::lgamma(0.5 * dn + 1.0));
}

PdeltaMass pdelta_mass_radial(int n, double y) {
    if (n < 1) throw DomainError("pdelta_mass_radial: n must be >= 1");
    if (!(y > 0.0)) throw DomainError("pdelta_mass_radial: y must be > 0");
    // Log form throughout: the ball volume itself underflows for n in the hundreds.
    const double dn = static_cast<double>(n);
    const double log_mass =
        std::log(dn) + 0.5 * dn * std::log(std::numbers::pi) - std::lgamma(0.5 * dn + 1.0) + (dn - 1.0) * std::log(y);
    return {std::exp(log_mass), log_mass};
}

double pdelta_shell_estimate(int n, double y, double h) {
    if (!(h > 0.0)) throw DomainError("pdelta_shell_estimate: h must be > 0");
    return unit_ball_volume(n) * (std::pow(y + h, n) - std::pow(y, n)) / h;
}

std::vector<ScalingRow> scaling_limit_demo(double beta_inf, double y0, const std::vector<int>& n_list, double T,
                                           std::size_t n_paths, std::uint64_t seed, unsigned threads) {
    if (!(y0 > 0.0 && y0 < 1.0)) throw ValidationError("scaling_limit_demo: y0 must lie in (0, 1)");
    for (std::size_t i = 1; i < n_list.size(); ++i)
        if (!(n_list[i] > n_list[i - 1])) throw ValidationError("scaling_limit_demo: n_list must increase");
    const double t_hit = 0.5 * beta_inf * (1.0 - y0 * y0);
    std::vector<ScalingRow> rows;
    for (int n : n_list) {
        BallDiffusionParams p;
        p.n = n;
        p.beta = beta_inf * n;
        const auto steps = static_cast<std::size_t>(std::ceil(T * p.beta / 1e-3 - 1e-9));
        p.dt = T / static_cast<double>(steps);
        p.T = T;
        p.n_paths = n_paths;
        p.seed = seed;
        p.threads = threads;
        p.start = BallStart::Point;
        p.start_radius = y0;
        p.validate();
        std::vector<double> sup(n_paths, 0.0);
        parallel_for(n_paths, threads, [&](std::size_t i) {
            double worst = 0.0;
            ball_path(p, 0.0, i, [&](std::size_t k, const std::vector<double>& x) {
                const double t = static_cast<double>(k) * p.dt;
                if (t >= t_hit) return;
                const double ode = std::sqrt(y0 * y0 + 2.0 * t / beta_inf);
                worst = std::max(worst, std::abs(norm(x) - ode));
            });
            sup[i] = worst;
        });
        std::sort(sup.begin(), sup.end());
        const double med = n_paths % 2 ? sup[n_paths / 2] : 0.5 * (sup[n_paths / 2 - 1] + sup[n_paths / 2]);
        rows.push_back({n, p.beta, med});
    }
    return rows;
}

}  // namespace elab
