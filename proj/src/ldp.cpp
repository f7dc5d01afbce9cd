#include "elab/ldp.hpp"

#include "elab/types.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace elab {

void DiscreteMeasure::validate() const {
    if (weights.empty()) throw ValidationError("discrete measure: empty alphabet");
    double s = 0.0;
    for (double w : weights) {
        if (!(w >= 0) || !std::isfinite(w)) throw ValidationError("discrete measure: weights must be nonnegative");
        s += w;
    }
    if (std::abs(s - 1.0) > 1e-12) throw ValidationError("discrete measure: weights must sum to 1");
}

DiscreteMeasure DiscreteMeasure::from_counts(const std::vector<std::uint64_t>& counts) {
    const std::uint64_t n = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
    if (n == 0) throw ValidationError("discrete measure: counts must not all be zero");
    DiscreteMeasure m;
    m.counts = counts;
    for (auto k : counts) m.weights.push_back(static_cast<double>(k) / static_cast<double>(n));
    return m;
}

double GridDensity1D::x(std::size_t i) const { return lo + static_cast<double>(i) * h(); }
double GridDensity1D::h() const { return (hi - lo) / static_cast<double>(values.size() - 1); }

double GridDensity1D::mass() const {
    return trapezoid(*this, [](double, double v) { return v; });
}

void GridDensity1D::normalize() {
    const double m = mass();
    if (!(m > 0)) throw DomainError("grid density: cannot normalize zero mass");
    for (double& v : values) v /= m;
}

void GridDensity1D::validate() const {
    if (values.size() < 2 || !(hi > lo)) throw ValidationError("grid density: need at least two points and hi > lo");
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!(values[i] >= 0) || !std::isfinite(values[i]))
            throw ValidationError("grid density: negative or non-finite value at x = " + std::to_string(x(i)));
}

GridDensity1D GridDensity1D::sample(double lo, double hi, std::size_t N, const std::function<double(double)>& f) {
    GridDensity1D g;
    g.lo = lo;
    g.hi = hi;
    g.values.resize(N);
    for (std::size_t i = 0; i < N; ++i) g.values[i] = f(g.x(i));
    return g;
}

double trapezoid(const GridDensity1D& g, const std::function<double(double, double)>& f) {
    if (g.values.size() < 2) throw ValidationError("trapezoid: need at least two grid points");
    const std::size_t N = g.values.size();
    double s = 0.5 * (f(g.x(0), g.values[0]) + f(g.x(N - 1), g.values[N - 1]));
    for (std::size_t i = 1; i + 1 < N; ++i) s += f(g.x(i), g.values[i]);
    return s * g.h();
}

PhiFunction PhiFunction::boltzmann() {
    return {"boltzmann", [](double s) { return s > 0 ? s * std::log(s) : 0.0; },
            std::numeric_limits<double>::infinity()};
}

PhiFunction PhiFunction::bep() {
    return {"bep",
            [](double t) { return t > 0 ? t - 1.0 - std::log(t) : std::numeric_limits<double>::infinity(); }, 1.0};
}

PhiFunction PhiFunction::user(std::string name, std::function<double(double)> phi, double recession) {
    if (std::abs(phi(1.0)) > 1e-12) throw ValidationError("phi function '" + name + "': phi(1) must be 0");
    for (int i = 0; i < 200; ++i) {
        const double a = 0.05 * i, b = 0.05 * (i + 1) + 0.1;
        const double fa = phi(a), fb = phi(b), fm = phi(0.5 * (a + b));
        if (std::isfinite(fa) && std::isfinite(fb) && fm > 0.5 * (fa + fb) + 1e-12 * (1 + std::abs(fm)))
            throw ValidationError("phi function '" + name + "': midpoint convexity fails near " + std::to_string(a));
    }
    return {std::move(name), std::move(phi), recession};
}

namespace {

double entropy_term(double r, double v, const PhiFunction& phi) {
    if (v > 0) return v * phi.phi(r / v);
    if (r == 0) return 0.0;
    return std::isinf(phi.recession) ? std::numeric_limits<double>::infinity() : r * phi.recession;
}

void require_same_grid(const GridDensity1D& a, const GridDensity1D& b) {
    if (a.size() != b.size() || a.lo != b.lo || a.hi != b.hi)
        throw ValidationError("relative entropy: densities live on different grids");
}

}  // namespace

double relative_entropy(const DiscreteMeasure& rho, const DiscreteMeasure& nu, const PhiFunction& phi) {
    if (rho.size() != nu.size()) throw ValidationError("relative entropy: alphabets differ in size");
    double s = 0.0;
    for (std::size_t j = 0; j < rho.size(); ++j) s += entropy_term(rho.weights[j], nu.weights[j], phi);
    return s;
}

double relative_entropy(const GridDensity1D& rho, const GridDensity1D& nu, const PhiFunction& phi) {
    require_same_grid(rho, nu);
    std::size_t i = 0;
    double s = 0.0;
    const std::size_t N = rho.size();
    for (i = 0; i < N; ++i) {
        const double w = (i == 0 || i + 1 == N) ? 0.5 : 1.0;
        const double t = entropy_term(rho.values[i], nu.values[i], phi);
        if (std::isinf(t)) return t;
        s += w * t;
    }
    return s * rho.h();
}

double sanov_rate(const DiscreteMeasure& rho, const DiscreteMeasure& mu) {
    return relative_entropy(rho, mu, PhiFunction::boltzmann());
}

double sanov_rate(const GridDensity1D& rho, const GridDensity1D& mu) {
    return relative_entropy(rho, mu, PhiFunction::boltzmann());
}

double sanov_rate_fokker_planck(const GridDensity1D& rho, const std::function<double(double)>& V) {
    const double Z = trapezoid(rho, [&](double x, double) { return std::exp(-V(x)); });
    const double integral = trapezoid(rho, [&](double x, double r) { return r > 0 ? r * (std::log(r) + V(x)) : 0.0; });
    return integral + std::log(Z);
}

double multinomial_logprob(const std::vector<std::uint64_t>& counts, const std::vector<double>& mu) {
    if (counts.size() != mu.size()) throw ValidationError("multinomial_logprob: counts and mu differ in size");
    std::uint64_t n = 0;
    double lp = 0.0;
    for (std::size_t j = 0; j < counts.size(); ++j) {
        if (!(mu[j] >= 0)) throw ValidationError("multinomial_logprob: mu must be nonnegative");
        n += counts[j];
        if (counts[j] == 0) continue;
        if (mu[j] == 0) return -std::numeric_limits<double>::infinity();
        const auto k = static_cast<double>(counts[j]);
        lp += k * std::log(mu[j]) - std::lgamma(k + 1.0);
    }
    return lp + std::lgamma(static_cast<double>(n) + 1.0);
}

double stirling_gap(const std::vector<std::uint64_t>& counts, const std::vector<double>& mu) {
    const DiscreteMeasure rho = DiscreteMeasure::from_counts(counts);
    DiscreteMeasure m;
    m.weights = mu;
    const auto n = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
    return std::abs(-multinomial_logprob(counts, mu) / n - sanov_rate(rho, m));
}

DiscreteMeasure empirical_measure(const std::vector<std::size_t>& samples, std::size_t alphabet) {
    std::vector<std::uint64_t> counts(alphabet, 0);
    for (std::size_t s : samples) {
        if (s >= alphabet) throw ValidationError("empirical_measure: symbol outside the alphabet");
        ++counts[s];
    }
    return DiscreteMeasure::from_counts(counts);
}

double total_variation(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    if (a.size() != b.size()) throw ValidationError("total_variation: alphabets differ in size");
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += std::abs(a.weights[j] - b.weights[j]);
    return 0.5 * s;
}

SanovTail sanov_tail(std::uint64_t n, double mu1, double threshold) {
    if (n == 0 || !(mu1 > 0 && mu1 < 1)) throw ValidationError("sanov_tail: need n > 0 and 0 < mu1 < 1");
    const auto kmax = static_cast<std::uint64_t>(std::floor(threshold * static_cast<double>(n) + 1e-9));
    std::vector<double> terms;
    for (std::uint64_t k = 0; k <= std::min(kmax, n); ++k) terms.push_back(multinomial_logprob({k, n - k}, {mu1, 1 - mu1}));
    const double mx = *std::max_element(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += std::exp(t - mx);
    SanovTail out{n, -(mx + std::log(s)) / static_cast<double>(n), 0.0};
    if (mu1 > threshold) {
        DiscreteMeasure r, m;
        r.weights = {threshold, 1 - threshold};
        m.weights = {mu1, 1 - mu1};
        out.rate = sanov_rate(r, m);
    }
    return out;
}

std::string catalog_name(CatalogEntropy e) {
    switch (e) {
        case CatalogEntropy::Diffusion: return "diffusion";
        case CatalogEntropy::FokkerPlanck: return "fokker_planck";
        case CatalogEntropy::HardRods: return "hard_rods";
        case CatalogEntropy::Bep: return "bep";
        case CatalogEntropy::ZeroRange: return "zero_range";
        case CatalogEntropy::HeatConduction: return "heat_conduction";
    }
    return "?";
}

CatalogEntropy catalog_from_name(const std::string& name) {
    for (auto e : {CatalogEntropy::Diffusion, CatalogEntropy::FokkerPlanck, CatalogEntropy::HardRods,
                   CatalogEntropy::Bep, CatalogEntropy::ZeroRange, CatalogEntropy::HeatConduction})
        if (catalog_name(e) == name) return e;
    throw ValidationError("unknown entropy '" + name + "'");
}

double zero_range_s(const std::function<double(double)>& jump_rate, double u) {
    if (!(u >= 0)) throw DomainError("zero_range_s: density must be nonnegative");
    if (u == 0) return 0.0;
    // Abscissae stay 1e-30 (relative) away from r = 0, where the rate may underflow to zero.
    thread_local boost::math::quadrature::tanh_sinh<double> integrator(15, 1e-30);
    return integrator.integrate([&](double r) { return std::log(jump_rate(r)); }, 0.0, u);
}

namespace {

[[noreturn]] void domain_at(const std::string& what, double x) {
    std::ostringstream os;
    os << what << " at x = " << x;
    throw DomainError(os.str());
}

}  // namespace

double entropy_catalog(CatalogEntropy which, const GridDensity1D& profile, const CatalogParams& params) {
    if (profile.size() < 2 || !(profile.hi > profile.lo)) throw ValidationError("entropy_catalog: bad grid");
    switch (which) {
        case CatalogEntropy::Diffusion:
            return -trapezoid(profile, [](double x, double r) {
                if (r < 0) domain_at("diffusion entropy: negative density", x);
                return r > 0 ? r * std::log(r) : 0.0;
            });
        case CatalogEntropy::FokkerPlanck:
            if (!params.V) throw ValidationError("entropy_catalog: fokker_planck needs V");
            return -trapezoid(profile, [&](double x, double r) {
                if (r < 0) domain_at("Fokker-Planck entropy: negative density", x);
                return r > 0 ? r * (std::log(r) + params.V(x)) : 0.0;
            });
        case CatalogEntropy::HardRods:
            return -trapezoid(profile, [&](double x, double r) {
                if (r < 0) domain_at("hard rods: negative density", x);
                if (!(params.a * r < 1)) domain_at("hard rods: a rho >= 1", x);
                return r > 0 ? r * std::log(r / (1.0 - params.a * r)) : 0.0;
            });
        case CatalogEntropy::Bep:
            if (!(params.eta0 > 0)) throw ValidationError("entropy_catalog: eta0 must be positive");
            return trapezoid(profile, [&](double x, double eta) {
                if (!(eta > 0)) domain_at("BEP: eta must be positive", x);
                const double t = eta / params.eta0;
                return t - 1.0 - std::log(t);
            });
        case CatalogEntropy::ZeroRange:
            if (!params.jump_rate) throw ValidationError("entropy_catalog: zero_range needs a jump rate");
            return -trapezoid(profile, [&](double x, double r) {
                if (r < 0) domain_at("zero-range: negative density", x);
                return zero_range_s(params.jump_rate, r);
            });
        case CatalogEntropy::HeatConduction:
            return trapezoid(profile, [](double x, double r) {
                if (!(r > 0)) domain_at("heat conduction: density must be positive", x);
                return std::log(r);
            });
    }
    throw ValidationError("entropy_catalog: unknown entropy");
}

double rate_functional_J(const Trajectory& traj, const ScalarField& S, const OperatorField& K) {
    const std::size_t N = traj.states.size();
    if (N < 2 || traj.times.size() != N) throw ValidationError("rate_functional_J: need at least two grid points");
    const auto d = traj.states.front().size();
    Vec zdot(d), g(d);
    Mat Km(d, d);
    double integral = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const std::size_t a = i == 0 ? 0 : i - 1;
        const std::size_t b = i + 1 == N ? N - 1 : i + 1;
        zdot = (traj.states[b] - traj.states[a]) / (traj.times[b] - traj.times[a]);
        K(traj.states[i], Km);
        Eigen::LDLT<Mat> ldlt(Km);
        const Vec D = ldlt.vectorD();
        const double dmax = D.cwiseAbs().maxCoeff();
        if (ldlt.info() != Eigen::Success || !(D.minCoeff() > 1e-14 * std::max(dmax, 1e-300))) {
            std::ostringstream os;
            os << "rate_functional_J: K is singular at grid point " << i << " (t = " << traj.times[i] << ")";
            throw DomainError(os.str());
        }
        S.grad(traj.states[i], g);
        const double run = 0.5 * zdot.dot(ldlt.solve(zdot)) + 0.125 * g.dot(Km * g);
        double w = 0.0;
        if (i > 0) w += 0.5 * (traj.times[i] - traj.times[i - 1]);
        if (i + 1 < N) w += 0.5 * (traj.times[i + 1] - traj.times[i]);
        integral += w * run;
    }
    return 0.5 * S(traj.states.front()) - 0.5 * S(traj.states.back()) + integral;
}

}  // namespace elab
