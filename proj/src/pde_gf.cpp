#include "elab/pde_gf.hpp"

#include "elab/generic_core.hpp"
#include "elab/types.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace elab {

namespace {

double gk(const std::function<double(double)>& f, double a, double b) {
    if (a == b) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, 8, 1e-12);
}

double floor_u(double u) { return std::max(u, kPositivityFloor); }

}  // namespace

void GradientStructure1D::validate() const {
    if (!s || !ds || !d2s || !mobility) throw ValidationError("gradient structure '" + name + "': incomplete");
    if (static_cast<bool>(V) != static_cast<bool>(dV))
        throw ValidationError("gradient structure '" + name + "': V and V' must be given together");
    for (int i = 1; i <= 100; ++i) {
        const double u = 0.1 * i;
        if (!(mobility(u) >= 0)) throw ValidationError("gradient structure '" + name + "': negative mobility");
        if (!(d2s(u) >= -1e-12)) throw ValidationError("gradient structure '" + name + "': s is not convex");
    }
}

GradientStructure1D wasserstein_power(double p) {
    if (!(p > 0)) throw ValidationError("wasserstein_power: exponent must be positive");
    GradientStructure1D gs;
    gs.name = "wasserstein";
    gs.mobility = [](double u) { return u; };
    if (p == 1.0) {
        gs.s = [](double u) { return u > 0 ? u * std::log(u) : 0.0; };
        gs.ds = [](double u) { return 1.0 + std::log(floor_u(u)); };
        gs.d2s = [](double u) { return 1.0 / floor_u(u); };
    } else {
        // s'(u) = b + a u^{p-1}, s(u) = a u^p / p + b u + c with s(1) = 0
        const double a = p / (p - 1.0);
        const double b = p - a;
        const double c = -(a / p + b);
        gs.s = [=](double u) { return a * std::pow(std::max(u, 0.0), p) / p + b * u + c; };
        gs.ds = [=](double u) { return b + a * std::pow(floor_u(u), p - 1.0); };
        gs.d2s = [=](double u) { return p * std::pow(floor_u(u), p - 2.0); };
    }
    return gs;
}

GradientStructure1D wasserstein(std::function<double(double)> phi, std::function<double(double)> dphi, double u_min) {
    if (!phi || !dphi) throw ValidationError("wasserstein: phi and phi' are required");
    if (std::abs(phi(0.0)) > 1e-12) throw ValidationError("wasserstein: phi(0) must be 0");
    GradientStructure1D gs;
    gs.name = "wasserstein";
    gs.mobility = [](double u) { return u; };
    auto ds = [dphi](double u) {
        const double x = floor_u(u);
        return dphi(1.0) + gk([&](double r) { return dphi(r) / r; }, 1.0, x);
    };
    gs.ds = ds;
    gs.d2s = [dphi](double u) { return dphi(floor_u(u)) / floor_u(u); };
    gs.s = [ds](double u) { return gk(ds, 1.0, std::max(u, 0.0)); };
    if (!std::isfinite(ds(u_min)))
        throw DomainError("wasserstein: phi'(u)/u is not integrable down to u = " + std::to_string(u_min));
    return gs;
}

GradientStructure1D zero_range(std::function<double(double)> phi, std::function<double(double)> dphi) {
    if (!phi || !dphi) throw ValidationError("zero_range: phi and phi' are required");
    GradientStructure1D gs;
    gs.name = "zero_range";
    gs.mobility = phi;
    gs.ds = [phi](double u) { return std::log(phi(floor_u(u))); };
    gs.d2s = [phi, dphi](double u) { return dphi(floor_u(u)) / phi(floor_u(u)); };
    gs.s = [phi](double u) {
        if (!(u > 0)) return 0.0;
        // Abscissae stay 1e-30 (relative) away from r = 0, where phi(r) may underflow to zero.
        thread_local boost::math::quadrature::tanh_sinh<double> integrator(15, 1e-30);
        return integrator.integrate([&](double r) { return std::log(phi(r)); }, 0.0, u);
    };
    return gs;
}

GradientStructure1D heat_conduction(std::function<double(double)> alpha) {
    if (!alpha) throw ValidationError("heat_conduction: alpha is required");
    GradientStructure1D gs;
    gs.name = "heat_conduction";
    gs.mobility = std::move(alpha);
    gs.s = [](double u) { return -std::log(floor_u(u)); };
    gs.ds = [](double u) { return -1.0 / floor_u(u); };
    gs.d2s = [](double u) { return 1.0 / (floor_u(u) * floor_u(u)); };
    return gs;
}

GradientStructure1D fokker_planck(std::function<double(double)> V, std::function<double(double)> dV) {
    GradientStructure1D gs = wasserstein_power(1.0);
    gs.name = "fokker_planck";
    gs.V = std::move(V);
    gs.dV = std::move(dV);
    return gs;
}

double CellDensity1D::mass() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * dx();
}

CellDensity1D CellDensity1D::sample(double lo, double hi, std::size_t cells, const std::function<double(double)>& f) {
    if (cells < 2 || !(hi > lo)) throw ValidationError("cell density: need at least two cells and hi > lo");
    CellDensity1D c;
    c.lo = lo;
    c.hi = hi;
    c.values.resize(cells);
    for (std::size_t i = 0; i < cells; ++i) c.values[i] = f(c.x(i));
    return c;
}

std::vector<double> rhs(const GradientStructure1D& gs, const CellDensity1D& rho) {
    const std::size_t N = rho.size();
    const double dx = rho.dx();
    std::vector<double> mu(N), mob(N), out(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        if (!(rho.values[i] >= 0)) throw DomainError("rhs: negative density at x = " + std::to_string(rho.x(i)));
        mu[i] = gs.ds(rho.values[i]) + (gs.V ? gs.V(rho.x(i)) : 0.0);
        mob[i] = gs.mobility(rho.values[i]);
    }
    const double idx2 = 1.0 / (dx * dx);
    for (std::size_t i = 0; i + 1 < N; ++i) {
        const double flux = 0.5 * (mob[i] + mob[i + 1]) * (mu[i + 1] - mu[i]) * idx2;
        out[i] += flux;
        out[i + 1] -= flux;
    }
    return out;
}

double max_stable_dt(const GradientStructure1D& gs, const CellDensity1D& rho) {
    double mx = 0.0;
    for (double u : rho.values) mx = std::max(mx, gs.mobility(u) * gs.d2s(u));
    const double dx = rho.dx();
    return mx > 0 ? 0.4 * dx * dx / mx : std::numeric_limits<double>::infinity();
}

std::vector<Snapshot> solve(const GradientStructure1D& gs, const CellDensity1D& rho0, double dt, double T,
                            const std::vector<double>& snapshot_times) {
    gs.validate();
    const std::size_t steps = step_count(dt, T);
    std::vector<std::size_t> marks;
    for (double t : snapshot_times) {
        if (t < 0 || t > T * (1 + 1e-12)) throw ValidationError("solve: snapshot time outside [0, T]");
        marks.push_back(step_count(dt, t));
    }
    std::sort(marks.begin(), marks.end());
    std::vector<Snapshot> out{{0.0, rho0}};
    CellDensity1D rho = rho0;
    std::size_t next = 0;
    while (next < marks.size() && marks[next] == 0) ++next;
    for (std::size_t k = 1; k <= steps; ++k) {
        const double limit = max_stable_dt(gs, rho);
        if (dt > limit) {
            std::ostringstream os;
            os << "solve: dt = " << dt << " violates the stability bound at t = " << (k - 1) * dt << "; use dt <= "
               << limit;
            throw ValidationError(os.str());
        }
        const auto r = rhs(gs, rho);
        for (std::size_t i = 0; i < rho.size(); ++i) rho.values[i] += dt * r[i];
        for (std::size_t i = 0; i < rho.size(); ++i)
            if (!std::isfinite(rho.values[i])) throw DivergenceError("solve: non-finite density", k * dt);
        while (next < marks.size() && marks[next] == k) {
            out.push_back({static_cast<double>(k) * dt, rho});
            ++next;
        }
    }
    return out;
}

double entropy(const GradientStructure1D& gs, const CellDensity1D& rho) {
    double s = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        const double u = rho.values[i];
        s += gs.s(u) + (gs.V ? u * gs.V(rho.x(i)) : 0.0);
    }
    return -s * rho.dx();
}

std::vector<double> entropy_monitor(const std::vector<Snapshot>& snapshots, const GradientStructure1D& gs) {
    std::vector<double> out;
    out.reserve(snapshots.size());
    for (const auto& sn : snapshots) out.push_back(entropy(gs, sn.rho));
    return out;
}

double l1_distance(const CellDensity1D& a, const CellDensity1D& b) {
    if (a.size() != b.size() || a.lo != b.lo || a.hi != b.hi) throw ValidationError("l1_distance: grids differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a.values[i] - b.values[i]);
    return s * a.dx();
}

double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ValidationError("sup_distance: sizes differ");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace elab
