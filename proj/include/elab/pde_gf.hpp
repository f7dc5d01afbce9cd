#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace elab {

/// Gradient structure for d_t u = d_x( m(u) d_x( s'(u) + V ) ), i.e. entropy S = -int (s(u) + u V)
/// with Onsager operator K xi = -d_x(m d_x xi).
struct GradientStructure1D {
    std::string name;
    std::function<double(double)> s, ds, d2s;
    std::function<double(double)> mobility;
    std::function<double(double)> V, dV;  // empty when there is no potential

    void validate() const;  // m >= 0 and s'' >= 0 on a sample grid of (0, 10]
};

/// phi(u) = u^p: m(u) = u, s'(u) = p + p (u^{p-1} - 1)/(p - 1) (p = 1: 1 + log u), s(1) = 0.
GradientStructure1D wasserstein_power(double p);

/// General phi: s'(u) = phi'(1) + int_1^u phi'(r)/r dr by quadrature, s(1) = 0. DomainError if
/// s' is not finite at u_min.
GradientStructure1D wasserstein(std::function<double(double)> phi, std::function<double(double)> dphi,
                                double u_min = 1e-12);

/// m(u) = phi(u), s'(u) = log phi(u), s(u) = int_0^u log phi.
GradientStructure1D zero_range(std::function<double(double)> phi, std::function<double(double)> dphi);

/// m(u) = alpha(u), S = +int log u, i.e. s(u) = -log u in the S = -int s convention.
GradientStructure1D heat_conduction(std::function<double(double)> alpha);

/// Linear Fokker-Planck: m(u) = u, s(u) = u log u, potential V.
GradientStructure1D fokker_planck(std::function<double(double)> V, std::function<double(double)> dV);

/// Cell averages on [lo, hi] split into N equal cells; x(i) is the centre of cell i.
struct CellDensity1D {
    double lo = 0.0, hi = 1.0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double dx() const { return (hi - lo) / static_cast<double>(values.size()); }
    double x(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * dx(); }
    double mass() const;
    static CellDensity1D sample(double lo, double hi, std::size_t cells, const std::function<double(double)>& f);
};

inline constexpr double kPositivityFloor = 1e-12;

/// Flux-difference discretization with arithmetic-mean face mobilities and no-flux boundaries;
/// s' is evaluated at max(u, 1e-12).
std::vector<double> rhs(const GradientStructure1D& gs, const CellDensity1D& rho);

/// Largest stable step 0.4 dx^2 / max_i m(u_i) s''(u_i).
double max_stable_dt(const GradientStructure1D& gs, const CellDensity1D& rho);

struct Snapshot {
    double t;
    CellDensity1D rho;
};

/// Forward Euler. The stability bound is rechecked every step; a violation throws
/// ValidationError quoting a stable dt. Snapshots at t = 0 and each requested time
/// (each must be a multiple of dt).
std::vector<Snapshot> solve(const GradientStructure1D& gs, const CellDensity1D& rho0, double dt, double T,
                            const std::vector<double>& snapshot_times);

/// S(rho) = -sum_i (s(u_i) + u_i V(x_i)) dx.
double entropy(const GradientStructure1D& gs, const CellDensity1D& rho);
std::vector<double> entropy_monitor(const std::vector<Snapshot>& snapshots, const GradientStructure1D& gs);

double l1_distance(const CellDensity1D& a, const CellDensity1D& b);
double sup_distance(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace elab
