#pragma once

#include "elab/generic_core.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace elab {

/// Probability vector over a finite alphabet, optionally with the integer counts it came from.
struct DiscreteMeasure {
    std::vector<double> weights;
    std::vector<std::uint64_t> counts;  // empty when not built from counts

    std::size_t size() const { return weights.size(); }
    void validate() const;  // nonnegative, sums to 1 within 1e-12
    static DiscreteMeasure from_counts(const std::vector<std::uint64_t>& counts);
};

/// Values of a density on the uniform grid lo + i (hi - lo) / (N - 1), i = 0..N-1.
struct GridDensity1D {
    double lo = 0.0, hi = 1.0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double x(std::size_t i) const;
    double h() const;
    double mass() const;  // trapezoid
    void normalize();
    void validate() const;
    static GridDensity1D sample(double lo, double hi, std::size_t N, const std::function<double(double)>& f);
};

/// Trapezoid integral of f over the grid of g.
double trapezoid(const GridDensity1D& g, const std::function<double(double, double)>& f);

/// Convex phi with phi(1) = 0. recession is lim phi(t)/t as t -> inf (inf for superlinear phi);
/// it prices mass sitting on zero-weight atoms of the reference measure.
struct PhiFunction {
    std::string name;
    std::function<double(double)> phi;
    double recession = std::numeric_limits<double>::infinity();

    static PhiFunction boltzmann();  // s log s
    static PhiFunction bep();        // t - 1 - log t
    /// Rejects functions that fail midpoint convexity on a sample grid of [0, 10] or have phi(1) != 0.
    static PhiFunction user(std::string name, std::function<double(double)> phi,
                            double recession = std::numeric_limits<double>::infinity());
};

/// sum_j nu_j phi(rho_j / nu_j), with 0 phi(0/0) = 0 and rho_j * recession on zero-nu atoms.
double relative_entropy(const DiscreteMeasure& rho, const DiscreteMeasure& nu, const PhiFunction& phi);
/// Trapezoid quadrature of nu phi(rho / nu) on a shared grid.
double relative_entropy(const GridDensity1D& rho, const GridDensity1D& nu, const PhiFunction& phi);

/// Boltzmann relative entropy of rho with respect to mu.
double sanov_rate(const DiscreteMeasure& rho, const DiscreteMeasure& mu);
double sanov_rate(const GridDensity1D& rho, const GridDensity1D& mu);
/// int rho (log rho + V) + log Z with Z = int exp(-V), both by trapezoid on the grid of rho.
double sanov_rate_fokker_planck(const GridDensity1D& rho, const std::function<double(double)>& V);

/// log of n! / prod k_j! * prod mu_j^{k_j} through lgamma; -inf if a zero-mu atom is occupied.
double multinomial_logprob(const std::vector<std::uint64_t>& counts, const std::vector<double>& mu);

/// | -(1/n) multinomial_logprob - sanov_rate(counts / n, mu) |
double stirling_gap(const std::vector<std::uint64_t>& counts, const std::vector<double>& mu);

/// Samples are symbols 0..alphabet-1.
DiscreteMeasure empirical_measure(const std::vector<std::size_t>& samples, std::size_t alphabet);

double total_variation(const DiscreteMeasure& a, const DiscreteMeasure& b);

struct SanovTail {
    std::uint64_t n;
    double exponent;  // -(1/n) log P(rho_1 <= threshold)
    double rate;      // inf over the set of the Boltzmann rate
};

/// Two-letter alphabet with mu = (mu1, 1 - mu1); exact binomial tail in log space.
SanovTail sanov_tail(std::uint64_t n, double mu1, double threshold);

enum class CatalogEntropy {
    Diffusion,       // S = -int rho log rho
    FokkerPlanck,    // S = -int rho (log rho + V)
    HardRods,        // S = -int rho log(rho / (1 - a rho))
    Bep,             // I = int (eta/eta0 - 1 - log(eta/eta0))
    ZeroRange,       // S = -int s(rho), s(u) = int_0^u log phi(r) dr
    HeatConduction,  // S = int log rho
};

std::string catalog_name(CatalogEntropy e);
CatalogEntropy catalog_from_name(const std::string& name);

struct CatalogParams {
    double a = 0.0;       // hard rods
    double eta0 = 1.0;    // BEP
    std::function<double(double)> V;         // Fokker-Planck
    std::function<double(double)> jump_rate; // zero-range phi
};

/// Trapezoid quadrature of the named integrand. Constraint violations raise DomainError
/// naming the grid point.
double entropy_catalog(CatalogEntropy which, const GridDensity1D& profile, const CatalogParams& params = {});

/// s(u) = int_0^u log phi(r) dr for the zero-range entropy (tanh-sinh quadrature).
double zero_range_s(const std::function<double(double)>& jump_rate, double u);

/// J = S(z_0)/2 - S(z_T)/2 + int [ <zdot, K^{-1} zdot>/2 + <grad S/2, K grad S/2>/2 ] dt,
/// zdot by central differences (one-sided at the ends), trapezoid weights.
double rate_functional_J(const Trajectory& traj, const ScalarField& S, const OperatorField& K);

}  // namespace elab
