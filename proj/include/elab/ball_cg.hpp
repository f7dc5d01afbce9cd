#pragma once

#include "elab/generic_sde.hpp"
#include "elab/stats.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace elab {

/// Radial potential V~(y) on [0, 1] with its derivative.
struct RadialPotential {
    std::function<double(double)> value;
    std::function<double(double)> derivative;
};

enum class BallStart {
    Origin,      // X_0 = 0
    Stationary,  // X_0 drawn from the invariant law (uniform, or tilted by exp(-beta V~))
    Point,       // X_0 = start_radius * e_1
};

struct BallDiffusionParams {
    int n = 3;
    double beta = 1.0;
    std::optional<RadialPotential> Vtilde;
    double dt = 1e-4;
    double T = 1.0;
    std::size_t n_paths = 1;
    std::uint64_t seed = 0;
    std::size_t record_stride = 1;
    unsigned threads = 1;
    BallStart start = BallStart::Origin;
    double start_radius = 0.0;

    void validate() const;  // includes dt <= 1e-3 / beta
    SdeRunConfig run_config() const;
};

/// Reflected Euler-Maruyama X <- X - grad V(X) dt + sqrt(2 dt / beta) xi in the unit ball.
/// A step landing at radius r > 1 is mapped to radius 2 - r along the same direction.
PathEnsemble simulate_ball(const BallDiffusionParams& params);

/// Radial paths y = |X| on the recorded grid.
struct RadialEnsemble {
    std::vector<double> times;
    std::vector<std::vector<double>> y;
    double dt_record = 0.0;
};

RadialEnsemble coarse_grain_radius(const PathEnsemble& ens);

/// Simulates paths [first, first + count) and keeps only their radii; path streams are
/// keyed by absolute index so chunked runs concatenate to the full run exactly.
RadialEnsemble simulate_ball_radial(const BallDiffusionParams& params, std::size_t first, std::size_t count);

struct EntropyValue {
    double value;
    double derivative;
};

/// (n - 1) log y and its derivative; DomainError for y <= 0.
EntropyValue entropy_Sn(int n, double y);

/// Adds (y_{t+lag} - y_t) / (lag * dt_record) keyed by y_t for all post-burn-in pairs.
void accumulate_drift(const RadialEnsemble& rens, BinnedAccumulator& acc, std::size_t lag = 1, double burn_in = 0.0);

/// Binned conditional drift with standard errors; bins below 100 samples are flagged.
BinnedStats estimate_drift(const RadialEnsemble& rens, double lo, double hi, std::size_t bins, std::size_t lag = 1,
                           double burn_in = 0.0);

/// Normalized invariant radial density y^{n-1} exp(-beta V~(y)) on [0, 1] (trapezoid normalization).
std::function<double(double)> predicted_radial_density(const BallDiffusionParams& params);

struct DensityCheck {
    Histogram1D histogram;
    std::vector<double> predicted_mass;
    std::vector<double> predicted_density;  // at bin centers
    double l1 = 0.0;
};

void accumulate_radial_histogram(const RadialEnsemble& rens, Histogram1D& h, double burn_in);
DensityCheck density_check_from_histogram(const Histogram1D& h, const BallDiffusionParams& params);
DensityCheck invariant_density_check(const RadialEnsemble& rens, const BallDiffusionParams& params,
                                     std::size_t bins = 50, double burn_in = 0.5);

double unit_ball_volume(int n);

struct PdeltaMass {
    double mass;
    double log_mass;
};

/// Surface measure n * omega_n * y^{n-1} of the sphere of radius y.
PdeltaMass pdelta_mass_radial(int n, double y);

/// Shell estimator Leb{y <= |x| < y + h} / h.
double pdelta_shell_estimate(int n, double y, double h);

struct ScalingRow {
    int n;
    double beta_n;
    double median_sup_distance;
};

/// Radial paths from |X_0| = y0 with beta_n = beta_inf * n against y(t) = sqrt(y0^2 + 2t/beta_inf).
/// dt = 1e-3 / beta_n; distances are medians over paths of the sup before the ODE hits 1.
std::vector<ScalingRow> scaling_limit_demo(double beta_inf, double y0, const std::vector<int>& n_list, double T,
                                           std::size_t n_paths, std::uint64_t seed, unsigned threads = 1);

}  // namespace elab
