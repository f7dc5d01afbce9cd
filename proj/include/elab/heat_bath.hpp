#pragma once

#include "elab/generic_sde.hpp"
#include "elab/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace elab {

/// Oscillator (Q, P) coupled to n bath modes with frequencies omega_j = j * delta_omega.
/// delta_omega <= 0 selects the default schedule 4 / sqrt(n).
struct HeatBathParams {
    std::size_t n = 1024;
    double delta_omega = 0.0;
    double beta = 1.0;
    double gamma = 0.5;
    double k = 1.0;
    double m = 1.0;
    double E0 = 0.5;
    std::uint64_t seed = 0;

    double dw() const;
    double coupling() const;  // sqrt(2 gamma / pi)
    double omega(std::size_t j) const { return static_cast<double>(j) * dw(); }  // j = 1..n
    void validate() const;
};

/// Z = (Q, P) and bath coordinates z = (q, p); the bath norm is |z|^2 = dw * sum(q^2 + p^2).
struct MicroState {
    double Q = 0.0, P = 0.0;
    Eigen::ArrayXd q, p;
};

struct CgState {
    double Q = 0.0, P = 0.0, e = 0.0;
};

double H_A(const HeatBathParams& params, double Q, double P);
double H_total(const HeatBathParams& params, const MicroState& s);
/// (Q, P, e) with e = 0.5 |z - C Z|^2 - n / beta.
CgState coarse_grain_state(const HeatBathParams& params, const MicroState& s);
double cg_energy(const HeatBathParams& params, const CgState& c);  // H_A + e

/// z0 = zeta0 + C Z0 with zeta0 uniform on the bath sphere of squared radius
/// 2n/beta + 2(E0 - H_A(Z0)). Throws DomainError when the radicand is not positive.
MicroState sample_conditional(const HeatBathParams& params, double Q0, double P0, Stream& rng);

/// Log of the Z-marginal weight (2n/beta + 2(E0 - H_A))_+^{n-1}; -inf outside the support.
double stationary_log_weight(const HeatBathParams& params, double Q, double P);

struct MhChain {
    std::vector<Eigen::Vector2d> samples;
    double acceptance = 0.0;   // after the tuning window
    double proposal_scale = 0.0;
    bool acceptance_warning = false;
};

/// Random-walk Metropolis on Z targeting the marginal weight. During the burn-in the
/// proposal scale (initially 0.5 / sqrt(beta k) unless given) is tuned towards 35%
/// acceptance; a warning is raised if the frozen-scale acceptance leaves [0.1, 0.7].
MhChain mh_stationary_Z(const HeatBathParams& params, Stream& rng, std::size_t count, std::size_t thin = 1,
                        std::size_t burn_in = 10000, double proposal_scale = 0.0);

struct StationarySample {
    MicroState state;
    double acceptance = 0.0;
    bool acceptance_warning = false;
};

StationarySample sample_stationary(const HeatBathParams& params, Stream& rng, std::size_t mh_steps = 10000,
                                   double proposal_scale = 0.0);

/// Strang splitting for the coupled system: half step of Z with z frozen (RK4 substep),
/// exact modewise rotation of zeta = z - C Z with Z frozen, half step of Z.
class BathIntegrator {
public:
    BathIntegrator(const HeatBathParams& params, const MicroState& s0, double dt);

    void step();
    double time() const { return static_cast<double>(steps_) * dt_; }
    MicroState state() const;
    CgState cg() const;
    double H_total() const;

private:
    void half_step_Z();
    void rotate_bath();

    HeatBathParams params_;
    double dt_;
    std::size_t steps_ = 0;
    double c_, cdw_, kappa0_;
    double Q_, P_;
    Eigen::ArrayXd zq_, zp_, cw_, sw_;  // zeta stored with a pending uniform q-shift
    double shift_ = 0.0;                // actual zeta_q = zq_ - shift_
    double sum_q_ = 0.0;                // sum of actual zeta_q
};

struct MicroTrajectory {
    std::vector<double> times;
    std::vector<MicroState> states;
};

/// Requires dt <= 0.1 / (n dw) and T / dt an integer multiple of record_stride.
MicroTrajectory evolve_micro(const MicroState& s0, const HeatBathParams& params, double dt, double T,
                             std::size_t record_stride = 1);

/// Same integration, calling observer(t, integrator) on the recorded grid instead of storing states.
void evolve_micro_observed(const MicroState& s0, const HeatBathParams& params, double dt, double T,
                           std::size_t record_stride,
                           const std::function<void(double, const BathIntegrator&)>& observer);

struct CgTrajectory {
    std::vector<double> times;
    std::vector<CgState> states;
};

CgTrajectory coarse_grain(const MicroTrajectory& traj, const HeatBathParams& params);

/// (n - 1) log(1 + beta e / n); DomainError unless 1 + beta e / n > 0.
double entropy_Snbeta_centered(double n, double beta, double e);

/// (1,1) entry (2 gamma / pi) dw sum_j cos(j dw t), optionally with compensated summation.
double kappa11(double t, const HeatBathParams& params, bool compensated = false);
Eigen::Matrix2d kappa_n(double t, const HeatBathParams& params);

struct KernelTest {
    double one_sided = 0, two_sided = 0;
    double target_one_sided = 0, target_two_sided = 0;
    double error_one_sided = 0, error_two_sided = 0;
};

/// Trapezoid quadrature of phi * kappa11 on [0, t_max] and [-t_max, t_max] with step h.
/// Refuses grids with h * n * dw > 0.5.
KernelTest kappa_convergence_test(const HeatBathParams& params, const std::function<double(double)>& phi,
                                  double t_max, double h);

struct NoisePaths {
    std::vector<double> times;
    Mat Y;  // 2 x times
    Mat B;  // 2 x times
};

/// Closed-form Y_n(t) = C^* e^{t J_B} zeta0 and B_n(t) = sqrt(beta / 2 gamma) int_0^t Y_n.
NoisePaths noise_process(const MicroState& s0, const HeatBathParams& params, const std::vector<double>& grid);

/// First coordinate of B_n for many bath states at once. zeta_q, zeta_p are n x S
/// (actual zeta = z - C Z); returns grid.size() x S.
Mat bn_first_coordinate(const HeatBathParams& params, const Mat& zeta_q, const Mat& zeta_p,
                        const std::vector<double>& grid);

struct WhiteNoiseThresholds {
    double variance_rel = 0.15;
    double mean_se = 3.0;
    double kurtosis = 0.5;
    double lag1_se = 3.0;
};

struct WhiteNoiseReport {
    std::size_t increments = 0;
    double delta = 0;
    double mean = 0, se_mean = 0;
    double variance = 0, variance_rel_error = 0;
    double excess_kurtosis = 0;
    double lag1_cov = 0, se_lag1 = 0;
    double second_coordinate_max = 0;
    bool pass_mean = false, pass_variance = false, pass_kurtosis = false, pass_lag1 = false, pass_second = false;
    bool pass() const { return pass_mean && pass_variance && pass_kurtosis && pass_lag1 && pass_second; }
};

/// W is grid x samples with grid spacing delta; increments are consecutive differences per sample.
WhiteNoiseReport white_noise_tests(const Mat& W, double delta, double second_coordinate_max,
                                   const WhiteNoiseThresholds& thr = {});

enum class CgMoment { MeanQ, SecondQ, SecondP, MeanE };
std::string moment_name(CgMoment m);

struct MomentDistance {
    CgMoment moment;
    std::vector<double> micro, sde;
    double sup_distance = 0, sup_reference = 0, relative = 0;
    double band_lo = 0, band_hi = 0;  // bootstrap 2.5% / 97.5% quantiles of sup_distance
};

/// Ensembles over (Q, P, e) on identical grids; micro paths are realizations of the
/// coarse-grained Hamiltonian system.
std::vector<MomentDistance> compare_to_limit_sde(const PathEnsemble& micro, const PathEnsemble& sde,
                                                 const std::vector<CgMoment>& moments, std::size_t bootstrap,
                                                 std::uint64_t seed);

}  // namespace elab
