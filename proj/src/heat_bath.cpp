#include "elab/heat_bath.hpp"

#include "elab/generic_core.hpp"
#include "elab/types.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>

namespace elab {

double HeatBathParams::dw() const {
    if (delta_omega > 0) return delta_omega;
    return 4.0 / std::sqrt(static_cast<double>(n));
}

double HeatBathParams::coupling() const { return std::sqrt(2.0 * gamma / std::numbers::pi); }

void HeatBathParams::validate() const {
    if (n == 0 && !(delta_omega > 0)) throw ValidationError("heat bath: n = 0 needs an explicit delta_omega");
    if (!(dw() > 0) || !std::isfinite(dw())) throw ValidationError("heat bath: delta_omega must be positive");
    if (!(beta > 0)) throw ValidationError("heat bath: beta must be positive");
    if (!(gamma >= 0)) throw ValidationError("heat bath: gamma must be non-negative");
    if (!(k > 0) || !(m > 0)) throw ValidationError("heat bath: k and m must be positive");
    if (!std::isfinite(E0)) throw ValidationError("heat bath: E0 must be finite");
}

double H_A(const HeatBathParams& params, double Q, double P) {
    return 0.5 * params.k * Q * Q + 0.5 * P * P / params.m;
}

namespace {

double bath_norm2(const HeatBathParams& params, const Eigen::ArrayXd& zq, const Eigen::ArrayXd& zp) {
    return params.dw() * (zq.square().sum() + zp.square().sum());
}

void check_state(const HeatBathParams& params, const MicroState& s) {
    if (static_cast<std::size_t>(s.q.size()) != params.n || static_cast<std::size_t>(s.p.size()) != params.n)
        throw ValidationError("micro state: bath arrays must have n entries");
}

double radicand(const HeatBathParams& params, double Q, double P) {
    return 2.0 * static_cast<double>(params.n) / params.beta + 2.0 * (params.E0 - H_A(params, Q, P));
}

}  // namespace

double H_total(const HeatBathParams& params, const MicroState& s) {
    check_state(params, s);
    const double cQ = params.coupling() * s.Q;
    return H_A(params, s.Q, s.P) + 0.5 * bath_norm2(params, s.q - cQ, s.p);
}

CgState coarse_grain_state(const HeatBathParams& params, const MicroState& s) {
    check_state(params, s);
    const double cQ = params.coupling() * s.Q;
    const double e = 0.5 * bath_norm2(params, s.q - cQ, s.p) - static_cast<double>(params.n) / params.beta;
    return {s.Q, s.P, e};
}

double cg_energy(const HeatBathParams& params, const CgState& c) { return H_A(params, c.Q, c.P) + c.e; }

MicroState sample_conditional(const HeatBathParams& params, double Q0, double P0, Stream& rng) {
    params.validate();
    MicroState s;
    s.Q = Q0;
    s.P = P0;
    const auto n = static_cast<Eigen::Index>(params.n);
    s.q = Eigen::ArrayXd::Zero(n);
    s.p = Eigen::ArrayXd::Zero(n);
    if (n == 0) return s;
    const double r2 = radicand(params, Q0, P0);
    if (!(r2 > 0))
        throw DomainError("sample_conditional: infeasible energy, 2n/beta + 2(E0 - H_A(Z0)) = " + std::to_string(r2));
    rng.normals(s.q.data(), params.n);
    rng.normals(s.p.data(), params.n);
    const double g = std::sqrt(s.q.square().sum() + s.p.square().sum());
    const double scale = std::sqrt(r2) / (std::sqrt(params.dw()) * g);
    s.q = s.q * scale + params.coupling() * Q0;
    s.p *= scale;
    return s;
}

double stationary_log_weight(const HeatBathParams& params, double Q, double P) {
    const double r2 = radicand(params, Q, P);
    if (!(r2 > 0)) return -std::numeric_limits<double>::infinity();
    if (params.n <= 1) return 0.0;
    return static_cast<double>(params.n - 1) * std::log(r2);
}

MhChain mh_stationary_Z(const HeatBathParams& params, Stream& rng, std::size_t count, std::size_t thin,
                        std::size_t burn_in, double proposal_scale) {
    params.validate();
    if (thin == 0) throw ValidationError("mh_stationary_Z: thin must be positive");
    double s = proposal_scale > 0 ? proposal_scale : 0.5;
    const double sQ = 1.0 / std::sqrt(params.beta * params.k);
    const double sP = std::sqrt(params.m / params.beta);

    double Q = 0.0, P = 0.0;
    double lw = stationary_log_weight(params, Q, P);
    if (!std::isfinite(lw)) throw DomainError("mh_stationary_Z: Z = 0 is outside the support; E0 too small");

    const std::size_t tune_steps = burn_in / 2;
    std::size_t window_acc = 0, window_n = 0, acc = 0, frozen_n = 0;
    MhChain out;
    out.samples.reserve(count);

    auto step = [&]() {
        const double Qp = Q + s * sQ * rng.normal();
        const double Pp = P + s * sP * rng.normal();
        const double lwp = stationary_log_weight(params, Qp, Pp);
        const bool accept = std::isfinite(lwp) && std::log(rng.uniform()) < lwp - lw;
        if (accept) {
            Q = Qp;
            P = Pp;
            lw = lwp;
        }
        return accept;
    };

    for (std::size_t i = 0; i < tune_steps; ++i) {
        window_acc += step() ? 1 : 0;
        if (++window_n == 100) {
            const double a = static_cast<double>(window_acc) / 100.0;
            if (a > 0.45) s *= 1.2;
            if (a < 0.25) s /= 1.2;
            window_acc = window_n = 0;
        }
    }
    for (std::size_t i = tune_steps; i < burn_in; ++i) {
        acc += step() ? 1 : 0;
        ++frozen_n;
    }
    for (std::size_t c = 0; c < count; ++c) {
        for (std::size_t t = 0; t < thin; ++t) {
            acc += step() ? 1 : 0;
            ++frozen_n;
        }
        out.samples.emplace_back(Q, P);
    }
    out.proposal_scale = s;
    out.acceptance = frozen_n ? static_cast<double>(acc) / static_cast<double>(frozen_n) : 0.0;
    out.acceptance_warning = frozen_n > 0 && (out.acceptance < 0.1 || out.acceptance > 0.7);
    if (out.acceptance_warning)
        std::clog << "warning: stationary Z sampler acceptance " << out.acceptance << " outside [0.1, 0.7]\n";
    return out;
}

StationarySample sample_stationary(const HeatBathParams& params, Stream& rng, std::size_t mh_steps,
                                   double proposal_scale) {
    const MhChain chain = mh_stationary_Z(params, rng, 1, 1, mh_steps, proposal_scale);
    const Eigen::Vector2d Z = chain.samples.front();
    return {sample_conditional(params, Z(0), Z(1), rng), chain.acceptance, chain.acceptance_warning};
}

BathIntegrator::BathIntegrator(const HeatBathParams& params, const MicroState& s0, double dt)
    : params_(params), dt_(dt) {
    params_.validate();
    check_state(params_, s0);
    c_ = params_.coupling();
    cdw_ = c_ * params_.dw();
    kappa0_ = c_ * c_ * static_cast<double>(params_.n) * params_.dw();
    Q_ = s0.Q;
    P_ = s0.P;
    zq_ = s0.q - c_ * s0.Q;
    zp_ = s0.p;
    const auto n = static_cast<Eigen::Index>(params_.n);
    cw_.resize(n);
    sw_.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double a = params_.omega(static_cast<std::size_t>(j) + 1) * dt_;
        cw_(j) = std::cos(a);
        sw_(j) = std::sin(a);
    }
    sum_q_ = zq_.sum();
}

void BathIntegrator::half_step_Z() {
    const double h = 0.5 * dt_;
    const double A = params_.k + kappa0_;
    const double nc = static_cast<double>(params_.n) * c_;
    const double F = cdw_ * (sum_q_ + nc * Q_);  // c dw sum_j q_j, constant while z is frozen
    const double im = 1.0 / params_.m;
    auto fQ = [&](double P) { return P * im; };
    auto fP = [&](double Q) { return -A * Q + F; };
    const double k1Q = fQ(P_), k1P = fP(Q_);
    const double k2Q = fQ(P_ + 0.5 * h * k1P), k2P = fP(Q_ + 0.5 * h * k1Q);
    const double k3Q = fQ(P_ + 0.5 * h * k2P), k3P = fP(Q_ + 0.5 * h * k2Q);
    const double k4Q = fQ(P_ + h * k3P), k4P = fP(Q_ + h * k3Q);
    const double dQ = h / 6.0 * (k1Q + 2 * k2Q + 2 * k3Q + k4Q);
    P_ += h / 6.0 * (k1P + 2 * k2P + 2 * k3P + k4P);
    Q_ += dQ;
    shift_ += c_ * dQ;
    sum_q_ -= nc * dQ;
}

void BathIntegrator::rotate_bath() {
    const Eigen::ArrayXd a = zq_ - shift_;
    zq_ = cw_ * a + sw_ * zp_;
    zp_ = cw_ * zp_ - sw_ * a;
    shift_ = 0.0;
    sum_q_ = zq_.sum();
}

void BathIntegrator::step() {
    half_step_Z();
    rotate_bath();
    half_step_Z();
    ++steps_;
    if (!std::isfinite(Q_) || !std::isfinite(P_))
        throw DivergenceError("evolve_micro: non-finite state", time());
}

MicroState BathIntegrator::state() const {
    MicroState s;
    s.Q = Q_;
    s.P = P_;
    s.q = zq_ - shift_ + c_ * Q_;
    s.p = zp_;
    return s;
}

CgState BathIntegrator::cg() const {
    const double e =
        0.5 * bath_norm2(params_, zq_ - shift_, zp_) - static_cast<double>(params_.n) / params_.beta;
    return {Q_, P_, e};
}

double BathIntegrator::H_total() const {
    return H_A(params_, Q_, P_) + 0.5 * bath_norm2(params_, zq_ - shift_, zp_);
}

namespace {

std::size_t micro_steps(const HeatBathParams& params, double dt, double T, std::size_t stride) {
    params.validate();
    if (!(dt > 0)) throw ValidationError("evolve_micro: dt must be positive");
    const double limit = 0.1 / (static_cast<double>(params.n) * params.dw());
    if (dt > limit * (1 + 1e-12))
        throw ValidationError("evolve_micro: dt = " + std::to_string(dt) + " exceeds 0.1/(n dw) = " +
                              std::to_string(limit));
    if (stride == 0) throw ValidationError("evolve_micro: record_stride must be positive");
    const std::size_t steps = step_count(dt, T);
    if (steps % stride != 0) throw ValidationError("evolve_micro: T/dt must be a multiple of record_stride");
    return steps;
}

}  // namespace

void evolve_micro_observed(const MicroState& s0, const HeatBathParams& params, double dt, double T,
                           std::size_t record_stride,
                           const std::function<void(double, const BathIntegrator&)>& observer) {
    const std::size_t steps = micro_steps(params, dt, T, record_stride);
    BathIntegrator integ(params, s0, dt);
    observer(0.0, integ);
    for (std::size_t i = 1; i <= steps; ++i) {
        integ.step();
        if (i % record_stride == 0) observer(static_cast<double>(i) * dt, integ);
    }
}

MicroTrajectory evolve_micro(const MicroState& s0, const HeatBathParams& params, double dt, double T,
                             std::size_t record_stride) {
    MicroTrajectory out;
    evolve_micro_observed(s0, params, dt, T, record_stride, [&](double t, const BathIntegrator& integ) {
        out.times.push_back(t);
        out.states.push_back(integ.state());
    });
    return out;
}

CgTrajectory coarse_grain(const MicroTrajectory& traj, const HeatBathParams& params) {
    CgTrajectory out;
    out.times = traj.times;
    out.states.reserve(traj.states.size());
    for (const auto& s : traj.states) out.states.push_back(coarse_grain_state(params, s));
    return out;
}

double entropy_Snbeta_centered(double n, double beta, double e) {
    const double x = beta * e / n;
    if (!(1.0 + x > 0)) throw DomainError("entropy_Snbeta_centered: needs 1 + beta e / n > 0");
    return (n - 1.0) * std::log1p(x);
}

double kappa11(double t, const HeatBathParams& params, bool compensated) {
    const double dw = params.dw();
    double sum = 0.0;
    if (!compensated) {
        for (std::size_t j = 1; j <= params.n; ++j) sum += std::cos(static_cast<double>(j) * dw * t);
    } else {
        double comp = 0.0;  // Neumaier
        for (std::size_t j = 1; j <= params.n; ++j) {
            const double v = std::cos(static_cast<double>(j) * dw * t);
            const double s = sum + v;
            comp += std::abs(sum) >= std::abs(v) ? (sum - s) + v : (v - s) + sum;
            sum = s;
        }
        sum += comp;
    }
    return 2.0 * params.gamma / std::numbers::pi * dw * sum;
}

Eigen::Matrix2d kappa_n(double t, const HeatBathParams& params) {
    Eigen::Matrix2d K = Eigen::Matrix2d::Zero();
    K(0, 0) = kappa11(t, params);
    return K;
}

KernelTest kappa_convergence_test(const HeatBathParams& params, const std::function<double(double)>& phi,
                                  double t_max, double h) {
    params.validate();
    if (!(h > 0) || !(t_max > 0)) throw ValidationError("kappa_convergence_test: t_max and h must be positive");
    if (h * static_cast<double>(params.n) * params.dw() > 0.5)
        throw ValidationError("kappa_convergence_test: grid too coarse, h * n * dw > 0.5");
    const auto N = static_cast<long>(std::llround(t_max / h));
    auto f = [&](long i) {
        const double t = static_cast<double>(i) * h;
        return phi(t) * kappa11(t, params);
    };
    KernelTest out;
    double one = 0.5 * (f(0) + f(N));
    for (long i = 1; i < N; ++i) one += f(i);
    out.one_sided = h * one;
    double two = 0.5 * (f(-N) + f(N));
    for (long i = -N + 1; i < N; ++i) two += f(i);
    out.two_sided = h * two;
    out.target_one_sided = params.gamma * phi(0.0);
    out.target_two_sided = 2.0 * params.gamma * phi(0.0);
    out.error_one_sided = std::abs(out.one_sided - out.target_one_sided);
    out.error_two_sided = std::abs(out.two_sided - out.target_two_sided);
    return out;
}

NoisePaths noise_process(const MicroState& s0, const HeatBathParams& params, const std::vector<double>& grid) {
    params.validate();
    check_state(params, s0);
    const Eigen::ArrayXd zq = s0.q - params.coupling() * s0.Q;
    const Eigen::ArrayXd& zp = s0.p;
    const double dw = params.dw();
    const double cy = params.coupling() * dw;
    const double cb = dw * std::sqrt(params.beta / std::numbers::pi);
    NoisePaths out;
    out.times = grid;
    const auto G = static_cast<Eigen::Index>(grid.size());
    out.Y = Mat::Zero(2, G);
    out.B = Mat::Zero(2, G);
    for (Eigen::Index g = 0; g < G; ++g) {
        const double t = grid[static_cast<std::size_t>(g)];
        double y = 0.0, b = 0.0;
        for (std::size_t j = 0; j < params.n; ++j) {
            const double w = params.omega(j + 1);
            const double c = std::cos(w * t), s = std::sin(w * t);
            const auto jj = static_cast<Eigen::Index>(j);
            y += zq(jj) * c + zp(jj) * s;
            b += (zq(jj) * s + zp(jj) * (1.0 - c)) / w;
        }
        out.Y(0, g) = cy * y;
        out.B(0, g) = cb * b;
    }
    return out;
}

Mat bn_first_coordinate(const HeatBathParams& params, const Mat& zeta_q, const Mat& zeta_p,
                        const std::vector<double>& grid) {
    params.validate();
    const auto n = static_cast<Eigen::Index>(params.n);
    if (zeta_q.rows() != n || zeta_p.rows() != n || zeta_q.cols() != zeta_p.cols())
        throw ValidationError("bn_first_coordinate: zeta blocks must be n x S with matching shapes");
    const auto G = static_cast<Eigen::Index>(grid.size());
    const double cb = params.dw() * std::sqrt(params.beta / std::numbers::pi);
    Mat out = Mat::Zero(G, zeta_q.cols());
    constexpr Eigen::Index block = 2048;
    Mat As(G, block), Ac(G, block);
    for (Eigen::Index j0 = 0; j0 < n; j0 += block) {
        const Eigen::Index nb = std::min(block, n - j0);
        for (Eigen::Index j = 0; j < nb; ++j) {
            const double w = params.omega(static_cast<std::size_t>(j0 + j) + 1);
            for (Eigen::Index g = 0; g < G; ++g) {
                const double a = w * grid[static_cast<std::size_t>(g)];
                As(g, j) = cb * std::sin(a) / w;
                Ac(g, j) = cb * (1.0 - std::cos(a)) / w;
            }
        }
        out.noalias() += As.leftCols(nb) * zeta_q.middleRows(j0, nb);
        out.noalias() += Ac.leftCols(nb) * zeta_p.middleRows(j0, nb);
    }
    return out;
}

WhiteNoiseReport white_noise_tests(const Mat& W, double delta, double second_coordinate_max,
                                   const WhiteNoiseThresholds& thr) {
    if (W.rows() < 3 || W.cols() < 1) throw ValidationError("white_noise_tests: need at least 2 increments per path");
    if (!(delta > 0)) throw ValidationError("white_noise_tests: delta must be positive");
    const Mat D = W.bottomRows(W.rows() - 1) - W.topRows(W.rows() - 1);
    const auto N = static_cast<double>(D.size());
    WhiteNoiseReport r;
    r.increments = static_cast<std::size_t>(D.size());
    r.delta = delta;
    r.mean = D.mean();
    const Mat C = D.array() - r.mean;
    const double m2 = C.array().square().sum() / N;
    const double m4 = C.array().square().square().sum() / N;
    r.variance = m2 * N / (N - 1.0);
    r.se_mean = std::sqrt(r.variance / N);
    r.variance_rel_error = std::abs(r.variance - delta) / delta;
    r.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    const Mat U = C.topRows(C.rows() - 1).cwiseProduct(C.bottomRows(C.rows() - 1));
    const auto Nu = static_cast<double>(U.size());
    r.lag1_cov = U.mean();
    const double var_u = (U.array() - r.lag1_cov).square().sum() / (Nu - 1.0);
    r.se_lag1 = std::sqrt(var_u / Nu);
    r.second_coordinate_max = second_coordinate_max;
    r.pass_mean = std::abs(r.mean) <= thr.mean_se * r.se_mean;
    r.pass_variance = r.variance_rel_error <= thr.variance_rel;
    r.pass_kurtosis = std::abs(r.excess_kurtosis) <= thr.kurtosis;
    r.pass_lag1 = std::abs(r.lag1_cov) <= thr.lag1_se * r.se_lag1;
    r.pass_second = second_coordinate_max == 0.0;
    return r;
}

std::string moment_name(CgMoment m) {
    switch (m) {
        case CgMoment::MeanQ: return "E[Q]";
        case CgMoment::SecondQ: return "E[Q^2]";
        case CgMoment::SecondP: return "E[P^2]";
        case CgMoment::MeanE: return "E[e]";
    }
    return "?";
}

namespace {

double moment_value(CgMoment m, const Mat& path, Eigen::Index t) {
    switch (m) {
        case CgMoment::MeanQ: return path(0, t);
        case CgMoment::SecondQ: return path(0, t) * path(0, t);
        case CgMoment::SecondP: return path(1, t) * path(1, t);
        case CgMoment::MeanE: return path(2, t);
    }
    return 0.0;
}

std::vector<std::size_t> usable_paths(const PathEnsemble& ens) {
    std::vector<std::size_t> idx;
    for (std::size_t p = 0; p < ens.n_paths(); ++p)
        if (ens.diverged.empty() || !ens.diverged[p]) idx.push_back(p);
    if (idx.empty()) throw ValidationError("compare_to_limit_sde: ensemble has no usable paths");
    return idx;
}

// Per-path moment values, paths x times.
Mat moment_table(const PathEnsemble& ens, const std::vector<std::size_t>& idx, CgMoment m) {
    const auto T = static_cast<Eigen::Index>(ens.n_times());
    Mat out(static_cast<Eigen::Index>(idx.size()), T);
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (Eigen::Index t = 0; t < T; ++t) out(static_cast<Eigen::Index>(i), t) = moment_value(m, ens.paths[idx[i]], t);
    return out;
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

std::vector<MomentDistance> compare_to_limit_sde(const PathEnsemble& micro, const PathEnsemble& sde,
                                                 const std::vector<CgMoment>& moments, std::size_t bootstrap,
                                                 std::uint64_t seed) {
    if (micro.dim < 3 || sde.dim < 3) throw ValidationError("compare_to_limit_sde: ensembles must carry (Q, P, e)");
    if (micro.n_times() != sde.n_times()) throw ValidationError("compare_to_limit_sde: grids differ in length");
    for (std::size_t t = 0; t < micro.n_times(); ++t)
        if (std::abs(micro.times[t] - sde.times[t]) > 1e-9 * (1.0 + std::abs(sde.times[t])))
            throw ValidationError("compare_to_limit_sde: grids differ");
    const auto mi = usable_paths(micro);
    const auto si = usable_paths(sde);

    std::vector<MomentDistance> out;
    for (CgMoment m : moments) {
        const Mat A = moment_table(micro, mi, m);
        const Mat B = moment_table(sde, si, m);
        MomentDistance d;
        d.moment = m;
        const Eigen::VectorXd ma = A.colwise().mean();
        const Eigen::VectorXd mb = B.colwise().mean();
        d.micro.assign(ma.data(), ma.data() + ma.size());
        d.sde.assign(mb.data(), mb.data() + mb.size());
        d.sup_distance = (ma - mb).cwiseAbs().maxCoeff();
        d.sup_reference = mb.cwiseAbs().maxCoeff();
        d.relative = d.sup_reference > 0 ? d.sup_distance / d.sup_reference : d.sup_distance;
        if (bootstrap > 0) {
            std::vector<double> sups(bootstrap);
            for (std::size_t b = 0; b < bootstrap; ++b) {
                Stream rng(seed, b, StreamTag::Bootstrap);
                std::uniform_int_distribution<Eigen::Index> ua(0, A.rows() - 1), ub(0, B.rows() - 1);
                Eigen::VectorXd sa = Eigen::VectorXd::Zero(A.cols()), sb = Eigen::VectorXd::Zero(B.cols());
                for (Eigen::Index i = 0; i < A.rows(); ++i) sa += A.row(ua(rng.engine())).transpose();
                for (Eigen::Index i = 0; i < B.rows(); ++i) sb += B.row(ub(rng.engine())).transpose();
                sups[b] = (sa / static_cast<double>(A.rows()) - sb / static_cast<double>(B.rows())).cwiseAbs().maxCoeff();
            }
            d.band_lo = quantile(sups, 0.025);
            d.band_hi = quantile(sups, 0.975);
        }
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace elab
