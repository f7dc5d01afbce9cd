#include "elab/generic_core.hpp"

#include "elab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace elab {

namespace {
std::string describe(const Vec& z) {
    std::ostringstream os;
    os << "(";
    for (Eigen::Index i = 0; i < z.size(); ++i) os << (i ? ", " : "") << z[i];
    os << ")";
    return os.str();
}

double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }
double max_abs(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }
}  // namespace

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& z, double h) {
    Vec g(z.size());
    Vec zp = z;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        zp[i] = z[i] + h;
        const double fp = f(zp);
        zp[i] = z[i] - h;
        const double fm = f(zp);
        zp[i] = z[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

void ScalarField::grad(const Vec& z, Vec& out) const {
    if (gradient) {
        gradient(z, out);
        return;
    }
    out = fd_gradient(value, z, 1e-5 * (1.0 + z.norm()));
}

Vec ScalarField::grad(const Vec& z) const {
    Vec out(z.size());
    grad(z, out);
    return out;
}

Mat OperatorField::operator()(const Vec& z) const {
    Mat out(rows, cols);
    eval(z, out);
    return out;
}

void OperatorField::operator()(const Vec& z, Mat& out) const {
    out.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    eval(z, out);
}

OperatorField constant_operator(const Mat& m) {
    return OperatorField{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()),
                         [m](const Vec&, Mat& out) { out = m; }};
}

StructureReport check_structure(const GenericSystem& sys, const std::vector<Vec>& samples, double tol) {
    StructureReport r;
    r.min_eigenvalue_K = std::numeric_limits<double>::infinity();
    Mat J, K, Sig;
    Vec gE, gS;
    for (const auto& z : samples) {
        sys.J(z, J);
        sys.K(z, K);
        sys.Sigma(z, Sig);
        if (!J.allFinite() || !K.allFinite() || !Sig.allFinite())
            throw DomainError("non-finite operator entry at state " + describe(z));
        sys.E.grad(z, gE);
        sys.S.grad(z, gS);
        r.antisymmetry_J = std::max(r.antisymmetry_J, max_abs(Mat(J + J.transpose())));
        r.symmetry_K = std::max(r.symmetry_K, max_abs(Mat(K - K.transpose())));
        const Mat Ks = 0.5 * (K + K.transpose());
        Eigen::SelfAdjointEigenSolver<Mat> eig(Ks, Eigen::EigenvaluesOnly);
        r.min_eigenvalue_K = std::min(r.min_eigenvalue_K, eig.eigenvalues().minCoeff());
        r.J_gradS = std::max(r.J_gradS, max_abs(Vec(J * gS)));
        r.K_gradE = std::max(r.K_gradE, max_abs(Vec(K * gE)));
        r.fluctuation_dissipation = std::max(r.fluctuation_dissipation, max_abs(Mat(Sig * Sig.transpose() - K)));
    }
    if (samples.empty()) r.min_eigenvalue_K = 0.0;
    r.pass = r.antisymmetry_J <= tol && r.symmetry_K <= tol && r.min_eigenvalue_K >= -tol && r.J_gradS <= tol &&
             r.K_gradE <= tol && r.fluctuation_dissipation <= tol;
    return r;
}

double check_jacobi(const OperatorField& Jf, const std::vector<Vec>& samples) {
    const auto d = static_cast<Eigen::Index>(Jf.rows);
    if (Jf.rows != Jf.cols) throw ValidationError("check_jacobi: J must be square");
    double worst = 0.0;
    // Row k holds d_k J flattened column-major, so (J * D)(a, b + c d) = {z_a, {z_b, z_c}}.
    Mat D(d, d * d);
    for (const auto& z : samples) {
        const double h = 1e-5 * (1.0 + z.norm());
        const Mat J = Jf(z);
        if (!J.allFinite()) throw DomainError("non-finite J at state " + describe(z));
        Vec zp = z;
        for (Eigen::Index k = 0; k < d; ++k) {
            zp[k] = z[k] + h;
            const Mat Jp = Jf(zp);
            zp[k] = z[k] - h;
            const Mat Jm = Jf(zp);
            zp[k] = z[k];
            const Mat dJ = (Jp - Jm) / (2.0 * h);
            D.row(k) = dJ.reshaped().transpose();
        }
        const Mat T = J * D;
        auto nested = [&](Eigen::Index a, Eigen::Index b, Eigen::Index c) { return T(a, b + c * d); };
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = 0; b < d; ++b)
                for (Eigen::Index c = 0; c < d; ++c) {
                    const double res = nested(a, b, c) + nested(b, c, a) + nested(c, a, b);
                    if (!std::isfinite(res)) throw DomainError("non-finite Jacobi residual at state " + describe(z));
                    worst = std::max(worst, std::abs(res));
                }
    }
    return worst;
}

std::vector<Vec> gaussian_cloud(std::size_t d, std::size_t count, std::uint64_t seed) {
    std::vector<Vec> out;
    out.reserve(count);
    Stream rng(seed, 0, StreamTag::Cloud);
    for (std::size_t i = 0; i < count; ++i) {
        Vec z(static_cast<Eigen::Index>(d));
        rng.normals(z.data(), d);
        out.push_back(std::move(z));
    }
    return out;
}

void OscillatorParams::validate() const {
    if (!(k > 0)) throw ValidationError("oscillator: k must be > 0");
    if (!(m > 0)) throw ValidationError("oscillator: m must be > 0");
    if (!(gamma >= 0)) throw ValidationError("oscillator: gamma must be >= 0");
    if (!(beta > 0)) throw ValidationError("oscillator: beta must be > 0");
}

GenericSystem damped_oscillator_system(const OscillatorParams& p) {
    p.validate();
    const double k = p.k, m = p.m, gamma = p.gamma, beta = p.beta;
    GenericSystem sys;
    sys.name = "damped-oscillator";
    sys.d = 3;
    sys.E = ScalarField{3, [k, m](const Vec& z) { return 0.5 * k * z[0] * z[0] + 0.5 * z[1] * z[1] / m + z[2]; },
                        [k, m](const Vec& z, Vec& g) {
                            g.resize(3);
                            g << k * z[0], z[1] / m, 1.0;
                        }};
    sys.S = ScalarField{3, [beta](const Vec& z) { return beta * z[2]; },
                        [beta](const Vec&, Vec& g) {
                            g.resize(3);
                            g << 0.0, 0.0, beta;
                        }};
    Mat J = Mat::Zero(3, 3);
    J(0, 1) = 1.0;
    J(1, 0) = -1.0;
    sys.J = constant_operator(J);
    const double c = gamma / beta;
    sys.K = OperatorField{3, 3, [c, m](const Vec& z, Mat& K) {
                              const double v = z[1] / m;
                              K.setZero(3, 3);
                              K(1, 1) = c;
                              K(1, 2) = -c * v;
                              K(2, 1) = -c * v;
                              K(2, 2) = c * v * v;
                          }};
    const double s = std::sqrt(c);
    sys.Sigma = OperatorField{3, 1, [s, m](const Vec& z, Mat& S) {
                                  S.resize(3, 1);
                                  S << 0.0, s, -s * (z[1] / m);
                              }};
    sys.divAK = [c, m](const Vec&, Vec& out) {
        out.resize(3);
        out << 0.0, 0.0, -c / m;
    };
    return sys;
}

Vec generic_vector_field(const GenericSystem& sys, const Vec& z) {
    const Vec gE = sys.E.grad(z);
    const Vec gS = sys.S.grad(z);
    return sys.J(z) * gE + sys.K(z) * gS;
}

std::size_t step_count(double dt, double T) {
    if (!(dt > 0) || !std::isfinite(dt)) throw ValidationError("dt must be a positive finite number");
    if (!(T >= dt)) throw ValidationError("T must be at least dt");
    const double ratio = T / dt;
    const double steps = std::round(ratio);
    if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio))
        throw ValidationError("T/dt must be an integer number of steps");
    return static_cast<std::size_t>(steps);
}

Trajectory integrate_ode(const GenericSystem& sys, const Vec& z0, double dt, double T) {
    const std::size_t steps = step_count(dt, T);
    Trajectory tr;
    tr.times.reserve(steps + 1);
    tr.states.reserve(steps + 1);
    tr.times.push_back(0.0);
    tr.states.push_back(z0);
    Vec z = z0;
    for (std::size_t i = 0; i < steps; ++i) {
        const Vec k1 = generic_vector_field(sys, z);
        const Vec k2 = generic_vector_field(sys, z + 0.5 * dt * k1);
        const Vec k3 = generic_vector_field(sys, z + 0.5 * dt * k2);
        const Vec k4 = generic_vector_field(sys, z + dt * k3);
        z += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double t = static_cast<double>(i + 1) * dt;
        if (!z.allFinite()) throw DivergenceError("integrate_ode: non-finite state", t);
        tr.times.push_back(t);
        tr.states.push_back(z);
    }
    return tr;
}

EnergyEntropyMonitor monitor_energy_entropy(const Trajectory& traj, const GenericSystem& sys) {
    EnergyEntropyMonitor m;
    if (traj.states.empty()) return m;
    const double E0 = sys.E(traj.states.front());
    m.min_entropy_increment = traj.states.size() > 1 ? std::numeric_limits<double>::infinity() : 0.0;
    double S_prev = sys.S(traj.states.front());
    for (std::size_t i = 1; i < traj.states.size(); ++i) {
        const auto& z = traj.states[i];
        m.energy_drift = std::max(m.energy_drift, std::abs(sys.E(z) - E0));
        const double S = sys.S(z);
        m.min_entropy_increment = std::min(m.min_entropy_increment, S - S_prev);
        S_prev = S;
    }
    return m;
}

}  // namespace elab
