#include "elab/stats.hpp"

#include "elab/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace elab {

namespace {
std::ptrdiff_t bin_index(double x, double lo, double hi, std::size_t bins) {
    if (!(x >= lo) || !(x < hi)) return -1;
    auto i = static_cast<std::ptrdiff_t>((x - lo) / (hi - lo) * static_cast<double>(bins));
    if (i >= static_cast<std::ptrdiff_t>(bins)) i = static_cast<std::ptrdiff_t>(bins) - 1;
    return i;
}

void require_range(double lo, double hi, std::size_t bins) {
    if (!(hi > lo) || bins == 0) throw ValidationError("histogram needs hi > lo and at least one bin");
}
}  // namespace

Histogram1D::Histogram1D(double lo, double hi, std::size_t bins) : lo_(lo), hi_(hi), counts_(bins, 0.0) {
    require_range(lo, hi, bins);
}

void Histogram1D::add(double x) {
    const auto i = bin_index(x, lo_, hi_, counts_.size());
    if (i < 0) {
        outside_ += 1.0;
        return;
    }
    counts_[static_cast<std::size_t>(i)] += 1.0;
    in_range_ += 1.0;
}

void Histogram1D::merge(const Histogram1D& other) {
    if (other.lo_ != lo_ || other.hi_ != hi_ || other.counts_.size() != counts_.size())
        throw ValidationError("cannot merge histograms with different binning");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    in_range_ += other.in_range_;
    outside_ += other.outside_;
}

std::vector<double> Histogram1D::normalized(Normalization mode) const {
    std::vector<double> out(counts_.size(), 0.0);
    if (in_range_ == 0.0) return out;
    const double scale = mode == Normalization::Density ? 1.0 / (in_range_ * width()) : 1.0 / in_range_;
    for (std::size_t i = 0; i < counts_.size(); ++i) out[i] = counts_[i] * scale;
    return out;
}

Histogram2D::Histogram2D(double xlo, double xhi, std::size_t xbins, double ylo, double yhi, std::size_t ybins)
    : xlo_(xlo), xhi_(xhi), ylo_(ylo), yhi_(yhi), xbins_(xbins), ybins_(ybins), counts_(xbins * ybins, 0.0) {
    require_range(xlo, xhi, xbins);
    require_range(ylo, yhi, ybins);
}

void Histogram2D::add(double x, double y) {
    const auto i = bin_index(x, xlo_, xhi_, xbins_);
    const auto j = bin_index(y, ylo_, yhi_, ybins_);
    if (i < 0 || j < 0) return;
    counts_[static_cast<std::size_t>(i) * ybins_ + static_cast<std::size_t>(j)] += 1.0;
    in_range_ += 1.0;
}

void Histogram2D::merge(const Histogram2D& other) {
    if (other.counts_.size() != counts_.size()) throw ValidationError("cannot merge histograms with different binning");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    in_range_ += other.in_range_;
}

double Histogram2D::xedge(std::size_t i) const {
    return xlo_ + static_cast<double>(i) * (xhi_ - xlo_) / static_cast<double>(xbins_);
}
double Histogram2D::yedge(std::size_t j) const {
    return ylo_ + static_cast<double>(j) * (yhi_ - ylo_) / static_cast<double>(ybins_);
}
double Histogram2D::xcenter(std::size_t i) const { return 0.5 * (xedge(i) + xedge(i + 1)); }
double Histogram2D::ycenter(std::size_t j) const { return 0.5 * (yedge(j) + yedge(j + 1)); }

std::vector<double> Histogram2D::mass() const {
    std::vector<double> out(counts_.size(), 0.0);
    if (in_range_ == 0.0) return out;
    for (std::size_t i = 0; i < counts_.size(); ++i) out[i] = counts_[i] / in_range_;
    return out;
}

double l1_mass_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ValidationError("l1 distance needs equal-length mass vectors");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

BinnedAccumulator::BinnedAccumulator(double lo, double hi, std::size_t bins)
    : lo_(lo), hi_(hi), n_(bins, 0.0), mean_(bins, 0.0), m2_(bins, 0.0) {
    require_range(lo, hi, bins);
}

void BinnedAccumulator::add(double x, double y) {
    if (!std::isfinite(y)) return;
    const auto i = bin_index(x, lo_, hi_, n_.size());
    if (i < 0) return;
    const auto k = static_cast<std::size_t>(i);
    n_[k] += 1.0;
    const double delta = y - mean_[k];
    mean_[k] += delta / n_[k];
    m2_[k] += delta * (y - mean_[k]);
}

void BinnedAccumulator::merge(const BinnedAccumulator& other) {
    if (other.n_.size() != n_.size() || other.lo_ != lo_ || other.hi_ != hi_)
        throw ValidationError("cannot merge accumulators with different binning");
    for (std::size_t k = 0; k < n_.size(); ++k) {
        const double nb = other.n_[k];
        if (nb == 0.0) continue;
        const double na = n_[k];
        const double n = na + nb;
        const double delta = other.mean_[k] - mean_[k];
        mean_[k] += delta * nb / n;
        m2_[k] += other.m2_[k] + delta * delta * na * nb / n;
        n_[k] = n;
    }
}

double BinnedAccumulator::center(std::size_t i) const {
    return lo_ + (static_cast<double>(i) + 0.5) * (hi_ - lo_) / static_cast<double>(n_.size());
}

double BinnedAccumulator::variance(std::size_t i) const {
    return n_[i] > 1.0 ? m2_[i] / (n_[i] - 1.0) : std::numeric_limits<double>::quiet_NaN();
}

double BinnedAccumulator::stderr_of_mean(std::size_t i) const {
    return n_[i] > 1.0 ? std::sqrt(variance(i) / n_[i]) : std::numeric_limits<double>::quiet_NaN();
}

BinnedStats summarize(const BinnedAccumulator& acc, double count_floor) {
    BinnedStats out;
    for (std::size_t i = 0; i < acc.bins(); ++i) {
        out.center.push_back(acc.center(i));
        out.mean.push_back(acc.count(i) > 0 ? acc.mean(i) : std::numeric_limits<double>::quiet_NaN());
        out.stderr.push_back(acc.stderr_of_mean(i));
        out.count.push_back(acc.count(i));
        out.reliable.push_back(acc.count(i) >= count_floor);
    }
    return out;
}

BinnedStats binned_regression(const std::vector<double>& x, const std::vector<double>& y, double lo, double hi,
                              std::size_t bins, double count_floor) {
    if (x.size() != y.size()) throw ValidationError("binned_regression needs equal-length inputs");
    BinnedAccumulator acc(lo, hi, bins);
    for (std::size_t i = 0; i < x.size(); ++i)
        if (std::isfinite(x[i])) acc.add(x[i], y[i]);
    double total = 0.0;
    for (std::size_t i = 0; i < bins; ++i) total += acc.count(i);
    if (total == 0.0) throw DomainError("binned_regression: no finite pair inside the bin edges");
    return summarize(acc, count_floor);
}

MomentReport moment_tests(const std::vector<double>& samples, const MomentTargets& targets) {
    if (samples.size() < 30) throw ValidationError("moment_tests needs at least 30 samples");
    MomentReport r;
    r.n = samples.size();
    const double n = static_cast<double>(r.n);
    r.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double x : samples) {
        const double d = x - r.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    r.variance = m2 * n / (n - 1.0);
    r.excess_kurtosis = m2 > 0 ? m4 / (m2 * m2) - 3.0 : std::numeric_limits<double>::quiet_NaN();
    r.se_mean = std::sqrt(r.variance / n);
    r.se_variance = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
    r.se_kurtosis = std::sqrt(24.0 / n);

    auto judge = [&](double value, double se, const std::optional<Tolerance>& t) -> std::optional<MomentCheck> {
        if (!t) return std::nullopt;
        const double allowed = std::max(t->tol, 3.0 * se);
        const bool ok = std::isfinite(value) && std::abs(value - t->target) <= allowed;
        if (!ok) r.pass = false;
        return MomentCheck{value, se, t->target, t->tol, ok};
    };
    r.mean_check = judge(r.mean, r.se_mean, targets.mean);
    r.variance_check = judge(r.variance, r.se_variance, targets.variance);
    r.kurtosis_check = judge(r.excess_kurtosis, r.se_kurtosis, targets.excess_kurtosis);
    return r;
}

double kl_smoothed(const std::vector<double>& counts, double n_paths, const std::vector<double>& q_mass) {
    if (counts.size() != q_mass.size() || counts.empty()) throw ValidationError("kl_smoothed: size mismatch");
    const double bins = static_cast<double>(counts.size());
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (total <= 0.0) throw DomainError("kl_smoothed: empty histogram");
    const double eps = 1.0 / (n_paths * bins);
    std::vector<double> p(counts.size());
    double norm = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        p[i] = counts[i] / total + eps;
        norm += p[i];
    }
    double qnorm = std::accumulate(q_mass.begin(), q_mass.end(), 0.0);
    double kl = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double pi = p[i] / norm;
        const double qi = q_mass[i] / qnorm;
        if (qi <= 0.0) return std::numeric_limits<double>::infinity();
        kl += pi * std::log(pi / qi);
    }
    return kl;
}

}  // namespace elab
