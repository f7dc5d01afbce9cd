#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace elab {

enum class Normalization { Density, Mass };

/// Uniform-bin histogram on [lo, hi). Samples outside the range are counted separately
/// and excluded from the normalization.
class Histogram1D {
public:
    Histogram1D(double lo, double hi, std::size_t bins);

    void add(double x);
    void merge(const Histogram1D& other);

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    std::size_t bins() const { return counts_.size(); }
    double width() const { return (hi_ - lo_) / static_cast<double>(counts_.size()); }
    double center(std::size_t i) const { return lo_ + (static_cast<double>(i) + 0.5) * width(); }
    double edge(std::size_t i) const { return lo_ + static_cast<double>(i) * width(); }
    const std::vector<double>& counts() const { return counts_; }
    double in_range() const { return in_range_; }
    double outside() const { return outside_; }

    /// Density values integrate to 1 over [lo, hi); mass values sum to 1.
    std::vector<double> normalized(Normalization mode) const;

private:
    double lo_, hi_;
    std::vector<double> counts_;
    double in_range_ = 0.0;
    double outside_ = 0.0;
};

/// Uniform-bin 2-D histogram on [xlo, xhi) x [ylo, yhi); row-major with x as the slow index.
class Histogram2D {
public:
    Histogram2D(double xlo, double xhi, std::size_t xbins, double ylo, double yhi, std::size_t ybins);

    void add(double x, double y);
    void merge(const Histogram2D& other);

    std::size_t xbins() const { return xbins_; }
    std::size_t ybins() const { return ybins_; }
    double xedge(std::size_t i) const;
    double yedge(std::size_t j) const;
    double xcenter(std::size_t i) const;
    double ycenter(std::size_t j) const;
    double count(std::size_t i, std::size_t j) const { return counts_[i * ybins_ + j]; }
    double in_range() const { return in_range_; }
    std::vector<double> mass() const;

private:
    double xlo_, xhi_, ylo_, yhi_;
    std::size_t xbins_, ybins_;
    std::vector<double> counts_;
    double in_range_ = 0.0;
};

/// Sum of absolute differences of two mass vectors (L1 distance of the piecewise-constant densities).
double l1_mass_distance(const std::vector<double>& a, const std::vector<double>& b);

/// Per-bin running mean and variance, mergeable in a fixed order.
class BinnedAccumulator {
public:
    BinnedAccumulator(double lo, double hi, std::size_t bins);

    void add(double x, double y);
    void merge(const BinnedAccumulator& other);

    std::size_t bins() const { return n_.size(); }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double center(std::size_t i) const;
    double count(std::size_t i) const { return n_[i]; }
    double mean(std::size_t i) const { return mean_[i]; }
    double variance(std::size_t i) const;  // unbiased sample variance
    double stderr_of_mean(std::size_t i) const;

private:
    double lo_, hi_;
    std::vector<double> n_, mean_, m2_;
};

struct BinnedStats {
    std::vector<double> center, mean, stderr, count;
    std::vector<bool> reliable;
};

BinnedStats summarize(const BinnedAccumulator& acc, double count_floor = 100.0);

/// Conditional mean of y given x in uniform bins. Throws ValidationError for unequal
/// lengths and DomainError if no finite pair falls inside the edges.
BinnedStats binned_regression(const std::vector<double>& x, const std::vector<double>& y, double lo,
                              double hi, std::size_t bins, double count_floor = 100.0);

struct Tolerance {
    double target;
    double tol;
};

struct MomentTargets {
    std::optional<Tolerance> mean, variance, excess_kurtosis;
};

struct MomentCheck {
    double value, stderr, target, tol;
    bool pass;
};

struct MomentReport {
    std::size_t n = 0;
    double mean = 0, variance = 0, excess_kurtosis = 0;
    double se_mean = 0, se_variance = 0, se_kurtosis = 0;
    std::optional<MomentCheck> mean_check, variance_check, kurtosis_check;
    bool pass = true;
};

/// Sample moments with standard errors. A target passes if the statistic is within its
/// tolerance or within three standard errors, whichever is looser. Needs >= 30 samples.
MomentReport moment_tests(const std::vector<double>& samples, const MomentTargets& targets = {});

/// KL(p || q) for binned empirical counts p (smoothed by adding 1/(n_paths * bins) to each
/// normalized bin) against a reference mass vector q.
double kl_smoothed(const std::vector<double>& counts, double n_paths, const std::vector<double>& q_mass);

}  // namespace elab
