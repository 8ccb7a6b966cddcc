#pragma once

#include "pdmpcert/domain.hpp"
#include "pdmpcert/fields.hpp"
#include "pdmpcert/models.hpp"
#include "pdmpcert/pdmp.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace pdmpcert {

/// Regular product binning of a chart box, times the mode index.
struct Binning {
    std::vector<double> lower, upper;
    std::vector<int> bins;
    int modes = 1;

    static Binning for_domain(const CompactDomain& dom, std::vector<int> bins, int modes);
    std::size_t size() const;
    /// Points outside the box are clamped into the edge bins.
    std::size_t index(std::span<const double> x, int mode) const;
    bool operator==(const Binning&) const = default;
};

struct EmpiricalMeasure {
    Binning binning;
    std::vector<double> weights;
    double total = 0.0;
    double burn_in = 0.0;

    std::vector<double> probabilities() const;
    std::vector<double> mode_marginal() const;
};

/// Time-weighted occupation histogram of (X_t, I_t) for t >= burn_in.
EmpiricalMeasure empirical_measure(const std::vector<Trajectory>& trajectories, double burn_in, const Binning& binning);
/// Unit-weight histogram of a point cloud.
EmpiricalMeasure empirical_measure(std::span<const double> points_row_major, std::span<const int> modes,
                                   const Binning& binning);

/// (1/2) sum |p - q|.
double tv_distance(const EmpiricalMeasure& m1, const EmpiricalMeasure& m2);

struct MeanSE {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

/// Mean with batch-means standard error over contiguous batches.
MeanSE batch_means(std::span<const double> values, int batches = 30);

struct KSResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
KSResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct TVDecayConfig {
    std::vector<double> times;
    int replicates = 10000;
    std::vector<int> bins{32, 32};
    std::uint64_t seed = 0;
    int threads = 1;
    FlowConfig flow = FlowConfig::rk45();
    int permutations = 20;  // for the null-TV estimate
    int min_fit_points = 3;
};

struct TVDecayReport {
    std::vector<double> times;
    std::vector<double> tv;
    std::vector<bool> in_fit;
    double floor_sqrt = 0.0;   // 2 / sqrt(replicates)
    std::vector<double> floor_null;  // per time: permutation-null mean + 3 sd
    double gamma = 0.0;        // fitted decay rate (-slope of log tv)
    double intercept = 0.0;    // log C
    double r2 = 0.0;
    bool gamma_defined = false;
    std::string flag;          // why gamma is undefined, if it is
    std::vector<int> bins;
    int replicates = 0;
};

/// TV between time-t histograms of `replicates` runs from each start, and a
/// log-linear fit over the times whose TV clears the noise floor.
TVDecayReport tv_decay(const VectorFieldSet& fs, const RateMatrixField& rm, const CompactDomain& dom,
                       const Point& xa, int mode_a, const Point& xb, int mode_b, const TVDecayConfig& cfg);

struct LinearFit {
    double slope = 0, intercept = 0, r2 = 0;
};
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

struct StationarityResult {
    std::string name;
    double residual = 0.0;
    double se = 0.0;
    std::size_t samples = 0;
};

/// Time-average of L g along the samples with t >= burn_in, batch-means SE.
std::vector<StationarityResult> stationarity_residual(const VectorFieldSet& fs, const RateMatrixField& rm,
                                                      const Trajectory& tr, double burn_in,
                                                      const std::vector<TestFunction>& tests, int batches = 30);

enum class Face { X, Y };  // Face::Y: Lambda_y on {y = 0}; Face::X: Lambda_x on {x = 0}

struct InvasionEstimate {
    Face face = Face::Y;
    double value = 0.0;
    double se = 0.0;
    double t_max = 0.0;
    double burn_in = 0.0;
    std::size_t samples = 0;
};

struct InvasionConfig {
    double t_max = 1e4;
    double burn_in = 100.0;
    double dt_out = 0.01;
    std::uint64_t seed = 0;
    FlowConfig flow = FlowConfig::rk45();
};

/// Ergodic average of the transversal growth rate for the boundary process
/// on a face of the Lotka-Volterra band.
InvasionEstimate invasion_rate(const LVParams& lv, const RateMatrixField& rm, Face face, const InvasionConfig& cfg);
InvasionEstimate invasion_rate_y(const LVParams& lv, const RateMatrixField& rm, const InvasionConfig& cfg);
InvasionEstimate invasion_rate_x(const LVParams& lv, const RateMatrixField& rm, const InvasionConfig& cfg);

/// Fraction of the samples with t >= burn_in lying within delta0 of M_0.
double boundary_occupation(const Trajectory& tr, double burn_in, const std::function<double(const Point&)>& distance,
                           double delta0);

}  // namespace pdmpcert
