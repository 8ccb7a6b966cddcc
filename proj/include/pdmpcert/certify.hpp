#pragma once

#include "pdmpcert/bracket.hpp"
#include "pdmpcert/domain.hpp"
#include "pdmpcert/fields.hpp"
#include "pdmpcert/flow.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pdmpcert {

struct Model;

// ----------------------------------------------------------------------------
// Condition (i): a vanishing barycentric combination.

struct AlphaSolution {
    Eigen::VectorXd alpha;
    double residual = 0.0;
    bool degenerate = false;  // KKT system rank deficient; least-norm alpha returned
};

/// Minimizes |B(x) alpha|^2 subject to sum alpha = 1 through the KKT system.
AlphaSolution solve_alpha(const VectorFieldSet& fs, const Point& x);

struct NelderMeadResult {
    Point x;
    double value = 0.0;
    int iterations = 0;
    int restarts = 0;
};

/// Minimizes f from x0 with an axis-aligned initial simplex of edge `size`.
/// Restarts from the best vertex when the simplex stalls.
NelderMeadResult nelder_mead(const std::function<double(const Point&)>& f, const Point& x0, double size,
                             int max_iterations = 200, double ftol = 1e-15, int max_restarts = 3);

struct ConditionIOptions {
    double tol_eq = 1e-8;
    std::vector<int> seed_resolution{20, 10};
    std::vector<Point> seeds;  // overrides the grid when nonempty
    int iterations = 200;
    /// Move along the zero set to the smallest |alpha| (the zero set is a curve in general).
    bool minimize_alpha_norm = true;
    /// Points closer than delta0 to the extinction set are excluded.
    std::function<double(const Point&)> extinction_distance;
    double delta0 = 0.05;
};

struct EquilibriumCertificate {
    Point e_star;
    Eigen::VectorXd alpha;
    double residual = 0.0;
    bool valid = false;
    bool degenerate = false;
    std::size_t seeds_tried = 0;
    std::size_t iterations = 0;
    std::size_t candidates = 0;  // seeds converging below tol_eq
    double tol_eq = 0.0;
};

EquilibriumCertificate find_condition_i(const VectorFieldSet& fs, const CompactDomain& dom,
                                        const ConditionIOptions& opts = {});

// ----------------------------------------------------------------------------
// Reachability.

struct ReachOptions {
    std::size_t budget = 10000;
    double tau_max = 0.5;
    double goal_bias = 0.5;           // probability of extending the node nearest a random goal
    std::optional<Point> target;      // stop when reached; optionally biased towards
    double target_bias = 0.0;         // probability of using the target as the goal
    double delta = 0.05;
    std::vector<int> allowed;         // permitted field indices; empty = all
    std::uint64_t seed = 0;
    FlowConfig flow = FlowConfig::rk4();
};

struct ReachTree {
    std::vector<Point> nodes;
    std::vector<long> parent;
    std::vector<int> index;
    std::vector<double> duration;

    SwitchSchedule schedule_to(std::size_t node) const;
    /// Index of the node nearest to p in the domain metric.
    std::size_t nearest(const CompactDomain& dom, const Point& p) const;
};

ReachTree explore_reachable(const VectorFieldSet& fs, const CompactDomain& dom, const Point& x0,
                            const ReachOptions& opts);

struct ReachabilityResult {
    Point target;
    Point start;
    double delta = 0.0;
    std::optional<SwitchSchedule> witness;
    double closest_distance = 0.0;
    std::size_t nodes_expanded = 0;
    bool success() const { return witness.has_value(); }
};

/// One tree per start (seed derived from opts.seed and the start index).
std::vector<ReachabilityResult> accessible(const VectorFieldSet& fs, const CompactDomain& dom, const Point& target,
                                           const std::vector<Point>& starts, double delta, ReachOptions opts,
                                           int threads = 1);

// ----------------------------------------------------------------------------
// Submersion of the duration map.

struct SubmersionCertificate {
    Point base;
    SwitchSchedule schedule;
    int terminal_index = 0;
    double s = 0.0;
    std::vector<double> singular_values;
    int rank = 0;
    double sigma_min_kept = 0.0;
    bool valid = false;
    std::size_t trials = 0;
};

SubmersionCertificate check_submersion(const VectorFieldSet& fs, const Point& base, const SwitchSchedule& schedule,
                                       int terminal_index, double s, const FlowConfig& cfg = {},
                                       const RankTolerance& tol = {});

struct SubmersionOptions {
    std::size_t budget = 400;
    int m_min = 1, m_max = 4;
    double s_min = 0.5, s_max = 9.0;
    double min_sigma = 1e-3;
    std::uint64_t seed = 0;
    FlowConfig flow = FlowConfig::rk4();
    RankTolerance tol;
};

/// Random schedules; valid iff rank = d and sigma_min_kept >= min_sigma.
/// On failure the best trial (rank, then sigma_min) is returned.
SubmersionCertificate find_submersion(const VectorFieldSet& fs, const Point& base, const SubmersionOptions& opts);

// ----------------------------------------------------------------------------

enum class Verdict { Certified, Partial, Failed };
std::string to_string(Verdict v);

struct CertifyConfig {
    ConditionIOptions condition_i;
    int bracket_depth = kDefaultMaxBracketDepth;
    std::vector<int> scan_resolution{20, 10};
    RankTolerance rank_tol;
    double delta = 0.05;
    ReachOptions reach;
    std::vector<int> global_resolution{5, 4};
    bool run_submersion = true;
    SubmersionOptions submersion;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct WeakPoint {
    Point x_star;
    BracketReport report;
    bool found = false;
    bool at_e_star = false;
};

struct ErgodicityCertificate {
    EquilibriumCertificate condition_i;
    WeakPoint weak_point;
    BracketReport strong_at_e_star;
    ReachabilityResult reach_estar_to_xstar;
    std::vector<ReachabilityResult> reach_global_to_estar;
    std::optional<SubmersionCertificate> submersion;
    bool global_reach_ok = false;
    Verdict verdict = Verdict::Failed;
    std::string note = "numerical evidence, not a proof";
};

ErgodicityCertificate certify_ergodicity(const VectorFieldSet& fs, const CompactDomain& dom, const CertifyConfig& cfg);
/// Uses the model's extinction set for the delta0 exclusions.
ErgodicityCertificate certify_ergodicity(const Model& model, CertifyConfig cfg);

}  // namespace pdmpcert
