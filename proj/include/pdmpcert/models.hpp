#pragma once

#include "pdmpcert/domain.hpp"
#include "pdmpcert/fields.hpp"
#include "pdmpcert/pdmp.hpp"

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace pdmpcert {

// ----------------------------------------------------------------------------
// Annulus with bump-function fields, polar chart (theta, r).

struct AnnulusParams {
    double eps_bump = 0.5;
    double g_peak = 1.0;
    void validate() const;
};

/// B(t) = exp(1 - 1/(1 - t^2)) for |t| < 1, else 0; B(0) = 1.
template <class T>
T bump(const T& t) {
    if (!(std::abs(jet::primal(t)) < 1.0)) return T(0.0);
    return jet::exp(1.0 - 1.0 / (1.0 - t * t));
}

/// theta - c reduced to (-pi, pi] by a constant shift (jets pass through).
template <class T>
T angle_offset(const T& theta, double c) {
    const double two_pi = 2.0 * std::numbers::pi;
    double k = std::round((jet::primal(theta) - c) / two_pi);
    return theta - (c + two_pi * k);
}

template <class T>
T annulus_f(const AnnulusParams& p, const T& theta) {
    return 1.0 - 0.5 * bump(angle_offset(theta, 0.5 * std::numbers::pi) / p.eps_bump);
}
template <class T>
T annulus_g(const AnnulusParams& p, const T& theta) {
    return p.g_peak * bump(angle_offset(theta, 0.0) / p.eps_bump);
}
template <class T>
T annulus_h(const T& r) {
    return r * (1.0 - r);
}

// ----------------------------------------------------------------------------

struct TorusParams {
    double eps = 0.1;
    void validate() const;
};

// ----------------------------------------------------------------------------
// Competitive Lotka-Volterra in two environments.

struct LVCoefficients {
    double alpha = 1, beta = 1, a = 1, b = 1, c = 1, d = 1;
};

struct LVParams {
    std::array<LVCoefficients, 2> env;
    double eta = 0.1;
    void validate() const;
};

/// Coefficients of sF^1 + (1 - s)F^0, weighted by growth rates so the
/// average is again a Lotka-Volterra field.
LVCoefficients lv_averaged_coefficients(const LVParams& lv, double s);

struct LVIntervals {
    std::vector<std::pair<double, double>> I;  // {s : a_s > c_s}
    std::vector<std::pair<double, double>> J;  // {s : b_s > d_s}
    bool I_degenerate = false;                 // a_s - c_s vanishes identically
    bool J_degenerate = false;
    std::vector<double> I_roots, J_roots;
};

LVIntervals lv_intervals(const LVParams& lv, int grid = 4000);

enum class LVRegime { AxisX, AxisY, InteriorGAS, InteriorSaddle, Degenerate };
std::string to_string(LVRegime r);

struct LVClassification {
    double s = 0;
    LVRegime regime = LVRegime::Degenerate;
    LVCoefficients coeffs;
    bool in_I = false, in_J = false;
    Point axis_x;                    // (1/a_s, 0)
    Point axis_y;                    // (0, 1/d_s)
    std::optional<Point> interior;   // solution of a x + b y = 1, c x + d y = 1 when positive
    Point attractor;                 // equilibrium characterizing the regime
};

LVClassification lv_classify(const LVParams& lv, double s, double tol = 1e-9);

// ----------------------------------------------------------------------------
// Two-group SIS in two environments on [0, 1]^2.

struct SISParams {
    std::array<Matrix, 2> C{Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
    std::array<Point, 2> D{Point::Ones(2), Point::Ones(2)};
    void validate() const;
};

/// Largest real part of the eigenvalues of a 2x2 matrix (closed form).
double sis_lambda(const Matrix& A);
/// A^k = C^k - diag(D^k).
Matrix sis_matrix(const SISParams& p, int k);
/// A^s = s A^1 + (1 - s) A^0.
Matrix sis_averaged_matrix(const SISParams& p, double s);

struct SISLambdaCurve {
    std::vector<double> s;
    std::vector<double> lambda;
    std::vector<double> sign_changes;
    double lambda0 = 0, lambda1 = 0;
    double max_lambda = 0, argmax_s = 0;
    bool premises_hold = false;  // lambda0 < 0, lambda1 < 0, max > 0
};

SISLambdaCurve sis_lambda_curve(const SISParams& p, const std::vector<double>& s_grid);

struct SISEquilibrium {
    bool origin = true;
    Point x;                 // (0,0) when origin
    double lambda = 0;
    bool newton_converged = false;
    std::string method;      // "origin", "newton", "flow+newton"
};

/// Equilibrium of x_i' = (1 - x_i)(C x)_i - D_i x_i.
SISEquilibrium sis_equilibrium(const Matrix& C, const Point& D);
/// Equilibrium of the averaged field F^s.
SISEquilibrium sis_equilibrium(const SISParams& p, double s);

/// Deterministic random search for a pair satisfying
/// lambda(A^0), lambda(A^1) < -margin and lambda(A^{1/2}) > margin.
std::optional<SISParams> sis_lemma_search(std::uint64_t seed, double margin = 0.05, int max_trials = 100000);

/// F^0 and F^1 vanishing at the same interior point x_star:
/// D^k_i = (1 - x_i)(C^k x)_i / x_i.
SISParams sis_coinciding_fixture(const Point& x_star, const Matrix& C0, const Matrix& C1);

// ----------------------------------------------------------------------------

enum class ModelKind { Annulus, Torus, LV, SIS };
std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& name);

using ModelParams = std::variant<AnnulusParams, TorusParams, LVParams, SISParams>;

struct Model {
    ModelKind kind;
    ModelParams params;
    VectorFieldSet fields;
    CompactDomain domain;
    RateMatrixField rates;

    /// True for LV and SIS, which have an invariant extinction set M_0.
    bool has_extinction_set() const { return kind == ModelKind::LV || kind == ModelKind::SIS; }
    /// Distance to M_0 (LV: min(x, y); SIS: |x|); +inf without an extinction set.
    double extinction_distance(const Point& x) const;
};

VectorFieldSet annulus_fields(const AnnulusParams& p);
VectorFieldSet torus_fields(const TorusParams& p);
VectorFieldSet lv_fields(const LVParams& p);
VectorFieldSet sis_fields(const SISParams& p);

/// Fields + domain + rates (default: constant symmetric lambda = 1).
Model build_model(const ModelParams& params, const std::optional<RateSpec>& rates = std::nullopt);

}  // namespace pdmpcert
