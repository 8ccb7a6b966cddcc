#include "pdmpcert/models.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <sstream>

namespace pdmpcert {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ModelError(what);
}

}  // namespace

void AnnulusParams::validate() const {
    require(eps_bump > 0.0 && eps_bump < std::numbers::pi / 4, "annulus eps_bump must lie in (0, pi/4)");
    require(g_peak > 0.0 && g_peak <= 1.0, "annulus g_peak must lie in (0, 1]");
}

void TorusParams::validate() const { require(eps > 0.0 && eps < 1.0, "torus eps must lie in (0, 1)"); }

void LVParams::validate() const {
    for (const auto& e : env) {
        require(e.alpha > 0 && e.beta > 0 && e.a > 0 && e.b > 0 && e.c > 0 && e.d > 0,
                "Lotka-Volterra coefficients must all be positive");
    }
    require(eta > 0.0 && eta < 1.0, "quadrant band eta must lie in (0, 1)");
    // Positive invariance of the band: inward on x + y = eta and x + y = 1/eta.
    for (const auto& e : env) {
        double hi = std::max({e.a, e.b, e.c, e.d});
        double lo = std::min({e.a, e.b, e.c, e.d});
        require(hi * eta < 1.0, "eta too large: the inner edge x + y = eta is not inward for these coefficients");
        require(lo / eta > 1.0, "eta too large: the outer edge x + y = 1/eta is not inward for these coefficients");
    }
}

void SISParams::validate() const {
    for (int k = 0; k < 2; ++k) {
        require(C[k].rows() == 2 && C[k].cols() == 2, "SIS contact matrices must be 2x2");
        require(D[k].size() == 2, "SIS recovery vectors must have two entries");
        require((C[k].array() >= 0.0).all(), "SIS contact matrices must be nonnegative");
        require(C[k](0, 1) > 0.0 && C[k](1, 0) > 0.0, "SIS contact matrices must be irreducible");
        require((D[k].array() > 0.0).all(), "SIS recovery rates must be positive");
    }
}

// ----------------------------------------------------------------------------

LVCoefficients lv_averaged_coefficients(const LVParams& lv, double s) {
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("s must lie in [0, 1]");
    if (s == 0.0) return lv.env[0];
    if (s == 1.0) return lv.env[1];
    const auto& e0 = lv.env[0];
    const auto& e1 = lv.env[1];
    LVCoefficients r;
    r.alpha = s * e1.alpha + (1 - s) * e0.alpha;
    r.beta = s * e1.beta + (1 - s) * e0.beta;
    if (!(r.alpha > 0.0) || !(r.beta > 0.0)) throw ModelError("averaged growth rate vanishes");
    r.a = (s * e1.alpha * e1.a + (1 - s) * e0.alpha * e0.a) / r.alpha;
    r.b = (s * e1.alpha * e1.b + (1 - s) * e0.alpha * e0.b) / r.alpha;
    r.c = (s * e1.beta * e1.c + (1 - s) * e0.beta * e0.c) / r.beta;
    r.d = (s * e1.beta * e1.d + (1 - s) * e0.beta * e0.d) / r.beta;
    return r;
}

namespace {

std::vector<std::pair<double, double>> positive_set(const std::function<double(double)>& f, int grid,
                                                    std::vector<double>& roots, bool& degenerate) {
    std::vector<double> s(static_cast<std::size_t>(grid + 1)), v(s.size());
    double vmax = 0.0;
    for (int k = 0; k <= grid; ++k) {
        s[static_cast<std::size_t>(k)] = static_cast<double>(k) / grid;
        v[static_cast<std::size_t>(k)] = f(s[static_cast<std::size_t>(k)]);
        vmax = std::max(vmax, std::abs(v[static_cast<std::size_t>(k)]));
    }
    degenerate = vmax < 1e-12;
    std::vector<std::pair<double, double>> out;
    if (degenerate) return out;
    auto polish = [&](double lo, double hi) {
        double flo = f(lo);
        while (hi - lo > 1e-10) {
            double mid = 0.5 * (lo + hi);
            double fm = f(mid);
            if ((fm > 0) == (flo > 0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    };
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
        if ((v[k] > 0) != (v[k + 1] > 0)) roots.push_back(polish(s[k], s[k + 1]));
    }
    // Build open intervals from sign on each piece.
    std::vector<double> cuts{0.0};
    cuts.insert(cuts.end(), roots.begin(), roots.end());
    cuts.push_back(1.0);
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        double mid = 0.5 * (cuts[k] + cuts[k + 1]);
        if (f(mid) > 0) {
            if (!out.empty() && out.back().second == cuts[k]) {
                out.back().second = cuts[k + 1];
            } else {
                out.emplace_back(cuts[k], cuts[k + 1]);
            }
        }
    }
    return out;
}

}  // namespace

LVIntervals lv_intervals(const LVParams& lv, int grid) {
    if (grid < 2) throw std::invalid_argument("lv_intervals grid must have at least 2 cells");
    LVIntervals out;
    out.I = positive_set([&](double s) {
        auto c = lv_averaged_coefficients(lv, s);
        return c.a - c.c;
    }, grid, out.I_roots, out.I_degenerate);
    out.J = positive_set([&](double s) {
        auto c = lv_averaged_coefficients(lv, s);
        return c.b - c.d;
    }, grid, out.J_roots, out.J_degenerate);
    return out;
}

std::string to_string(LVRegime r) {
    switch (r) {
        case LVRegime::AxisX: return "axis-x-attractor";
        case LVRegime::AxisY: return "axis-y-attractor";
        case LVRegime::InteriorGAS: return "interior-gas";
        case LVRegime::InteriorSaddle: return "interior-saddle";
        case LVRegime::Degenerate: return "degenerate";
    }
    return "unknown";
}

LVClassification lv_classify(const LVParams& lv, double s, double tol) {
    LVClassification out;
    out.s = s;
    out.coeffs = lv_averaged_coefficients(lv, s);
    const auto& c = out.coeffs;
    out.axis_x = Point(2);
    out.axis_x << 1.0 / c.a, 0.0;
    out.axis_y = Point(2);
    out.axis_y << 0.0, 1.0 / c.d;
    const double det = c.a * c.d - c.b * c.c;
    if (std::abs(det) > 1e-14) {
        Point e(2);
        e << (c.d - c.b) / det, (c.a - c.c) / det;
        if (e[0] > 0.0 && e[1] > 0.0) out.interior = e;
    }
    const double di = c.a - c.c;
    const double dj = c.b - c.d;
    out.in_I = di > 0.0;
    out.in_J = dj > 0.0;
    if (std::abs(di) <= tol || std::abs(dj) <= tol) {
        out.regime = LVRegime::Degenerate;
        out.attractor = out.interior.value_or(out.axis_x);
        return out;
    }
    if (!out.in_I && !out.in_J) {
        out.regime = LVRegime::AxisX;
        out.attractor = out.axis_x;
    } else if (out.in_I && out.in_J) {
        out.regime = LVRegime::AxisY;
        out.attractor = out.axis_y;
    } else if (out.in_I) {
        out.regime = LVRegime::InteriorGAS;
        out.attractor = *out.interior;
    } else {
        out.regime = LVRegime::InteriorSaddle;
        out.attractor = *out.interior;
    }
    return out;
}

// ----------------------------------------------------------------------------

double sis_lambda(const Matrix& A) {
    if (A.rows() != 2 || A.cols() != 2) throw std::invalid_argument("sis_lambda expects a 2x2 matrix");
    const double half_tr = 0.5 * (A(0, 0) + A(1, 1));
    const double det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    const double disc = half_tr * half_tr - det;
    return disc >= 0.0 ? half_tr + std::sqrt(disc) : half_tr;
}

Matrix sis_matrix(const SISParams& p, int k) {
    if (k < 0 || k > 1) throw std::out_of_range("SIS environment index must be 0 or 1");
    Matrix a = p.C[static_cast<std::size_t>(k)];
    a.diagonal() -= p.D[static_cast<std::size_t>(k)];
    return a;
}

Matrix sis_averaged_matrix(const SISParams& p, double s) { return s * sis_matrix(p, 1) + (1 - s) * sis_matrix(p, 0); }

SISLambdaCurve sis_lambda_curve(const SISParams& p, const std::vector<double>& s_grid) {
    SISLambdaCurve out;
    out.lambda0 = sis_lambda(sis_matrix(p, 0));
    out.lambda1 = sis_lambda(sis_matrix(p, 1));
    out.max_lambda = -std::numeric_limits<double>::infinity();
    for (double s : s_grid) {
        double l = sis_lambda(sis_averaged_matrix(p, s));
        if (!out.s.empty() && (l > 0) != (out.lambda.back() > 0)) {
            double lo = out.s.back(), hi = s;
            bool lo_pos = out.lambda.back() > 0;
            while (hi - lo > 1e-12) {
                double mid = 0.5 * (lo + hi);
                if ((sis_lambda(sis_averaged_matrix(p, mid)) > 0) == lo_pos) lo = mid; else hi = mid;
            }
            out.sign_changes.push_back(0.5 * (lo + hi));
        }
        out.s.push_back(s);
        out.lambda.push_back(l);
        if (l > out.max_lambda) {
            out.max_lambda = l;
            out.argmax_s = s;
        }
    }
    out.premises_hold = out.lambda0 < 0 && out.lambda1 < 0 && out.max_lambda > 0;
    return out;
}

namespace {

Point sis_rhs(const Matrix& C, const Point& D, const Point& x) {
    Point cx = C * x;
    return (Point::Ones(2) - x).cwiseProduct(cx) - D.cwiseProduct(x);
}

bool sis_newton(const Matrix& C, const Point& D, Point& x) {
    for (int it = 0; it < 100; ++it) {
        Point f = sis_rhs(C, D, x);
        if (f.norm() < 1e-14) return true;
        Point cx = C * x;
        Matrix jac(2, 2);
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) jac(i, j) = (1 - x[i]) * C(i, j) - (i == j ? cx[i] + D[i] : 0.0);
        }
        Point step = jac.fullPivLu().solve(f);
        if (!step.allFinite()) return false;
        x -= step;
        if (!x.allFinite()) return false;
    }
    return sis_rhs(C, D, x).norm() < 1e-12;
}

bool interior(const Point& x) { return x[0] > 0 && x[0] < 1 && x[1] > 0 && x[1] < 1; }

}  // namespace

SISEquilibrium sis_equilibrium(const Matrix& C, const Point& D) {
    SISEquilibrium out;
    Matrix a = C;
    a.diagonal() -= D;
    out.lambda = sis_lambda(a);
    out.x = Point::Zero(2);
    if (out.lambda <= 0.0) {
        out.method = "origin";
        return out;
    }
    Point x = Point::Constant(2, 0.5);
    if (sis_newton(C, D, x) && interior(x)) {
        out.origin = false;
        out.x = x;
        out.newton_converged = true;
        out.method = "newton";
        return out;
    }
    // The interior equilibrium attracts (0,1]^2 minus the origin: follow the flow, then polish.
    x = Point::Constant(2, 0.5);
    const double h = 1e-2;
    for (int it = 0; it < 2'000'000; ++it) {
        Point k1 = sis_rhs(C, D, x);
        if (k1.norm() < 1e-10) break;
        Point k2 = sis_rhs(C, D, x + 0.5 * h * k1);
        Point k3 = sis_rhs(C, D, x + 0.5 * h * k2);
        Point k4 = sis_rhs(C, D, x + h * k3);
        x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    Point polished = x;
    out.newton_converged = sis_newton(C, D, polished) && interior(polished);
    out.x = out.newton_converged ? polished : x;
    out.origin = false;
    out.method = "flow+newton";
    if (!interior(out.x)) throw NumericalError("SIS equilibrium search left (0,1)^2");
    return out;
}

SISEquilibrium sis_equilibrium(const SISParams& p, double s) {
    Matrix C = s * p.C[1] + (1 - s) * p.C[0];
    Point D = s * p.D[1] + (1 - s) * p.D[0];
    return sis_equilibrium(C, D);
}

std::optional<SISParams> sis_lemma_search(std::uint64_t seed, double margin, int max_trials) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> off(0.05, 4.0), diag(0.0, 0.5), rec(0.5, 2.0);
    for (int trial = 0; trial < max_trials; ++trial) {
        SISParams p;
        for (int k = 0; k < 2; ++k) {
            Matrix C(2, 2);
            C << diag(rng), off(rng), off(rng), diag(rng);
            Point D(2);
            D << rec(rng), rec(rng);
            p.C[static_cast<std::size_t>(k)] = C;
            p.D[static_cast<std::size_t>(k)] = D;
        }
        double l0 = sis_lambda(sis_matrix(p, 0));
        double l1 = sis_lambda(sis_matrix(p, 1));
        double lh = sis_lambda(sis_averaged_matrix(p, 0.5));
        if (l0 < -margin && l1 < -margin && lh > margin) return p;
    }
    return std::nullopt;
}

SISParams sis_coinciding_fixture(const Point& x_star, const Matrix& C0, const Matrix& C1) {
    if (x_star.size() != 2 || !interior(x_star)) throw std::invalid_argument("x_star must lie in (0,1)^2");
    SISParams p;
    p.C = {C0, C1};
    for (int k = 0; k < 2; ++k) {
        Point cx = p.C[static_cast<std::size_t>(k)] * x_star;
        Point D(2);
        for (int i = 0; i < 2; ++i) D[i] = (1 - x_star[i]) * cx[i] / x_star[i];
        p.D[static_cast<std::size_t>(k)] = D;
    }
    p.validate();
    return p;
}

// ----------------------------------------------------------------------------

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Annulus: return "annulus";
        case ModelKind::Torus: return "torus";
        case ModelKind::LV: return "lv";
        case ModelKind::SIS: return "sis";
    }
    return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "annulus") return ModelKind::Annulus;
    if (name == "torus") return ModelKind::Torus;
    if (name == "lv") return ModelKind::LV;
    if (name == "sis") return ModelKind::SIS;
    throw std::invalid_argument("unknown model '" + name + "' (expected annulus|torus|lv|sis)");
}

double Model::extinction_distance(const Point& x) const {
    switch (kind) {
        case ModelKind::LV: return std::min(x[0], x[1]);
        case ModelKind::SIS: return x.norm();
        default: return std::numeric_limits<double>::infinity();
    }
}

VectorFieldSet annulus_fields(const AnnulusParams& p) {
    p.validate();
    return VectorFieldSet::from_generic(2, 2, Chart::Polar, "annulus", [p](int i, auto x, auto out) {
        const auto& theta = x[0];
        const auto& r = x[1];
        auto h = annulus_h(r);
        if (i == 0) {
            out[0] = 1.0;
            out[1] = h;
        } else {
            out[0] = annulus_f(p, theta);
            out[1] = annulus_g(p, theta) + h;
        }
    });
}

VectorFieldSet torus_fields(const TorusParams& p) {
    p.validate();
    const double eps = p.eps;
    return VectorFieldSet::from_generic(2, 2, Chart::TorusPeriodic, "torus", [eps](int i, auto x, auto out) {
        if (i == 0) {
            out[0] = 1.0;
            out[1] = 0.0;
        } else {
            out[0] = 0.0;
            out[1] = 1.0 + eps * jet::sin(2.0 * std::numbers::pi * x[0]);
        }
    });
}

VectorFieldSet lv_fields(const LVParams& p) {
    p.validate();
    auto env = p.env;
    return VectorFieldSet::from_generic(2, 2, Chart::Cartesian, "lv", [env](int i, auto x, auto out) {
        const auto& e = env[static_cast<std::size_t>(i)];
        out[0] = e.alpha * x[0] * (1.0 - e.a * x[0] - e.b * x[1]);
        out[1] = e.beta * x[1] * (1.0 - e.c * x[0] - e.d * x[1]);
    });
}

VectorFieldSet sis_fields(const SISParams& p) {
    p.validate();
    std::array<std::array<double, 4>, 2> c{};
    std::array<std::array<double, 2>, 2> d{};
    for (int k = 0; k < 2; ++k) {
        auto kk = static_cast<std::size_t>(k);
        c[kk] = {p.C[kk](0, 0), p.C[kk](0, 1), p.C[kk](1, 0), p.C[kk](1, 1)};
        d[kk] = {p.D[kk][0], p.D[kk][1]};
    }
    return VectorFieldSet::from_generic(2, 2, Chart::Cartesian, "sis", [c, d](int k, auto x, auto out) {
        const auto& ck = c[static_cast<std::size_t>(k)];
        const auto& dk = d[static_cast<std::size_t>(k)];
        out[0] = (1.0 - x[0]) * (ck[0] * x[0] + ck[1] * x[1]) - dk[0] * x[0];
        out[1] = (1.0 - x[1]) * (ck[2] * x[0] + ck[3] * x[1]) - dk[1] * x[1];
    });
}

Model build_model(const ModelParams& params, const std::optional<RateSpec>& rates) {
    RateMatrixField rm = rates ? RateMatrixField::from_spec(*rates) : RateMatrixField::symmetric(2, 1.0);
    if (rm.count() != 2) throw ModelError("model-zoo systems have exactly two modes");
    return std::visit([&](const auto& p) -> Model {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, AnnulusParams>) {
            return Model{ModelKind::Annulus, p, annulus_fields(p), CompactDomain::annulus(0.5, 2.0, AnnulusChart::Polar), rm};
        } else if constexpr (std::is_same_v<P, TorusParams>) {
            return Model{ModelKind::Torus, p, torus_fields(p), CompactDomain::torus(2), rm};
        } else if constexpr (std::is_same_v<P, LVParams>) {
            return Model{ModelKind::LV, p, lv_fields(p), CompactDomain::quadrant_band(p.eta), rm};
        } else {
            return Model{ModelKind::SIS, p, sis_fields(p), CompactDomain::unit_box(2), rm};
        }
    }, params);
}

}  // namespace pdmpcert
