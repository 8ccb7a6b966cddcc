#include "pdmpcert/fields.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace pdmpcert {

using jet::Jet;

std::string to_string(Chart chart) {
    switch (chart) {
        case Chart::Cartesian: return "cartesian";
        case Chart::Polar: return "polar";
        case Chart::TorusPeriodic: return "torus";
    }
    return "unknown";
}

void wrap_chart(Chart chart, std::span<double> x) {
    auto wrap = [](double v, double period) {
        double w = v - period * std::floor(v / period);
        return w >= period ? 0.0 : w;
    };
    if (chart == Chart::TorusPeriodic) {
        for (double& v : x) v = wrap(v, 1.0);
    } else if (chart == Chart::Polar && !x.empty()) {
        x[0] = wrap(x[0], 2.0 * std::numbers::pi);
    }
}

Point chart_difference(Chart chart, const Point& a, const Point& b) {
    Point d = a - b;
    auto reduce = [](double v, double period) { return v - period * std::round(v / period); };
    if (chart == Chart::TorusPeriodic) {
        for (Eigen::Index k = 0; k < d.size(); ++k) d[k] = reduce(d[k], 1.0);
    } else if (chart == Chart::Polar && d.size() > 0) {
        d[0] = reduce(d[0], 2.0 * std::numbers::pi);
    }
    return d;
}

VectorFieldSet::VectorFieldSet(int count, int dimension, Chart chart, std::string label)
    : count_(count), dimension_(dimension), chart_(chart), label_(std::move(label)) {
    if (count < 1) throw std::invalid_argument("a field set needs at least one field");
    if (dimension < 1) throw std::invalid_argument("field dimension must be positive");
}

VectorFieldSet VectorFieldSet::from_black_box(int count, int dimension, Chart chart, std::string label,
                                              FieldEvaluator<double> field) {
    if (!field) throw std::invalid_argument("black-box field evaluator is empty");
    VectorFieldSet fs(count, dimension, chart, std::move(label));
    std::get<0>(fs.evaluators_) = std::move(field);
    fs.has_jets_ = false;
    return fs;
}

void VectorFieldSet::check_index(int index) const {
    if (index < 0 || index >= count_) {
        std::ostringstream msg;
        msg << "field index " << index << " out of range [0, " << count_ << ")";
        throw std::out_of_range(msg.str());
    }
}

void VectorFieldSet::evaluate(int index, std::span<const double> x, std::span<double> out) const {
    check_index(index);
    std::get<0>(evaluators_)(index, x, out);
}

// ---------------------------------------------------------------------------
// FieldExpr

FieldExpr FieldExpr::generator(int index) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Generator;
    n->i = index;
    return FieldExpr(std::move(n));
}

FieldExpr FieldExpr::difference(int i, int j) {
    if (i == j) throw std::invalid_argument("F^i - F^i is the zero field");
    auto n = std::make_shared<Node>();
    n->kind = Kind::Difference;
    n->i = std::min(i, j);
    n->j = std::max(i, j);
    n->sign = i < j ? 1.0 : -1.0;
    return FieldExpr(std::move(n));
}

FieldExpr FieldExpr::bracket(FieldExpr left, FieldExpr right) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Bracket;
    n->depth = 1 + std::max(left.depth(), right.depth());
    n->children = {std::move(left), std::move(right)};
    return FieldExpr(std::move(n));
}

FieldExpr::Kind FieldExpr::kind() const { return node_->kind; }
int FieldExpr::depth() const { return node_->depth; }
int FieldExpr::first() const { return node_->i; }
int FieldExpr::second() const { return node_->j; }
double FieldExpr::sign() const { return node_->sign; }
const FieldExpr& FieldExpr::left() const { return node_->children.at(0); }
const FieldExpr& FieldExpr::right() const { return node_->children.at(1); }

std::string FieldExpr::to_string() const {
    switch (node_->kind) {
        case Kind::Generator: return "F" + std::to_string(node_->i);
        case Kind::Difference: {
            std::string s = "F" + std::to_string(node_->i) + "-F" + std::to_string(node_->j);
            return node_->sign > 0 ? s : "-(" + s + ")";
        }
        case Kind::Bracket: return "[" + left().to_string() + "," + right().to_string() + "]";
    }
    return "?";
}

bool FieldExpr::operator==(const FieldExpr& other) const {
    if (node_ == other.node_) return true;
    if (kind() != other.kind()) return false;
    switch (kind()) {
        case Kind::Generator: return first() == other.first();
        case Kind::Difference: return first() == other.first() && second() == other.second() && sign() == other.sign();
        case Kind::Bracket: return left() == other.left() && right() == other.right();
    }
    return false;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

void check_point(const VectorFieldSet& fs, const Point& x) {
    if (x.size() != fs.dimension()) {
        throw std::invalid_argument("point dimension does not match the field set");
    }
}

void check_finite(const Point& v, const char* what) {
    if (!v.allFinite()) throw NumericalError(std::string(what) + ": non-finite value (evaluation outside the field domain?)");
}

template <int L>
std::vector<Jet<L>> eval_level(const VectorFieldSet& fs, const FieldExpr& e, std::span<const Jet<L>> x) {
    const auto d = static_cast<std::size_t>(fs.dimension());
    std::vector<Jet<L>> out(d);
    switch (e.kind()) {
        case FieldExpr::Kind::Generator:
            fs.evaluate_jet<L>(e.first(), x, out);
            return out;
        case FieldExpr::Kind::Difference: {
            std::vector<Jet<L>> other(d);
            fs.evaluate_jet<L>(e.first(), x, out);
            fs.evaluate_jet<L>(e.second(), x, other);
            for (std::size_t k = 0; k < d; ++k) out[k] = e.sign() * (out[k] - other[k]);
            return out;
        }
        case FieldExpr::Kind::Bracket:
            if constexpr (L < kMaxJetLevel) {
                auto a = eval_level<L>(fs, e.left(), x);
                auto b = eval_level<L>(fs, e.right(), x);
                std::vector<Jet<L + 1>> lifted(d);
                for (std::size_t k = 0; k < d; ++k) lifted[k] = Jet<L + 1>(x[k], a[k]);
                auto db_a = eval_level<L + 1>(fs, e.right(), lifted);
                for (std::size_t k = 0; k < d; ++k) lifted[k] = Jet<L + 1>(x[k], b[k]);
                auto da_b = eval_level<L + 1>(fs, e.left(), lifted);
                for (std::size_t k = 0; k < d; ++k) out[k] = db_a[k].d - da_b[k].d;
                return out;
            } else {
                throw std::invalid_argument("bracket nesting exceeds the compiled jet depth");
            }
    }
    return out;
}

Point eval_fd(const VectorFieldSet& fs, const FieldExpr& e, const Point& x) {
    const int d = fs.dimension();
    Point out(d);
    switch (e.kind()) {
        case FieldExpr::Kind::Generator:
            fs.evaluate(e.first(), std::span<const double>(x.data(), x.size()), std::span<double>(out.data(), d));
            return out;
        case FieldExpr::Kind::Difference: {
            Point other(d);
            fs.evaluate(e.first(), std::span<const double>(x.data(), x.size()), std::span<double>(out.data(), d));
            fs.evaluate(e.second(), std::span<const double>(x.data(), x.size()), std::span<double>(other.data(), d));
            return e.sign() * (out - other);
        }
        case FieldExpr::Kind::Bracket: {
            const int level = e.depth() - 1;
            const double h = std::pow(1e-5, 1.0 / (level + 1)) * (1.0 + x.norm());
            auto directional = [&](const FieldExpr& f, const Point& v) -> Point {
                double n = v.norm();
                if (n == 0.0) return Point::Zero(d);
                Point u = v / n;
                return (eval_fd(fs, f, x + h * u) - eval_fd(fs, f, x - h * u)) * (n / (2.0 * h));
            };
            Point a = eval_fd(fs, e.left(), x);
            Point b = eval_fd(fs, e.right(), x);
            return directional(e.right(), a) - directional(e.left(), b);
        }
    }
    return out;
}

bool use_jets(const VectorFieldSet& fs, DiffMode mode) {
    if (mode == DiffMode::Jet && !fs.has_jets()) {
        throw std::invalid_argument("jet differentiation requested for a black-box field set");
    }
    return mode == DiffMode::Jet || (mode == DiffMode::Auto && fs.has_jets());
}

}  // namespace

Point eval(const VectorFieldSet& fs, int index, const Point& x) {
    check_point(fs, x);
    Point out(fs.dimension());
    fs.evaluate(index, std::span<const double>(x.data(), x.size()), std::span<double>(out.data(), out.size()));
    return out;
}

Matrix central_difference_jacobian(const VectorFieldSet& fs, int index, const Point& x) {
    check_point(fs, x);
    const int d = fs.dimension();
    const double h = 1e-5 * (1.0 + x.norm());
    Matrix jac(d, d);
    for (int b = 0; b < d; ++b) {
        Point xp = x, xm = x;
        xp[b] += h;
        xm[b] -= h;
        jac.col(b) = (eval(fs, index, xp) - eval(fs, index, xm)) / (2.0 * h);
    }
    return jac;
}

Matrix jacobian(const VectorFieldSet& fs, int index, const Point& x, DiffMode mode) {
    check_point(fs, x);
    fs.check_index(index);
    Matrix jac;
    if (!use_jets(fs, mode)) {
        jac = central_difference_jacobian(fs, index, x);
    } else {
        const auto d = static_cast<std::size_t>(fs.dimension());
        jac.resize(fs.dimension(), fs.dimension());
        std::vector<Jet<1>> xj(d), out(d);
        for (std::size_t b = 0; b < d; ++b) {
            for (std::size_t k = 0; k < d; ++k) xj[k] = Jet<1>(x[static_cast<Eigen::Index>(k)], k == b ? 1.0 : 0.0);
            fs.evaluate_jet<1>(index, xj, out);
            for (std::size_t a = 0; a < d; ++a) {
                jac(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = out[a].d;
            }
        }
    }
    if (!jac.allFinite()) throw NumericalError("jacobian: non-finite entry (evaluation outside the field domain?)");
    return jac;
}

Point eval_expr(const VectorFieldSet& fs, const FieldExpr& expr, const Point& x, DiffMode mode, int max_depth) {
    check_point(fs, x);
    if (expr.depth() > max_depth) {
        std::ostringstream msg;
        msg << "bracket depth " << expr.depth() << " exceeds the configured maximum " << max_depth;
        throw std::invalid_argument(msg.str());
    }
    Point out;
    if (use_jets(fs, mode)) {
        std::vector<double> xs(x.data(), x.data() + x.size());
        auto v = eval_level<0>(fs, expr, std::span<const double>(xs));
        out = Eigen::Map<const Point>(v.data(), static_cast<Eigen::Index>(v.size()));
    } else {
        out = eval_fd(fs, expr, x);
    }
    check_finite(out, "eval_expr");
    return out;
}

Point lie_bracket(const VectorFieldSet& fs, const FieldExpr& v, const FieldExpr& w, const Point& x, DiffMode mode,
                  int max_depth) {
    return eval_expr(fs, FieldExpr::bracket(v, w), x, mode, max_depth);
}

Matrix field_matrix(const VectorFieldSet& fs, const Point& x) {
    check_point(fs, x);
    Matrix b(fs.dimension(), fs.count());
    for (int i = 0; i < fs.count(); ++i) b.col(i) = eval(fs, i, x);
    return b;
}

Point barycentric(const VectorFieldSet& fs, const Eigen::VectorXd& alpha, const Point& x) {
    if (alpha.size() != fs.count()) throw std::invalid_argument("alpha must have one weight per field");
    if (std::abs(alpha.sum() - 1.0) > 1e-12) throw std::invalid_argument("barycentric weights must sum to 1");
    return field_matrix(fs, x) * alpha;
}

}  // namespace pdmpcert
