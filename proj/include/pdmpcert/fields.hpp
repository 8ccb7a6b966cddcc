#pragma once

#include "pdmpcert/jet.hpp"
#include "pdmpcert/types.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace pdmpcert {

/// Deepest nested jet the field evaluators are instantiated for. A bracket
/// expression of depth k is evaluated with jets of level k.
inline constexpr int kMaxJetLevel = 5;
inline constexpr int kDefaultMaxBracketDepth = 4;

enum class Chart { Cartesian, Polar, TorusPeriodic };

std::string to_string(Chart chart);

/// Reduces periodic chart coordinates (torus: mod 1, polar: theta mod 2pi).
void wrap_chart(Chart chart, std::span<double> x);
/// a - b with periodic coordinates reduced to the symmetric cell.
Point chart_difference(Chart chart, const Point& a, const Point& b);

enum class DiffMode { Auto, Jet, FiniteDifference };

template <class T>
using FieldEvaluator = std::function<void(int index, std::span<const T> x, std::span<T> out)>;

namespace detail {
template <class Seq> struct EvaluatorTuple;
template <int... L> struct EvaluatorTuple<std::integer_sequence<int, L...>> {
    using type = std::tuple<FieldEvaluator<jet::Jet<L>>...>;
};
using AllEvaluators = typename EvaluatorTuple<std::make_integer_sequence<int, kMaxJetLevel + 1>>::type;
}  // namespace detail

/// The family {F^i}, i in E = {0, ..., N-1}, of smooth vector fields on R^d.
/// Immutable after construction.
class VectorFieldSet {
public:
    /// `field(i, x, out)` must be callable for every jet level with
    /// x: std::span<const T>, out: std::span<T>. Enables exact jet derivatives.
    template <class Generic>
    static VectorFieldSet from_generic(int count, int dimension, Chart chart, std::string label, Generic field) {
        VectorFieldSet fs(count, dimension, chart, std::move(label));
        fs.fill_evaluators(field, std::make_integer_sequence<int, kMaxJetLevel + 1>{});
        fs.has_jets_ = true;
        return fs;
    }

    /// Double-only evaluator; derivatives fall back to central differences.
    static VectorFieldSet from_black_box(int count, int dimension, Chart chart, std::string label,
                                         FieldEvaluator<double> field);

    int count() const { return count_; }
    int dimension() const { return dimension_; }
    Chart chart() const { return chart_; }
    const std::string& label() const { return label_; }
    bool has_jets() const { return has_jets_; }

    void evaluate(int index, std::span<const double> x, std::span<double> out) const;

    template <int Level>
    void evaluate_jet(int index, std::span<const jet::Jet<Level>> x, std::span<jet::Jet<Level>> out) const {
        check_index(index);
        const auto& f = std::get<Level>(evaluators_);
        if (!f) throw std::logic_error("field set '" + label_ + "' has no jet evaluator");
        f(index, x, out);
    }

    void check_index(int index) const;

private:
    VectorFieldSet(int count, int dimension, Chart chart, std::string label);

    template <class Generic, int... L>
    void fill_evaluators(const Generic& field, std::integer_sequence<int, L...>) {
        ((std::get<L>(evaluators_) = [field](int i, std::span<const jet::Jet<L>> x, std::span<jet::Jet<L>> out) {
              field(i, x, out);
          }),
         ...);
    }

    int count_ = 0;
    int dimension_ = 0;
    Chart chart_ = Chart::Cartesian;
    std::string label_;
    bool has_jets_ = false;
    detail::AllEvaluators evaluators_;
};

/// A Lie-bracket expression built from generators F^i, differences
/// F^i - F^j, and brackets [V, W]. Immutable tree with shared nodes.
class FieldExpr {
public:
    enum class Kind { Generator, Difference, Bracket };

    static FieldExpr generator(int index);
    /// Canonical form stores i < j and a sign: difference(2, 1) = -(F^1 - F^2).
    static FieldExpr difference(int i, int j);
    static FieldExpr bracket(FieldExpr left, FieldExpr right);

    Kind kind() const;
    int depth() const;
    int first() const;   // generator index, or i of a difference
    int second() const;  // j of a difference
    double sign() const; // difference orientation
    const FieldExpr& left() const;
    const FieldExpr& right() const;

    std::string to_string() const;
    bool operator==(const FieldExpr& other) const;

private:
    struct Node;
    explicit FieldExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

struct FieldExpr::Node {
    Kind kind = Kind::Generator;
    int i = 0;
    int j = 0;
    double sign = 1.0;
    int depth = 0;
    std::vector<FieldExpr> children;  // left, right for brackets
};

Point eval(const VectorFieldSet& fs, int index, const Point& x);

/// Entry (a, b) = dF^i_a / dx_b.
Matrix jacobian(const VectorFieldSet& fs, int index, const Point& x, DiffMode mode = DiffMode::Auto);

/// Value of an expression at x. Jet mode is exact up to round-off. Finite
/// differences use the step (1e-5)^(1/(k+1)) (1 + |x|) for a bracket node at
/// nesting level k (k = 0 for a bracket of two leaves).
Point eval_expr(const VectorFieldSet& fs, const FieldExpr& expr, const Point& x, DiffMode mode = DiffMode::Auto,
                int max_depth = kDefaultMaxBracketDepth);

/// [V, W](x) = DW(x) V(x) - DV(x) W(x).
Point lie_bracket(const VectorFieldSet& fs, const FieldExpr& v, const FieldExpr& w, const Point& x,
                  DiffMode mode = DiffMode::Auto, int max_depth = kDefaultMaxBracketDepth);

/// sum_i alpha_i F^i(x); requires sum alpha = 1 within 1e-12.
Point barycentric(const VectorFieldSet& fs, const Eigen::VectorXd& alpha, const Point& x);

/// The d x N matrix whose columns are F^i(x).
Matrix field_matrix(const VectorFieldSet& fs, const Point& x);

/// Central-difference Jacobian with step 1e-5 (1 + |x|); independent of the jet path.
Matrix central_difference_jacobian(const VectorFieldSet& fs, int index, const Point& x);

}  // namespace pdmpcert
