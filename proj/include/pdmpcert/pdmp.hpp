#pragma once

#include "pdmpcert/domain.hpp"
#include "pdmpcert/fields.hpp"
#include "pdmpcert/flow.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pdmpcert {

/// Serializable description of a rate matrix.
/// Constant: a_ij = base_ij. Sin2: a_ij(x) = base_ij + amp_ij sin^2(2 pi freq x_axis).
struct RateSpec {
    enum class Kind { Constant, Sin2 };
    Kind kind = Kind::Constant;
    Matrix base;
    Matrix amp;
    double freq = 1.0;
    int axis = 0;

    static RateSpec symmetric(int count, double lambda);
    static RateSpec constant(Matrix a);
};

/// Switching intensities a_ij(x) >= 0, i != j, zero diagonal.
class RateMatrixField {
public:
    using RowFn = std::function<void(int i, std::span<const double> x, std::span<double> row)>;

    /// Validates sign, zero diagonal and irreducibility immediately.
    static RateMatrixField constant(Matrix a);
    static RateMatrixField symmetric(int count, double lambda) { return constant(RateSpec::symmetric(count, lambda).base); }
    static RateMatrixField from_spec(const RateSpec& spec);
    /// Arbitrary state-dependent rates; call validate_on() before use.
    static RateMatrixField custom(int count, RowFn row, std::string label = "custom");

    int count() const { return count_; }
    bool is_constant() const { return constant_.has_value(); }
    const std::optional<Matrix>& constant_matrix() const { return constant_; }
    const std::optional<RateSpec>& spec() const { return spec_; }
    const std::string& label() const { return label_; }

    /// Fills row[j] = a_ij(x) (row[i] = 0).
    void rates(int i, std::span<const double> x, std::span<double> row) const;
    double rate(int i, int j, const Point& x) const;
    double total_rate(int i, std::span<const double> x) const;
    double total_rate(int i, const Point& x) const { return total_rate(i, std::span<const double>(x.data(), x.size())); }

    /// Checks nonnegativity and strong connectivity of {(i,j): a_ij > 0 somewhere} on the grid.
    void validate_on(const std::vector<Point>& points) const;
    /// max over points and modes of total_rate.
    double max_total_rate(const std::vector<Point>& points) const;

private:
    RateMatrixField(int count, RowFn row, std::string label);
    int count_ = 0;
    RowFn row_;
    std::string label_;
    std::optional<Matrix> constant_;
    std::optional<RateSpec> spec_;
};

/// Directed graph strong connectivity on entries > 0.
bool irreducible(const Matrix& positive_pattern);

struct SimConfig {
    double t_max = 10.0;
    double dt_out = 0.01;                   // 0 disables regular sampling
    std::vector<double> sample_times;       // extra explicit sample times (sorted, within [0, t_max])
    std::optional<double> rate_bound;       // Lambda-bar; estimated on a grid when absent
    FlowConfig flow = FlowConfig::rk45();
    std::uint64_t seed = 0;
    bool record_jump_states = true;
};

struct Trajectory {
    int dimension = 0;
    std::uint64_t seed = 0;
    double t_max = 0.0;
    std::vector<double> jump_times;
    std::vector<int> modes;              // modes[0] initial, modes[k+1] after jump k
    std::vector<double> jump_states;     // row-major, state at each jump time
    std::vector<double> sample_t;
    std::vector<double> sample_x;        // row-major, dimension per sample
    std::vector<int> sample_mode;
    Point final_x;
    int final_mode = 0;
    double rate_bound = 0.0;
    std::size_t candidates = 0;

    std::size_t sample_count() const { return sample_t.size(); }
    std::span<const double> sample(std::size_t k) const {
        return std::span<const double>(sample_x).subspan(k * static_cast<std::size_t>(dimension),
                                                         static_cast<std::size_t>(dimension));
    }
    /// Time between consecutive jumps (and from 0 to the first jump).
    std::vector<double> holding_times() const;
};

/// Lambda-bar = 1.2 max total_rate on a grid of at most 32 points per axis.
double estimate_rate_bound(const RateMatrixField& rm, const CompactDomain& dom);

/// Thinning with a dominating homogeneous Poisson stream of intensity Lambda-bar.
Trajectory simulate(const VectorFieldSet& fs, const RateMatrixField& rm, const CompactDomain& dom, const Point& x0,
                    int mode0, const SimConfig& cfg);

/// Oracle: jump when the integrated hazard along the RK4 flow exceeds an
/// Exp(1) draw; the crossing is located by bisection inside the step.
Trajectory simulate_hazard(const VectorFieldSet& fs, const RateMatrixField& rm, const CompactDomain& dom,
                           const Point& x0, int mode0, const SimConfig& cfg);

/// g(x, i) with an optional gradient; without one, central differences are used.
struct TestFunction {
    std::string name;
    std::function<double(std::span<const double> x, int i)> value;
    std::function<void(std::span<const double> x, int i, std::span<double> grad)> gradient;

    double operator()(std::span<const double> x, int i) const { return value(x, i); }
    void grad(std::span<const double> x, int i, std::span<double> out) const;
};

/// L g(x, i) = <F^i(x), grad g^i(x)> + sum_j a_ij(x) (g^j(x) - g^i(x)).
double generator_apply(const VectorFieldSet& fs, const RateMatrixField& rm, const TestFunction& g,
                       std::span<const double> x, int i);
double generator_apply(const VectorFieldSet& fs, const RateMatrixField& rm, const TestFunction& g, const Point& x,
                       int i);

/// Gamma f(x, i) = sum_j a_ij(x) (f^j(x) - f^i(x))^2.
double carre_du_champ(const RateMatrixField& rm, const TestFunction& f, const Point& x, int i);

}  // namespace pdmpcert
