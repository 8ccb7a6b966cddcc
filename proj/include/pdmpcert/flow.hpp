#pragma once

#include "pdmpcert/domain.hpp"
#include "pdmpcert/fields.hpp"

#include <span>
#include <vector>

namespace pdmpcert {

enum class Integrator { RK4Fixed, RK45Adaptive };

struct FlowConfig {
    Integrator method = Integrator::RK4Fixed;
    double step = 1e-3;        // RK4 step
    double rel_tol = 1e-9;     // RK45
    double abs_tol = 1e-12;    // RK45
    long long max_steps = 200'000'000;

    void validate() const;
    static FlowConfig rk4(double h = 1e-3) { return FlowConfig{Integrator::RK4Fixed, h}; }
    static FlowConfig rk45(double rel = 1e-9, double abs = 1e-12) {
        return FlowConfig{Integrator::RK45Adaptive, 1e-3, rel, abs};
    }
};

/// A switching schedule (i_1, u_1), ..., (i_m, u_m); leg 1 is applied first.
struct SwitchSchedule {
    std::vector<int> indices;
    std::vector<double> durations;

    std::size_t size() const { return indices.size(); }
    double total_duration() const;
    void validate(int field_count) const;
    void append(int index, double duration) {
        indices.push_back(index);
        durations.push_back(duration);
    }
};

/// D_m^s = { v in R_+^m : v_1 + ... + v_m <= s }.
struct TimeSimplex {
    int m = 0;
    double s = 0.0;
    bool contains(std::span<const double> v) const;
};

/// Reusable integrator state for one field set: owns the stage buffers so
/// repeated integration does not allocate. Not thread-safe; one per thread.
class FlowStepper {
public:
    FlowStepper(const VectorFieldSet& fs, FlowConfig cfg);

    /// x <- phi^i_t(x) in place, no chart wrapping.
    void advance(int index, double t, std::span<double> x);
    /// RK4 with exactly `steps` equal steps, regardless of the configured method.
    void advance_rk4_steps(int index, double t, int steps, std::span<double> x);

    const FlowConfig& config() const { return cfg_; }
    long long steps_taken() const { return steps_taken_; }

private:
    void rk4_step(int index, double h, std::span<double> x);
    void rk45(int index, double t, std::span<double> x);
    void rhs(int index, std::span<const double> x, std::span<double> out) const;
    void count_step();

    const VectorFieldSet* fs_;
    FlowConfig cfg_;
    std::vector<double> k_[7];
    std::vector<double> tmp_, y5_;
    long long steps_taken_ = 0;
    double rk45_h_ = 0.0;
};

/// Numerical phi^i_t(x); periodic chart coordinates are wrapped.
Point flow(const VectorFieldSet& fs, int index, double t, const Point& x, const FlowConfig& cfg = {});

/// phi^{i_m}_{u_m} o ... o phi^{i_1}_{u_1}(x).
Point composite(const VectorFieldSet& fs, const SwitchSchedule& sched, const Point& x, const FlowConfig& cfg = {});

/// Jacobian of Psi^s(v, t) = phi^{terminal}_{s - sum v - t} o Phi_v(x) at
/// (v, t) = (sched.durations, 0). Columns ordered (v_1, ..., v_m, t); central
/// differences with step 1e-5 (1 + s), one-sided on the simplex boundary.
/// RK4 step counts are frozen at the nominal durations so the map is smooth
/// in the durations.
Matrix duration_jacobian(const VectorFieldSet& fs, const SwitchSchedule& sched, int terminal_index, double s,
                         const Point& x, const FlowConfig& cfg = {});

struct InvarianceReport {
    double max_excursion = 0.0;
    double slack = 0.0;
    bool passed = true;
    Point worst_start;
    int worst_field = -1;
    std::size_t paths_checked = 0;
};

/// Integrates every field from every grid point over [0, horizon] and
/// records the largest distance outside M seen at any RK4 step.
InvarianceReport invariance_check(const CompactDomain& dom, const VectorFieldSet& fs, double horizon,
                                  const std::vector<int>& resolution, const FlowConfig& cfg = {});

}  // namespace pdmpcert
