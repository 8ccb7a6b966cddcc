#include "pdmpcert/flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pdmpcert {

void FlowConfig::validate() const {
    if (!(step > 0.0)) throw std::invalid_argument("flow step must be positive");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw std::invalid_argument("flow tolerances must be positive");
    if (max_steps < 1) throw std::invalid_argument("max_steps must be positive");
}

double SwitchSchedule::total_duration() const {
    double s = 0.0;
    for (double u : durations) s += u;
    return s;
}

void SwitchSchedule::validate(int field_count) const {
    if (indices.size() != durations.size()) throw std::invalid_argument("schedule indices and durations differ in length");
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] < 0 || indices[k] >= field_count) throw std::out_of_range("schedule field index out of range");
        if (!(durations[k] >= 0.0) || !std::isfinite(durations[k])) {
            throw std::invalid_argument("schedule durations must be finite and nonnegative");
        }
    }
}

bool TimeSimplex::contains(std::span<const double> v) const {
    if (v.size() != static_cast<std::size_t>(m)) return false;
    double total = 0.0;
    for (double x : v) {
        if (x < 0.0) return false;
        total += x;
    }
    return total <= s;
}

// ---------------------------------------------------------------------------

FlowStepper::FlowStepper(const VectorFieldSet& fs, FlowConfig cfg) : fs_(&fs), cfg_(cfg) {
    cfg_.validate();
    const auto d = static_cast<std::size_t>(fs.dimension());
    for (auto& k : k_) k.assign(d, 0.0);
    tmp_.assign(d, 0.0);
    y5_.assign(d, 0.0);
}

void FlowStepper::rhs(int index, std::span<const double> x, std::span<double> out) const {
    fs_->evaluate(index, x, out);
}

void FlowStepper::count_step() {
    if (++steps_taken_ > cfg_.max_steps) {
        std::ostringstream msg;
        msg << "integrator exceeded max_steps = " << cfg_.max_steps;
        throw NumericalError(msg.str());
    }
}

void FlowStepper::rk4_step(int index, double h, std::span<double> x) {
    const std::size_t d = x.size();
    rhs(index, x, k_[0]);
    for (std::size_t a = 0; a < d; ++a) tmp_[a] = x[a] + 0.5 * h * k_[0][a];
    rhs(index, tmp_, k_[1]);
    for (std::size_t a = 0; a < d; ++a) tmp_[a] = x[a] + 0.5 * h * k_[1][a];
    rhs(index, tmp_, k_[2]);
    for (std::size_t a = 0; a < d; ++a) tmp_[a] = x[a] + h * k_[2][a];
    rhs(index, tmp_, k_[3]);
    for (std::size_t a = 0; a < d; ++a) {
        x[a] += h / 6.0 * (k_[0][a] + 2.0 * k_[1][a] + 2.0 * k_[2][a] + k_[3][a]);
    }
    count_step();
}

void FlowStepper::advance_rk4_steps(int index, double t, int steps, std::span<double> x) {
    if (t < 0.0) throw std::invalid_argument("flow time must be nonnegative");
    if (t == 0.0 || steps <= 0) return;
    const double h = t / steps;
    for (int s = 0; s < steps; ++s) rk4_step(index, h, x);
}

void FlowStepper::advance(int index, double t, std::span<double> x) {
    fs_->check_index(index);
    if (t < 0.0 || !std::isfinite(t)) throw std::invalid_argument("flow time must be finite and nonnegative");
    if (t == 0.0) return;
    if (cfg_.method == Integrator::RK4Fixed) {
        const double n = std::ceil(t / cfg_.step - 1e-9);
        advance_rk4_steps(index, t, static_cast<int>(std::max(1.0, n)), x);
    } else {
        rk45(index, t, x);
    }
}

// Dormand-Prince 5(4) with standard step-size control.
void FlowStepper::rk45(int index, double t, std::span<double> x) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    (void)c2; (void)c3; (void)c4; (void)c5;

    const std::size_t d = x.size();
    double elapsed = 0.0;
    double h = rk45_h_ > 0.0 ? rk45_h_ : std::min(t, 0.05);
    rhs(index, x, k_[0]);
    while (elapsed < t) {
        h = std::min(h, t - elapsed);
        for (std::size_t a = 0; a < d; ++a) tmp_[a] = x[a] + h * a21 * k_[0][a];
        rhs(index, tmp_, k_[1]);
        for (std::size_t a = 0; a < d; ++a) tmp_[a] = x[a] + h * (a31 * k_[0][a] + a32 * k_[1][a]);
        rhs(index, tmp_, k_[2]);
        for (std::size_t a = 0; a < d; ++a) tmp_[a] = x[a] + h * (a41 * k_[0][a] + a42 * k_[1][a] + a43 * k_[2][a]);
        rhs(index, tmp_, k_[3]);
        for (std::size_t a = 0; a < d; ++a) {
            tmp_[a] = x[a] + h * (a51 * k_[0][a] + a52 * k_[1][a] + a53 * k_[2][a] + a54 * k_[3][a]);
        }
        rhs(index, tmp_, k_[4]);
        for (std::size_t a = 0; a < d; ++a) {
            tmp_[a] = x[a] + h * (a61 * k_[0][a] + a62 * k_[1][a] + a63 * k_[2][a] + a64 * k_[3][a] + a65 * k_[4][a]);
        }
        rhs(index, tmp_, k_[5]);
        for (std::size_t a = 0; a < d; ++a) {
            y5_[a] = x[a] + h * (b1 * k_[0][a] + b3 * k_[2][a] + b4 * k_[3][a] + b5 * k_[4][a] + b6 * k_[5][a]);
        }
        rhs(index, y5_, k_[6]);
        double err = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
            double ea = h * (e1 * k_[0][a] + e3 * k_[2][a] + e4 * k_[3][a] + e5 * k_[4][a] + e6 * k_[5][a] +
                             e7 * k_[6][a]);
            double sc = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(x[a]), std::abs(y5_[a]));
            err = std::max(err, std::abs(ea) / sc);
        }
        count_step();
        if (!std::isfinite(err)) throw NumericalError("rk45: non-finite error estimate");
        if (err <= 1.0) {
            elapsed = (h >= t - elapsed) ? t : elapsed + h;
            for (std::size_t a = 0; a < d; ++a) x[a] = y5_[a];
            std::swap(k_[0], k_[6]);  // first-same-as-last
            double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            rk45_h_ = h * fac;
            h = rk45_h_;
        } else {
            h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
            if (h < 1e-14) throw NumericalError("rk45: step size underflow");
        }
    }
}

// ---------------------------------------------------------------------------

Point flow(const VectorFieldSet& fs, int index, double t, const Point& x, const FlowConfig& cfg) {
    if (x.size() != fs.dimension()) throw std::invalid_argument("point dimension does not match the field set");
    FlowStepper stepper(fs, cfg);
    Point y = x;
    stepper.advance(index, t, std::span<double>(y.data(), y.size()));
    wrap_chart(fs.chart(), std::span<double>(y.data(), y.size()));
    return y;
}

Point composite(const VectorFieldSet& fs, const SwitchSchedule& sched, const Point& x, const FlowConfig& cfg) {
    sched.validate(fs.count());
    if (x.size() != fs.dimension()) throw std::invalid_argument("point dimension does not match the field set");
    FlowStepper stepper(fs, cfg);
    Point y = x;
    for (std::size_t k = 0; k < sched.size(); ++k) {
        stepper.advance(sched.indices[k], sched.durations[k], std::span<double>(y.data(), y.size()));
        wrap_chart(fs.chart(), std::span<double>(y.data(), y.size()));
    }
    return y;
}

Matrix duration_jacobian(const VectorFieldSet& fs, const SwitchSchedule& sched, int terminal_index, double s,
                         const Point& x, const FlowConfig& cfg) {
    sched.validate(fs.count());
    fs.check_index(terminal_index);
    const double used = sched.total_duration();
    if (!(used < s)) throw std::invalid_argument("duration_jacobian: durations must sum to less than s");

    const int m = static_cast<int>(sched.size());
    const double h = 1e-5 * (1.0 + s);
    const bool fixed = cfg.method == Integrator::RK4Fixed;

    // Step counts frozen at the nominal point.
    std::vector<int> steps(static_cast<std::size_t>(m + 1));
    auto count_for = [&](double u) { return std::max(1, static_cast<int>(std::ceil(u / cfg.step - 1e-9))); };
    for (int k = 0; k < m; ++k) steps[static_cast<std::size_t>(k)] = count_for(sched.durations[static_cast<std::size_t>(k)]);
    steps[static_cast<std::size_t>(m)] = count_for(s - used);

    FlowStepper stepper(fs, cfg);
    auto psi = [&](const std::vector<double>& v, double t) {
        Point y = x;
        std::span<double> ys(y.data(), y.size());
        double sum = 0.0;
        for (int k = 0; k < m; ++k) {
            auto kk = static_cast<std::size_t>(k);
            sum += v[kk];
            if (fixed) {
                stepper.advance_rk4_steps(sched.indices[kk], v[kk], steps[kk], ys);
            } else {
                stepper.advance(sched.indices[kk], v[kk], ys);
            }
        }
        double last = std::max(0.0, s - sum - t);
        if (fixed) {
            stepper.advance_rk4_steps(terminal_index, last, steps[static_cast<std::size_t>(m)], ys);
        } else {
            stepper.advance(terminal_index, last, ys);
        }
        wrap_chart(fs.chart(), ys);
        return y;
    };

    const double slack = s - used;
    Matrix jac(fs.dimension(), m + 1);
    const std::vector<double> u = sched.durations;
    auto column = [&](int k) -> Point {
        // k == m is the slack variable t, which sits at 0.
        const double base = k < m ? u[static_cast<std::size_t>(k)] : 0.0;
        const bool up = slack >= h;
        const bool down = base >= h;
        auto eval_at = [&](double delta) {
            std::vector<double> v = u;
            double t = 0.0;
            if (k < m) {
                v[static_cast<std::size_t>(k)] += delta;
            } else {
                t += delta;
            }
            return psi(v, t);
        };
        if (up && down) return chart_difference(fs.chart(), eval_at(h), eval_at(-h)) / (2.0 * h);
        if (up) return chart_difference(fs.chart(), eval_at(h), eval_at(0.0)) / h;
        if (down) return chart_difference(fs.chart(), eval_at(0.0), eval_at(-h)) / h;
        // Degenerate: neither side fits a full step; use the one with room.
        const double hs = std::max(slack, base);
        if (hs <= 0.0) return Point::Zero(fs.dimension());
        if (slack >= base) return chart_difference(fs.chart(), eval_at(hs), eval_at(0.0)) / hs;
        return chart_difference(fs.chart(), eval_at(0.0), eval_at(-hs)) / hs;
    };
    for (int k = 0; k <= m; ++k) jac.col(k) = column(k);
    return jac;
}

InvarianceReport invariance_check(const CompactDomain& dom, const VectorFieldSet& fs, double horizon,
                                  const std::vector<int>& resolution, const FlowConfig& cfg) {
    if (dom.dimension() != fs.dimension()) throw std::invalid_argument("domain and field set dimensions differ");
    InvarianceReport report;
    report.slack = 1e-6 * dom.diameter();
    report.worst_start = Point::Zero(dom.dimension());
    const auto grid = dom.sample_grid(resolution);
    FlowConfig fixed = cfg;
    fixed.method = Integrator::RK4Fixed;
    FlowStepper stepper(fs, fixed);
    const int steps = std::max(1, static_cast<int>(std::ceil(horizon / fixed.step)));
    const double h = horizon / steps;
    for (const Point& start : grid) {
        for (int i = 0; i < fs.count(); ++i) {
            Point y = start;
            std::span<double> ys(y.data(), y.size());
            double worst = 0.0;
            for (int s = 0; s < steps; ++s) {
                stepper.advance_rk4_steps(i, h, 1, ys);
                worst = std::max(worst, dom.excursion(dom.wrap(y)));
                if (!y.allFinite()) {
                    worst = std::numeric_limits<double>::infinity();
                    break;
                }
            }
            ++report.paths_checked;
            if (worst > report.max_excursion) {
                report.max_excursion = worst;
                report.worst_start = start;
                report.worst_field = i;
            }
        }
    }
    report.passed = report.max_excursion <= report.slack;
    return report;
}

}  // namespace pdmpcert
