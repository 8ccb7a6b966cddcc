#include "pdmpcert/pdmp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace pdmpcert {

RateSpec RateSpec::symmetric(int count, double lambda) {
    if (count < 1) throw ModelError("rate matrix needs at least one mode");
    if (!(lambda >= 0.0)) throw ModelError("switching rate must be nonnegative");
    Matrix a = Matrix::Constant(count, count, lambda);
    a.diagonal().setZero();
    return constant(std::move(a));
}

RateSpec RateSpec::constant(Matrix a) {
    RateSpec s;
    s.kind = Kind::Constant;
    s.amp = Matrix::Zero(a.rows(), a.cols());
    s.base = std::move(a);
    return s;
}

bool irreducible(const Matrix& pattern) {
    const auto n = pattern.rows();
    if (n <= 1) return true;
    auto reaches_all = [&](bool transpose) {
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        std::vector<Eigen::Index> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            auto u = stack.back();
            stack.pop_back();
            for (Eigen::Index v = 0; v < n; ++v) {
                double w = transpose ? pattern(v, u) : pattern(u, v);
                if (u != v && w > 0.0 && !seen[static_cast<std::size_t>(v)]) {
                    seen[static_cast<std::size_t>(v)] = 1;
                    stack.push_back(v);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
    };
    return reaches_all(false) && reaches_all(true);
}

namespace {

void check_constant_matrix(const Matrix& a) {
    if (a.rows() != a.cols() || a.rows() < 1) throw ModelError("rate matrix must be square and nonempty");
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (!std::isfinite(a(i, j))) throw ModelError("rate matrix has a non-finite entry");
            if (i == j && a(i, j) != 0.0) throw ModelError("rate matrix diagonal must be zero");
            if (a(i, j) < 0.0) {
                std::ostringstream msg;
                msg << "negative switching rate a_" << i << j << " = " << a(i, j);
                throw ModelError(msg.str());
            }
        }
    }
    if (!irreducible(a)) throw ModelError("rate matrix is reducible (mode graph not strongly connected)");
}

}  // namespace

RateMatrixField::RateMatrixField(int count, RowFn row, std::string label)
    : count_(count), row_(std::move(row)), label_(std::move(label)) {
    if (count < 1) throw ModelError("rate matrix needs at least one mode");
}

RateMatrixField RateMatrixField::constant(Matrix a) {
    check_constant_matrix(a);
    const int n = static_cast<int>(a.rows());
    RateMatrixField rm(n, [a](int i, std::span<const double>, std::span<double> row) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) row[static_cast<std::size_t>(j)] = a(i, j);
    }, "constant");
    rm.constant_ = a;
    rm.spec_ = RateSpec::constant(a);
    return rm;
}

RateMatrixField RateMatrixField::from_spec(const RateSpec& spec) {
    if (spec.kind == RateSpec::Kind::Constant) return constant(spec.base);
    const Matrix& b = spec.base;
    const Matrix& m = spec.amp;
    if (b.rows() != b.cols() || m.rows() != b.rows() || m.cols() != b.cols()) {
        throw ModelError("sin2 rate base and amp must be square matrices of equal size");
    }
    if (spec.axis < 0) throw ModelError("sin2 rate axis must be nonnegative");
    // base + amp sin^2 ranges over [base + min(amp,0), base + max(amp,0)].
    Matrix lo = b + m.cwiseMin(0.0);
    Matrix hi = b + m.cwiseMax(0.0);
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
        if (b(i, i) != 0.0 || m(i, i) != 0.0) throw ModelError("rate matrix diagonal must be zero");
        for (Eigen::Index j = 0; j < b.cols(); ++j) {
            if (lo(i, j) < 0.0) throw ModelError("sin2 rates become negative");
        }
    }
    if (!irreducible(hi)) throw ModelError("rate matrix is reducible (mode graph not strongly connected)");
    const double w = 2.0 * std::numbers::pi * spec.freq;
    const auto axis = static_cast<std::size_t>(spec.axis);
    RateMatrixField rm(static_cast<int>(b.rows()), [b, m, w, axis](int i, std::span<const double> x, std::span<double> row) {
        if (axis >= x.size()) throw std::out_of_range("sin2 rate axis exceeds the state dimension");
        double s = std::sin(w * x[axis]);
        for (Eigen::Index j = 0; j < b.cols(); ++j) row[static_cast<std::size_t>(j)] = b(i, j) + m(i, j) * s * s;
    }, "sin2");
    rm.spec_ = spec;
    return rm;
}

RateMatrixField RateMatrixField::custom(int count, RowFn row, std::string label) {
    if (!row) throw ModelError("custom rate function is empty");
    return RateMatrixField(count, std::move(row), std::move(label));
}

void RateMatrixField::rates(int i, std::span<const double> x, std::span<double> row) const {
    if (i < 0 || i >= count_) throw std::out_of_range("mode index out of range");
    row_(i, x, row);
    row[static_cast<std::size_t>(i)] = 0.0;
}

double RateMatrixField::rate(int i, int j, const Point& x) const {
    std::vector<double> row(static_cast<std::size_t>(count_));
    rates(i, std::span<const double>(x.data(), x.size()), row);
    if (j < 0 || j >= count_) throw std::out_of_range("mode index out of range");
    return row[static_cast<std::size_t>(j)];
}

double RateMatrixField::total_rate(int i, std::span<const double> x) const {
    double buf[16];
    std::vector<double> heap;
    std::span<double> row;
    if (count_ <= 16) {
        row = std::span<double>(buf, static_cast<std::size_t>(count_));
    } else {
        heap.resize(static_cast<std::size_t>(count_));
        row = heap;
    }
    rates(i, x, row);
    double total = 0.0;
    for (int j = 0; j < count_; ++j) {
        if (j == i) continue;
        double a = row[static_cast<std::size_t>(j)];
        if (a < 0.0) {
            std::ostringstream msg;
            msg << "negative switching rate a_" << i << j << " = " << a;
            throw ModelError(msg.str());
        }
        total += a;
    }
    return total;
}

void RateMatrixField::validate_on(const std::vector<Point>& points) const {
    Matrix pattern = Matrix::Zero(count_, count_);
    std::vector<double> row(static_cast<std::size_t>(count_));
    for (const auto& x : points) {
        for (int i = 0; i < count_; ++i) {
            rates(i, std::span<const double>(x.data(), x.size()), row);
            for (int j = 0; j < count_; ++j) {
                double a = row[static_cast<std::size_t>(j)];
                if (!(a >= 0.0)) throw ModelError("negative or non-finite switching rate on the validation grid");
                pattern(i, j) = std::max(pattern(i, j), a);
            }
        }
    }
    if (!irreducible(pattern)) throw ModelError("rate matrix is reducible on the validation grid");
}

double RateMatrixField::max_total_rate(const std::vector<Point>& points) const {
    double m = 0.0;
    for (const auto& x : points) {
        for (int i = 0; i < count_; ++i) m = std::max(m, total_rate(i, x));
    }
    return m;
}

// ---------------------------------------------------------------------------

std::vector<double> Trajectory::holding_times() const {
    std::vector<double> out;
    out.reserve(jump_times.size());
    double prev = 0.0;
    for (double t : jump_times) {
        out.push_back(t - prev);
        prev = t;
    }
    return out;
}

double estimate_rate_bound(const RateMatrixField& rm, const CompactDomain& dom) {
    if (rm.is_constant()) {
        return 1.2 * rm.max_total_rate({Point::Zero(dom.dimension())});
    }
    int per_axis = 32;
    if (dom.dimension() > 1) per_axis = std::max(2, static_cast<int>(std::pow(32.0, 2.0 / dom.dimension())));
    per_axis = std::min(per_axis, 32);
    std::vector<int> res(static_cast<std::size_t>(dom.dimension()), per_axis);
    return 1.2 * rm.max_total_rate(dom.sample_grid(res));
}

namespace {

void check_start(const VectorFieldSet& fs, const RateMatrixField& rm, const CompactDomain& dom, const Point& x0,
                 int mode0, const SimConfig& cfg) {
    if (fs.count() != rm.count()) throw ModelError("field set and rate matrix have different numbers of modes");
    if (x0.size() != fs.dimension() || dom.dimension() != fs.dimension()) {
        throw std::invalid_argument("initial state dimension mismatch");
    }
    fs.check_index(mode0);
    if (!dom.contains(dom.wrap(x0))) throw std::invalid_argument("initial state is outside the domain");
    if (!(cfg.t_max >= 0.0) || !std::isfinite(cfg.t_max)) throw std::invalid_argument("t_max must be finite and >= 0");
    if (cfg.dt_out < 0.0) throw std::invalid_argument("dt_out must be nonnegative");
}

std::vector<double> merged_sample_times(const SimConfig& cfg) {
    std::vector<double> times;
    if (cfg.dt_out > 0.0) {
        auto n = static_cast<std::size_t>(std::floor(cfg.t_max / cfg.dt_out + 1e-9));
        times.reserve(n + 1 + cfg.sample_times.size());
        for (std::size_t k = 0; k <= n; ++k) times.push_back(std::min(cfg.t_max, static_cast<double>(k) * cfg.dt_out));
    }
    for (double t : cfg.sample_times) {
        if (t < 0.0 || t > cfg.t_max) throw std::invalid_argument("sample time outside [0, t_max]");
        times.push_back(t);
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    return times;
}

struct Recorder {
    Trajectory& tr;
    void sample(double t, const Point& x, int mode) {
        tr.sample_t.push_back(t);
        tr.sample_x.insert(tr.sample_x.end(), x.data(), x.data() + x.size());
        tr.sample_mode.push_back(mode);
    }
    void jump(double t, const Point& x, int to, bool keep_state) {
        tr.jump_times.push_back(t);
        tr.modes.push_back(to);
        if (keep_state) tr.jump_states.insert(tr.jump_states.end(), x.data(), x.data() + x.size());
    }
};

int choose_target(const RateMatrixField& rm, int i, const Point& x, double total, std::mt19937_64& rng) {
    std::vector<double> row(static_cast<std::size_t>(rm.count()));
    rm.rates(i, std::span<const double>(x.data(), x.size()), row);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng) * total;
    int last = -1;
    double acc = 0.0;
    for (int j = 0; j < rm.count(); ++j) {
        if (j == i || row[static_cast<std::size_t>(j)] <= 0.0) continue;
        acc += row[static_cast<std::size_t>(j)];
        last = j;
        if (u < acc) return j;
    }
    if (last < 0) throw NumericalError("jump accepted from a mode with zero total rate");
    return last;
}

}  // namespace

Trajectory simulate(const VectorFieldSet& fs, const RateMatrixField& rm, const CompactDomain& dom, const Point& x0,
                    int mode0, const SimConfig& cfg) {
    check_start(fs, rm, dom, x0, mode0, cfg);
    const double bound = cfg.rate_bound ? *cfg.rate_bound : estimate_rate_bound(rm, dom);
    if (!(bound >= 0.0) || !std::isfinite(bound)) throw std::invalid_argument("rate bound must be finite and >= 0");

    Trajectory tr;
    tr.dimension = fs.dimension();
    tr.seed = cfg.seed;
    tr.t_max = cfg.t_max;
    tr.rate_bound = bound;
    tr.modes.push_back(mode0);
    Recorder rec{tr};

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double inf = std::numeric_limits<double>::infinity();
    auto next_candidate = [&](double from) {
        if (bound <= 0.0) return inf;
        return from + std::exponential_distribution<double>(bound)(rng);
    };

    const auto times = merged_sample_times(cfg);
    FlowStepper stepper(fs, cfg.flow);
    Point x = dom.wrap(x0);
    int mode = mode0;
    double t = 0.0;
    double cand = next_candidate(0.0);
    std::size_t s = 0;
    auto move_to = [&](double target) {
        if (target > t) {
            stepper.advance(mode, target - t, std::span<double>(x.data(), x.size()));
            wrap_chart(fs.chart(), std::span<double>(x.data(), x.size()));
            t = target;
        }
    };
    while (true) {
        double ts = s < times.size() ? times[s] : inf;
        if (ts <= cand && ts <= cfg.t_max) {
            move_to(ts);
            rec.sample(ts, x, mode);
            ++s;
            continue;
        }
        if (cand <= cfg.t_max) {
            move_to(cand);
            ++tr.candidates;
            double r = rm.total_rate(mode, x);
            if (r > bound * (1.0 + 1e-12)) {
                std::ostringstream msg;
                msg.precision(17);
                msg << "rate bound violated: total_rate = " << r << " > bound " << bound << " at t = " << t
                    << ", mode " << mode << ", x = (";
                for (Eigen::Index a = 0; a < x.size(); ++a) msg << (a ? ", " : "") << x[a];
                msg << ")";
                throw NumericalError(msg.str());
            }
            if (unif(rng) * bound < r) {
                mode = choose_target(rm, mode, x, r, rng);
                rec.jump(t, x, mode, cfg.record_jump_states);
            }
            cand = next_candidate(cand);
            continue;
        }
        move_to(cfg.t_max);
        break;
    }
    tr.final_x = x;
    tr.final_mode = mode;
    return tr;
}

Trajectory simulate_hazard(const VectorFieldSet& fs, const RateMatrixField& rm, const CompactDomain& dom,
                           const Point& x0, int mode0, const SimConfig& cfg) {
    check_start(fs, rm, dom, x0, mode0, cfg);
    const int d = fs.dimension();
    const double h = cfg.flow.step;
    if (!(h > 0.0)) throw std::invalid_argument("hazard simulation needs a positive step");

    Trajectory tr;
    tr.dimension = d;
    tr.seed = cfg.seed;
    tr.t_max = cfg.t_max;
    tr.modes.push_back(mode0);
    Recorder rec{tr};
    std::mt19937_64 rng(cfg.seed);
    std::exponential_distribution<double> exp1(1.0);

    const auto times = merged_sample_times(cfg);
    std::vector<double> k1(static_cast<std::size_t>(d + 1)), k2(k1), k3(k1), k4(k1), tmp(k1);
    auto rhs = [&](int mode, const std::vector<double>& z, std::vector<double>& out) {
        std::span<const double> xs(z.data(), static_cast<std::size_t>(d));
        fs.evaluate(mode, xs, std::span<double>(out.data(), static_cast<std::size_t>(d)));
        out[static_cast<std::size_t>(d)] = rm.total_rate(mode, xs);
    };
    auto rk4 = [&](int mode, const std::vector<double>& z, double dt) {
        std::vector<double> y = z;
        const auto n = z.size();
        rhs(mode, z, k1);
        for (std::size_t a = 0; a < n; ++a) tmp[a] = z[a] + 0.5 * dt * k1[a];
        rhs(mode, tmp, k2);
        for (std::size_t a = 0; a < n; ++a) tmp[a] = z[a] + 0.5 * dt * k2[a];
        rhs(mode, tmp, k3);
        for (std::size_t a = 0; a < n; ++a) tmp[a] = z[a] + dt * k3[a];
        rhs(mode, tmp, k4);
        for (std::size_t a = 0; a < n; ++a) y[a] += dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
        return y;
    };

    Point start = dom.wrap(x0);
    std::vector<double> z(start.data(), start.data() + d);
    z.push_back(0.0);  // accumulated hazard
    int mode = mode0;
    double t = 0.0;
    double threshold = exp1(rng);
    std::size_t s = 0;
    auto point_of = [&](const std::vector<double>& v) {
        Point p = Eigen::Map<const Point>(v.data(), d);
        return p;
    };
    while (true) {
        while (s < times.size() && times[s] <= t) {
            rec.sample(times[s], point_of(z), mode);
            ++s;
        }
        if (t >= cfg.t_max) break;
        double stop = cfg.t_max;
        if (s < times.size()) stop = std::min(stop, times[s]);
        double dt = std::min(h, stop - t);
        std::vector<double> y = rk4(mode, z, dt);
        if (y[static_cast<std::size_t>(d)] >= threshold) {
            double lo = 0.0, hi = 1.0;
            for (int it = 0; it < 60 && hi - lo > 1e-14; ++it) {
                double mid = 0.5 * (lo + hi);
                if (rk4(mode, z, mid * dt)[static_cast<std::size_t>(d)] >= threshold) hi = mid; else lo = mid;
            }
            y = rk4(mode, z, hi * dt);
            t += hi * dt;
            wrap_chart(fs.chart(), std::span<double>(y.data(), static_cast<std::size_t>(d)));
            Point xj = point_of(y);
            double r = rm.total_rate(mode, xj);
            mode = choose_target(rm, mode, xj, r, rng);
            rec.jump(t, xj, mode, cfg.record_jump_states);
            z = y;
            z[static_cast<std::size_t>(d)] = 0.0;
            threshold = exp1(rng);
            continue;
        }
        t = (dt == stop - t) ? stop : t + dt;
        z = y;
        wrap_chart(fs.chart(), std::span<double>(z.data(), static_cast<std::size_t>(d)));
    }
    tr.final_x = point_of(z);
    tr.final_mode = mode;
    return tr;
}

// ---------------------------------------------------------------------------

void TestFunction::grad(std::span<const double> x, int i, std::span<double> out) const {
    if (gradient) {
        gradient(x, i, out);
        return;
    }
    double norm = 0.0;
    for (double v : x) norm += v * v;
    const double h = 1e-5 * (1.0 + std::sqrt(norm));
    std::vector<double> xp(x.begin(), x.end());
    for (std::size_t a = 0; a < x.size(); ++a) {
        double keep = xp[a];
        xp[a] = keep + h;
        double fp = value(xp, i);
        xp[a] = keep - h;
        double fm = value(xp, i);
        xp[a] = keep;
        out[a] = (fp - fm) / (2.0 * h);
    }
}

double generator_apply(const VectorFieldSet& fs, const RateMatrixField& rm, const TestFunction& g,
                       std::span<const double> x, int i) {
    const auto d = static_cast<std::size_t>(fs.dimension());
    if (x.size() != d) throw std::invalid_argument("generator_apply: dimension mismatch");
    double fbuf[8], gbuf[8];
    std::vector<double> fheap, gheap;
    std::span<double> f, gr;
    if (d <= 8) {
        f = std::span<double>(fbuf, d);
        gr = std::span<double>(gbuf, d);
    } else {
        fheap.resize(d);
        gheap.resize(d);
        f = fheap;
        gr = gheap;
    }
    fs.evaluate(i, x, f);
    g.grad(x, i, gr);
    double drift = 0.0;
    for (std::size_t a = 0; a < d; ++a) drift += f[a] * gr[a];
    std::vector<double> row(static_cast<std::size_t>(rm.count()));
    rm.rates(i, x, row);
    const double gi = g(x, i);
    double jump = 0.0;
    for (int j = 0; j < rm.count(); ++j) {
        if (j == i || row[static_cast<std::size_t>(j)] == 0.0) continue;
        jump += row[static_cast<std::size_t>(j)] * (g(x, j) - gi);
    }
    return drift + jump;
}

double generator_apply(const VectorFieldSet& fs, const RateMatrixField& rm, const TestFunction& g, const Point& x,
                       int i) {
    return generator_apply(fs, rm, g, std::span<const double>(x.data(), x.size()), i);
}

double carre_du_champ(const RateMatrixField& rm, const TestFunction& f, const Point& x, int i) {
    std::span<const double> xs(x.data(), x.size());
    std::vector<double> row(static_cast<std::size_t>(rm.count()));
    rm.rates(i, xs, row);
    const double fi = f(xs, i);
    double total = 0.0;
    for (int j = 0; j < rm.count(); ++j) {
        if (j == i) continue;
        double diff = f(xs, j) - fi;
        total += row[static_cast<std::size_t>(j)] * diff * diff;
    }
    return total;
}

}  // namespace pdmpcert
