#include "pdmpcert/stats.hpp"

#include "pdmpcert/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace pdmpcert {

Binning Binning::for_domain(const CompactDomain& dom, std::vector<int> bins, int modes) {
    if (static_cast<int>(bins.size()) != dom.dimension()) throw std::invalid_argument("one bin count per axis required");
    for (int b : bins) {
        if (b < 1) throw std::invalid_argument("bin counts must be positive");
    }
    if (modes < 1) throw std::invalid_argument("binning needs at least one mode");
    Binning out;
    out.lower = dom.chart_lower();
    out.upper = dom.chart_upper();
    out.bins = std::move(bins);
    out.modes = modes;
    return out;
}

std::size_t Binning::size() const {
    std::size_t n = static_cast<std::size_t>(modes);
    for (int b : bins) n *= static_cast<std::size_t>(b);
    return n;
}

std::size_t Binning::index(std::span<const double> x, int mode) const {
    if (x.size() != bins.size()) throw std::invalid_argument("binning dimension mismatch");
    if (mode < 0 || mode >= modes) throw std::out_of_range("mode outside binning");
    std::size_t idx = static_cast<std::size_t>(mode);
    for (std::size_t a = 0; a < bins.size(); ++a) {
        double u = (x[a] - lower[a]) / (upper[a] - lower[a]);
        auto k = static_cast<long>(std::floor(u * bins[a]));
        k = std::clamp(k, 0L, static_cast<long>(bins[a] - 1));
        idx = idx * static_cast<std::size_t>(bins[a]) + static_cast<std::size_t>(k);
    }
    return idx;
}

std::vector<double> EmpiricalMeasure::probabilities() const {
    std::vector<double> p(weights.size(), 0.0);
    if (total <= 0.0) return p;
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = weights[k] / total;
    return p;
}

std::vector<double> EmpiricalMeasure::mode_marginal() const {
    std::vector<double> m(static_cast<std::size_t>(binning.modes), 0.0);
    const std::size_t per_mode = weights.size() / m.size();
    for (std::size_t k = 0; k < weights.size(); ++k) m[k / per_mode] += weights[k];
    for (double& v : m) v = total > 0.0 ? v / total : 0.0;
    return m;
}

EmpiricalMeasure empirical_measure(const std::vector<Trajectory>& trajectories, double burn_in, const Binning& binning) {
    EmpiricalMeasure m;
    m.binning = binning;
    m.burn_in = burn_in;
    m.weights.assign(binning.size(), 0.0);
    for (const auto& tr : trajectories) {
        if (burn_in >= tr.t_max && tr.t_max > 0.0) throw std::invalid_argument("burn_in must be smaller than t_max");
        const std::size_t n = tr.sample_count();
        for (std::size_t k = 0; k < n; ++k) {
            if (tr.sample_t[k] < burn_in) continue;
            double w;
            if (k + 1 < n) {
                w = tr.sample_t[k + 1] - tr.sample_t[k];
            } else {
                w = k > 0 ? tr.sample_t[k] - tr.sample_t[k - 1] : 1.0;
            }
            m.weights[binning.index(tr.sample(k), tr.sample_mode[k])] += w;
            m.total += w;
        }
    }
    if (m.total <= 0.0) throw std::invalid_argument("no samples after burn-in");
    return m;
}

EmpiricalMeasure empirical_measure(std::span<const double> points, std::span<const int> modes, const Binning& binning) {
    const std::size_t d = binning.bins.size();
    if (points.size() != modes.size() * d) throw std::invalid_argument("point and mode counts differ");
    EmpiricalMeasure m;
    m.binning = binning;
    m.weights.assign(binning.size(), 0.0);
    for (std::size_t k = 0; k < modes.size(); ++k) {
        m.weights[binning.index(points.subspan(k * d, d), modes[k])] += 1.0;
    }
    m.total = static_cast<double>(modes.size());
    if (m.total <= 0.0) throw std::invalid_argument("empty point cloud");
    return m;
}

double tv_distance(const EmpiricalMeasure& m1, const EmpiricalMeasure& m2) {
    if (!(m1.binning == m2.binning)) throw std::invalid_argument("tv_distance: binning mismatch");
    auto p = m1.probabilities();
    auto q = m2.probabilities();
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) s += std::abs(p[k] - q[k]);
    return std::clamp(0.5 * s, 0.0, 1.0);
}

MeanSE batch_means(std::span<const double> values, int batches) {
    MeanSE out;
    out.n = values.size();
    if (values.empty()) return out;
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (batches < 2 || values.size() < static_cast<std::size_t>(batches)) {
        batches = std::max(1, static_cast<int>(std::min<std::size_t>(values.size(), 2)));
    }
    const std::size_t per = values.size() / static_cast<std::size_t>(batches);
    if (batches < 2 || per == 0) return out;
    std::vector<double> bm(static_cast<std::size_t>(batches));
    for (int b = 0; b < batches; ++b) {
        auto first = values.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(b) * per);
        bm[static_cast<std::size_t>(b)] = std::accumulate(first, first + static_cast<std::ptrdiff_t>(per), 0.0) / per;
    }
    double mb = std::accumulate(bm.begin(), bm.end(), 0.0) / batches;
    double ss = 0.0;
    for (double v : bm) ss += (v - mb) * (v - mb);
    out.se = std::sqrt(ss / (batches - 1) / batches);
    return out;
}

KSResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("KS test needs two nonempty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double dmax = 0.0;
    while (i < a.size() && j < b.size()) {
        double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        dmax = std::max(dmax, std::abs(i / na - j / nb));
    }
    KSResult r;
    r.statistic = dmax;
    const double en = std::sqrt(na * nb / (na + nb));
    const double lambda = (en + 0.12 + 0.11 / en) * dmax;
    double sum = 0.0;
    if (lambda < 1e-3) {
        r.p_value = 1.0;
        return r;
    }
    for (int k = 1; k <= 200; ++k) {
        double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-16) break;
    }
    r.p_value = std::clamp(sum, 0.0, 1.0);
    return r;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    LinearFit f;
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) return f;
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
        syy += (y[k] - my) * (y[k] - my);
    }
    if (sxx <= 0.0) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

TVDecayReport tv_decay(const VectorFieldSet& fs, const RateMatrixField& rm, const CompactDomain& dom,
                       const Point& xa, int mode_a, const Point& xb, int mode_b, const TVDecayConfig& cfg) {
    if (cfg.times.empty()) throw std::invalid_argument("tv_decay needs at least one time");
    if (cfg.replicates < 1) throw std::invalid_argument("tv_decay needs at least one replicate");
    std::vector<double> times = cfg.times;
    if (!std::is_sorted(times.begin(), times.end())) throw std::invalid_argument("tv_decay times must be sorted");
    const auto nt = times.size();
    const auto R = static_cast<std::size_t>(cfg.replicates);
    const Binning binning = Binning::for_domain(dom, cfg.bins, fs.count());

    SimConfig sim;
    sim.t_max = times.back();
    sim.dt_out = 0.0;
    sim.sample_times = times;
    sim.flow = cfg.flow;
    sim.rate_bound = estimate_rate_bound(rm, dom);
    sim.record_jump_states = false;

    // cell[start][time * R + replicate]
    std::vector<std::uint32_t> cells[2];
    cells[0].resize(nt * R);
    cells[1].resize(nt * R);
    parallel_for(2 * R, cfg.threads, [&](std::size_t job) {
        const std::size_t start = job % 2, rep = job / 2;
        SimConfig c = sim;
        c.seed = derive_seed(cfg.seed, job);
        Trajectory tr = simulate(fs, rm, dom, start == 0 ? xa : xb, start == 0 ? mode_a : mode_b, c);
        if (tr.sample_count() != nt) throw NumericalError("tv_decay: unexpected sample count");
        for (std::size_t k = 0; k < nt; ++k) {
            cells[start][k * R + rep] = static_cast<std::uint32_t>(binning.index(tr.sample(k), tr.sample_mode[k]));
        }
    });

    TVDecayReport rep;
    rep.times = times;
    rep.bins = cfg.bins;
    rep.replicates = cfg.replicates;
    rep.floor_sqrt = 2.0 / std::sqrt(static_cast<double>(R));
    const std::size_t nb = binning.size();
    std::vector<double> ca(nb), cb(nb);
    std::vector<std::uint32_t> pooled(2 * R);
    std::mt19937_64 rng(derive_seed(cfg.seed, 0xfeedULL));
    for (std::size_t k = 0; k < nt; ++k) {
        auto tv_of = [&](const std::uint32_t* a, const std::uint32_t* b) {
            std::fill(ca.begin(), ca.end(), 0.0);
            std::fill(cb.begin(), cb.end(), 0.0);
            for (std::size_t r = 0; r < R; ++r) {
                ca[a[r]] += 1.0;
                cb[b[r]] += 1.0;
            }
            double s = 0.0;
            for (std::size_t q = 0; q < nb; ++q) s += std::abs(ca[q] - cb[q]);
            return 0.5 * s / static_cast<double>(R);
        };
        const std::uint32_t* a = cells[0].data() + k * R;
        const std::uint32_t* b = cells[1].data() + k * R;
        rep.tv.push_back(tv_of(a, b));
        // Null distribution: random equal splits of the pooled sample.
        std::copy(a, a + R, pooled.begin());
        std::copy(b, b + R, pooled.begin() + static_cast<std::ptrdiff_t>(R));
        double s1 = 0.0, s2 = 0.0;
        const int P = std::max(2, cfg.permutations);
        for (int p = 0; p < P; ++p) {
            std::shuffle(pooled.begin(), pooled.end(), rng);
            double v = tv_of(pooled.data(), pooled.data() + R);
            s1 += v;
            s2 += v * v;
        }
        double mean = s1 / P;
        double sd = std::sqrt(std::max(0.0, s2 / P - mean * mean) * P / (P - 1));
        rep.floor_null.push_back(mean + 3.0 * sd);
    }

    std::vector<double> fx, fy;
    for (std::size_t k = 0; k < nt; ++k) {
        bool ok = rep.tv[k] > std::max(rep.floor_sqrt, rep.floor_null[k]);
        rep.in_fit.push_back(ok);
        if (ok) {
            fx.push_back(times[k]);
            fy.push_back(std::log(rep.tv[k]));
        }
    }
    if (static_cast<int>(fx.size()) < std::max(2, cfg.min_fit_points)) {
        rep.flag = "too few times above the noise floor (" + std::to_string(fx.size()) + ")";
        return rep;
    }
    LinearFit f = linear_fit(fx, fy);
    rep.gamma = -f.slope;
    rep.intercept = f.intercept;
    rep.r2 = f.r2;
    rep.gamma_defined = true;
    if (rep.gamma <= 0.0) rep.flag = "no decay in the fit window";
    return rep;
}

std::vector<StationarityResult> stationarity_residual(const VectorFieldSet& fs, const RateMatrixField& rm,
                                                      const Trajectory& tr, double burn_in,
                                                      const std::vector<TestFunction>& tests, int batches) {
    std::vector<StationarityResult> out;
    std::vector<double> values;
    values.reserve(tr.sample_count());
    for (const auto& g : tests) {
        values.clear();
        for (std::size_t k = 0; k < tr.sample_count(); ++k) {
            if (tr.sample_t[k] < burn_in) continue;
            values.push_back(generator_apply(fs, rm, g, tr.sample(k), tr.sample_mode[k]));
        }
        if (values.empty()) throw std::invalid_argument("no samples after burn-in");
        MeanSE m = batch_means(values, batches);
        out.push_back({g.name, m.mean, m.se, m.n});
    }
    return out;
}

InvasionEstimate invasion_rate(const LVParams& lv, const RateMatrixField& rm, Face face, const InvasionConfig& cfg) {
    lv.validate();
    if (!(cfg.t_max > cfg.burn_in)) throw std::invalid_argument("t_max must exceed burn_in");
    if (rm.count() != 2) throw ModelError("Lotka-Volterra rates need two modes");
    auto env = lv.env;
    const bool on_y0 = face == Face::Y;
    // Logistic motion along the face.
    auto fs = VectorFieldSet::from_generic(2, 1, Chart::Cartesian, on_y0 ? "lv-face-y0" : "lv-face-x0",
                                           [env, on_y0](int i, auto x, auto out) {
        const auto& e = env[static_cast<std::size_t>(i)];
        if (on_y0) {
            out[0] = e.alpha * x[0] * (1.0 - e.a * x[0]);
        } else {
            out[0] = e.beta * x[0] * (1.0 - e.d * x[0]);
        }
    });
    auto face_rates = RateMatrixField::custom(2, [rm, on_y0](int i, std::span<const double> x, std::span<double> row) {
        double pt[2] = {on_y0 ? x[0] : 0.0, on_y0 ? 0.0 : x[0]};
        rm.rates(i, std::span<const double>(pt, 2), row);
    }, "face");
    auto dom = CompactDomain::box({lv.eta}, {1.0 / lv.eta});
    SimConfig sim;
    sim.t_max = cfg.t_max;
    sim.dt_out = cfg.dt_out;
    sim.flow = cfg.flow;
    sim.seed = cfg.seed;
    sim.record_jump_states = false;
    sim.rate_bound = estimate_rate_bound(face_rates, dom);
    Point x0(1);
    x0 << (on_y0 ? 1.0 / env[0].a : 1.0 / env[0].d);
    Trajectory tr = simulate(fs, face_rates, dom, x0, 0, sim);
    double lo = lv.eta - 1e-9, hi = 1.0 / lv.eta + 1e-9;
    std::vector<double> values;
    values.reserve(tr.sample_count());
    for (std::size_t k = 0; k < tr.sample_count(); ++k) {
        double z = tr.sample(k)[0];
        if (!(z >= lo && z <= hi)) throw NumericalError("boundary dynamics left the face segment");
        if (tr.sample_t[k] < cfg.burn_in) continue;
        const auto& e = env[static_cast<std::size_t>(tr.sample_mode[k])];
        values.push_back(on_y0 ? e.beta * (1.0 - e.c * z) : e.alpha * (1.0 - e.b * z));
    }
    MeanSE m = batch_means(values, 30);
    InvasionEstimate est;
    est.face = face;
    est.value = m.mean;
    est.se = m.se;
    est.t_max = cfg.t_max;
    est.burn_in = cfg.burn_in;
    est.samples = m.n;
    return est;
}

InvasionEstimate invasion_rate_y(const LVParams& lv, const RateMatrixField& rm, const InvasionConfig& cfg) {
    return invasion_rate(lv, rm, Face::Y, cfg);
}

InvasionEstimate invasion_rate_x(const LVParams& lv, const RateMatrixField& rm, const InvasionConfig& cfg) {
    return invasion_rate(lv, rm, Face::X, cfg);
}

double boundary_occupation(const Trajectory& tr, double burn_in, const std::function<double(const Point&)>& distance,
                           double delta0) {
    std::size_t total = 0, near = 0;
    Point x(tr.dimension);
    for (std::size_t k = 0; k < tr.sample_count(); ++k) {
        if (tr.sample_t[k] < burn_in) continue;
        auto s = tr.sample(k);
        for (int a = 0; a < tr.dimension; ++a) x[a] = s[static_cast<std::size_t>(a)];
        ++total;
        if (distance(x) <= delta0) ++near;
    }
    if (total == 0) throw std::invalid_argument("no samples after burn-in");
    return static_cast<double>(near) / static_cast<double>(total);
}

}  // namespace pdmpcert
