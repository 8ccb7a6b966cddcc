#include "pdmpcert/stats.hpp"

#include "support.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace pdmpcert;
using testing::pt;

namespace {

constexpr double kPi = std::numbers::pi;

EmpiricalMeasure histogram(const std::vector<double>& p) {
    EmpiricalMeasure m;
    m.binning = Binning::for_domain(CompactDomain::unit_box(1), {static_cast<int>(p.size())}, 1);
    m.weights = p;
    m.total = 0.0;
    for (double v : p) m.total += v;
    return m;
}

TestFunction sin_mode() {
    TestFunction g;
    g.name = "sin2pix_1pi";
    g.value = [](std::span<const double> x, int i) { return std::sin(2.0 * kPi * x[0]) * (1.0 + i); };
    g.gradient = [](std::span<const double> x, int i, std::span<double> out) {
        out[0] = 2.0 * kPi * std::cos(2.0 * kPi * x[0]) * (1.0 + i);
        out[1] = 0.0;
    };
    return g;
}

LVParams swapped(const LVParams& p) {
    LVParams q = p;
    for (int e = 0; e < 2; ++e) {
        const auto& c = p.env[static_cast<std::size_t>(e)];
        q.env[static_cast<std::size_t>(e)] = LVCoefficients{c.beta, c.alpha, c.d, c.c, c.b, c.a};
    }
    return q;
}

}  // namespace

TEST_CASE("binning") {
    auto b = Binning::for_domain(CompactDomain::unit_box(2), {4, 2}, 2);
    CHECK(b.size() == 16);
    std::vector<double> lo{0.0, 0.0}, hi{1.0, 1.0}, out{-3.0, 7.0};
    CHECK(b.index(lo, 0) != b.index(hi, 0));
    CHECK(b.index(hi, 1) < b.size());
    CHECK(b.index(out, 1) < b.size());  // clamped
    CHECK(b.index(lo, 0) != b.index(lo, 1));
    CHECK_THROWS(Binning::for_domain(CompactDomain::unit_box(2), {4}, 2));
    CHECK_THROWS(Binning::for_domain(CompactDomain::unit_box(2), {4, 0}, 2));
}

TEST_CASE("tv distance examples") {
    auto p = histogram({0.6, 0.4}), q = histogram({0.4, 0.6});
    CHECK(tv_distance(p, q) == doctest::Approx(0.2));
    CHECK(tv_distance(p, p) == 0.0);
    CHECK(tv_distance(histogram({1.0, 0.0}), histogram({0.0, 3.0})) == 1.0);
    CHECK_THROWS(tv_distance(p, histogram({0.2, 0.3, 0.5})));
}

TEST_CASE("tv distance is a metric on histograms") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto random_hist = [&]() {
        std::vector<double> w(6);
        for (auto& v : w) v = u(rng) < 0.3 ? 0.0 : u(rng);
        w[0] += 1e-3;
        return histogram(w);
    };
    for (int k = 0; k < 300; ++k) {
        auto a = random_hist(), b = random_hist(), c = random_hist();
        const double ab = tv_distance(a, b), bc = tv_distance(b, c), ac = tv_distance(a, c);
        CHECK(ab == doctest::Approx(tv_distance(b, a)).epsilon(1e-15));
        CHECK(ac <= ab + bc + 1e-15);
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        CHECK((ab == 0.0) == (a.probabilities() == b.probabilities()));
    }
}

TEST_CASE("point-cloud measures: two independent samples are close") {
    auto dom = CompactDomain::unit_box(2);
    auto bins = Binning::for_domain(dom, {8, 8}, 1);
    std::mt19937_64 rng(31);
    for (int n : {2000, 20000}) {
        std::vector<double> a, b;
        std::vector<int> ma(static_cast<std::size_t>(n), 0), mb(static_cast<std::size_t>(n), 0);
        for (int k = 0; k < n; ++k) {
            Point x = dom.sample_uniform(rng), y = dom.sample_uniform(rng);
            a.insert(a.end(), {x[0], x[1]});
            b.insert(b.end(), {y[0], y[1]});
        }
        auto m1 = empirical_measure(a, ma, bins), m2 = empirical_measure(b, mb, bins);
        double sum = 0.0;
        for (double v : m1.probabilities()) sum += v;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(tv_distance(m1, m2) < std::sqrt(64.0 / n));
    }
}

TEST_CASE("a single G.A.S. field concentrates the occupation measure") {
    auto fs = VectorFieldSet::from_generic(1, 2, Chart::Cartesian, "sink", [](int, auto x, auto out) {
        out[0] = 0.33 - x[0];
        out[1] = 0.77 - x[1];
    });
    auto rm = RateMatrixField::constant(Matrix::Zero(1, 1));
    auto dom = CompactDomain::unit_box(2);
    SimConfig cfg;
    cfg.t_max = 2000.0;
    cfg.dt_out = 0.05;
    auto tr = simulate(fs, rm, dom, pt({1.0, 0.0}), 0, cfg);
    auto bins = Binning::for_domain(dom, {10, 10}, 1);
    auto m = empirical_measure({tr}, 0.0, bins);
    std::vector<double> sink{0.33, 0.77};
    CHECK(m.probabilities()[bins.index(sink, 0)] >= 0.99);
    CHECK_THROWS(empirical_measure({tr}, 5000.0, bins));
}

TEST_CASE("torus mode marginal under symmetric rates") {
    Model tor = testing::fixture_model("torus.json");
    SimConfig cfg;
    cfg.t_max = 20000.0;
    cfg.dt_out = 0.5;
    cfg.seed = 6;
    auto tr = simulate(tor.fields, tor.rates, tor.domain, pt({0.0, 0.0}), 0, cfg);
    auto m = empirical_measure({tr}, 100.0, Binning::for_domain(tor.domain, {4, 4}, 2));
    auto marg = m.mode_marginal();
    std::vector<double> in0;
    for (std::size_t k = 0; k < tr.sample_count(); ++k) {
        if (tr.sample_t[k] >= 100.0) in0.push_back(tr.sample_mode[k] == 0 ? 1.0 : 0.0);
    }
    auto est = batch_means(in0);
    CHECK(std::abs(marg[0] - 0.5) <= 3.0 * est.se);
    CHECK(marg[0] + marg[1] == doctest::Approx(1.0));
}

TEST_CASE("batch means, linear fit, KS") {
    std::vector<double> c(300, 2.5);
    auto bc = batch_means(c);
    CHECK(bc.mean == 2.5);
    CHECK(bc.se == 0.0);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n01;
    std::vector<double> iid(30000);
    for (auto& v : iid) v = n01(rng);
    auto bi = batch_means(iid);
    CHECK(bi.se == doctest::Approx(1.0 / std::sqrt(30000.0)).epsilon(0.35));

    std::vector<double> x{1, 2, 3, 4}, y{3, 1, -1, -3};
    auto f = linear_fit(x, y);
    CHECK(f.slope == doctest::Approx(-2.0));
    CHECK(f.intercept == doctest::Approx(5.0));
    CHECK(f.r2 == doctest::Approx(1.0));

    std::vector<double> a(2000), b(2000), s(2000);
    for (std::size_t k = 0; k < a.size(); ++k) {
        a[k] = n01(rng);
        b[k] = n01(rng);
        s[k] = n01(rng) + 0.3;
    }
    CHECK(ks_two_sample(a, a).statistic == 0.0);
    CHECK(ks_two_sample(a, b).p_value > 0.001);
    CHECK(ks_two_sample(a, s).p_value < 1e-6);
}

TEST_CASE("tv decay: identical starts stay at the noise floor") {
    Model tor = testing::fixture_model("torus.json");
    TVDecayConfig cfg;
    cfg.times = {1, 2, 3, 4, 5};
    cfg.replicates = 1000;
    cfg.bins = {8, 8};
    cfg.seed = 5;
    auto r = tv_decay(tor.fields, tor.rates, tor.domain, pt({0.0, 0.0}), 0, pt({0.0, 0.0}), 0, cfg);
    CHECK_FALSE(r.gamma_defined);
    CHECK_FALSE(r.flag.empty());
    for (std::size_t k = 0; k < r.times.size(); ++k) CHECK_FALSE(r.in_fit[k]);
}

TEST_CASE("tv decay: bounds, floors, determinism across threads") {
    Model tor = testing::fixture_model("torus.json");
    TVDecayConfig cfg;
    cfg.times = {0.5, 1, 2, 3, 4, 6};
    cfg.replicates = 2000;
    cfg.bins = {8, 8};
    cfg.seed = 9;
    auto a = tv_decay(tor.fields, tor.rates, tor.domain, pt({0.0, 0.0}), 0, pt({0.5, 0.5}), 1, cfg);
    cfg.threads = 3;
    auto b = tv_decay(tor.fields, tor.rates, tor.domain, pt({0.0, 0.0}), 0, pt({0.5, 0.5}), 1, cfg);
    CHECK(a.tv == b.tv);
    CHECK(a.gamma == b.gamma);
    for (double v : a.tv) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(a.floor_sqrt == doctest::Approx(2.0 / std::sqrt(2000.0)));
    CHECK(a.tv.front() > a.tv.back());
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        if (a.in_fit[k]) CHECK(a.tv[k] > std::max(a.floor_sqrt, a.floor_null[k]));
    }

    // four times the replicates roughly halves both floors
    cfg.threads = 1;
    cfg.replicates = 8000;
    auto c = tv_decay(tor.fields, tor.rates, tor.domain, pt({0.0, 0.0}), 0, pt({0.5, 0.5}), 1, cfg);
    CHECK(a.floor_sqrt / c.floor_sqrt == doctest::Approx(2.0));
    double na = 0.0, nc = 0.0;
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        na += a.floor_null[k];
        nc += c.floor_null[k];
    }
    CHECK(na / nc > 1.4);
    CHECK(na / nc < 2.8);
}

TEST_CASE("stationarity: constants vanish and long runs are centred") {
    Model tor = testing::fixture_model("torus.json");
    SimConfig cfg;
    cfg.t_max = 4000.0;
    cfg.dt_out = 0.01;
    cfg.seed = 21;
    auto tr = simulate(tor.fields, tor.rates, tor.domain, pt({0.25, 0.0}), 0, cfg);
    TestFunction one;
    one.name = "one";
    one.value = [](std::span<const double>, int) { return 1.0; };
    one.gradient = [](std::span<const double>, int, std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); };
    auto res = stationarity_residual(tor.fields, tor.rates, tr, 100.0, {one, sin_mode()});
    REQUIRE(res.size() == 2);
    CHECK(res[0].residual == 0.0);
    CHECK(res[0].se == 0.0);
    CHECK(std::abs(res[1].residual) <= 3.0 * res[1].se);
    CHECK(res[1].name == "sin2pix_1pi");
}

TEST_CASE("stationarity: standard errors scale like 1/sqrt(T)") {
    Model tor = testing::fixture_model("torus.json");
    SimConfig cfg;
    cfg.dt_out = 0.01;
    cfg.seed = 22;
    cfg.t_max = 1100.0;
    auto shorter = simulate(tor.fields, tor.rates, tor.domain, pt({0.25, 0.0}), 0, cfg);
    cfg.t_max = 4100.0;
    auto longer = simulate(tor.fields, tor.rates, tor.domain, pt({0.25, 0.0}), 0, cfg);
    auto a = stationarity_residual(tor.fields, tor.rates, shorter, 100.0, {sin_mode()})[0];
    auto b = stationarity_residual(tor.fields, tor.rates, longer, 100.0, {sin_mode()})[0];
    CHECK(a.se / b.se > 1.3);
    CHECK(a.se / b.se < 3.0);
}

TEST_CASE("stationarity negative control: a wrong generator is detected") {
    Model tor = testing::fixture_model("torus.json");
    SimConfig cfg;
    cfg.t_max = 4000.0;
    cfg.dt_out = 0.01;
    cfg.seed = 23;
    auto tr = simulate(tor.fields, tor.rates, tor.domain, pt({0.25, 0.0}), 0, cfg);
    TestFunction mode;
    mode.name = "mode_sin";
    mode.value = [](std::span<const double> x, int i) { return i * (1.5 + std::sin(2.0 * kPi * x[0])); };
    auto right = stationarity_residual(tor.fields, tor.rates, tr, 100.0, {mode})[0];
    CHECK(std::abs(right.residual) <= 3.0 * right.se);
    // rates a01 = 3, a10 = 1 instead of 1, 1: the average of L g shifts by about 1.5
    Matrix a = Matrix::Zero(2, 2);
    a(0, 1) = 3.0;
    a(1, 0) = 1.0;
    auto wrong = stationarity_residual(tor.fields, RateMatrixField::constant(a), tr, 100.0, {mode})[0];
    CHECK(std::abs(wrong.residual) > 10.0 * wrong.se);
    CHECK(wrong.residual == doctest::Approx(1.5).epsilon(0.1));
}

TEST_CASE("invasion rates: degenerate and single-environment cases") {
    LVParams p;
    p.env[0] = {1.0, 0.7, 2.0, 0.5, 2.0, 1.0};
    p.env[1] = {1.5, 1.2, 2.0, 0.8, 2.0, 1.3};
    auto rm = RateMatrixField::symmetric(2, 1.0);
    InvasionConfig cfg;
    cfg.t_max = 500.0;
    cfg.burn_in = 50.0;
    auto zero = invasion_rate_y(p, rm, cfg);
    CHECK(std::abs(zero.value) < 1e-6);
    CHECK(zero.face == Face::Y);

    LVParams same;
    same.env[0] = {1.2, 0.9, 1.5, 0.6, 0.8, 1.1};
    same.env[1] = same.env[0];
    auto ly = invasion_rate_y(same, rm, cfg);
    CHECK(ly.value == doctest::Approx(0.9 * (1.0 - 0.8 / 1.5)).epsilon(1e-6));
    auto lx = invasion_rate_x(same, rm, cfg);
    CHECK(lx.value == doctest::Approx(1.2 * (1.0 - 0.6 / 1.1)).epsilon(1e-6));
}

TEST_CASE("invasion rates are symmetric under the species swap") {
    Model m = testing::fixture_model("lv.json");
    const auto& p = std::get<LVParams>(m.params);
    InvasionConfig cfg;
    cfg.t_max = 3000.0;
    cfg.burn_in = 100.0;
    cfg.seed = 17;
    auto ly = invasion_rate_y(p, m.rates, cfg);
    auto lx_swapped = invasion_rate_x(swapped(p), m.rates, cfg);
    CHECK(ly.value == doctest::Approx(lx_swapped.value).epsilon(1e-9));
    CHECK(ly.se == doctest::Approx(lx_swapped.se).epsilon(1e-6));
    auto lx = invasion_rate_x(p, m.rates, cfg);
    auto ly_swapped = invasion_rate_y(swapped(p), m.rates, cfg);
    CHECK(lx.value == doctest::Approx(ly_swapped.value).epsilon(1e-9));
    CHECK(lx.value > 3.0 * lx.se);
    CHECK(ly.value > 3.0 * ly.se);
}

TEST_CASE("boundary occupation") {
    Model m = testing::fixture_model("lv.json");
    auto dist = [&](const Point& x) { return m.extinction_distance(x); };
    SimConfig cfg;
    cfg.t_max = 300.0;
    cfg.dt_out = 0.05;
    cfg.seed = 2;
    auto face = simulate(m.fields, m.rates, m.domain, pt({1.0, 0.0}), 0, cfg);
    CHECK(boundary_occupation(face, 10.0, dist, 0.01) == 1.0);
    auto inner = simulate(m.fields, m.rates, m.domain, pt({0.5, 0.5}), 0, cfg);
    CHECK(boundary_occupation(inner, 10.0, dist, m.domain.diameter()) == 1.0);
    CHECK(boundary_occupation(inner, 10.0, dist, 0.01) < 0.2);
}
