#include "pdmpcert/flow.hpp"
#include "pdmpcert/models.hpp"

#include "support.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace pdmpcert;
using testing::pt;

namespace {

constexpr double kPi = std::numbers::pi;

struct Zoo {
    std::string name;
    VectorFieldSet fs;
    CompactDomain dom;
};

std::vector<Zoo> zoo() {
    std::vector<Zoo> out;
    for (const char* f : {"annulus.json", "torus.json", "lv.json", "sis_lemma.json"}) {
        Model m = testing::fixture_model(f);
        out.push_back({f, m.fields, m.domain});
    }
    return out;
}

}  // namespace

TEST_CASE("logistic flow matches the closed form") {
    auto fs = testing::logistic_field();
    Point r = flow(fs, 0, 1.0, pt({0.5}), FlowConfig::rk4(1e-3));
    CHECK(r[0] == doctest::Approx(std::exp(1.0) / (1.0 + std::exp(1.0))).epsilon(1e-12));
    CHECK(r[0] == doctest::Approx(0.7310586).epsilon(1e-7));

    double worst = 0.0;
    for (double t = 0.0; t <= 5.0 + 1e-12; t += 0.25) {
        for (double r0 : {0.1, 0.5, 1.7}) {
            Point y = flow(fs, 0, t, pt({r0}), FlowConfig::rk4(1e-3));
            worst = std::max(worst, std::abs(y[0] - testing::logistic_exact(r0, t)));
        }
    }
    CHECK(worst < 1e-8);

    Point a = flow(fs, 0, 3.0, pt({0.2}), FlowConfig::rk45());
    CHECK(a[0] == doctest::Approx(testing::logistic_exact(0.2, 3.0)).epsilon(1e-8));
}

TEST_CASE("zero time is the identity and constant fields translate") {
    for (const auto& z : zoo()) {
        for (const auto& x : z.dom.sample_grid({4, 4})) {
            for (int i = 0; i < z.fs.count(); ++i) CHECK(flow(z.fs, i, 0.0, x) == x);
        }
    }
    auto tor = torus_fields(TorusParams{0.1});
    Point y = flow(tor, 0, 0.25, pt({0.0, 0.0}));
    CHECK(y[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(y[1] == 0.0);
    // wrapped on the torus
    Point w = flow(tor, 0, 1.3, pt({0.0, 0.5}));
    CHECK(w[0] == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("flow argument validation") {
    auto fs = testing::logistic_field();
    CHECK_THROWS_AS(flow(fs, 0, -1.0, pt({0.5})), std::invalid_argument);
    CHECK_THROWS_AS(flow(fs, 0, 1.0, pt({0.5, 0.1})), std::invalid_argument);
    CHECK_THROWS_AS(flow(fs, 0, 1.0, pt({0.5}), FlowConfig::rk4(0.0)), std::invalid_argument);
    FlowConfig tight = FlowConfig::rk4(1e-3);
    tight.max_steps = 10;
    CHECK_THROWS_AS(flow(fs, 0, 1.0, pt({0.5}), tight), NumericalError);
}

TEST_CASE("semigroup property on the model fields") {
    const auto cfg = FlowConfig::rk4(1e-3);
    for (const auto& z : zoo()) {
        for (const auto& x : z.dom.sample_grid({3, 3})) {
            for (int i = 0; i < z.fs.count(); ++i) {
                Point whole = flow(z.fs, i, 0.7 + 0.45, x, cfg);
                Point split = flow(z.fs, i, 0.45, flow(z.fs, i, 0.7, x, cfg), cfg);
                CHECK(chart_difference(z.fs.chart(), whole, split).norm() <= 1e-8);
            }
        }
    }
}

TEST_CASE("composite flows") {
    const double eps = 0.1;
    auto tor = torus_fields(TorusParams{eps});
    Point x0 = pt({0.0, 0.0});
    SwitchSchedule empty;
    CHECK(composite(tor, empty, x0) == x0);

    SwitchSchedule one;
    one.append(1, 0.4);
    CHECK((composite(tor, one, pt({0.2, 0.1})) - flow(tor, 1, 0.4, pt({0.2, 0.1}))).norm() == 0.0);

    SwitchSchedule two;
    two.append(0, 0.5);
    two.append(1, 0.25);
    Point y = composite(tor, two, x0);
    CHECK(y[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(0.25).epsilon(1e-10));

    // order matters: starting with F1 at x = 0 gives y' = 1 exactly
    SwitchSchedule rev;
    rev.append(1, 0.25);
    rev.append(0, 0.5);
    Point z = composite(tor, rev, x0);
    CHECK(z[1] == doctest::Approx(0.25).epsilon(1e-10));

    // from x = 0.25 the F1 leg runs at speed 1 + eps
    SwitchSchedule shifted;
    shifted.append(0, 0.25);
    shifted.append(1, 0.5);
    Point s = composite(tor, shifted, x0);
    CHECK(s[1] == doctest::Approx(0.5 * (1.0 + eps)).epsilon(1e-10));
}

TEST_CASE("schedules of zero durations are the identity") {
    for (const auto& z : zoo()) {
        SwitchSchedule sched;
        for (int k = 0; k < 5; ++k) sched.append(k % z.fs.count(), 0.0);
        for (const auto& x : z.dom.sample_grid({3, 3})) CHECK(composite(z.fs, sched, x) == x);
    }
}

TEST_CASE("schedule validation") {
    SwitchSchedule bad;
    bad.indices = {0, 1};
    bad.durations = {0.1};
    CHECK_THROWS(bad.validate(2));
    SwitchSchedule neg;
    neg.append(0, -0.1);
    CHECK_THROWS(neg.validate(2));
    SwitchSchedule oob;
    oob.append(2, 0.1);
    CHECK_THROWS(oob.validate(2));
    SwitchSchedule ok;
    ok.append(1, 0.25);
    ok.append(0, 0.5);
    CHECK_NOTHROW(ok.validate(2));
    CHECK(ok.total_duration() == 0.75);
}

TEST_CASE("time simplex membership") {
    TimeSimplex d{3, 1.0};
    std::vector<double> in{0.2, 0.3, 0.5}, out{0.2, 0.3, 0.6}, neg{-0.1, 0.3, 0.2};
    CHECK(d.contains(in));
    CHECK_FALSE(d.contains(out));
    CHECK_FALSE(d.contains(neg));
}

TEST_CASE("duration jacobian of a constant field") {
    auto c = testing::constant_fields({pt({1.0, 0.0})}, 2);
    SwitchSchedule sched;
    sched.append(0, 0.3);
    Matrix j = duration_jacobian(c, sched, 0, 1.0, pt({0.0, 0.0}));
    REQUIRE(j.rows() == 2);
    REQUIRE(j.cols() == 2);
    CHECK(j.col(0).norm() < 1e-8);
    CHECK((j.col(1) - pt({-1.0, 0.0})).norm() < 1e-8);
}

TEST_CASE("duration jacobian with zero durations gives F^i - F^terminal") {
    // terminal F0 is a translation, so its flow has identity derivative
    auto tor = torus_fields(TorusParams{0.1});
    SwitchSchedule sched;
    sched.append(1, 0.0);
    Point x = pt({0.0, 0.0});
    const double s = 0.5;
    Matrix j = duration_jacobian(tor, sched, 0, s, x);
    Point end = flow(tor, 0, s, x);
    Point expect = eval(tor, 1, x) - eval(tor, 0, end);
    CHECK((j.col(0) - expect).norm() < 1e-6);
    CHECK((j.col(1) + eval(tor, 0, end)).norm() < 1e-6);
}

TEST_CASE("duration jacobian of an alternating torus schedule has rank 2") {
    auto tor = torus_fields(TorusParams{0.1});
    SwitchSchedule sched;
    sched.append(0, 0.3);
    sched.append(1, 0.3);
    Matrix j = duration_jacobian(tor, sched, 0, 1.0, pt({0.1, 0.2}));
    Eigen::JacobiSVD<Matrix> svd(j);
    CHECK(svd.singularValues()[1] > 1e-3);
    CHECK_THROWS_AS(duration_jacobian(tor, sched, 0, 0.6, pt({0.1, 0.2})), std::invalid_argument);
}

TEST_CASE("invariance checks") {
    Model ann = testing::fixture_model("annulus.json");
    auto rep = invariance_check(ann.domain, ann.fields, 2.0, {12, 6});
    CHECK(rep.passed);
    CHECK(rep.paths_checked == 144);

    Model tor = testing::fixture_model("torus.json");
    auto trep = invariance_check(tor.domain, tor.fields, 2.0, {5, 5});
    CHECK(trep.passed);
    CHECK(trep.max_excursion == 0.0);

    auto box = CompactDomain::box({-1.0, -1.0}, {1.0, 1.0});
    auto outward = testing::linear_field(Matrix::Identity(2, 2));
    auto brep = invariance_check(box, outward, 1.0, {5, 5});
    CHECK_FALSE(brep.passed);
    CHECK(brep.max_excursion > brep.slack);
    CHECK(brep.worst_field == 0);

    Model lv = testing::fixture_model("lv.json");
    CHECK(invariance_check(lv.domain, lv.fields, 2.0, {6, 6}).passed);
    Model sis = testing::fixture_model("sis_lemma.json");
    CHECK(invariance_check(sis.domain, sis.fields, 2.0, {6, 6}).passed);
}

TEST_CASE("adaptive and fixed-step integrators agree") {
    for (const auto& z : zoo()) {
        for (const auto& x : z.dom.sample_grid({3, 3})) {
            for (int i = 0; i < z.fs.count(); ++i) {
                Point a = flow(z.fs, i, 1.5, x, FlowConfig::rk4(1e-3));
                Point b = flow(z.fs, i, 1.5, x, FlowConfig::rk45());
                CHECK(chart_difference(z.fs.chart(), a, b).norm() < 1e-7);
            }
        }
    }
}

TEST_CASE("polar flows wrap theta") {
    Model ann = testing::fixture_model("annulus.json");
    if (ann.fields.chart() == Chart::Polar) {
        Point y = flow(ann.fields, 0, 7.0, pt({0.0, 1.0}));
        CHECK(y[0] >= 0.0);
        CHECK(y[0] < 2.0 * kPi);
        CHECK(y[0] == doctest::Approx(7.0 - 2.0 * kPi).epsilon(1e-10));
    }
}
