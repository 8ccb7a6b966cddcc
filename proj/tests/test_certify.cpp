#include "pdmpcert/certify.hpp"
#include "pdmpcert/models.hpp"

#include "support.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace pdmpcert;
using testing::pt;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd vec(std::initializer_list<double> v) { return testing::pt(v); }

}  // namespace

TEST_CASE("solve_alpha: annulus equilibrium of 2F1 - F0") {
    auto fs = annulus_fields(AnnulusParams{});
    auto sol = solve_alpha(fs, pt({kPi / 2, 1.0}));
    CHECK(sol.alpha[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(sol.alpha[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(sol.residual <= 1e-12);
    CHECK_FALSE(sol.degenerate);
}

TEST_CASE("solve_alpha: torus residual has a closed form") {
    // min over alpha of alpha^2 + (1 - alpha)^2 u^2 is u^2 / (1 + u^2)
    const double eps = 0.1;
    auto fs = torus_fields(TorusParams{eps});
    for (double x : {0.0, 0.1, 0.25, 0.6, 0.75, 0.9}) {
        const double u = 1.0 + eps * std::sin(2.0 * kPi * x);
        auto sol = solve_alpha(fs, pt({x, 0.3}));
        CHECK(sol.residual * sol.residual == doctest::Approx(u * u / (1.0 + u * u)).epsilon(1e-12));
        CHECK(sol.alpha[0] == doctest::Approx(u * u / (1.0 + u * u)).epsilon(1e-12));
        CHECK(sol.residual > 0.5);
    }
}

TEST_CASE("solve_alpha: antipodal pair and degenerate inputs") {
    auto anti = testing::constant_fields({pt({0.3, -1.2}), pt({-0.3, 1.2})}, 2);
    auto sol = solve_alpha(anti, pt({0.0, 0.0}));
    CHECK(sol.alpha[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sol.alpha[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sol.residual <= 1e-12);

    auto same = testing::constant_fields({pt({1.0, 2.0}), pt({1.0, 2.0})}, 2);
    auto d = solve_alpha(same, pt({0.0, 0.0}));
    CHECK(d.degenerate);
    CHECK(d.alpha.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.alpha[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(d.residual == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));

    auto three = testing::constant_fields({pt({1.0, 0.0}), pt({0.0, 1.0}), pt({-1.0, -1.0})}, 2);
    auto t = solve_alpha(three, pt({0.0, 0.0}));
    CHECK(t.residual <= 1e-12);
    CHECK(t.alpha.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.alpha[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("solve_alpha agrees with a dense one-dimensional sweep") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 200; ++trial) {
        Point a = pt({n01(rng), n01(rng)});
        Point b = trial % 5 == 0 ? Point(-2.0 * a) : pt({n01(rng), n01(rng)});
        auto fs = testing::constant_fields({a, b}, 2);
        auto sol = solve_alpha(fs, pt({0.0, 0.0}));
        CHECK(sol.alpha.sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((sol.alpha[0] * a + sol.alpha[1] * b).norm() == doctest::Approx(sol.residual).epsilon(1e-12));
        double best = 1e300;
        for (int k = -40000; k <= 40000; ++k) {
            const double al = k * 1e-3;
            best = std::min(best, (al * a + (1.0 - al) * b).norm());
        }
        CHECK(sol.residual <= best + 1e-12);
        CHECK(best - sol.residual < 1e-3 * (a - b).norm() + 1e-9);
        if (trial % 5 == 0) CHECK(sol.residual <= 1e-12);
    }
}

TEST_CASE("nelder_mead minimizes a shifted quadratic") {
    auto f = [](const Point& x) { return (x[0] - 1.0) * (x[0] - 1.0) + 10.0 * (x[1] + 0.5) * (x[1] + 0.5); };
    auto r = nelder_mead(f, pt({3.0, 2.0}), 0.5, 500);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(r.x[1] == doctest::Approx(-0.5).epsilon(1e-5));
    CHECK(r.value < 1e-10);
}

TEST_CASE("condition (i) on the annulus") {
    Model m = testing::fixture_model("annulus.json");
    ConditionIOptions opts;
    opts.seed_resolution = {20, 10};
    auto c = find_condition_i(m.fields, m.domain, opts);
    REQUIRE(c.valid);
    CHECK(std::abs(c.e_star[0] - kPi / 2) < 1e-4);
    CHECK(std::abs(c.e_star[1] - 1.0) < 1e-4);
    CHECK(std::abs(c.alpha[0] + 1.0) < 1e-3);
    CHECK(std::abs(c.alpha[1] - 2.0) < 1e-3);
    CHECK(c.residual < 1e-8);
    CHECK(c.alpha.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.seeds_tried == 200);
}

TEST_CASE("condition (i) fails on the torus with the analytic lower bound") {
    Model m = testing::fixture_model("torus.json");
    auto c = find_condition_i(m.fields, m.domain, {});
    CHECK_FALSE(c.valid);
    const double u = 0.9;
    CHECK(c.residual >= std::sqrt(u * u / (1.0 + u * u)) - 1e-6);
    CHECK(c.residual > 0.5);
}

TEST_CASE("condition (i) on the Lotka-Volterra fixture matches the averaged system") {
    Model m = testing::fixture_model("lv.json");
    const auto& lv = std::get<LVParams>(m.params);
    ConditionIOptions opts;
    opts.extinction_distance = [&](const Point& x) { return m.extinction_distance(x); };
    auto c = find_condition_i(m.fields, m.domain, opts);
    REQUIRE(c.valid);
    const double s = c.alpha[1];
    CHECK(s > 0.0);
    CHECK(s < 1.0);
    // independent oracle: solve a_s x + b_s y = 1, c_s x + d_s y = 1
    LVCoefficients k = lv_averaged_coefficients(lv, s);
    Matrix A(2, 2);
    A << k.a, k.b, k.c, k.d;
    Point e = A.lu().solve(pt({1.0, 1.0}));
    CHECK((c.e_star - e).norm() < 1e-4);
    auto cls = lv_classify(lv, s);
    CHECK(cls.regime == LVRegime::InteriorGAS);
}

TEST_CASE("condition (i) on the SIS lemma fixture") {
    Model m = testing::fixture_model("sis_lemma.json");
    const auto& p = std::get<SISParams>(m.params);
    ConditionIOptions opts;
    opts.extinction_distance = [&](const Point& x) { return m.extinction_distance(x); };
    auto c = find_condition_i(m.fields, m.domain, opts);
    REQUIRE(c.valid);
    CHECK(m.extinction_distance(c.e_star) >= opts.delta0);
    auto eq = sis_equilibrium(p, c.alpha[1]);
    CHECK_FALSE(eq.origin);
    CHECK((eq.x - c.e_star).norm() < 1e-5);
}

TEST_CASE("reach trees: root, determinism, allowed fields") {
    Model m = testing::fixture_model("annulus.json");
    ReachOptions o;
    o.budget = 300;
    o.seed = 5;
    Point x0 = pt({1.0, 1.9});
    auto a = explore_reachable(m.fields, m.domain, x0, o);
    auto b = explore_reachable(m.fields, m.domain, x0, o);
    REQUIRE(a.nodes.size() == b.nodes.size());
    CHECK(a.nodes[0] == x0);
    CHECK(a.schedule_to(0).size() == 0);
    for (std::size_t k = 0; k < a.nodes.size(); ++k) CHECK(a.nodes[k] == b.nodes[k]);
    for (std::size_t k = 1; k < a.nodes.size(); k += 17) {
        CHECK((composite(m.fields, a.schedule_to(k), x0, o.flow) - a.nodes[k]).norm() < 1e-9);
    }

    // F0 alone: the unit circle attracts, r moves monotonically towards 1
    o.allowed = {0};
    o.budget = 2000;
    o.tau_max = 2.0;
    auto t = explore_reachable(m.fields, m.domain, x0, o);
    double closest = 1.0;
    for (const auto& p : t.nodes) {
        CHECK(p[1] <= 1.9 + 1e-12);
        CHECK(p[1] >= 1.0 - 1e-12);
        closest = std::min(closest, p[1] - 1.0);
    }
    for (std::size_t k = 1; k < t.nodes.size(); ++k) CHECK(t.index[k] == 0);
    CHECK(closest < 1e-3);
}

TEST_CASE("reach tree covers the torus") {
    Model m = testing::fixture_model("torus.json");
    ReachOptions o;
    o.budget = 10000;
    o.seed = 1;
    auto t = explore_reachable(m.fields, m.domain, pt({0.0, 0.0}), o);
    double gap = 0.0;
    for (const auto& c : m.domain.sample_grid({20, 20})) {
        Point centre = c + pt({0.025, 0.025});
        gap = std::max(gap, m.domain.distance(centre, t.nodes[t.nearest(m.domain, centre)]));
    }
    CHECK(gap < 0.05);
}

TEST_CASE("accessibility examples") {
    Model ann = testing::fixture_model("annulus.json");
    ReachOptions o;
    auto r = accessible(ann.fields, ann.domain, pt({0.0, 1.0}), {pt({kPi / 2, 1.0})}, 0.05, o);
    REQUIRE(r.size() == 1);
    CHECK(r[0].success());

    auto self = accessible(ann.fields, ann.domain, pt({2.0, 1.5}), {pt({2.0, 1.5})}, 1e-9, o);
    REQUIRE(self[0].success());
    CHECK(self[0].witness->size() == 0);
    CHECK(self[0].closest_distance == 0.0);

    Model tor = testing::fixture_model("torus.json");
    ReachOptions t;
    t.budget = 10000;
    auto tr = accessible(tor.fields, tor.domain, pt({0.5, 0.5}), {pt({0.0, 0.0})}, 0.05, t);
    REQUIRE(tr[0].success());
    Point end = composite(tor.fields, *tr[0].witness, pt({0.0, 0.0}), t.flow);
    CHECK(tor.domain.distance(end, pt({0.5, 0.5})) <= 0.05);
}

TEST_CASE("witnesses land within delta, for every start") {
    Model m = testing::fixture_model("sis_lemma.json");
    ReachOptions o;
    o.budget = 3000;
    o.seed = 3;
    Point target = pt({0.5, 0.5});
    auto starts = m.domain.sample_grid({3, 3});
    auto res = accessible(m.fields, m.domain, target, starts, 0.05, o, 2);
    REQUIRE(res.size() == starts.size());
    for (std::size_t k = 0; k < res.size(); ++k) {
        CHECK(res[k].start == starts[k]);
        if (res[k].success()) {
            Point end = composite(m.fields, *res[k].witness, starts[k], o.flow);
            CHECK(m.domain.distance(end, target) <= 0.05 + 1e-12);
        } else {
            CHECK(res[k].closest_distance > 0.05);
        }
    }
    auto single = accessible(m.fields, m.domain, target, starts, 0.05, o, 1);
    for (std::size_t k = 0; k < res.size(); ++k) {
        CHECK(single[k].success() == res[k].success());
        CHECK(single[k].closest_distance == res[k].closest_distance);
    }
}

TEST_CASE("accessibility is monotone in budget and delta") {
    Model m = testing::fixture_model("torus.json");
    Point target = pt({0.6, 0.3});
    std::vector<Point> starts{pt({0.0, 0.0}), pt({0.2, 0.8}), pt({0.9, 0.1})};
    for (std::uint64_t seed : {0u, 1u, 2u}) {
        std::vector<std::size_t> budgets{50, 200, 800};
        std::vector<double> deltas{0.01, 0.03, 0.1};
        std::vector<std::vector<std::vector<bool>>> ok(budgets.size(), std::vector<std::vector<bool>>(deltas.size()));
        for (std::size_t b = 0; b < budgets.size(); ++b) {
            for (std::size_t d = 0; d < deltas.size(); ++d) {
                ReachOptions o;
                o.budget = budgets[b];
                o.seed = seed;
                for (const auto& r : accessible(m.fields, m.domain, target, starts, deltas[d], o)) {
                    ok[b][d].push_back(r.success());
                }
            }
        }
        for (std::size_t b = 0; b < budgets.size(); ++b) {
            for (std::size_t d = 0; d < deltas.size(); ++d) {
                for (std::size_t s = 0; s < starts.size(); ++s) {
                    if (!ok[b][d][s]) continue;
                    for (std::size_t b2 = b; b2 < budgets.size(); ++b2) {
                        for (std::size_t d2 = d; d2 < deltas.size(); ++d2) CHECK(ok[b2][d2][s]);
                    }
                }
            }
        }
    }
}

TEST_CASE("submersion checks") {
    auto c = testing::constant_fields({pt({1.0, 0.0})}, 2);
    SwitchSchedule rep;
    rep.append(0, 0.2);
    rep.append(0, 0.3);
    auto line = check_submersion(c, pt({0.0, 0.0}), rep, 0, 1.0);
    CHECK(line.rank <= 1);
    CHECK_FALSE(line.valid);

    Model tor = testing::fixture_model("torus.json");
    SwitchSchedule alt;
    alt.append(0, 0.3);
    alt.append(1, 0.3);
    auto ok = check_submersion(tor.fields, pt({0.0, 0.0}), alt, 0, 1.0);
    CHECK(ok.rank == 2);
    CHECK(ok.valid);
    CHECK(std::is_sorted(ok.singular_values.rbegin(), ok.singular_values.rend()));
    CHECK_THROWS(check_submersion(tor.fields, pt({0.0, 0.0}), alt, 0, 0.5));
}

TEST_CASE("submersion rank is unchanged by a zero-duration terminal leg") {
    Model tor = testing::fixture_model("torus.json");
    Model ann = testing::fixture_model("annulus.json");
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.05, 0.6);
    for (const Model* m : {&tor, &ann}) {
        for (int trial = 0; trial < 20; ++trial) {
            SwitchSchedule s;
            const int len = 1 + trial % 3;
            for (int k = 0; k < len; ++k) s.append((trial + k) % 2, u(rng));
            const int terminal = trial % 2;
            const double total = s.total_duration() + 0.7;
            Point base = m->domain.sample_uniform(rng);
            auto a = check_submersion(m->fields, base, s, terminal, total);
            SwitchSchedule s2 = s;
            s2.append(terminal, 0.0);
            auto b = check_submersion(m->fields, base, s2, terminal, total);
            CHECK(a.rank == b.rank);
        }
    }
}

TEST_CASE("submersion search") {
    Model tor = testing::fixture_model("torus.json");
    SubmersionOptions o;
    auto cert = find_submersion(tor.fields, pt({0.0, 0.0}), o);
    CHECK(cert.valid);
    CHECK(cert.rank == 2);
    CHECK(cert.sigma_min_kept > 1e-3);
    auto again = find_submersion(tor.fields, pt({0.0, 0.0}), o);
    CHECK(again.schedule.durations == cert.schedule.durations);

    auto one = testing::constant_fields({pt({1.0, 0.0})}, 2);
    o.budget = 50;
    auto fail = find_submersion(one, pt({0.0, 0.0}), o);
    CHECK_FALSE(fail.valid);
    CHECK(fail.trials == 50);

    Model ann = testing::fixture_model("annulus.json");
    auto ac = find_submersion(ann.fields, pt({kPi / 2, 1.0}), SubmersionOptions{});
    CHECK(ac.valid);
}

TEST_CASE("certify: annulus certified, torus partial") {
    Model ann = testing::fixture_model("annulus.json");
    auto a = certify_ergodicity(ann, CertifyConfig{});
    CHECK(a.verdict == Verdict::Certified);
    CHECK(a.condition_i.valid);
    CHECK(a.weak_point.found);
    CHECK_FALSE(a.weak_point.at_e_star);  // weak bracket fails at e* itself
    CHECK(a.reach_estar_to_xstar.success());
    CHECK(a.global_reach_ok);
    CHECK(to_string(a.verdict) == "certified-numerically");

    Model tor = testing::fixture_model("torus.json");
    auto t = certify_ergodicity(tor, CertifyConfig{});
    CHECK(t.verdict == Verdict::Partial);
    CHECK_FALSE(t.condition_i.valid);
    CHECK(bracket_report(tor.fields, FamilyKind::Strong, 1, pt({0.0, 0.0})).holds);
}

TEST_CASE("certify: verdict consistency and the basic proposition on persistence models") {
    for (const char* f : {"lv.json", "sis_lemma.json", "sis_coinciding.json"}) {
        Model m = testing::fixture_model(f);
        auto c = certify_ergodicity(m, CertifyConfig{});
        const bool all = c.condition_i.valid && c.weak_point.found && c.reach_estar_to_xstar.success() &&
                         c.global_reach_ok;
        const bool any = c.condition_i.valid || c.weak_point.found || c.reach_estar_to_xstar.success() ||
                         c.global_reach_ok;
        CHECK((c.verdict == Verdict::Certified) == all);
        CHECK((c.verdict == Verdict::Failed) == !any);
        if (c.condition_i.valid) {
            auto weak = bracket_report(m.fields, FamilyKind::Weak, 4, c.condition_i.e_star);
            auto strong = bracket_report(m.fields, FamilyKind::Strong, 4, c.condition_i.e_star);
            if (weak.holds) CHECK(strong.holds);
        }
        for (const auto& r : c.reach_global_to_estar) CHECK(m.extinction_distance(r.start) >= 0.05);
        if (std::string(f) == "sis_coinciding.json") {
            CHECK(c.verdict == Verdict::Partial);
            CHECK(c.condition_i.valid);
            CHECK_FALSE(c.weak_point.found);
        } else {
            CHECK(c.verdict == Verdict::Certified);
            CHECK(c.weak_point.at_e_star);
            CHECK(c.strong_at_e_star.holds);
        }
    }
}

TEST_CASE("coinciding SIS fixture: any alpha works at the shared equilibrium") {
    Model m = testing::fixture_model("sis_coinciding.json");
    Point x = pt({0.4, 0.6});
    CHECK(eval(m.fields, 0, x).norm() < 1e-12);
    CHECK(eval(m.fields, 1, x).norm() < 1e-12);
    for (double a : {-3.0, 0.2, 0.5, 4.0}) CHECK(barycentric(m.fields, vec({a, 1.0 - a}), x).norm() < 1e-12);
    // both fields vanish, so no bracket or difference is nonzero there
    CHECK(bracket_report(m.fields, FamilyKind::Weak, 4, x).numerical_rank == 0);
}
