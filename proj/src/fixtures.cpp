#include "pdmpcert/fixtures.hpp"

#include "pdmpcert/parallel.hpp"

#include <random>

namespace pdmpcert {

std::optional<LVFixture> derive_lv_fixture(std::uint64_t seed, double min_invasion, int max_trials,
                                           double screen_t_max) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> growth(0.5, 2.0), comp(0.2, 2.0);
    const RateMatrixField rm = RateMatrixField::symmetric(2, 1.0);
    for (int trial = 0; trial < max_trials; ++trial) {
        LVParams lv;
        for (auto& e : lv.env) {
            e.alpha = growth(rng);
            e.beta = growth(rng);
            e.a = comp(rng);
            e.b = comp(rng);
            e.c = comp(rng);
            e.d = comp(rng);
        }
        try {
            lv.validate();
        } catch (const ModelError&) {
            continue;
        }
        const LVRegime r0 = lv_classify(lv, 0.0).regime;
        const LVRegime r1 = lv_classify(lv, 1.0).regime;
        const bool opposite = (r0 == LVRegime::AxisX && r1 == LVRegime::AxisY) ||
                              (r0 == LVRegime::AxisY && r1 == LVRegime::AxisX);
        if (!opposite || lv_classify(lv, 0.5).regime != LVRegime::InteriorGAS) continue;
        InvasionConfig ic;
        ic.t_max = screen_t_max;
        ic.seed = derive_seed(seed, static_cast<std::uint64_t>(trial));
        InvasionEstimate lx = invasion_rate_x(lv, rm, ic);
        if (!(lx.value > min_invasion)) continue;
        InvasionEstimate ly = invasion_rate_y(lv, rm, ic);
        if (!(ly.value > min_invasion)) continue;
        return LVFixture{lv, seed, trial + 1, lx, ly};
    }
    return std::nullopt;
}

SISParams coinciding_sis_fixture() {
    Point x(2);
    x << 0.4, 0.6;
    Matrix c0(2, 2), c1(2, 2);
    c0 << 0.5, 2.0, 1.0, 0.3;
    c1 << 0.1, 0.6, 3.0, 1.0;
    return sis_coinciding_fixture(x, c0, c1);
}

namespace {

Json with_derivation(const ModelParams& p, Json derivation) {
    Json j = model_file_to_json(ModelFile{p, RateSpec::symmetric(2, 1.0)});
    j["derivation"] = std::move(derivation);
    return j;
}

}  // namespace

Json lv_fixture_document(const LVFixture& f) {
    Json d;
    d["method"] = "seeded random search (derive_lv_fixture)";
    d["seed"] = f.seed;
    d["trials"] = f.trials;
    d["criteria"] = "regimes at s=0 and s=1 are opposite axis attractors; s=1/2 is interior GAS; "
                    "screening invasion rates Lambda_x, Lambda_y > 0.05";
    d["screen_lambda_x"] = to_json(f.lambda_x);
    d["screen_lambda_y"] = to_json(f.lambda_y);
    return with_derivation(f.params, std::move(d));
}

Json sis_lemma_fixture_document(const SISParams& p, std::uint64_t seed) {
    Json d;
    d["method"] = "seeded random search (sis_lemma_search)";
    d["seed"] = seed;
    d["criteria"] = "lambda(A^0) < -0.05, lambda(A^1) < -0.05, lambda(A^(1/2)) > 0.05";
    d["lambda0"] = sis_lambda(sis_matrix(p, 0));
    d["lambda1"] = sis_lambda(sis_matrix(p, 1));
    d["lambda_half"] = sis_lambda(sis_averaged_matrix(p, 0.5));
    return with_derivation(p, std::move(d));
}

Json coinciding_fixture_document() {
    Json d;
    d["method"] = "D^k_i = (1 - x_i)(C^k x)_i / x_i so both fields vanish at x";
    d["x_star"] = Json::array({0.4, 0.6});
    return with_derivation(coinciding_sis_fixture(), std::move(d));
}

Json annulus_fixture_document() { return model_file_to_json(ModelFile{AnnulusParams{}, RateSpec::symmetric(2, 1.0)}); }

Json torus_fixture_document() { return model_file_to_json(ModelFile{TorusParams{}, RateSpec::symmetric(2, 1.0)}); }

Json torus_sin2_fixture_document() {
    RateSpec spec;
    spec.kind = RateSpec::Kind::Sin2;
    spec.base = Matrix(2, 2);
    spec.base << 0.0, 1.0, 1.0, 0.0;
    spec.amp = Matrix(2, 2);
    spec.amp << 0.0, 0.5, 0.0, 0.0;
    spec.freq = 1.0;
    spec.axis = 0;
    return model_file_to_json(ModelFile{TorusParams{}, spec});
}

}  // namespace pdmpcert
