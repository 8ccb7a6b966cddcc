#pragma once

#include "pdmpcert/io.hpp"
#include "pdmpcert/models.hpp"
#include "pdmpcert/stats.hpp"

#include <cstdint>
#include <optional>

namespace pdmpcert {

/// Lotka-Volterra pair found by seeded random search: each environment alone
/// excludes a different species, the s = 1/2 average has an interior G.A.S.
/// equilibrium, and both invasion rates clear `min_invasion`.
struct LVFixture {
    LVParams params;
    std::uint64_t seed = 0;
    int trials = 0;
    InvasionEstimate lambda_x, lambda_y;
};

std::optional<LVFixture> derive_lv_fixture(std::uint64_t seed, double min_invasion = 0.05, int max_trials = 2000,
                                           double screen_t_max = 2000.0);

/// Two SIS environments whose interior equilibria coincide at (0.4, 0.6).
SISParams coinciding_sis_fixture();

/// The stored JSON documents (model file plus a "derivation" record).
Json lv_fixture_document(const LVFixture& f);
Json sis_lemma_fixture_document(const SISParams& p, std::uint64_t seed);
Json coinciding_fixture_document();
Json annulus_fixture_document();
Json torus_fixture_document();
/// Torus with a_01(x) = 1 + 0.5 sin^2(2 pi x_1), a_10 = 1.
Json torus_sin2_fixture_document();

inline constexpr std::uint64_t kLVFixtureSeed = 11;
inline constexpr std::uint64_t kSISFixtureSeed = 2024;

}  // namespace pdmpcert
