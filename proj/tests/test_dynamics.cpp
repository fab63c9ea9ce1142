#include <doctest.h>

#include <cmath>
#include <vector>

#include "cml/dynamics.hpp"
#include "cml/errors.hpp"
#include "cml/rng.hpp"

using namespace cml;

namespace {

space_time_word make_word(std::size_t L, std::vector<symbol_frame> frames) {
    space_time_word w;
    w.L = L;
    w.frames = std::move(frames);
    return w;
}

} // namespace

TEST_CASE("word admissibility follows the transition matrix per site") {
    transition_matrix fib;
    fib.n = 2;
    fib.allowed = {1, 1, 1, 0}; // forbid 2 -> 2

    CHECK(word_admissible(fib, make_word(1, {{1}, {2}, {1}})));
    CHECK_FALSE(word_admissible(fib, make_word(1, {{1}, {2}, {2}})));
    // Site 1 carries the forbidden pair even though site 0 is fine.
    CHECK_FALSE(word_admissible(fib, make_word(2, {{1, 2}, {1, 2}})));
}

TEST_CASE("one lattice step applies branches then coupling") {
    local_map m = make_lorenz(3.0);
    kernel id = kernel::impulse();

    step_result r = step(m, id, {0.2, 0.7});
    CHECK_FALSE(r.escaped);
    CHECK(r.state[0] == doctest::Approx(0.6));
    CHECK(r.state[1] == doctest::Approx(0.1)); // 3*0.7 - 2

    // With diffusive coupling the images mix: site 0 sees its neighbors.
    kernel lap = laplacian(0.2);
    step_result rc = step(m, lap, {0.2, 0.7});
    CHECK(rc.state[0] == doctest::Approx(0.8 * 0.6 + 0.2 * 0.1));
    CHECK(rc.state[1] == doctest::Approx(0.8 * 0.1 + 0.2 * 0.6));

    // A coordinate in the gap escapes immediately and reports its site.
    step_result re = step(m, id, {0.2, 0.5});
    CHECK(re.escaped);
    CHECK(re.site == 1);
}

TEST_CASE("locate reads off the symbolic frame") {
    local_map m = make_lorenz(3.0);
    auto frame = locate(m, {0.0, 0.9});
    REQUIRE(frame.has_value());
    CHECK((*frame)[0] == 1);
    CHECK((*frame)[1] == 2);
    CHECK_FALSE(locate(m, {0.5, 0.9}).has_value());
}

TEST_CASE("affine weak coupling criterion") {
    CHECK(weak_coupling_ok_affine(3.0, 0.0));
    CHECK(weak_coupling_ok_affine(3.0, 0.1));
    CHECK_FALSE(weak_coupling_ok_affine(3.0, 0.2));  // 3 * 0.6 rounds below 2
    CHECK_FALSE(weak_coupling_ok_affine(3.0, 0.3));
    // Exact boundary: 4 * (1 - 0.5) = 2 is not strictly above 2.
    CHECK_FALSE(weak_coupling_ok_affine(4.0, 0.25));
    // 3 * (1 - 2/6) sits on a rounding midpoint and ties-to-even lands it
    // exactly on 2, failing the strict test; pinned so a change in evaluation
    // order shows up here.
    CHECK_FALSE(weak_coupling_ok_affine(3.0, 1.0 / 6.0));

    CHECK_THROWS_AS(weak_coupling_ok_affine(2.0, 0.1), parameter_violation);
    CHECK_THROWS_AS(weak_coupling_ok_affine(3.0, -0.1), parameter_violation);
    CHECK_THROWS_AS(weak_coupling_ok_affine(3.0, 1.5), parameter_violation);
}

TEST_CASE("general weak coupling threshold from certified margins") {
    local_map m = make_lorenz(3.0, -0.1, 0.45);

    threshold_report weak = weak_coupling_ok_general(m.constants(), laplacian(0.05));
    CHECK(weak.affine_ok);
    CHECK(weak.norm == doctest::Approx(0.1).epsilon(1e-14));
    // Full shift: the transition gap term is vacuous, only the hole margin
    // bounds: 0.2 / (0.2 + 1.35).
    CHECK(weak.general_bound == doctest::Approx(0.2 / 1.55).epsilon(1e-12));
    CHECK(weak.verdict);

    threshold_report strong = weak_coupling_ok_general(m.constants(), laplacian(0.1));
    CHECK(strong.norm == doctest::Approx(0.2).epsilon(1e-14));
    CHECK_FALSE(strong.verdict); // sufficient bound is conservative here
    CHECK(strong.affine_ok);     // while the sharp affine gate still holds
}

TEST_CASE("survival orbits record their coding") {
    local_map m = make_lorenz(3.0);
    kernel id = kernel::impulse();

    // x = 0 is a fixed point of the lower branch: survives forever.
    orbit_summary s = survival_orbit(m, id, {0.0}, 5);
    CHECK(s.survived);
    CHECK(s.word.T() == 6); // frames 0..T inclusive on survival
    for (const auto& f : s.word.frames) CHECK(f[0] == 1);

    // 1/6 maps into the gap in one step.
    orbit_summary e = survival_orbit(m, id, {1.0 / 6.0}, 5);
    CHECK_FALSE(e.survived);
    CHECK(e.escape_time == 1);
    CHECK(e.word.T() == 1);
}

TEST_CASE("backward engine certifies contraction") {
    local_map m = make_lorenz(3.0);
    backward_engine eng(m, kernel::impulse(), 1);
    CHECK(eng.alpha() == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    backward_engine eng2(m, laplacian(0.1), 4);
    CHECK(eng2.alpha() == doctest::Approx((1.0 / 0.8) / 3.0).epsilon(1e-10));

    // Affine weak-coupling gate: 3 (1 - 2*0.3) = 1.2 < 2.
    CHECK_THROWS_AS(backward_engine(m, laplacian(0.3), 4), not_contracting);
}

TEST_CASE("cylinder points of the uncoupled map match fixed-point algebra") {
    local_map m = make_lorenz(3.0);
    kernel id = kernel::impulse();

    // Constant words sit on the branch fixed points 0 and 1.
    lattice_state lo = cylinder_point(m, id, make_word(1, {{1}, {1}, {1}}));
    CHECK(lo[0] == doctest::Approx(0.0).epsilon(1e-12));
    lattice_state hi = cylinder_point(m, id, make_word(1, {{2}, {2}}));
    CHECK(hi[0] == doctest::Approx(1.0).epsilon(1e-12));

    // Alternating word: the 2-cycle 1/4 -> 3/4 of f(f(x)) = 9x - 2.
    backward_engine eng(m, id, 1);
    auto orbit = eng.point_with_orbit(make_word(1, {{1}, {2}}));
    CHECK(orbit.x0[0] == doctest::Approx(0.25).epsilon(1e-12));
    REQUIRE(orbit.states.size() == 2);
    CHECK(orbit.states[0][0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(orbit.states[1][0] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("cylinder points realize every admissible word") {
    local_map m = make_lorenz(3.0);
    kernel lap = laplacian(0.05);
    for (std::size_t L : {1, 2}) {
        backward_engine eng(m, lap, L);
        std::size_t configs = 1;
        for (std::size_t s = 0; s < L; ++s) configs *= 2;
        const std::size_t T = 3;
        std::size_t words = 1;
        for (std::size_t t = 0; t < T; ++t) words *= configs;

        for (std::size_t idx = 0; idx < words; ++idx) {
            space_time_word w;
            w.L = L;
            std::size_t rest = idx;
            for (std::size_t t = 0; t < T; ++t) {
                symbol_frame f(L);
                for (std::size_t s = 0; s < L; ++s) {
                    f[s] = static_cast<symbol>(1 + rest % 2);
                    rest /= 2;
                }
                w.frames.push_back(f);
            }
            auto orbit = eng.point_with_orbit(w);
            REQUIRE(orbit.states.size() == T);
            for (std::size_t t = 0; t < T; ++t) {
                auto frame = locate(m, orbit.states[t]);
                REQUIRE(frame.has_value());
                for (std::size_t s = 0; s < L; ++s) CHECK((*frame)[s] == w.frames[t][s]);
            }
            // The representative is T-periodic: one more sweep returns to x0.
            step_result cur{false, 0, orbit.states[T - 1]};
            cur = step(m, lap, cur.state);
            REQUIRE_FALSE(cur.escaped);
            for (std::size_t s = 0; s < L; ++s)
                CHECK(cur.state[s] == doctest::Approx(orbit.x0[s]).epsilon(1e-9));
        }
    }
}

TEST_CASE("cylinder points commute with lattice rotation") {
    local_map m = make_lorenz(3.0);
    kernel lap = laplacian(0.05);
    const std::size_t L = 3, T = 4;
    backward_engine eng(m, lap, L);

    std::uint64_t ctr = 0;
    for (int rep = 0; rep < 10; ++rep) {
        space_time_word w;
        w.L = L;
        for (std::size_t t = 0; t < T; ++t) {
            symbol_frame f(L);
            for (std::size_t s = 0; s < L; ++s)
                f[s] = static_cast<symbol>(1 + (keyed_bits(99, 0, ctr++, 0, 0) & 1));
            w.frames.push_back(f);
        }
        space_time_word wr;
        wr.L = L;
        for (std::size_t t = 0; t < T; ++t) {
            symbol_frame f(L);
            for (std::size_t s = 0; s < L; ++s) f[(s + 1) % L] = w.frames[t][s];
            wr.frames.push_back(f);
        }
        lattice_state x = eng.point(w);
        lattice_state xr = eng.point(wr);
        for (std::size_t s = 0; s < L; ++s)
            CHECK(xr[(s + 1) % L] == doctest::Approx(x[s]).epsilon(1e-12));
    }
}

TEST_CASE("word validation in the backward engine") {
    local_map m = make_lorenz(3.0);
    backward_engine eng(m, kernel::impulse(), 2);

    CHECK_THROWS_AS(eng.point(make_word(2, {})), parameter_violation);
    CHECK_THROWS_AS(eng.point(make_word(1, {{1}})), parameter_violation);
    CHECK_THROWS_AS(eng.point(make_word(2, {{1, 3}})), parameter_violation);
}
