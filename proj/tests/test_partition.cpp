#include <doctest.h>

#include <cmath>

#include "cml/errors.hpp"
#include "cml/partition.hpp"
#include "cml/rates_exact.hpp"

using namespace cml;

TEST_CASE("partition sums of the affine full shift have closed values") {
    local_map m = make_lorenz(3.0);
    kernel id = kernel::impulse();

    // L = 1, T = 2: four words, each contributing 3^-2.
    partition_value z = partition_z(m, id, 1, 2);
    CHECK(z.log_z_point == doctest::Approx(std::log(4.0 / 9.0)).epsilon(1e-12));
    CHECK(z.log_z_upper == z.log_z_point); // c1 = 1 for the affine family
    CHECK(z.word_count_log == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    CHECK(z.L == 1);
    CHECK(z.T == 2);

    // General shape: (2/a)^(L T) independent of the coupling strength.
    for (std::size_t L : {1, 2})
        for (std::size_t T : {1, 3, 4}) {
            partition_value v = partition_z(m, laplacian(0.05), L, T);
            double want = static_cast<double>(L * T) * std::log(2.0 / 3.0);
            CHECK(v.log_z_point == doctest::Approx(want).epsilon(1e-11));
        }
}

TEST_CASE("partition sums respect the enumeration budget") {
    local_map m = make_lorenz(3.0);
    CHECK_THROWS_AS(partition_z(m, kernel::impulse(), 2, 10, 1000), budget_exceeded);
    // 2^64 space-time words overflow the tuple counter and surface the same way.
    CHECK_THROWS_AS(partition_z(m, kernel::impulse(), 4, 16, 100), budget_exceeded);
    // So does a single-site word count beyond 64 bits.
    CHECK_THROWS_AS(partition_z(m, kernel::impulse(), 1, 70, 100), budget_exceeded);
}

TEST_CASE("worker count does not move the partition sum") {
    local_map m = make_lorenz(3.0);
    kernel k = laplacian(0.05);
    partition_value a = partition_z(m, k, 2, 4, 10'000'000, 1);
    partition_value b = partition_z(m, k, 2, 4, 10'000'000, 4);
    CHECK(a.log_z_point == doctest::Approx(b.log_z_point).epsilon(1e-12));
    CHECK(a.log_z_upper == doctest::Approx(b.log_z_upper).epsilon(1e-12));
    CHECK(a.word_count_log == b.word_count_log);
}

TEST_CASE("distortion constants for a perturbed map") {
    local_map m = make_perturbed_lorenz(3.0, 0.05);
    kernel k = laplacian(0.05);
    distortion_consts d = distortion_constants(m, k);

    CHECK(d.alpha > 0.0);
    CHECK(d.alpha < 1.0);
    CHECK(d.alpha == doctest::Approx((1.0 / 0.9) / m.constants().inf_fp).epsilon(1e-9));
    CHECK(d.beta == doctest::Approx(m.constants().beta));
    CHECK(d.big_m == doctest::Approx(m.constants().big_m));
    CHECK(d.c1 ==
          doctest::Approx(std::exp(d.alpha * d.beta * d.big_m / (1.0 - d.alpha)))
              .epsilon(1e-14));
    // Frozen from the certified margins of this family/kernel pair.
    CHECK(std::log(d.c1) == doctest::Approx(1.3222).epsilon(2e-3));
    CHECK(d.m1 > 0.0);
    CHECK(d.zeta1 > 0.0);
    CHECK(d.zeta1 < 1.0);

    // The affine family is distortion free.
    distortion_consts flat = distortion_constants(make_lorenz(3.0), k);
    CHECK(flat.c1 == 1.0);
    CHECK(flat.beta == 0.0);
}

TEST_CASE("empirical distortion stays below the certified constant") {
    local_map affine = make_lorenz(3.0);
    kernel k = laplacian(0.05);
    // Affine derivative products are constant: the ratio is exactly 1.
    CHECK(verify_distortion(affine, k, 2, 4, 50, 9) == doctest::Approx(0.0));

    local_map m = make_perturbed_lorenz(3.0, 0.05);
    distortion_consts d = distortion_constants(m, k);
    double worst = verify_distortion(m, k, 1, 4, 100, 9);
    CHECK(worst > 0.0);
    CHECK(worst <= std::log(d.c1));
}

TEST_CASE("per-site free energy and the partition route to the rate") {
    local_map m = make_lorenz(3.0);
    kernel k = laplacian(0.05);

    k_l_result kl = k_l_estimate(m, k, 1, 6);
    CHECK(kl.point == doctest::Approx(std::log(2.0 / 3.0)).epsilon(1e-12));
    CHECK(kl.certified == doctest::Approx(kl.point).epsilon(1e-12));
    CHECK(kl.t_min >= 1);
    CHECK(kl.t_min <= 6);

    for (std::size_t L : {1, 2})
        for (double eps : {0.0, 0.05}) {
            kernel kk = laplacian(eps);
            double via_z = gamma_from_partition(m, kk, L, 6);
            double exact = gamma_affine(3.0, kk, L);
            CHECK(via_z == doctest::Approx(exact).epsilon(1e-12));
        }
}

TEST_CASE("exact affine volumes decay at the escape rate") {
    local_map m = make_lorenz(3.0);
    kernel k = laplacian(0.1);
    // Hold set of unit total length: the volume is alpha^T exactly.
    double g = gamma_affine(3.0, k, 2);
    CHECK(exact_affine_volume_log(m, k, 2, 3) == doctest::Approx(-3.0 * g).epsilon(1e-13));
    CHECK(exact_affine_volume_log(m, k, 2, 0) == doctest::Approx(0.0));
}

TEST_CASE("volume sandwich holds with the exact volume oracle") {
    local_map m = make_lorenz(3.0);
    for (double eps : {0.0, 0.05}) {
        kernel k = laplacian(eps);
        for (std::size_t L : {1, 2})
            for (std::size_t T = 1; T <= 4; ++T) {
                double vol = exact_affine_volume_log(m, k, L, T);
                sandwich_result s = sandwich_check(m, k, L, T, vol);
                CHECK(s.ok);
                // Affine saturation: the upper bound is tight up to rounding
                // and the lower bound gives away exactly L log 2.
                CHECK(std::abs(s.upper_slack) <= 1e-12);
                CHECK(s.lower_slack ==
                      doctest::Approx(static_cast<double>(L) * std::log(2.0))
                          .epsilon(1e-12));
            }
    }
}

TEST_CASE("time subadditivity certified up to rounding") {
    local_map affine = make_lorenz(3.0);
    CHECK(subadd_t_check(affine, laplacian(0.05), 1, 6) <= 1e-9);

    local_map pert = make_perturbed_lorenz(3.0, 0.02);
    CHECK(subadd_t_check(pert, laplacian(0.0), 1, 5) <= 1e-6);

    CHECK_THROWS_AS(subadd_t_check(affine, laplacian(0.05), 1, 1), parameter_violation);
}

TEST_CASE("lattice subadditivity with certified tail terms") {
    local_map affine = make_lorenz(3.0);
    kernel k = laplacian(0.05);
    subadd_l_result r = subadd_l_check(affine, k, 1, 1, 4);
    CHECK(r.slack >= -1e-12); // exact zero for the affine family, up to rounding
    CHECK(r.sigma_term >= 0.0);
    CHECK(r.remainder_term >= 0.0);

    local_map pert = make_perturbed_lorenz(3.0, 0.02);
    subadd_l_result rp = subadd_l_check(pert, k, 1, 1, 4);
    CHECK(rp.slack >= 0.0);
}

TEST_CASE("localization tail bound is exactly linear in the lattice size") {
    local_map m = make_lorenz(3.0, -0.1, 0.45);
    distortion_consts d = distortion_constants(m, kernel::impulse(), 64);
    // Uncoupled: |Ccal| = iota = 1/3, so the per-site bound is M/2 = 1.35.
    CHECK(sigma_prime_bound(d, 1) == doctest::Approx(1.35).epsilon(1e-12));
    for (std::size_t L = 1; L <= 64; ++L)
        CHECK(sigma_prime_bound(d, L) == static_cast<double>(L) * sigma_prime_bound(d, 1));

    // Default intervals give M = 2.5 and a per-site bound of 1.25.
    distortion_consts dd = distortion_constants(make_lorenz(3.0), kernel::impulse(), 64);
    CHECK(sigma_prime_bound(dd, 1) == doctest::Approx(1.25).epsilon(1e-12));

    distortion_consts hot = d;
    hot.c_cal_norm = 1.0;
    CHECK_THROWS_AS(sigma_prime_bound(hot, 1), not_contracting);
}
