// Acceptance gate for the escape-rate library: every shipped guarantee is
// checked at its stated numeric tolerance and runtime budget, one line per
// guarantee.  The process exits 0 only when every line passes, so this binary
// is the single thing a release pipeline needs to run.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "cml/dynamics.hpp"
#include "cml/partition.hpp"
#include "cml/rates_exact.hpp"
#include "cml/rates_volume.hpp"
#include "cml/rng.hpp"
#include "dense_det.hpp"

using namespace cml;

namespace {

struct outcome {
    bool pass = true;
    std::string detail;
    std::vector<std::string> notes;
};

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", x);
    return buf;
}

// 01: the affine closed form, once against a hand value and once against a
// plain dense LU determinant that shares no code with the Fourier route.
outcome affine_closed_form_vs_dense_determinant() {
    outcome out;

    double got = gamma_affine(3.0, laplacian(0.1), 2);
    double want = 2.0 * std::log(1.5) + std::log(0.8);
    double err_pin = std::abs(got - want);

    double worst_rel = 0.0;
    for (std::uint64_t i = 0; i < 20; ++i) {
        double a = 2.0 + 3.0 * keyed_uniform(77, 0, 0, 0, 3 * i);
        double cap = 0.5 * (1.0 - 2.0 / a);
        double eps = 0.9 * cap * keyed_uniform(77, 0, 0, 0, 3 * i + 1);
        auto L = static_cast<std::size_t>(1.0 + keyed_uniform(77, 0, 0, 0, 3 * i + 2) * 64.0);
        if (L > 64) L = 64;
        if (!weak_coupling_ok_affine(a, eps)) {
            out.pass = false;
            out.notes.push_back("draw " + std::to_string(i) + " left the weak-coupling region");
            continue;
        }
        kernel k = laplacian(eps);
        double lhs = gamma_affine(a, k, L);
        double rhs = static_cast<double>(L) * std::log(a / 2.0) +
                     dense_log_abs_det(dense_circulant(k, L));
        worst_rel = std::max(worst_rel, std::abs(lhs - rhs) / std::abs(rhs));
    }

    out.pass = out.pass && err_pin <= 1e-12 && worst_rel <= 1e-9;
    out.detail = "pinned value err " + num(err_pin) + " (tol 1e-12); dense-LU rel err " +
                 num(worst_rel) + " over 20 draws (tol 1e-9)";
    return out;
}

// 02: per-site rates approach the infinite-lattice closed form, the
// approximation error never grows with L, and the closed form agrees with
// direct quadrature.
outcome per_site_limit_and_quadrature() {
    outcome out;
    double closed = gamma_infty_laplacian_closed(3.0, 0.1);

    const std::size_t ls[] = {8, 16, 32, 64};
    double err[4];
    for (int i = 0; i < 4; ++i)
        err[i] = std::abs(gamma_affine(3.0, laplacian(0.1), ls[i]) /
                              static_cast<double>(ls[i]) -
                          closed);
    bool mono = true;
    for (int i = 0; i + 1 < 4; ++i) mono = mono && err[i + 1] <= err[i] + 1e-12;

    double quad_diff = std::abs(closed - gamma_infty(3.0, laplacian(0.1), 1024));

    out.pass = err[3] <= 1e-6 && mono && quad_diff <= 1e-9;
    out.detail = "err(64) " + num(err[3]) + " (tol 1e-6); errors " + num(err[0]) + " -> " +
                 num(err[3]) + " non-increasing: " + (mono ? "yes" : "NO") +
                 "; quadrature diff " + num(quad_diff) + " (tol 1e-9)";
    out.notes.push_back(
        "monotonicity compared with a 1e-12 allowance: past L=16 the error sits at the "
        "rounding floor (~1e-16) where successive values jitter by an ulp");
    return out;
}

// 03: stronger diffusive coupling strictly lowers the rate, at finite L and
// in the infinite-lattice limit.
outcome monotone_decay_in_coupling() {
    outcome out;
    bool strict_l8 = true;
    double prev = gamma_affine(3.0, laplacian(0.0), 8);
    for (int i = 1; i <= 8; ++i) {
        double cur = gamma_affine(3.0, laplacian(0.02 * i), 8);
        strict_l8 = strict_l8 && cur < prev;
        prev = cur;
    }

    bool strict_inf = true;
    double prev_inf = gamma_infty_laplacian_closed(3.0, 0.0);
    for (int i = 1; i <= 4; ++i) {
        double cur = gamma_infty_laplacian_closed(3.0, 0.05 * i);
        strict_inf = strict_inf && cur < prev_inf;
        prev_inf = cur;
    }

    out.pass = strict_l8 && strict_inf;
    out.detail = std::string("L=8 curve strictly decreasing: ") + (strict_l8 ? "yes" : "NO") +
                 "; infinite-lattice curve strictly decreasing: " + (strict_inf ? "yes" : "NO");
    return out;
}

// 04: the particle estimator agrees with the closed form within three
// standard errors (or an absolute 0.02 floor) on a 3x3 grid.
outcome monte_carlo_vs_exact() {
    outcome out;
    local_map m = make_lorenz(3.0);
    double worst_ratio = 0.0;
    double max_point_s = 0.0;
    for (double eps : {0.0, 0.05, 0.1})
        for (std::size_t L : {1, 2, 3}) {
            kernel k = laplacian(eps);
            auto t0 = std::chrono::steady_clock::now();
            rate_estimate est = estimate_rate(m, k, L, 200000, 60, 10, 2026, 1, 1e-3, 1);
            double secs = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t0).count();
            max_point_s = std::max(max_point_s, secs);
            double tol = std::max(3.0 * est.std_err, 0.02);
            double ratio = std::abs(est.gamma - gamma_affine(3.0, k, L)) / tol;
            worst_ratio = std::max(worst_ratio, ratio);
        }
    out.pass = worst_ratio <= 1.0 && max_point_s < 60.0;
    out.detail = "worst |err|/max(3se,0.02) " + num(worst_ratio) +
                 " over 9 points (tol 1); slowest point " + num(max_point_s) +
                 "s (budget 60s)";
    return out;
}

// 05: the partition-function route reproduces the closed form, fixing the
// orientation of the free-energy term.
outcome partition_route_agreement() {
    outcome out;
    local_map m = make_lorenz(3.0);
    double worst = 0.0;
    for (double eps : {0.0, 0.05})
        for (std::size_t L : {1, 2}) {
            kernel k = laplacian(eps);
            double diff = std::abs(gamma_from_partition(m, k, L, 6) - gamma_affine(3.0, k, L));
            worst = std::max(worst, diff);
        }
    out.pass = worst <= 1e-9;
    out.detail = "worst |route diff| " + num(worst) + " (tol 1e-9)";
    return out;
}

// 06: the certified volume sandwich brackets the exact affine survival
// volume at every (L, T, eps) in the small grid.
outcome volume_sandwich() {
    outcome out;
    local_map m = make_lorenz(3.0);
    bool all_ok = true;
    double min_lower = std::numeric_limits<double>::infinity();
    double min_upper = std::numeric_limits<double>::infinity();
    for (double eps : {0.0, 0.05})
        for (std::size_t L : {1, 2})
            for (std::size_t T = 1; T <= 6; ++T) {
                kernel k = laplacian(eps);
                double vol = exact_affine_volume_log(m, k, L, T);
                sandwich_result s = sandwich_check(m, k, L, T, vol);
                all_ok = all_ok && s.ok;
                min_lower = std::min(min_lower, s.lower_slack);
                min_upper = std::min(min_upper, s.upper_slack);
            }
    out.pass = all_ok && min_lower > 0.0 && min_upper >= -1e-9;
    out.detail = "min lower slack " + num(min_lower) + " (> 0); min upper slack " +
                 num(min_upper) + " (>= -1e-9)";
    out.notes.push_back(
        "the affine family saturates the upper bound exactly (the cylinder decomposition "
        "is an identity there), so its slack is zero up to rounding and only the lower "
        "slack can be strictly positive");
    return out;
}

// 07: partition sums are subadditive in time on both map families, and the
// certified lattice-splitting bound has non-negative slack.
outcome subadditivity() {
    outcome out;
    kernel k0 = laplacian(0.0);
    local_map affine = make_lorenz(3.0);
    local_map pert2 = make_perturbed_lorenz(3.0, 0.02);

    double t_aff = subadd_t_check(affine, k0, 1, 8);
    double t_pert = subadd_t_check(pert2, k0, 1, 8);

    subadd_l_result l_aff = subadd_l_check(affine, k0, 1, 1, 4);
    subadd_l_result l_pert = subadd_l_check(pert2, k0, 1, 1, 4);

    out.pass = t_aff <= 1e-9 && t_pert <= 1e-6 && l_aff.slack >= -1e-12 &&
               l_pert.slack >= 0.0;
    out.detail = "time: affine worst " + num(t_aff) + " (tol 1e-9), perturbed worst " +
                 num(t_pert) + " (tol 1e-6); lattice slack: affine " + num(l_aff.slack) +
                 " (>= -1e-12), perturbed " + num(l_pert.slack) + " (>= 0)";
    out.notes.push_back(
        "checks run on the uncoupled lattice (laplacian(0)); the affine lattice slack is "
        "structurally an exact zero, so a 1e-12 rounding floor stands in for >= 0");
    return out;
}

// 08: every sampled pair of orbits sharing a coding block stays within the
// certified distortion constant, per site.
outcome distortion_certificate() {
    outcome out;
    local_map m = make_perturbed_lorenz(3.0, 0.05);
    kernel k = laplacian(0.05);
    double log_c1 = std::log(distortion_constants(m, k).c1);

    double worst = 0.0;
    for (std::size_t L : {1, 2})
        for (std::size_t T : {4, 8})
            worst = std::max(worst, verify_distortion(m, k, L, T, 250, 2026));

    out.pass = worst <= log_c1;
    out.detail = "max per-site |log ratio| " + num(worst) + " over 1000 pairs vs log c1 " +
                 num(log_c1);
    return out;
}

// 09: rate = Lyapunov sum minus entropy, to rounding, across the whole
// parameter grid.
outcome entropy_identity() {
    outcome out;
    double worst = 0.0;
    for (double a : {2.5, 3.0, 4.0})
        for (double eps : {0.0, 0.05, 0.1})
            for (std::size_t L = 1; L <= 8; ++L)
                worst = std::max(worst,
                                 std::abs(entropy_identity_check(a, laplacian(eps), L)));
    out.pass = worst <= 1e-12;
    out.detail = "worst residual " + num(worst) + " over 72 points (tol 1e-12)";
    return out;
}

// 10: the fitted geometric envelope really dominates the inverse kernel at
// every lag, and the localization tail bound is exactly linear in L.
outcome localization_envelope() {
    outcome out;
    inverse_kernel inv = invert_kernel(laplacian(0.1), 2048);
    localization_fit_result fit = localization_fit(inv, 1.0);
    bool envelope = true;
    for (std::size_t n = 0; n < inv.L; ++n) {
        double bound = fit.m1 * std::pow(fit.zeta1, static_cast<double>(inv.dist(n)));
        envelope = envelope && std::abs(inv.coeffs[n]) <= bound;
    }

    distortion_consts d = distortion_constants(make_lorenz(3.0), laplacian(0.1));
    bool linear = true;
    for (std::size_t L = 1; L <= 64; ++L)
        linear = linear && sigma_prime_bound(d, L) ==
                               static_cast<double>(L) * sigma_prime_bound(d, 1);

    out.pass = envelope && linear;
    out.detail = std::string("envelope holds at all 2048 lags (unit prefactor): ") +
                 (envelope ? "yes" : "NO") + ", m1 " + num(fit.m1) + ", zeta1 " +
                 num(fit.zeta1) + "; tail bound exactly linear in L (1..64): " +
                 (linear ? "yes" : "NO");
    return out;
}

} // namespace

int main() {
    struct criterion {
        const char* label;
        double budget_s;
        std::function<outcome()> body;
    };

    const std::vector<criterion> criteria = {
        {"affine rate: pinned value and dense circulant determinant", 1.0,
         affine_closed_form_vs_dense_determinant},
        {"per-site rate converges to the infinite-lattice closed form", 1.0,
         per_site_limit_and_quadrature},
        {"rate decreases strictly with coupling strength", 1.0, monotone_decay_in_coupling},
        {"particle Monte Carlo matches the closed form", 540.0, monte_carlo_vs_exact},
        {"partition-function route matches the closed form", 10.0, partition_route_agreement},
        {"certified volume sandwich brackets the exact volume", 10.0, volume_sandwich},
        {"partition sums are subadditive in time and lattice size", 30.0, subadditivity},
        {"sampled cylinder distortion stays below the certified constant", 60.0,
         distortion_certificate},
        {"escape rate equals Lyapunov sum minus entropy", 1.0, entropy_identity},
        {"inverse-kernel localization envelope and linear tail bound", 1.0,
         localization_envelope},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        auto t0 = std::chrono::steady_clock::now();
        outcome res;
        try {
            res = criteria[i].body();
        } catch (const std::exception& e) {
            res.pass = false;
            res.detail = std::string("unexpected exception: ") + e.what();
        }
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > criteria[i].budget_s) {
            res.pass = false;
            res.notes.push_back("runtime " + num(secs) + "s exceeded the " +
                                num(criteria[i].budget_s) + "s budget");
        }
        if (!res.pass) ++failed;
        std::printf("[%02zu] %s %s (%s) [%.2fs]\n", i + 1, res.pass ? "PASS" : "FAIL",
                    criteria[i].label, res.detail.c_str(), secs);
        for (const std::string& note : res.notes)
            std::printf("     note: %s\n", note.c_str());
    }

    std::printf("acceptance: %zu/%zu passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
