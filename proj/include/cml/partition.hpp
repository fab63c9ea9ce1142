#pragma once

#include <cstdint>
#include <vector>

#include "cml/dynamics.hpp"

namespace cml {

// Certified constants controlling distortion along backward orbits.
struct distortion_consts {
    double alpha = 0.0;       // |C^-1| / inf|f'|, must be < 1
    double beta = 0.0;        // sup|f''| / inf|f'|
    double big_m = 0.0;       // 2 * sup |f| over the hold set
    double c1 = 1.0;          // exp(alpha*beta*M / (1-alpha)), 1 iff beta = 0
    double iota = 0.0;        // 1 / inf|f'|
    double c_cal_norm = 0.0;  // iota * l1 norm of the inverse kernel
    double m1 = 0.0;          // localization envelope amplitude
    double zeta1 = 0.0;       // localization envelope rate
};

// Full constants including the exponential-localization fit of the inverse
// kernel, computed on a reference lattice of size L_loc.
distortion_consts distortion_constants(const local_map& map, const kernel& k,
                                       std::size_t L_loc = 2048);

struct partition_value {
    double log_z_point = 0.0;   // sum over words of the point-evaluated products
    double log_z_upper = 0.0;   // certified: point + L * log c1
    double word_count_log = 0.0;
    std::size_t L = 0;
    std::size_t T = 0;
};

// Partition function over all space-time words (per-site admissible words,
// product structure): for each word, the product over sites and times t < T
// of 1/|f'| evaluated along the word's cylinder-point orbit.  The complete
// sum is accumulated in compensated arithmetic in lexicographic order; the
// number of words is refused (never subsampled) beyond `budget`.  Workers
// split the enumeration by the first site's word prefix; partial sums merge
// in order, so results are reproducible and agree across worker counts to
// rounding.
partition_value partition_z(const local_map& map, const kernel& k, std::size_t L,
                            std::size_t T, std::uint64_t budget = 10'000'000,
                            std::size_t workers = 1);

// Empirical distortion check: sample pairs of cylinder points sharing their
// first T frames but reached from different tails, and return the maximum
// per-site |log| ratio of the T-step derivative products.  Must stay below
// log c1.
double verify_distortion(const local_map& map, const kernel& k, std::size_t L,
                         std::size_t T, std::size_t n_pairs, std::uint64_t seed);

// min over 1 <= T <= T_max of (1/T) log Z, with the certified companion
// value at the minimizing T.
struct k_l_result {
    double point = 0.0;
    double certified = 0.0;
    std::size_t t_min = 0;
};

k_l_result k_l_estimate(const local_map& map, const kernel& k, std::size_t L,
                        std::size_t T_max, std::uint64_t budget = 10'000'000,
                        std::size_t workers = 1);

// Escape rate through the partition route, log|C|_L - K_L.  The orientation
// is fixed by the affine closed form, see the route-agreement tests.
double gamma_from_partition(const local_map& map, const kernel& k, std::size_t L,
                            std::size_t T_max, std::uint64_t budget = 10'000'000,
                            std::size_t workers = 1);

// Exact survival volume of the affine family after T steps,
// L*log(sum of widths) + T*log(alpha_exact); the uniform measure on the hold
// set is conditionally invariant, so the volume decays geometrically.
double exact_affine_volume_log(const local_map& map, const kernel& k,
                               std::size_t L, std::size_t T);

// Volume sandwich: with cbar = max_i (sum of |I_j| over transitions allowed
// from i) and cunder = min_i |I_i| / c1,
//   L*log(cunder) - T*log|C|_L + log Z  <=  vol_log
//   vol_log  <=  L*log(cbar) - T*log|C|_L + log Z
// using the point value on the lower side and the certified upper value on
// the upper side.  The upper constant is the admissible row sum rather than
// the single largest interval: the volume decomposes into one cylinder per
// word of length T+1, so the final frame contributes the total width of the
// admissible successor intervals per site.  With the single-interval value
// the bound is violated by a factor 2^L on the full shift, as the exact
// affine oracle shows; the row sum is what the cylinder decomposition proves.
// The affine family saturates the upper bound exactly (zero slack).
struct sandwich_result {
    bool ok = false;
    double lower_slack = 0.0;  // vol_log - lower bound
    double upper_slack = 0.0;  // upper bound - vol_log
};

sandwich_result sandwich_check(const local_map& map, const kernel& k, std::size_t L,
                               std::size_t T, double vol_log,
                               std::uint64_t budget = 10'000'000,
                               std::size_t workers = 1);

// Worst certified subadditivity violation in time:
//   max over T1 + T2 <= T_max of  log Z(T1+T2) point  -  upper(T1) - upper(T2).
// The point value sits below the true partition function and the certified
// values sit above it, so the result is guaranteed <= 0 up to rounding.
double subadd_t_check(const local_map& map, const kernel& k, std::size_t L,
                      std::size_t T_max, std::uint64_t budget = 10'000'000,
                      std::size_t workers = 1);

// Certified slack of subadditivity in the lattice size:
//   upper(L1) + upper(L2) + beta*(sigma'(L1) + sigma'(L2)) + remainder
//     - point(L1+L2)  >=  0,
// where sigma' is the localization tail bound and the remainder
// beta*T*|Ccal|*M/(1-|Ccal|) is the coarse finite-T interaction term across
// the two cuts, reported separately from the paper-backed sigma' part.
struct subadd_l_result {
    double slack = 0.0;
    double sigma_term = 0.0;
    double remainder_term = 0.0;
};

subadd_l_result subadd_l_check(const local_map& map, const kernel& k,
                               std::size_t L1, std::size_t L2, std::size_t T,
                               std::uint64_t budget = 10'000'000,
                               std::size_t workers = 1);

// Appendix-style tail bound big_m * L * |Ccal| / (1 - |Ccal|), exactly linear
// in L by construction.
double sigma_prime_bound(const distortion_consts& consts, std::size_t L);

} // namespace cml
