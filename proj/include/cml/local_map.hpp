#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cml/errors.hpp"

namespace cml {

// Symbols are 1-based branch indices, matching the usual coding-space
// convention; 0 is never a valid symbol.
using symbol = int;

struct interval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
    double midpoint() const { return 0.5 * (lo + hi); }
    bool contains(double x) const { return lo <= x && x <= hi; }
};

// One full branch of the local map, f(x) = slope*x + offset + eta*sin(2*pi*x).
// The formula is defined on all of R; `domain` is the hold interval the branch
// codes.  Monotonicity (slope - 2*pi*|eta| > 0) is enforced at construction,
// so endpoint evaluation certifies images and the inverse is a bracketed
// Newton solve.
struct branch {
    interval domain;
    double slope = 0.0;
    double offset = 0.0;
    double eta = 0.0;

    double f(double x) const;
    double f_prime(double x) const;
    double f_second(double x) const;

    // Certified global bounds, exact for this two-parameter family.
    double deriv_lower() const;   // inf |f'| = slope - 2*pi*|eta|
    double deriv_upper() const;   // sup |f'| = slope + 2*pi*|eta|
    double second_upper() const;  // sup |f''| = 4*pi^2*|eta|

    // Image endpoints of the hold interval (monotone increasing branch).
    interval image() const;

    // Solve f(x) = y for the unique real preimage.
    double inverse(double y, double tol = 1e-15) const;
};

// Boolean branch-to-branch admissibility, entry (i, j) true when the image of
// I_i strictly contains I_j.  Indexed by 1-based symbols.
struct transition_matrix {
    std::size_t n = 0;
    std::vector<char> allowed;  // row-major, (i-1)*n + (j-1)

    bool operator()(symbol i, symbol j) const {
        return allowed[static_cast<std::size_t>(i - 1) * n +
                       static_cast<std::size_t>(j - 1)] != 0;
    }
    bool full() const;
};

struct map_constants {
    double inf_fp = 0.0;        // inf |f'| over all branches
    double beta = 0.0;          // sup |f''| / inf |f'|
    double big_m = 0.0;         // 2 * max |f| over the hold intervals
    double gamma_margin = 0.0;  // min gap between a branch image and an interval it avoids
    double delta_margin = 0.0;  // min containment slack over (image, interval) pairs
    double min_len = 0.0;       // smallest hold interval width
    double max_len = 0.0;       // largest hold interval width
};

// An expanding interval map with finitely many monotone branches over
// pairwise disjoint hold intervals.  Construction validates the Markov
// dichotomy (every branch image either strictly contains or strictly avoids
// every hold interval) and precomputes the transition structure and the
// certified constants.  Immutable afterwards, safe to share across threads.
class local_map {
public:
    local_map(std::string kind, double a, double eta, std::vector<branch> branches);

    std::size_t branch_count() const { return branches_.size(); }
    const std::vector<branch>& branches() const { return branches_; }
    const branch& branch_at(symbol s) const;

    // Symbol of the hold interval containing x, or nullopt in the gaps.
    std::optional<symbol> branch_of(double x) const;

    const transition_matrix& transitions() const { return transitions_; }
    const map_constants& constants() const { return constants_; }

    bool is_affine() const { return eta_ == 0.0; }
    double a() const { return a_; }
    double eta() const { return eta_; }
    const std::string& kind() const { return kind_; }

    // Interval parameters, exposed for serialization round-trips.
    double x_lo() const { return branches_.front().domain.lo; }
    double x_hi() const { return branches_.front().domain.hi; }

    // Decision tolerance for the strict containment / disjointness dichotomy.
    static constexpr double markov_tol = 1e-12;

private:
    std::string kind_;
    double a_ = 0.0;
    double eta_ = 0.0;
    std::vector<branch> branches_;
    transition_matrix transitions_;
    map_constants constants_;
};

// Lorenz-type map f(x) = a*x + (1-a)*H(x - 1/2) with holds I_1 = [x_lo, x_hi]
// and I_2 = 1 - I_1.  Requires a > 2, x_lo < 0 and 1/a < x_hi < 1/2.  The
// interval-free overload picks x_hi = (1/a + 1/2)/2 and x_lo = -(x_hi - 1/a),
// which satisfies the constraints for every a > 2.
local_map make_lorenz(double a, double x_lo, double x_hi);
local_map make_lorenz(double a);

// Same skeleton plus the analytic perturbation eta*sin(2*pi*x) on both
// branches.  Requires a - 2*pi*|eta| > 1 so both branches stay expanding.
local_map make_perturbed_lorenz(double a, double eta, double x_lo, double x_hi);
local_map make_perturbed_lorenz(double a, double eta);

// Number of admissible symbol words of length T, as an exact integer.
// Throws count_overflow when the count does not fit in 64 bits.
std::uint64_t admissible_word_count(const transition_matrix& m, std::size_t T);

// True when every symbol reaches every other within at most n steps.
bool transitivity_check(const transition_matrix& m);

} // namespace cml
