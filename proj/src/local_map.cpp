#include "cml/local_map.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

namespace cml {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

std::string pair_label(symbol i, symbol j) {
    std::ostringstream os;
    os << "(" << i << ", " << j << ")";
    return os.str();
}

} // namespace

double branch::f(double x) const {
    double y = slope * x + offset;
    if (eta != 0.0) y += eta * std::sin(two_pi * x);
    return y;
}

double branch::f_prime(double x) const {
    double d = slope;
    if (eta != 0.0) d += eta * two_pi * std::cos(two_pi * x);
    return d;
}

double branch::f_second(double x) const {
    if (eta == 0.0) return 0.0;
    return -eta * two_pi * two_pi * std::sin(two_pi * x);
}

double branch::deriv_lower() const { return slope - two_pi * std::abs(eta); }

double branch::deriv_upper() const { return slope + two_pi * std::abs(eta); }

double branch::second_upper() const { return two_pi * two_pi * std::abs(eta); }

interval branch::image() const { return {f(domain.lo), f(domain.hi)}; }

double branch::inverse(double y, double tol) const {
    if (eta == 0.0) return (y - offset) / slope;

    // The sine term keeps the preimage within |eta|/slope of the affine
    // solution, which gives a guaranteed bracket for the safeguarded Newton
    // iteration below.
    double pad = std::abs(eta) / slope;
    double lo = (y - offset) / slope - pad;
    double hi = (y - offset) / slope + pad;
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        double g = f(x) - y;
        if (g > 0.0) hi = x; else lo = x;
        double step = g / f_prime(x);
        double next = x - step;
        if (next <= lo || next >= hi) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= tol * std::max(1.0, std::abs(x))) return next;
        x = next;
    }
    throw no_convergence("branch inverse did not reach tolerance");
}

bool transition_matrix::full() const {
    return std::all_of(allowed.begin(), allowed.end(), [](char c) { return c != 0; });
}

namespace {

transition_matrix build_transitions(const std::vector<branch>& branches, double tol) {
    std::size_t n = branches.size();
    transition_matrix m{n, std::vector<char>(n * n, 0)};
    for (std::size_t i = 0; i < n; ++i) {
        interval img = branches[i].image();
        for (std::size_t j = 0; j < n; ++j) {
            const interval& tgt = branches[j].domain;
            bool contained = tgt.lo - img.lo >= tol && img.hi - tgt.hi >= tol;
            bool disjoint = tgt.lo - img.hi >= tol || img.lo - tgt.hi >= tol;
            if (contained) {
                m.allowed[i * n + j] = 1;
            } else if (!disjoint) {
                throw markov_violation(
                    "branch image neither contains nor avoids interval, pair " +
                    pair_label(static_cast<symbol>(i + 1), static_cast<symbol>(j + 1)));
            }
        }
    }
    return m;
}

map_constants build_constants(const std::vector<branch>& branches,
                              const transition_matrix& m) {
    map_constants c;
    c.inf_fp = std::numeric_limits<double>::infinity();
    c.gamma_margin = std::numeric_limits<double>::infinity();
    c.delta_margin = std::numeric_limits<double>::infinity();
    c.min_len = std::numeric_limits<double>::infinity();

    double sup_second = 0.0;
    for (const branch& b : branches) {
        c.inf_fp = std::min(c.inf_fp, b.deriv_lower());
        sup_second = std::max(sup_second, b.second_upper());
        interval img = b.image();
        c.big_m = std::max(c.big_m, 2.0 * std::max(std::abs(img.lo), std::abs(img.hi)));
        c.min_len = std::min(c.min_len, b.domain.width());
        c.max_len = std::max(c.max_len, b.domain.width());
    }
    c.beta = sup_second / c.inf_fp;

    std::size_t n = branches.size();
    for (std::size_t i = 0; i < n; ++i) {
        interval img = branches[i].image();
        for (std::size_t j = 0; j < n; ++j) {
            const interval& tgt = branches[j].domain;
            if (m.allowed[i * n + j]) {
                double slack = std::min(tgt.lo - img.lo, img.hi - tgt.hi);
                c.delta_margin = std::min(c.delta_margin, slack);
            } else {
                double gap = std::max(tgt.lo - img.hi, img.lo - tgt.hi);
                c.gamma_margin = std::min(c.gamma_margin, gap);
            }
        }
    }
    return c;
}

} // namespace

local_map::local_map(std::string kind, double a, double eta, std::vector<branch> branches)
    : kind_(std::move(kind)), a_(a), eta_(eta), branches_(std::move(branches)) {
    if (branches_.empty())
        throw parameter_violation("local map needs at least one branch");
    for (const branch& b : branches_) {
        if (b.domain.lo >= b.domain.hi)
            throw parameter_violation("hold interval is empty");
        if (b.deriv_lower() <= 1.0)
            throw parameter_violation("branch is not uniformly expanding");
    }
    // Hold intervals must be pairwise disjoint so that branch_of is
    // unambiguous; check with the same strict tolerance as the dichotomy.
    for (std::size_t i = 0; i < branches_.size(); ++i)
        for (std::size_t j = i + 1; j < branches_.size(); ++j) {
            const interval& p = branches_[i].domain;
            const interval& q = branches_[j].domain;
            double gap = std::max(q.lo - p.hi, p.lo - q.hi);
            if (gap < markov_tol)
                throw parameter_violation("hold intervals overlap or touch");
        }
    transitions_ = build_transitions(branches_, markov_tol);
    constants_ = build_constants(branches_, transitions_);
}

const branch& local_map::branch_at(symbol s) const {
    if (s < 1 || static_cast<std::size_t>(s) > branches_.size())
        throw parameter_violation("symbol out of range");
    return branches_[static_cast<std::size_t>(s - 1)];
}

std::optional<symbol> local_map::branch_of(double x) const {
    for (std::size_t i = 0; i < branches_.size(); ++i)
        if (branches_[i].domain.contains(x)) return static_cast<symbol>(i + 1);
    return std::nullopt;
}

namespace {

void check_lorenz_params(double a, double eta, double x_lo, double x_hi) {
    if (!(a > 2.0))
        throw parameter_violation("lorenz map requires a > 2");
    if (!(a - two_pi * std::abs(eta) > 1.0))
        throw parameter_violation("perturbation destroys expansion, need a - 2*pi*|eta| > 1");
    if (!(x_lo < 0.0))
        throw parameter_violation("left hold endpoint must satisfy x_lo < 0");
    if (!(x_hi > 1.0 / a && x_hi < 0.5))
        throw parameter_violation("right hold endpoint must satisfy 1/a < x_hi < 1/2");
}

local_map make_lorenz_family(std::string kind, double a, double eta,
                             double x_lo, double x_hi) {
    check_lorenz_params(a, eta, x_lo, x_hi);
    std::vector<branch> branches(2);
    branches[0] = branch{{x_lo, x_hi}, a, 0.0, eta};
    branches[1] = branch{{1.0 - x_hi, 1.0 - x_lo}, a, 1.0 - a, eta};
    return local_map(std::move(kind), a, eta, std::move(branches));
}

std::pair<double, double> default_interval(double a) {
    double x_hi = 0.5 * (1.0 / a + 0.5);
    double x_lo = -(x_hi - 1.0 / a);
    return {x_lo, x_hi};
}

} // namespace

local_map make_lorenz(double a, double x_lo, double x_hi) {
    return make_lorenz_family("lorenz", a, 0.0, x_lo, x_hi);
}

local_map make_lorenz(double a) {
    auto [lo, hi] = default_interval(a);
    return make_lorenz(a, lo, hi);
}

local_map make_perturbed_lorenz(double a, double eta, double x_lo, double x_hi) {
    return make_lorenz_family("perturbed", a, eta, x_lo, x_hi);
}

local_map make_perturbed_lorenz(double a, double eta) {
    auto [lo, hi] = default_interval(a);
    return make_perturbed_lorenz(a, eta, lo, hi);
}

std::uint64_t admissible_word_count(const transition_matrix& m, std::size_t T) {
    if (T < 1) throw parameter_violation("word length must be at least 1");
    std::size_t n = m.n;
    std::vector<std::uint64_t> v(n, 1);
    for (std::size_t t = 1; t < T; ++t) {
        std::vector<std::uint64_t> next(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t acc = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (!m.allowed[i * n + j]) continue;
                if (__builtin_add_overflow(acc, v[j], &acc))
                    throw count_overflow("admissible word count exceeds 64 bits");
            }
            next[i] = acc;
        }
        v.swap(next);
    }
    std::uint64_t total = 0;
    for (std::uint64_t x : v)
        if (__builtin_add_overflow(total, x, &total))
            throw count_overflow("admissible word count exceeds 64 bits");
    return total;
}

bool transitivity_check(const transition_matrix& m) {
    std::size_t n = m.n;
    // Accumulate boolean powers A, A^2, ..., A^n; transitive means the union
    // has no zero entry.
    std::vector<char> power = m.allowed;
    std::vector<char> reach = m.allowed;
    for (std::size_t t = 2; t <= n; ++t) {
        std::vector<char> next(n * n, 0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                if (!power[i * n + k]) continue;
                for (std::size_t j = 0; j < n; ++j)
                    if (m.allowed[k * n + j]) next[i * n + j] = 1;
            }
        power.swap(next);
        for (std::size_t idx = 0; idx < n * n; ++idx)
            reach[idx] = static_cast<char>(reach[idx] | power[idx]);
    }
    return std::all_of(reach.begin(), reach.end(), [](char c) { return c != 0; });
}

} // namespace cml
