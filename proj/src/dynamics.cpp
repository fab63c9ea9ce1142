#include "cml/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace cml {

bool word_admissible(const transition_matrix& m, const space_time_word& word) {
    for (const symbol_frame& f : word.frames)
        if (f.size() != word.L) return false;
    for (std::size_t t = 0; t + 1 < word.frames.size(); ++t)
        for (std::size_t s = 0; s < word.L; ++s)
            if (!m(word.frames[t][s], word.frames[t + 1][s])) return false;
    return true;
}

step_result step(const local_map& map, const kernel& k, const lattice_state& x) {
    step_result out;
    lattice_state y(x.size());
    for (std::size_t s = 0; s < x.size(); ++s) {
        auto sym = map.branch_of(x[s]);
        if (!sym) {
            out.escaped = true;
            out.site = s;
            return out;
        }
        y[s] = map.branch_at(*sym).f(x[s]);
    }
    out.state = apply(k, x.size(), y);
    return out;
}

std::optional<symbol_frame> locate(const local_map& map, const lattice_state& x) {
    symbol_frame frame(x.size());
    for (std::size_t s = 0; s < x.size(); ++s) {
        auto sym = map.branch_of(x[s]);
        if (!sym) return std::nullopt;
        frame[s] = *sym;
    }
    return frame;
}

bool weak_coupling_ok_affine(double a, double eps) {
    if (!(a > 2.0) || !(eps >= 0.0 && eps <= 1.0))
        throw parameter_violation("affine criterion needs a > 2 and eps in [0, 1]");
    return a * (1.0 - 2.0 * eps) > 2.0;
}

threshold_report weak_coupling_ok_general(const map_constants& consts, const kernel& k) {
    threshold_report rep;
    rep.norm = id_minus_c_norm(k);
    rep.affine_ok = consts.inf_fp * (2.0 * k.c0() - 1.0) > 2.0;
    double r = 0.5 * consts.big_m;
    double gap_term = std::isinf(consts.gamma_margin)
                          ? std::numeric_limits<double>::infinity()
                          : 2.0 * consts.gamma_margin / consts.big_m;
    double containment_term = consts.delta_margin / (consts.delta_margin + r);
    rep.general_bound = std::min(gap_term, containment_term);
    rep.verdict = rep.norm < rep.general_bound;
    return rep;
}

orbit_summary survival_orbit(const local_map& map, const kernel& k,
                             const lattice_state& x, std::size_t T) {
    orbit_summary out;
    out.word.L = x.size();
    lattice_state cur = x;
    for (std::size_t t = 0; t <= T; ++t) {
        auto frame = locate(map, cur);
        if (!frame) {
            out.escape_time = t;
            return out;
        }
        out.word.frames.push_back(std::move(*frame));
        if (t == T) break;
        lattice_state y(cur.size());
        for (std::size_t s = 0; s < cur.size(); ++s)
            y[s] = map.branch_at(out.word.frames.back()[s]).f(cur[s]);
        cur = apply(k, cur.size(), y);
    }
    out.survived = true;
    return out;
}

backward_engine::backward_engine(const local_map& map, const kernel& k,
                                 std::size_t L, double tol)
    : map_(&map), L_(L), tol_(tol) {
    if (L < 1) throw parameter_violation("lattice size must be at least 1");
    if (!(tol > 0.0)) throw parameter_violation("tolerance must be positive");

    // Gate on the weak-coupling criterion appropriate to the family before
    // trusting backward contraction at all.
    const map_constants& consts = map.constants();
    if (map.is_affine()) {
        if (!(consts.inf_fp * (2.0 * k.c0() - 1.0) > 2.0))
            throw not_contracting("affine weak-coupling criterion fails");
    } else {
        threshold_report rep = weak_coupling_ok_general(consts, k);
        if (!rep.verdict)
            throw not_contracting("coupling norm exceeds the certified threshold");
    }

    inv_ = invert_kernel(k, L);
    alpha_ = inv_.l1_norm() / consts.inf_fp;
    if (!(alpha_ < 1.0))
        throw not_contracting("backward map is not a certified contraction");
}

void backward_engine::pull_back(const symbol_frame& frame, lattice_state& z) const {
    // First undo the coupling, then invert the named branch at each site.
    lattice_state w(L_, 0.0);
    for (std::size_t s = 0; s < L_; ++s) {
        double acc = 0.0;
        for (std::size_t n = 0; n < L_; ++n)
            acc += inv_.coeffs[n] * z[(s + L_ - n) % L_];
        w[s] = acc;
    }
    for (std::size_t s = 0; s < L_; ++s)
        z[s] = map_->branch_at(frame[s]).inverse(w[s]);
}

std::vector<symbol_frame> backward_engine::closing_frames(const space_time_word& word) const {
    const transition_matrix& m = map_->transitions();
    const symbol_frame& last = word.frames.back();
    const symbol_frame& first = word.frames.front();
    std::size_t n = map_->branch_count();

    // c = 0 means the wrap pair is already admissible at every site.
    std::size_t cap = 2 * n * n + 2;
    for (std::size_t c = 0; c <= cap; ++c) {
        // Per site, reachability from last[s] to first[s] in c + 1 steps.
        std::vector<symbol_frame> frames(c, symbol_frame(L_, 0));
        bool feasible = true;
        for (std::size_t s = 0; s < L_ && feasible; ++s) {
            // ok[t][j - 1]: an admissible path of length c + 1 - t from j to
            // first[s] exists.
            std::vector<std::vector<char>> ok(c + 2, std::vector<char>(n, 0));
            ok[c + 1][static_cast<std::size_t>(first[s] - 1)] = 1;
            for (std::size_t t = c + 1; t-- > 0;)
                for (std::size_t j = 0; j < n; ++j)
                    for (std::size_t kk = 0; kk < n && !ok[t][j]; ++kk)
                        if (m(static_cast<symbol>(j + 1), static_cast<symbol>(kk + 1)) &&
                            ok[t + 1][kk])
                            ok[t][j] = 1;
            if (!ok[0][static_cast<std::size_t>(last[s] - 1)]) {
                feasible = false;
                break;
            }
            symbol cur = last[s];
            for (std::size_t t = 1; t <= c; ++t) {
                for (std::size_t kk = 0; kk < n; ++kk) {
                    symbol cand = static_cast<symbol>(kk + 1);
                    if (m(cur, cand) && ok[t][kk]) {
                        frames[t - 1][s] = cand;
                        cur = cand;
                        break;
                    }
                }
            }
        }
        if (feasible) return frames;
    }
    throw parameter_violation("word admits no periodic closure under the transition matrix");
}

backward_engine::orbit backward_engine::point_with_orbit(const space_time_word& word) const {
    std::size_t T = word.T();
    if (T < 1) throw parameter_violation("word must have at least one frame");
    if (word.L != L_) throw parameter_violation("word lattice size mismatch");
    if (!word_admissible(map_->transitions(), word))
        throw parameter_violation("word is not admissible");

    std::vector<symbol_frame> closing = closing_frames(word);
    std::size_t period = T + closing.size();

    // Stopping threshold: successive sweep outputs within tol, tightened so
    // that the distance to the limit (geometric with ratio alpha^period) is
    // also below tol.
    double contraction = std::pow(alpha_, static_cast<double>(period));
    double thr = tol_;
    if (contraction > 0.0)
        thr = std::min(tol_, tol_ * (1.0 - contraction) / contraction);

    // Seed at the interval midpoints of the final frame.
    lattice_state z(L_);
    for (std::size_t s = 0; s < L_; ++s)
        z[s] = map_->branch_at(word.frames.back()[s]).domain.midpoint();

    orbit out;
    out.states.assign(T, lattice_state(L_, 0.0));
    for (std::size_t sweep = 0; sweep < sweep_cap; ++sweep) {
        lattice_state prev = z;
        for (std::size_t t = closing.size(); t-- > 0;) pull_back(closing[t], z);
        for (std::size_t t = T; t-- > 0;) {
            pull_back(word.frames[t], z);
            out.states[t] = z;
        }
        double diff = 0.0;
        for (std::size_t s = 0; s < L_; ++s)
            diff = std::max(diff, std::abs(z[s] - prev[s]));
        if (diff < thr) {
            out.x0 = z;
            // The post-condition is part of the contract: the forward orbit
            // of the returned point must realize the word symbol-for-symbol.
            for (std::size_t t = 0; t < T; ++t) {
                auto frame = locate(*map_, out.states[t]);
                if (!frame || *frame != word.frames[t])
                    throw no_convergence("converged point does not realize the word");
            }
            return out;
        }
    }
    throw no_convergence("backward sweeps did not reach tolerance");
}

lattice_state backward_engine::point(const space_time_word& word) const {
    return point_with_orbit(word).x0;
}

lattice_state cylinder_point(const local_map& map, const kernel& k,
                             const space_time_word& word, double tol) {
    backward_engine engine(map, k, word.L, tol);
    return engine.point(word);
}

} // namespace cml
