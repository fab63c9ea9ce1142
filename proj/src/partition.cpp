#include "cml/partition.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "cml/rates_exact.hpp"
#include "cml/rng.hpp"

namespace cml {

namespace {

// Compensated accumulator; partial sums merge by feeding (sum, comp) pairs
// into the downstream accumulator in enumeration order.
struct kahan_sum {
    double s = 0.0;
    double c = 0.0;

    void add(double x) {
        double y = x - c;
        double t = s + y;
        c = (t - s) - y;
        s = t;
    }
};

// The cheap distortion core: everything except the localization fit.
struct core_consts {
    double alpha = 0.0;
    double beta = 0.0;
    double big_m = 0.0;
    double c1 = 1.0;
    double iota = 0.0;
};

core_consts core_constants(const local_map& map, const kernel& k) {
    const map_constants& mc = map.constants();
    double norm = id_minus_c_norm(k);
    if (!(norm < 1.0))
        throw not_contracting("coupling norm reaches 1, no Neumann inverse bound");
    core_consts out;
    out.iota = 1.0 / mc.inf_fp;
    out.alpha = (1.0 / (1.0 - norm)) / mc.inf_fp;
    if (!(out.alpha < 1.0))
        throw not_contracting("certified backward contraction factor reaches 1");
    out.beta = mc.beta;
    out.big_m = mc.big_m;
    out.c1 = std::exp(out.alpha * out.beta * out.big_m / (1.0 - out.alpha));
    return out;
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b, const char* what) {
    std::uint64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) throw budget_exceeded(what);
    return r;
}

// Lexicographic enumeration of admissible single-site words of length T,
// with unranking for worker partitioning.
class word_space {
public:
    word_space(const transition_matrix& m, std::size_t T) : m_(&m), T_(T) {
        std::size_t n = m.n;
        suffix_.assign(T, std::vector<std::uint64_t>(n, 0));
        for (std::size_t j = 0; j < n; ++j) suffix_[T - 1][j] = 1;
        for (std::size_t t = T - 1; t-- > 0;)
            for (std::size_t j = 0; j < n; ++j) {
                std::uint64_t acc = 0;
                for (std::size_t kk = 0; kk < n; ++kk) {
                    if (!m(static_cast<symbol>(j + 1), static_cast<symbol>(kk + 1)))
                        continue;
                    if (__builtin_add_overflow(acc, suffix_[t + 1][kk], &acc))
                        throw count_overflow("admissible word count exceeds 64 bits");
                }
                suffix_[t][j] = acc;
            }
        total_ = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (__builtin_add_overflow(total_, suffix_[0][j], &total_))
                throw count_overflow("admissible word count exceeds 64 bits");
    }

    std::uint64_t total() const { return total_; }

    std::vector<symbol> word(std::uint64_t index) const {
        std::size_t n = m_->n;
        std::vector<symbol> w(T_);
        for (std::size_t t = 0; t < T_; ++t) {
            bool placed = false;
            for (std::size_t j = 0; j < n; ++j) {
                symbol cand = static_cast<symbol>(j + 1);
                if (t > 0 && !(*m_)(w[t - 1], cand)) continue;
                std::uint64_t block = suffix_[t][j];
                if (index < block) {
                    w[t] = cand;
                    placed = true;
                    break;
                }
                index -= block;
            }
            if (!placed) throw parameter_violation("word index out of range");
        }
        return w;
    }

    // Advance to the lexicographic successor; false when w was the last word.
    bool next_in_place(std::vector<symbol>& w) const {
        std::size_t n = m_->n;
        for (std::size_t t = T_; t-- > 0;) {
            for (std::size_t j = static_cast<std::size_t>(w[t]); j < n; ++j) {
                symbol cand = static_cast<symbol>(j + 1);
                if (t > 0 && !(*m_)(w[t - 1], cand)) continue;
                if (suffix_[t][j] == 0) continue;
                w[t] = cand;
                fill_minimal(w, t + 1);
                return true;
            }
        }
        return false;
    }

    void first_word(std::vector<symbol>& w) const {
        w.assign(T_, 0);
        fill_minimal(w, 0);
    }

private:
    void fill_minimal(std::vector<symbol>& w, std::size_t from) const {
        std::size_t n = m_->n;
        for (std::size_t t = from; t < T_; ++t) {
            bool placed = false;
            for (std::size_t j = 0; j < n; ++j) {
                symbol cand = static_cast<symbol>(j + 1);
                if (t > 0 && !(*m_)(w[t - 1], cand)) continue;
                if (suffix_[t][j] == 0) continue;
                w[t] = cand;
                placed = true;
                break;
            }
            if (!placed) throw parameter_violation("transition matrix has a dead row");
        }
    }

    const transition_matrix* m_;
    std::size_t T_;
    std::uint64_t total_ = 0;
    std::vector<std::vector<std::uint64_t>> suffix_;
};

// Sum the derivative products over the tuple range [first, last) of site-0
// word indices, inner sites cycling over the full word list per step.
kahan_sum sum_range(const local_map& map, const backward_engine& engine,
                    const word_space& ws, std::size_t L, std::size_t T,
                    std::uint64_t first, std::uint64_t last) {
    kahan_sum acc;
    if (first >= last) return acc;

    std::vector<std::vector<symbol>> site_words(L);
    site_words[0] = ws.word(first);

    space_time_word word;
    word.L = L;
    word.frames.assign(T, symbol_frame(L));

    for (std::uint64_t k0 = first; k0 < last; ++k0) {
        for (std::size_t s = 1; s < L; ++s) ws.first_word(site_words[s]);
        bool more_inner = true;
        while (more_inner) {
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t s = 0; s < L; ++s)
                    word.frames[t][s] = site_words[s][t];

            backward_engine::orbit orb = engine.point_with_orbit(word);
            double prod = 1.0;
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t s = 0; s < L; ++s) {
                    const branch& b = map.branch_at(word.frames[t][s]);
                    prod *= 1.0 / std::abs(b.f_prime(orb.states[t][s]));
                }
            acc.add(prod);

            // Advance the inner odometer, last site fastest; carries that
            // pass site 1 exhaust the inner block.
            more_inner = false;
            for (std::size_t s = L; s-- > 1;) {
                if (ws.next_in_place(site_words[s])) {
                    more_inner = true;
                    break;
                }
                ws.first_word(site_words[s]);
            }
        }
        if (k0 + 1 < last && !ws.next_in_place(site_words[0]))
            throw parameter_violation("word enumeration ended early");
    }
    return acc;
}

} // namespace

distortion_consts distortion_constants(const local_map& map, const kernel& k,
                                       std::size_t L_loc) {
    core_consts core = core_constants(map, k);
    distortion_consts out;
    out.alpha = core.alpha;
    out.beta = core.beta;
    out.big_m = core.big_m;
    out.c1 = core.c1;
    out.iota = core.iota;

    inverse_kernel inv = invert_kernel(k, L_loc);
    out.c_cal_norm = core.iota * inv.l1_norm();
    localization_fit_result fit = localization_fit(inv, core.iota);
    out.m1 = fit.m1;
    out.zeta1 = fit.zeta1;
    return out;
}

partition_value partition_z(const local_map& map, const kernel& k, std::size_t L,
                            std::size_t T, std::uint64_t budget, std::size_t workers) {
    if (L < 1 || T < 1)
        throw parameter_violation("partition function needs L >= 1 and T >= 1");

    std::uint64_t count = 0;
    const transition_matrix& m = map.transitions();
    try {
        count = word_space(m, T).total();
        std::uint64_t tuples = 1;
        for (std::size_t s = 0; s < L; ++s)
            tuples = checked_mul(tuples, count, "space-time word count exceeds 64 bits");
        if (tuples > budget)
            throw budget_exceeded("enumeration needs " + std::to_string(tuples) +
                                  " words, budget is " + std::to_string(budget));
    } catch (const count_overflow& e) {
        throw budget_exceeded(std::string("word count overflows 64 bits: ") + e.what());
    }

    word_space ws(m, T);
    backward_engine engine(map, k, L);
    core_consts core = core_constants(map, k);

    std::size_t w_eff = std::max<std::size_t>(1, std::min<std::size_t>(workers, count));
    std::vector<kahan_sum> partial(w_eff);
    if (w_eff == 1) {
        partial[0] = sum_range(map, engine, ws, L, T, 0, count);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < w_eff; ++w) {
            std::uint64_t lo = count * w / w_eff;
            std::uint64_t hi = count * (w + 1) / w_eff;
            pool.emplace_back([&, w, lo, hi] {
                partial[w] = sum_range(map, engine, ws, L, T, lo, hi);
            });
        }
        for (auto& th : pool) th.join();
    }

    kahan_sum total;
    for (const kahan_sum& p : partial) {
        total.add(p.s);
        total.add(p.c);
    }

    partition_value out;
    out.L = L;
    out.T = T;
    out.log_z_point = std::log(total.s);
    out.log_z_upper = out.log_z_point + static_cast<double>(L) * std::log(core.c1);
    out.word_count_log = static_cast<double>(L) * std::log(static_cast<double>(count));
    return out;
}

namespace {

symbol_frame random_start_frame(const local_map& map, std::uint64_t seed,
                                std::uint32_t pair, std::size_t L, std::uint64_t& idx) {
    auto n = static_cast<std::uint32_t>(map.branch_count());
    symbol_frame f(L);
    for (std::size_t s = 0; s < L; ++s) {
        double u = keyed_uniform(seed, 0, pair, 3, idx++);
        f[s] = static_cast<symbol>(1 + std::min<std::uint32_t>(
                                           n - 1, static_cast<std::uint32_t>(u * n)));
    }
    return f;
}

void append_random_frames(const local_map& map, space_time_word& word,
                          std::size_t count, std::uint64_t seed, std::uint32_t pair,
                          std::uint64_t& idx) {
    const transition_matrix& m = map.transitions();
    auto n = static_cast<symbol>(map.branch_count());
    for (std::size_t step_i = 0; step_i < count; ++step_i) {
        const symbol_frame& prev = word.frames.back();
        symbol_frame next(word.L);
        for (std::size_t s = 0; s < word.L; ++s) {
            std::vector<symbol> allowed;
            for (symbol j = 1; j <= n; ++j)
                if (m(prev[s], j)) allowed.push_back(j);
            if (allowed.empty())
                throw parameter_violation("transition matrix has a dead row");
            double u = keyed_uniform(seed, 0, pair, 3, idx++);
            auto pick = std::min<std::size_t>(allowed.size() - 1,
                                              static_cast<std::size_t>(u * allowed.size()));
            next[s] = allowed[pick];
        }
        word.frames.push_back(std::move(next));
    }
}

} // namespace

double verify_distortion(const local_map& map, const kernel& k, std::size_t L,
                         std::size_t T, std::size_t n_pairs, std::uint64_t seed) {
    if (T < 1 || L < 1) throw parameter_violation("need L >= 1 and T >= 1");
    backward_engine engine(map, k, L);

    double worst = 0.0;
    for (std::size_t pair_i = 0; pair_i < n_pairs; ++pair_i) {
        auto pair = static_cast<std::uint32_t>(pair_i);
        std::uint64_t idx = 0;

        space_time_word word;
        word.L = L;
        word.frames.push_back(random_start_frame(map, seed, pair, L, idx));
        append_random_frames(map, word, T - 1, seed, pair, idx);

        double u = keyed_uniform(seed, 0, pair, 3, idx++);
        std::size_t extra = 1 + std::min<std::size_t>(3, static_cast<std::size_t>(u * 4.0));
        space_time_word longer = word;
        append_random_frames(map, longer, extra, seed, pair, idx);

        backward_engine::orbit a = engine.point_with_orbit(word);
        backward_engine::orbit b = engine.point_with_orbit(longer);

        for (std::size_t s = 0; s < L; ++s) {
            double acc = 0.0;
            for (std::size_t t = 0; t < T; ++t) {
                const branch& br = map.branch_at(word.frames[t][s]);
                acc += std::log(std::abs(br.f_prime(a.states[t][s]))) -
                       std::log(std::abs(br.f_prime(b.states[t][s])));
            }
            worst = std::max(worst, std::abs(acc));
        }
    }
    return worst;
}

k_l_result k_l_estimate(const local_map& map, const kernel& k, std::size_t L,
                        std::size_t T_max, std::uint64_t budget, std::size_t workers) {
    if (T_max < 1) throw parameter_violation("T_max must be at least 1");
    k_l_result out;
    out.point = std::numeric_limits<double>::infinity();
    for (std::size_t T = 1; T <= T_max; ++T) {
        partition_value z = partition_z(map, k, L, T, budget, workers);
        double v = z.log_z_point / static_cast<double>(T);
        if (v < out.point) {
            out.point = v;
            out.certified = z.log_z_upper / static_cast<double>(T);
            out.t_min = T;
        }
    }
    return out;
}

double gamma_from_partition(const local_map& map, const kernel& k, std::size_t L,
                            std::size_t T_max, std::uint64_t budget,
                            std::size_t workers) {
    k_l_result kl = k_l_estimate(map, k, L, T_max, budget, workers);
    return log_abs_det(k, L) - kl.point;
}

double exact_affine_volume_log(const local_map& map, const kernel& k,
                               std::size_t L, std::size_t T) {
    if (!map.is_affine())
        throw parameter_violation("exact volume oracle is affine-only");
    double widths = 0.0;
    for (const branch& b : map.branches()) widths += b.domain.width();
    return static_cast<double>(L) * std::log(widths) -
           static_cast<double>(T) * gamma_affine(map.a(), k, L);
}

sandwich_result sandwich_check(const local_map& map, const kernel& k, std::size_t L,
                               std::size_t T, double vol_log, std::uint64_t budget,
                               std::size_t workers) {
    partition_value z = partition_z(map, k, L, T, budget, workers);
    core_consts core = core_constants(map, k);

    const auto& branches = map.branches();
    const transition_matrix& m = map.transitions();
    double min_w = std::numeric_limits<double>::infinity();
    double row_sum_max = 0.0;
    for (std::size_t i = 0; i < branches.size(); ++i) {
        min_w = std::min(min_w, branches[i].domain.width());
        double row = 0.0;
        for (std::size_t j = 0; j < branches.size(); ++j)
            if (m(static_cast<symbol>(i + 1), static_cast<symbol>(j + 1)))
                row += branches[j].domain.width();
        row_sum_max = std::max(row_sum_max, row);
    }

    double det = log_abs_det(k, L);
    double lower = static_cast<double>(L) * std::log(min_w / core.c1) -
                   static_cast<double>(T) * det + z.log_z_point;
    double upper = static_cast<double>(L) * std::log(row_sum_max) -
                   static_cast<double>(T) * det + z.log_z_upper;

    sandwich_result out;
    out.lower_slack = vol_log - lower;
    out.upper_slack = upper - vol_log;
    // Equality-saturating families (affine upper side) count as holding
    // within a rounding allowance.
    out.ok = out.lower_slack >= -1e-9 && out.upper_slack >= -1e-9;
    return out;
}

double subadd_t_check(const local_map& map, const kernel& k, std::size_t L,
                      std::size_t T_max, std::uint64_t budget, std::size_t workers) {
    if (T_max < 2) throw parameter_violation("T_max must be at least 2");
    std::vector<partition_value> z(T_max + 1);
    for (std::size_t T = 1; T <= T_max; ++T)
        z[T] = partition_z(map, k, L, T, budget, workers);

    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t T1 = 1; T1 < T_max; ++T1)
        for (std::size_t T2 = 1; T1 + T2 <= T_max; ++T2)
            worst = std::max(worst, z[T1 + T2].log_z_point - z[T1].log_z_upper -
                                        z[T2].log_z_upper);
    return worst;
}

subadd_l_result subadd_l_check(const local_map& map, const kernel& k,
                               std::size_t L1, std::size_t L2, std::size_t T,
                               std::uint64_t budget, std::size_t workers) {
    if (L1 < 1 || L2 < 1) throw parameter_violation("both arcs need L >= 1");
    partition_value z1 = partition_z(map, k, L1, T, budget, workers);
    partition_value z2 = partition_z(map, k, L2, T, budget, workers);
    partition_value z12 = partition_z(map, k, L1 + L2, T, budget, workers);

    distortion_consts consts = distortion_constants(map, k);
    subadd_l_result out;
    out.sigma_term = consts.beta * (sigma_prime_bound(consts, L1) +
                                    sigma_prime_bound(consts, L2));
    out.remainder_term = consts.beta * static_cast<double>(T) * consts.c_cal_norm *
                         consts.big_m / (1.0 - consts.c_cal_norm);
    out.slack = z1.log_z_upper + z2.log_z_upper + out.sigma_term +
                out.remainder_term - z12.log_z_point;
    return out;
}

double sigma_prime_bound(const distortion_consts& consts, std::size_t L) {
    if (!(consts.c_cal_norm < 1.0))
        throw not_contracting("inverse coupling norm reaches 1, tail bound diverges");
    double per_unit = consts.big_m * consts.c_cal_norm / (1.0 - consts.c_cal_norm);
    return static_cast<double>(L) * per_unit;
}

} // namespace cml
