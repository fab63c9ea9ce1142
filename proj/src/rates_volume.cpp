#include "cml/rates_volume.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "cml/format.hpp"
#include "cml/rates_exact.hpp"
#include "cml/rng.hpp"

namespace cml {

particle_ensemble init_uniform(const local_map& map, std::size_t L, std::size_t n,
                               std::uint64_t seed, std::uint32_t replicate) {
    if (L < 1) throw parameter_violation("lattice size must be at least 1");
    if (n < 1000) throw parameter_violation("population must be at least 1e3");

    const auto& branches = map.branches();
    std::vector<double> cum;
    double total = 0.0;
    for (const branch& b : branches) {
        total += b.domain.width();
        cum.push_back(total);
    }

    particle_ensemble ens;
    ens.L = L;
    ens.n = n;
    ens.rng_seed = seed;
    ens.replicate = replicate;
    ens.coords.resize(n * L);
    for (std::size_t i = 0; i < n; ++i) {
        double* x = ens.particle(i);
        for (std::size_t s = 0; s < L; ++s) {
            double pos = total * keyed_uniform(seed, replicate, 0, 0, i * L + s);
            std::size_t b = 0;
            while (b + 1 < cum.size() && pos >= cum[b]) ++b;
            double lo_cum = b == 0 ? 0.0 : cum[b - 1];
            x[s] = branches[b].domain.lo + (pos - lo_cum);
        }
    }
    return ens;
}

namespace {

// Coupled step applied in place to one particle; returns false on escape.
bool step_particle(const local_map& map, const kernel& k, double* x, std::size_t L,
                   std::vector<double>& scratch) {
    for (std::size_t s = 0; s < L; ++s) {
        auto sym = map.branch_of(x[s]);
        if (!sym) return false;
        scratch[s] = map.branch_at(*sym).f(x[s]);
    }
    const auto& off = k.offsets();
    const auto& w = k.weights();
    long sl = static_cast<long>(L);
    for (std::size_t s = 0; s < L; ++s) {
        double acc = 0.0;
        for (std::size_t m = 0; m < off.size(); ++m) {
            long idx = (static_cast<long>(s) - off[m]) % sl;
            if (idx < 0) idx += sl;
            acc += w[m] * scratch[static_cast<std::size_t>(idx)];
        }
        x[s] = acc;
    }
    return true;
}

} // namespace

survival_trace evolve_resample(particle_ensemble& ens, const local_map& map,
                               const kernel& k, std::size_t T, double clone_jitter) {
    if (T < 1) throw parameter_violation("evolution horizon must be at least 1");
    if (!(clone_jitter >= 0.0)) throw parameter_violation("jitter must be non-negative");

    std::size_t L = ens.L;
    std::size_t n = ens.n;
    survival_trace trace;
    trace.n = n;
    trace.seed = ens.rng_seed;

    std::vector<double> scratch(L);
    std::vector<std::uint32_t> alive;
    alive.reserve(n);
    std::vector<double> next(n * L);

    for (std::size_t step_i = 1; step_i <= T; ++step_i) {
        std::uint32_t t = ++ens.step_count;
        alive.clear();
        for (std::size_t i = 0; i < n; ++i)
            if (step_particle(map, k, ens.particle(i), L, scratch))
                alive.push_back(static_cast<std::uint32_t>(i));

        std::size_t survivors = alive.size();
        trace.p.push_back(static_cast<double>(survivors) / static_cast<double>(n));
        trace.survivors.push_back(survivors);
        if (survivors == 0)
            throw extinction("population died at step " + std::to_string(t));

        // Systematic resampling: one uniform offset per step, evenly spaced
        // picks across the survivor list.
        double u = keyed_uniform(ens.rng_seed, ens.replicate, t, 1, 0);
        double ratio = static_cast<double>(survivors) / static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) {
            auto pick = static_cast<std::size_t>((static_cast<double>(j) + u) * ratio);
            if (pick >= survivors) pick = survivors - 1;
            const double* src = ens.particle(alive[pick]);
            double* dst = next.data() + j * L;
            for (std::size_t s = 0; s < L; ++s) {
                double v = keyed_uniform(ens.rng_seed, ens.replicate, t, 2, j * L + s);
                dst[s] = src[s] + clone_jitter * (2.0 * v - 1.0);
            }
        }
        ens.coords.swap(next);
    }
    return trace;
}

rate_estimate fit_rate(const survival_trace& trace, std::size_t burn_in) {
    std::size_t T_used = trace.p.size();
    if (T_used < burn_in + 10)
        throw parameter_violation("need at least 10 retained steps after burn-in");

    std::size_t R = T_used - burn_in;
    std::vector<double> logs(R);
    for (std::size_t i = 0; i < R; ++i) {
        double p = trace.p[burn_in + i];
        if (p <= 0.0) throw degenerate_trace("retained survival fraction is zero");
        logs[i] = std::log(p);
    }

    double mean = 0.0;
    for (double v : logs) mean += v;
    mean /= static_cast<double>(R);

    // Batch means absorb the autocorrelation the resampling introduces.
    constexpr std::size_t n_batches = 8;
    std::size_t m = R / n_batches;
    double se = 0.0;
    if (m >= 1) {
        std::size_t start = R - n_batches * m;
        double bm[n_batches];
        double bbar = 0.0;
        for (std::size_t b = 0; b < n_batches; ++b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) acc += logs[start + b * m + i];
            bm[b] = acc / static_cast<double>(m);
            bbar += bm[b];
        }
        bbar /= static_cast<double>(n_batches);
        double var = 0.0;
        for (double v : bm) var += (v - bbar) * (v - bbar);
        var /= static_cast<double>(n_batches - 1);
        se = std::sqrt(var / static_cast<double>(n_batches));
    }

    std::size_t half = (R + 1) / 2;
    double tail = 0.0;
    for (std::size_t i = R - half; i < R; ++i) tail += logs[i];
    tail /= static_cast<double>(half);

    rate_estimate est;
    est.gamma = -mean;
    est.std_err = se;
    est.gamma_tail = -tail;
    est.T_used = T_used;
    est.burn_in = burn_in;
    est.seed = trace.seed;
    return est;
}

double exact_alpha_affine(double a, const kernel& k, std::size_t L) {
    return std::exp(-gamma_affine(a, k, L));
}

rate_estimate estimate_rate(const local_map& map, const kernel& k, std::size_t L,
                            std::size_t n, std::size_t T, std::size_t burn_in,
                            std::uint64_t seed, std::size_t replicates,
                            double clone_jitter, std::size_t threads) {
    if (replicates < 1) throw parameter_violation("need at least one replicate");
    std::vector<rate_estimate> parts(replicates);

    auto run_replicate = [&](std::size_t r) {
        particle_ensemble ens =
            init_uniform(map, L, n, seed, static_cast<std::uint32_t>(r));
        survival_trace trace = evolve_resample(ens, map, k, T, clone_jitter);
        parts[r] = fit_rate(trace, burn_in);
    };

    std::size_t workers = std::max<std::size_t>(1, std::min(threads, replicates));
    if (workers == 1) {
        for (std::size_t r = 0; r < replicates; ++r) run_replicate(r);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> cursor{0};
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t r = cursor.fetch_add(1);
                    if (r >= replicates) break;
                    run_replicate(r);
                }
            });
        for (auto& th : pool) th.join();
    }

    rate_estimate merged;
    double var = 0.0;
    for (const rate_estimate& e : parts) {
        merged.gamma += e.gamma;
        merged.gamma_tail += e.gamma_tail;
        var += e.std_err * e.std_err;
    }
    double R = static_cast<double>(replicates);
    merged.gamma /= R;
    merged.gamma_tail /= R;
    merged.std_err = std::sqrt(var) / R;
    merged.T_used = T;
    merged.burn_in = burn_in;
    merged.seed = seed;
    return merged;
}

std::string to_csv(const survival_trace& trace) {
    std::ostringstream os;
    os << "t,p_t,survivors\n";
    for (std::size_t i = 0; i < trace.p.size(); ++i)
        os << (i + 1) << "," << fmt17(trace.p[i]) << "," << trace.survivors[i] << "\n";
    return os.str();
}

} // namespace cml
