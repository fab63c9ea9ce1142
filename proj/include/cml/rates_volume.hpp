#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cml/coupling.hpp"
#include "cml/local_map.hpp"

namespace cml {

// Population of lattice states stored as one flat row-major buffer
// (particle-major, L coordinates each).
struct particle_ensemble {
    std::size_t L = 0;
    std::size_t n = 0;
    std::vector<double> coords;  // n * L doubles
    std::uint64_t rng_seed = 0;
    std::uint32_t replicate = 0;
    std::uint32_t step_count = 0;

    double* particle(std::size_t i) { return coords.data() + i * L; }
    const double* particle(std::size_t i) const { return coords.data() + i * L; }
};

// Per-step survival fractions of a multiply-and-prune run.
struct survival_trace {
    std::vector<double> p;
    std::vector<std::uint64_t> survivors;
    std::size_t n = 0;
    std::uint64_t seed = 0;
};

struct rate_estimate {
    double gamma = 0.0;
    double std_err = 0.0;
    double gamma_tail = 0.0;  // last-half estimate, exposes non-stationarity
    std::size_t T_used = 0;
    std::size_t burn_in = 0;
    std::uint64_t seed = 0;
};

// Independent uniform sampling on the hold set: per coordinate, pick an
// interval with probability proportional to its length, then uniform inside.
// Fully determined by (seed, replicate).
particle_ensemble init_uniform(const local_map& map, std::size_t L, std::size_t n,
                               std::uint64_t seed, std::uint32_t replicate = 0);

// Evolve T steps.  Each step applies the coupled map to every particle,
// records the surviving fraction, and refills the population from the
// survivors by systematic resampling (one uniform offset per step).  Each
// refilled particle gets an independent uniform perturbation of half-width
// `clone_jitter` per coordinate; without it the deterministic dynamics would
// collapse the resampled population onto a handful of ancestral orbits and
// the trace would die out long before useful depths.  The jitter biases the
// rate by O(jitter) which stays far below the estimator tolerance.
// Throws extinction if no particle survives a step.
survival_trace evolve_resample(particle_ensemble& ens, const local_map& map,
                               const kernel& k, std::size_t T,
                               double clone_jitter = 1e-3);

// gamma = -mean log p_t over t > burn_in; standard error from 8 batch means
// over the retained window.  Requires at least 10 retained steps.
rate_estimate fit_rate(const survival_trace& trace, std::size_t burn_in);

// Exact one-step survival factor of the affine family,
// 2^L / (a^L exp(log|C|_L)) = exp(-gamma_affine).
double exact_alpha_affine(double a, const kernel& k, std::size_t L);

// Convenience driver: run `replicates` independent ensembles (replicate ids
// 0..R-1), optionally on several threads, and merge by averaging.  Results
// are independent of the thread count by construction.
rate_estimate estimate_rate(const local_map& map, const kernel& k, std::size_t L,
                            std::size_t n, std::size_t T, std::size_t burn_in,
                            std::uint64_t seed, std::size_t replicates = 1,
                            double clone_jitter = 1e-3, std::size_t threads = 1);

// CSV with header "t,p_t,survivors", one row per step starting at t = 1.
std::string to_csv(const survival_trace& trace);

} // namespace cml
