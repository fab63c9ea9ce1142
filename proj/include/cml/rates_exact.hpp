#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cml/coupling.hpp"

namespace cml {

// Escape rate of the affine Lorenz lattice with hole union of total length
// one per site: L*log(a/2) + log|C|_L.  The formula is evaluated as stated;
// whether the weak-coupling threshold holds is reported separately by the
// dynamics module and not enforced here, since the Lyapunov and entropy
// diagnostics remain meaningful outside it.
double gamma_affine(double a, const kernel& k, std::size_t L);

// Escape rate per lattice unit in the infinite-size limit,
// log(a/2) + integral of log|c_hat| over one period, by composite Simpson.
double gamma_infty(double a, const kernel& k, std::size_t panels = 1024);

// Closed form of the per-unit rate for the diffusive kernel,
// log(a/2) + log(((1-eps) + sqrt(1-2*eps))/2), valid for eps < 1/2.  The
// first call cross-checks the closed form against quadrature at 1e-9 and
// aborts on mismatch, so the formula is never trusted unverified.
double gamma_infty_laplacian_closed(double a, double eps);

// Lyapunov spectrum of the affine lattice map, log(a * c_hat(k/L)), k = 1..L.
// Requires the symbol to be real and positive on the grid.
std::vector<double> lyapunov_exponents_affine(double a, const kernel& k, std::size_t L);

// Residual of the rate identity gamma = sum of exponents - L*log(2); zero up
// to rounding for the affine family.
double entropy_identity_check(double a, const kernel& k, std::size_t L);

// Scan output container: (parameter, gamma) pairs with strictly increasing
// parameter values.
struct rate_curve {
    std::string param;  // "L" or "eps"
    std::vector<std::pair<double, double>> points;
};

rate_curve make_rate_curve(std::string param,
                           std::vector<std::pair<double, double>> points);

// CSV with header "param,gamma", one row per point, 17 significant digits.
std::string to_csv(const rate_curve& curve);

} // namespace cml
