#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <vector>

#include "cml/errors.hpp"

namespace cml {

// Finite-support convolution kernel with non-negative weights summing to 1.
// Construction rejects negative coefficients outright, renormalizes the sum
// and drops exact zeros, so the stored support is minimal.
class kernel {
public:
    kernel() : offsets_{0}, weights_{1.0} {}
    explicit kernel(const std::map<int, double>& coeffs);

    static kernel impulse() { return kernel(); }

    const std::vector<int>& offsets() const { return offsets_; }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t support_size() const { return offsets_.size(); }

    // Weight at a given offset, zero outside the support.
    double at(int n) const;
    double c0() const { return at(0); }

    // Half-width of the support window.
    int range() const;

private:
    std::vector<int> offsets_;    // sorted
    std::vector<double> weights_; // parallel to offsets_
};

// Nearest-neighbour diffusive kernel c_0 = 1 - eps, c_{+-1} = eps/2.
kernel laplacian(double eps);

// Circular convolution on Z_L.
std::vector<double> apply(const kernel& k, std::size_t L, const std::vector<double>& x);

// Operator norm of Id - C on bounded sequences, equal to 2(1 - c_0).
double id_minus_c_norm(const kernel& k);

// Fourier symbol c_hat(omega) = sum_n c_n exp(2*pi*i*n*omega).
std::complex<double> kernel_symbol(const kernel& k, double omega);

// Log absolute determinant of the L x L circulant matrix of the kernel,
// sum_{k=1..L} log|c_hat(k/L)|.  Throws singular_coupling when the symbol
// (nearly) vanishes on the grid.
double log_abs_det(const kernel& k, std::size_t L);

// Convolution inverse of the kernel on the periodic lattice Z_L.
struct inverse_kernel {
    std::size_t L = 0;
    std::vector<double> coeffs;  // indexed by n in 0..L-1

    double l1_norm() const;
    // Circular distance from index n to 0.
    std::size_t dist(std::size_t n) const { return n <= L - n ? n : L - n; }
};

// Invert by discrete Fourier division on the L-point grid and verify that
// convolving back reproduces the unit impulse within 1e-10.
inverse_kernel invert_kernel(const kernel& k, std::size_t L);

// Certified exponential envelope iota*|c^(-1)_n| <= m1 * zeta1^dist(n).
struct localization_fit_result {
    double m1 = 0.0;
    double zeta1 = 0.0;
};

// Scan a grid of decay rates, take for each the smallest valid m1 (a maximum
// over coefficients, inflated by 1e-9 relative so re-checks with fresh
// rounding cannot flip the inequality), and return the pair minimizing
// m1/(1 - zeta1), which is what the downstream tail bounds consume.
// Requires the far side of the ring to sit below 1e-12 so that periodic wrap
// does not contaminate the envelope.  Note the returned zeta1 tracks the
// computed coefficients: past the point where the true tail sinks under the
// Fourier-division noise floor (~1e-16), the envelope must cover that
// plateau, so zeta1 approaches 1 from below as the ring grows.
localization_fit_result localization_fit(const inverse_kernel& inv, double iota);

// Weighted support sum sum_n zeta^|n| c_n for zeta > 1; finite-range report.
double finite_range_value(const kernel& k, double zeta);

} // namespace cml
