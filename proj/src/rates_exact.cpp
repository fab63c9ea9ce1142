#include "cml/rates_exact.hpp"

#include <cmath>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "cml/format.hpp"

namespace cml {

double gamma_affine(double a, const kernel& k, std::size_t L) {
    if (!(a > 2.0)) throw parameter_violation("affine rate requires a > 2");
    if (L < 1) throw parameter_violation("lattice size must be at least 1");
    return static_cast<double>(L) * std::log(a / 2.0) + log_abs_det(k, L);
}

namespace {

double log_symbol_mod(const kernel& k, double omega) {
    double mod = std::abs(kernel_symbol(k, omega));
    if (mod < 1e-14)
        throw singular_coupling("coupling symbol vanishes on the quadrature grid");
    return std::log(mod);
}

double simpson_log_symbol(const kernel& k, std::size_t panels) {
    if (panels < 2 || panels % 2 != 0)
        throw parameter_violation("quadrature needs an even panel count >= 2");
    double h = 1.0 / static_cast<double>(panels);
    double acc = log_symbol_mod(k, 0.0) + log_symbol_mod(k, 1.0);
    for (std::size_t j = 1; j < panels; ++j)
        acc += (j % 2 == 1 ? 4.0 : 2.0) * log_symbol_mod(k, h * static_cast<double>(j));
    return acc * h / 3.0;
}

double closed_form_integral(double eps) {
    return std::log(((1.0 - eps) + std::sqrt(1.0 - 2.0 * eps)) / 2.0);
}

// One-time validation of the closed-form integral against quadrature.  The
// check runs on first use; failure means a broken build, not bad input.
void check_closed_form_once() {
    static std::once_flag flag;
    std::call_once(flag, [] {
        for (double eps : {0.05, 0.1, 0.25, 0.4}) {
            double quad = simpson_log_symbol(laplacian(eps), 1024);
            if (std::abs(quad - closed_form_integral(eps)) > 1e-9)
                throw std::logic_error("closed-form coupling integral disagrees with quadrature");
        }
    });
}

} // namespace

double gamma_infty(double a, const kernel& k, std::size_t panels) {
    if (!(a > 2.0)) throw parameter_violation("per-unit rate requires a > 2");
    return std::log(a / 2.0) + simpson_log_symbol(k, panels);
}

double gamma_infty_laplacian_closed(double a, double eps) {
    if (!(a > 2.0)) throw parameter_violation("per-unit rate requires a > 2");
    if (!(eps >= 0.0 && eps < 0.5))
        throw parameter_violation("closed form requires 0 <= eps < 1/2");
    check_closed_form_once();
    return std::log(a / 2.0) + closed_form_integral(eps);
}

std::vector<double> lyapunov_exponents_affine(double a, const kernel& k, std::size_t L) {
    if (!(a > 2.0)) throw parameter_violation("affine spectrum requires a > 2");
    if (L < 1) throw parameter_violation("lattice size must be at least 1");
    std::vector<double> out(L);
    for (std::size_t j = 1; j <= L; ++j) {
        std::complex<double> s = kernel_symbol(k, static_cast<double>(j) / static_cast<double>(L));
        double mod = std::abs(s);
        if (mod < 1e-14 || s.real() <= 0.0 || std::abs(s.imag()) > 1e-12 * std::max(1.0, mod))
            throw singular_coupling("symbol is not real positive on the frequency grid");
        out[j - 1] = std::log(a * s.real());
    }
    return out;
}

double entropy_identity_check(double a, const kernel& k, std::size_t L) {
    std::vector<double> exps = lyapunov_exponents_affine(a, k, L);
    double sum = 0.0;
    for (double e : exps) sum += e;
    double rhs = sum - static_cast<double>(L) * std::log(2.0);
    return std::abs(gamma_affine(a, k, L) - rhs);
}

rate_curve make_rate_curve(std::string param,
                           std::vector<std::pair<double, double>> points) {
    for (std::size_t i = 0; i + 1 < points.size(); ++i)
        if (!(points[i].first < points[i + 1].first))
            throw parameter_violation("rate curve parameter values must be strictly increasing");
    return rate_curve{std::move(param), std::move(points)};
}

std::string to_csv(const rate_curve& curve) {
    std::ostringstream os;
    os << "param,gamma\n";
    for (const auto& [p, g] : curve.points)
        os << fmt17(p) << "," << fmt17(g) << "\n";
    return os.str();
}

} // namespace cml
