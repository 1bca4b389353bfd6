#include "mfcf/mathfns.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mfcf {

namespace {

constexpr double kEulerGamma = 0.57721566490153286061;

// Below this argument the asymptotic expansions lose accuracy; shift up
// through the recurrences first.
constexpr double kAsymptoticFloor = 6.0;

void require_positive(double x, const char* fn) {
    if (!(x > 0.0)) {
        throw std::domain_error(std::string(fn) + ": argument must be > 0, got "
                                + std::to_string(x));
    }
}

} // namespace

double sigmoid(double x) noexcept {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double digamma(double x) {
    require_positive(x, "digamma");
    if (std::isinf(x)) {
        return x;
    }
    // psi(x) = psi(x + n) - sum_{j<n} 1 / (x + j)
    double shift = 0.0;
    while (x < kAsymptoticFloor) {
        shift += 1.0 / x;
        x += 1.0;
    }
    // Asymptotic series with Bernoulli numbers B2..B14.
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series =
        inv2 * (1.0 / 12.0
        - inv2 * (1.0 / 120.0
        - inv2 * (1.0 / 252.0
        - inv2 * (1.0 / 240.0
        - inv2 * (1.0 / 132.0
        - inv2 * (691.0 / 32760.0
        - inv2 * (1.0 / 12.0)))))));
    return (std::log(x) - 0.5 * inv - series) - shift;
}

double trigamma(double x) {
    require_positive(x, "trigamma");
    double shift = 0.0;
    while (x < kAsymptoticFloor) {
        shift += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // 1/x + 1/(2x^2) + sum B_2n / x^(2n+1)
    const double series =
        inv * (1.0 + inv * (0.5
        + inv * (1.0 / 6.0
        - inv2 * (1.0 / 30.0
        - inv2 * (1.0 / 42.0
        - inv2 * (1.0 / 30.0
        - inv2 * (5.0 / 66.0
        - inv2 * (691.0 / 2730.0))))))));
    return series + shift;
}

double inverse_digamma(double y) {
    if (!std::isfinite(y)) {
        throw std::domain_error("inverse_digamma: argument must be finite");
    }
    // Minka's initialization.
    double x = y >= -2.22 ? std::exp(y) + 0.5 : -1.0 / (y + kEulerGamma);
    for (int iter = 0; iter < 64; ++iter) {
        const double step = (digamma(x) - y) / trigamma(x);
        double next = x - step;
        if (!(next > 0.0)) {
            next = 0.5 * x;
        }
        const bool converged = std::abs(next - x) <= 1e-15 * x;
        x = next;
        if (converged && iter >= 4) {
            break;
        }
    }
    return x;
}

} // namespace mfcf
