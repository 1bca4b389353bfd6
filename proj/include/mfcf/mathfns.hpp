#pragma once

namespace mfcf {

/// Logistic function 1 / (1 + e^-x). Evaluated without overflow for any
/// finite x.
double sigmoid(double x) noexcept;

/// Digamma (logarithmic derivative of the gamma function) for x > 0.
/// Absolute error below 1e-10 on [1e-6, 1e6]. Throws std::domain_error for
/// x <= 0 or NaN.
double digamma(double x);

/// Trigamma, the derivative of digamma, for x > 0.
double trigamma(double x);

/// Returns the unique x > 0 with digamma(x) == y (to within 1e-8).
double inverse_digamma(double y);

} // namespace mfcf
