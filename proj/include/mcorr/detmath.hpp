#pragma once

#include <cmath>
#include <limits>

// Elementary functions built from IEEE-754 arithmetic, frexp/ldexp and floor
// only, so sampled values do not depend on the platform libm. Accuracy is a
// few ulp over the ranges the generators use.
namespace mcorr::detmath {

inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kPi = 3.14159265358979323846;

inline double log(double x) {
    if (!(x > 0.0)) return x == 0.0 ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
    if (x == std::numeric_limits<double>::infinity()) return x;
    int e = 0;
    double m = std::frexp(x, &e);  // m in [0.5, 1)
    if (m < 0.70710678118654752440) {
        m *= 2.0;
        --e;
    }
    const double f = (m - 1.0) / (m + 1.0);
    const double s = f * f;
    // 2 atanh(f) = 2 f sum s^k / (2k + 1)
    double term = 1.0, sum = 0.0;
    for (int k = 0; k < 30; ++k) {
        sum += term / (2 * k + 1);
        term *= s;
        if (term < 1e-20) break;
    }
    const double de = static_cast<double>(e);
    return de * kLn2Hi + (2.0 * f * sum + de * kLn2Lo);
}

inline double exp(double x) {
    if (x > 709.0) return std::numeric_limits<double>::infinity();
    if (x < -745.0) return 0.0;
    const double k = std::floor(x / (kLn2Hi + kLn2Lo) + 0.5);
    const double r = (x - k * kLn2Hi) - k * kLn2Lo;  // |r| <= ~0.35
    double term = 1.0, sum = 1.0;
    for (int i = 1; i < 30; ++i) {
        term *= r / i;
        sum += term;
        if (std::abs(term) < 1e-18) break;
    }
    return std::ldexp(sum, static_cast<int>(k));
}

namespace detail {

// Taylor kernels on |r| <= pi/4.
inline double sin_kernel(double r) {
    const double r2 = r * r;
    double term = r, sum = r;
    for (int i = 1; i < 15; ++i) {
        term *= -r2 / ((2 * i) * (2 * i + 1));
        sum += term;
    }
    return sum;
}

inline double cos_kernel(double r) {
    const double r2 = r * r;
    double term = 1.0, sum = 1.0;
    for (int i = 1; i < 15; ++i) {
        term *= -r2 / ((2 * i - 1) * (2 * i));
        sum += term;
    }
    return sum;
}

// Cody-Waite split of pi/2; adequate for |x| up to ~1e6.
inline constexpr double kPio2Hi = 1.57079632673412561417e+00;
inline constexpr double kPio2Lo = 6.07710050650619224932e-11;

inline void reduce(double x, double& r, int& quadrant) {
    const double k = std::floor(x / (kPio2Hi + kPio2Lo) + 0.5);
    r = (x - k * kPio2Hi) - k * kPio2Lo;
    const long q = static_cast<long>(k) % 4;
    quadrant = static_cast<int>(q < 0 ? q + 4 : q);
}

} // namespace detail

inline double sin(double x) {
    double r = 0.0;
    int q = 0;
    detail::reduce(x, r, q);
    switch (q) {
    case 0: return detail::sin_kernel(r);
    case 1: return detail::cos_kernel(r);
    case 2: return -detail::sin_kernel(r);
    default: return -detail::cos_kernel(r);
    }
}

inline double cos(double x) {
    double r = 0.0;
    int q = 0;
    detail::reduce(x, r, q);
    switch (q) {
    case 0: return detail::cos_kernel(r);
    case 1: return -detail::sin_kernel(r);
    case 2: return -detail::cos_kernel(r);
    default: return detail::sin_kernel(r);
    }
}

inline double pow(double base, double expo) { return exp(expo * log(base)); }

} // namespace mcorr::detmath
