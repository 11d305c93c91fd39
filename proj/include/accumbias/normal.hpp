#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

#include "accumbias/errors.hpp"

namespace accumbias {

inline constexpr double inv_sqrt_2pi = 0.39894228040143267794;

inline double normal_pdf(double z) {
    return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

// Upper tail 1 - Phi(z), accurate far into the right tail.
inline double normal_sf(double z) {
    return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw invalid_input_error("normal_quantile: p must lie in (0, 1)");
    }
    return boost::math::quantile(boost::math::normal_distribution<double>{}, p);
}

// z_{alpha/2}: the two-sided critical value, computed from the upper tail so that
// small alpha keeps full precision.
inline double two_sided_critical(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw invalid_input_error("alpha must lie in (0, 1)");
    }
    return boost::math::quantile(
        boost::math::complement(boost::math::normal_distribution<double>{}, alpha / 2.0));
}

}  // namespace accumbias
