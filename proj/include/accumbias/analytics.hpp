#pragma once

// Closed-form quantities for the Gold Rush policy under H0, plus an exact
// enumeration over significance categories that serves as a brute-force
// cross-check for them.
//
// Under H0 every study Z is standard normal and the Gold Rush hazard only sees
// which of three categories z falls in, with masses alpha/2 (significant
// positive), 1 - alpha (nonsignificant) and alpha/2 (significant negative).
// Conditional on its category a study is a truncated standard normal, so all
// conditional moments reduce to phi/Phi evaluations.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "accumbias/errors.hpp"
#include "accumbias/normal.hpp"
#include "accumbias/policies.hpp"

namespace accumbias {

struct TruncatedMoments {
    double mass = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};

// Moments of a standard normal restricted to [lower, upper]; either bound may be infinite.
inline TruncatedMoments truncated_normal_moments(double lower, double upper) {
    if (!(lower < upper)) throw invalid_input_error("truncation needs lower < upper");
    const auto pdf = [](double x) { return std::isinf(x) ? 0.0 : normal_pdf(x); };
    const auto x_pdf = [](double x) { return std::isinf(x) ? 0.0 : x * normal_pdf(x); };
    // Difference of upper tails keeps precision when both bounds sit in the right tail.
    const double mass = lower >= 0.0 ? normal_sf(lower) - normal_sf(upper)
                                     : normal_cdf(upper) - normal_cdf(lower);
    if (!(mass > 0.0)) throw degenerate_policy_error("truncation interval has zero mass");
    TruncatedMoments m;
    m.mass = mass;
    m.mean = (pdf(lower) - pdf(upper)) / mass;
    m.variance = 1.0 + (x_pdf(lower) - x_pdf(upper)) / mass - m.mean * m.mean;
    return m;
}

// E[Z | Z >= c] for standard normal Z, i.e. the inverse Mills ratio phi(c)/(1 - Phi(c)).
inline double tail_expectation(double c) {
    if (c > 30.0) {
        // erfc underflows soon after; use the continued fraction
        // (1 - Phi(c))/phi(c) = 1/(c + 1/(c + 2/(c + 3/(c + ...)))), evaluated backwards.
        double tail = c;
        for (int k = 60; k >= 1; --k) tail = c + k / tail;
        return tail;
    }
    return normal_pdf(c) / normal_sf(c);
}

inline TruncatedMoments category_moments(Category c, double critical) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (c) {
        case Category::significant_positive: return truncated_normal_moments(critical, inf);
        case Category::significant_negative: return truncated_normal_moments(-inf, -critical);
        case Category::nonsignificant: break;
    }
    return truncated_normal_moments(-critical, critical);
}

inline constexpr std::array<Category, 3> all_categories{
    Category::significant_positive, Category::nonsignificant, Category::significant_negative};

// H0 category masses: alpha/2, 1 - alpha, alpha/2.
inline double category_mass(Category c, double alpha) {
    return c == Category::nonsignificant ? 1.0 - alpha : alpha / 2.0;
}

// P0[T >= t+1 | T >= t] = omega_s alpha/2 + omega_x alpha/2 + omega_ns (1 - alpha),
// using the pilot parameters at t = 1.
inline double continuation_mass(std::int64_t t, const GoldRushParams& p) {
    double s = 0.0;
    for (Category c : all_categories) s += p.omega(t, c) * category_mass(c, p.alpha);
    return s;
}

// E0[Z_t | T >= t+1]. The nonsignificant part is symmetric and contributes 0;
// the tails contribute +-phi(z_{alpha/2}) weighted by their omegas.
inline double expected_given_continuation(std::int64_t t, const GoldRushParams& p) {
    p.validate();
    const double denom = continuation_mass(t, p);
    if (!(denom > 0.0)) {
        throw degenerate_policy_error("no continuation is possible: omega mass is zero");
    }
    const double tail = normal_pdf(two_sided_critical(p.alpha));
    const double num = tail * p.omega(t, Category::significant_positive) -
                       tail * p.omega(t, Category::significant_negative);
    return num / denom;
}

// E0[Z_1 | T >= 2].
inline double expected_pilot_given_next(const GoldRushParams& p) {
    return expected_given_continuation(1, p);
}

// E0[Z_t | T >= t+1] for any t >= 2.
inline double expected_later_given_next(const GoldRushParams& p) {
    return expected_given_continuation(2, p);
}

struct GoldRushAnalytics {
    double alpha = 0.05;
    GoldRushParams params;
    double e_pilot_given_next = 0.0;
    double e_mid_given_next = 0.0;
};

inline GoldRushAnalytics make_gold_rush_analytics(const GoldRushParams& p) {
    return {p.alpha, p, expected_pilot_given_next(p), expected_later_given_next(p)};
}

// E0[Z^(t) | T >= t] for equal study sizes: (e_pilot + e_mid (t - 2) + 0) / sqrt(t).
// The last study is unconditioned and contributes 0; t < 2 gives 0.
inline double expected_meta_z(std::int64_t t, const GoldRushParams& p) {
    if (t < 2) return 0.0;
    double sum = expected_pilot_given_next(p);
    if (t > 2) sum += expected_later_given_next(p) * static_cast<double>(t - 2);
    return sum / std::sqrt(static_cast<double>(t));
}

// Unequal sizes: sizes[i] is the per-arm size of study i+1, and t = sizes.size().
inline double expected_meta_z(std::span<const std::int64_t> sizes, const GoldRushParams& p) {
    if (sizes.size() < 2) return 0.0;
    double total = 0.0;
    for (auto n : sizes) {
        if (n < 1) throw invalid_input_error("study sizes must be >= 1");
        total += static_cast<double>(n);
    }
    double num = std::sqrt(static_cast<double>(sizes[0])) * expected_pilot_given_next(p);
    if (sizes.size() > 2) {
        const double mid = expected_later_given_next(p);
        for (std::size_t i = 1; i + 1 < sizes.size(); ++i) {
            num += std::sqrt(static_cast<double>(sizes[i])) * mid;
        }
    }
    return num / std::sqrt(total);
}

// Expected analysis-time probability under H0: prod_{i=1}^{t-1} continuation_mass(i).
inline double abar0(std::int64_t t, const GoldRushParams& p) {
    if (t < 1) throw invalid_input_error("abar0: t must be >= 1");
    p.validate();
    double prod = 1.0;
    for (std::int64_t i = 1; i < t; ++i) prod *= continuation_mass(i, p);
    return prod;
}

// Type-I rate of a two-sided Z-test if the null distribution were only shifted
// by the bias E: 1 - Phi(c - E) + Phi(-c - E).
inline double bias_only_type1_from_shift(double shift, double alpha) {
    const double c = two_sided_critical(alpha);
    return normal_sf(c - shift) + normal_cdf(-c - shift);
}

inline double bias_only_type1(std::int64_t t, const GoldRushParams& p) {
    if (t < 1) throw invalid_input_error("bias_only_type1: t must be >= 1");
    return bias_only_type1_from_shift(expected_meta_z(t, p), p.alpha);
}

// Fraction of significant-positive studies among continuing non-pilot studies.
inline double long_run_significant_fraction(const GoldRushParams& p) {
    const double sig = category_mass(Category::significant_positive, p.alpha) *
                       p.omega(2, Category::significant_positive);
    const double denom = continuation_mass(2, p);
    if (!(denom > 0.0)) throw degenerate_policy_error("no continuation after non-pilot studies");
    return sig / denom;
}

// Exact density of Z^(2) | T >= 2 under H0 (equal sizes). For a first study
// truncated to [a, b] and an unconditioned second study,
// f(z) = phi(z) [Phi(sqrt2 b - z) - Phi(sqrt2 a - z)] / P0[a, b], and the
// mixture over categories weights each by omega^(1) P0[category].
// The bracketed mixture over Abar0(2) is the analysis-time weight
// Abar0(2 | z) / Abar0(2).
inline double analysis_weight_t2(double z, const GoldRushParams& p) {
    const double c = two_sided_critical(p.alpha);
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double r2 = std::numbers::sqrt2;
    const auto band = [&](double a, double b) {
        const double hi = std::isinf(b) ? 1.0 : normal_cdf(r2 * b - z);
        const double lo = std::isinf(a) ? 0.0 : normal_cdf(r2 * a - z);
        return hi - lo;
    };
    const double w = p.omega_s1 * band(c, inf) + p.omega_ns1 * band(-c, c) +
                     p.omega_x1 * band(-inf, -c);
    return w / abar0(2, p);
}

inline double meta_z2_density(double z, const GoldRushParams& p) {
    return normal_pdf(z) * analysis_weight_t2(z, p);
}

// P0[|Z^(2)| >= z_{alpha/2} | T >= 2], integrating the exact density over both tails.
inline double meta_z2_type1(const GoldRushParams& p) {
    using boost::math::quadrature::gauss_kronrod;
    const double c = two_sided_critical(p.alpha);
    const auto f = [&](double z) { return meta_z2_density(z, p); };
    constexpr double span = 40.0;
    return gauss_kronrod<double, 61>::integrate(f, c, c + span, 15, 1e-14) +
           gauss_kronrod<double, 61>::integrate(f, -c - span, -c, 15, 1e-14);
}

struct MixtureVariance {
    double mixture_var = 0.0;
    double avg_component_var = 0.0;
};

// Variance of a finite mixture versus the weighted average of its component
// variances. Weights are normalized internally.
inline MixtureVariance mixture_variance_decomposition(std::span<const double> means,
                                                      std::span<const double> vars,
                                                      std::span<const double> weights) {
    if (means.size() != vars.size() || means.size() != weights.size() || means.empty()) {
        throw invalid_input_error("mixture: means, vars and weights must have equal nonzero length");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw invalid_input_error("mixture weights must be nonnegative");
        total += w;
    }
    if (!(total > 0.0)) throw invalid_input_error("mixture weights are all zero");
    double second = 0.0;
    double first = 0.0;
    double avg_var = 0.0;
    for (std::size_t i = 0; i < means.size(); ++i) {
        const double w = weights[i] / total;
        second += w * (vars[i] + means[i] * means[i]);
        first += w * means[i];
        avg_var += w * vars[i];
    }
    return {second - first * first, avg_var};
}

struct CategoryPath {
    std::uint64_t code = 0;     // base-3 digits, study 1 in the least significant digit
    std::int32_t length = 0;
    double mass = 0.0;           // P0[categories of studies 1..t, T >= t]
    double continue_mass = 0.0;  // P0[categories of studies 1..t, T >= t+1]

    Category at(std::int32_t i) const {
        std::uint64_t c = code;
        for (std::int32_t k = 0; k < i; ++k) c /= 3;
        return static_cast<Category>(c % 3);
    }
};

struct MixtureComponent {
    double weight = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};

// Every category sequence of length 1..t_max with its exact H0 probability
// including the survival factors. Sequences whose prefix cannot continue carry
// zero mass and are pruned.
class CategoryEnumeration {
public:
    static constexpr std::int64_t max_length = 20;
    static constexpr std::size_t max_paths = std::size_t{1} << 23;

    CategoryEnumeration(std::int64_t t_max, const GoldRushParams& p)
        : params_(p), critical_(two_sided_critical(p.alpha)) {
        p.validate();
        if (t_max < 1) throw invalid_input_error("enumerate_categories: t_max must be >= 1");
        if (t_max > max_length) {
            throw resource_error("enumerate_categories: t_max above 20 is not supported");
        }
        by_length_.reserve(static_cast<std::size_t>(t_max));
        std::size_t stored = 0;
        std::uint64_t digit = 1;
        for (std::int32_t len = 1; len <= t_max; ++len) {
            std::vector<CategoryPath> level;
            const auto extend = [&](std::uint64_t code, double prefix_mass) {
                for (Category c : all_categories) {
                    CategoryPath path;
                    path.code = code + digit * static_cast<std::uint64_t>(c);
                    path.length = len;
                    path.mass = prefix_mass * category_mass(c, p.alpha);
                    path.continue_mass = path.mass * p.omega(len, c);
                    level.push_back(path);
                }
            };
            if (len == 1) {
                extend(0, 1.0);
            } else {
                for (const auto& prev : by_length_.back()) {
                    if (prev.continue_mass > 0.0) extend(prev.code, prev.continue_mass);
                }
            }
            stored += level.size();
            if (stored > max_paths) {
                throw resource_error("enumerate_categories: too many category sequences");
            }
            by_length_.push_back(std::move(level));
            digit *= 3;
        }
    }

    std::int64_t t_max() const { return static_cast<std::int64_t>(by_length_.size()); }
    const GoldRushParams& params() const { return params_; }

    std::span<const CategoryPath> paths(std::int64_t t) const {
        check(t);
        return by_length_[static_cast<std::size_t>(t - 1)];
    }

    // P0[T >= t], summed over all sequences of length t.
    double surviving_mass(std::int64_t t) const {
        double s = 0.0;
        for (const auto& path : paths(t)) s += path.mass;
        return s;
    }

    // E0[Z^(t) | T >= t] from the exact mixture: each sequence of t-1 continuing
    // categories contributes its truncated-normal means, the t-th study 0.
    double conditional_mean_meta_z(std::int64_t t) const {
        if (t < 2) return 0.0;
        std::array<double, 3> means{};
        for (Category c : all_categories) {
            means[static_cast<std::size_t>(c)] = category_moments(c, critical_).mean;
        }
        double num = 0.0;
        double den = 0.0;
        for (const auto& path : paths(t - 1)) {
            if (path.continue_mass <= 0.0) continue;
            double sum = 0.0;
            for (std::int32_t i = 0; i < path.length; ++i) {
                sum += means[static_cast<std::size_t>(path.at(i))];
            }
            num += path.continue_mass * sum;
            den += path.continue_mass;
        }
        return num / (den * std::sqrt(static_cast<double>(t)));
    }

    // Components of Z^(2) | T >= 2, one per continuing pilot category:
    // Z^(2) = (Z_1 + Z_2)/sqrt2 with Z_1 truncated and Z_2 standard normal.
    std::vector<MixtureComponent> meta_z2_components() const {
        std::vector<MixtureComponent> out;
        for (const auto& path : paths(1)) {
            if (path.continue_mass <= 0.0) continue;
            const auto m = category_moments(path.at(0), critical_);
            out.push_back({path.continue_mass, m.mean / std::numbers::sqrt2,
                           (m.variance + 1.0) / 2.0});
        }
        return out;
    }

private:
    void check(std::int64_t t) const {
        if (t < 1 || t > t_max()) throw invalid_input_error("category enumeration: t out of range");
    }

    GoldRushParams params_;
    double critical_;
    std::vector<std::vector<CategoryPath>> by_length_;
};

inline CategoryEnumeration enumerate_categories(std::int64_t t_max, const GoldRushParams& p) {
    return CategoryEnumeration(t_max, p);
}

}  // namespace accumbias
