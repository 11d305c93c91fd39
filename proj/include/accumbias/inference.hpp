#pragma once

// Decision rules on a growing study series. The likelihood ratio of the data is
// the same whatever process decided how many studies to run and when to
// analyze, so it takes no policy argument.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "accumbias/errors.hpp"
#include "accumbias/meta_core.hpp"
#include "accumbias/normal.hpp"
#include "accumbias/tally.hpp"
#include "accumbias/trajectory.hpp"

namespace accumbias {

// f1: every study z ~ Normal(delta, 1).
struct SimpleAlternative {
    double delta = 1.0;
    friend bool operator==(const SimpleAlternative&, const SimpleAlternative&) = default;
};

// f1: the whole series shares one sign, z ~ Normal(+delta, 1) or Normal(-delta, 1)
// with probability 1/2 each. For two-sided monitoring.
struct SymmetricAlternative {
    double delta = 1.0;
    friend bool operator==(const SymmetricAlternative&, const SymmetricAlternative&) = default;
};

using Alternative = std::variant<SimpleAlternative, SymmetricAlternative>;

inline double alternative_delta(const Alternative& alt) {
    return std::visit([](const auto& a) { return a.delta; }, alt);
}

inline void validate(const Alternative& alt) {
    if (!std::isfinite(alternative_delta(alt))) {
        throw invalid_input_error("alternative delta must be finite");
    }
}

// Z-scale mean of a study with n per arm when the true effect is delta_h1.
inline double delta_from_effect(std::int64_t n, double delta_h1, double sigma_d) {
    if (n < 1) throw invalid_input_error("delta_from_effect: n must be >= 1");
    if (!(sigma_d > 0.0)) throw invalid_input_error("delta_from_effect: sigma_d must be positive");
    return std::sqrt(static_cast<double>(n)) * delta_h1 / sigma_d;
}

inline bool z_test(double combined_z, double alpha) {
    return std::abs(combined_z) >= two_sided_critical(alpha);
}

inline bool z_test(const MetaState& meta, double alpha) {
    return z_test(meta.combined_z, alpha);
}

// log LR from the sufficient statistic (sum of z, number of studies).
inline double log_lr(const Alternative& alt, double sum_z, std::int64_t t) {
    const double tt = static_cast<double>(t);
    if (const auto* s = std::get_if<SimpleAlternative>(&alt)) {
        return s->delta * sum_z - tt * s->delta * s->delta / 2.0;
    }
    const double d = std::get<SymmetricAlternative>(alt).delta;
    const double a = d * std::abs(sum_z);
    // log(cosh(a)) - t d^2 / 2, evaluated without overflow.
    return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2 - tt * d * d / 2.0;
}

inline double log_lr(std::span<const StudyOutcome> studies, const Alternative& alt) {
    double sum = 0.0;
    for (const auto& s : studies) sum += s.z;
    return log_lr(alt, sum, static_cast<std::int64_t>(studies.size()));
}

inline double log_lr(std::span<const StudyOutcome> studies, const SimpleAlternative& alt) {
    return log_lr(studies, Alternative{alt});
}

// Integral of phi(z) * LR(z) for a single study. Equals 1 for any alternative.
inline double betting_factor_expectation_check(const Alternative& alt) {
    using boost::math::quadrature::gauss_kronrod;
    validate(alt);
    const double d = alternative_delta(alt);
    const bool symmetric = std::holds_alternative<SymmetricAlternative>(alt);
    const double lo = (symmetric ? -std::abs(d) : std::min(0.0, d)) - 12.0;
    const double hi = (symmetric ? std::abs(d) : std::max(0.0, d)) + 12.0;
    const auto f = [&](double z) { return normal_pdf(z) * std::exp(log_lr(alt, z, 1)); };
    return gauss_kronrod<double, 61>::integrate(f, lo, hi, 20, 1e-14);
}

inline double betting_factor_expectation_check(const SimpleAlternative& alt) {
    return betting_factor_expectation_check(Alternative{alt});
}

inline void check_prior(double pi) {
    if (!(pi > 0.0 && pi < 1.0)) throw invalid_input_error("prior pi must lie in (0, 1)");
}

inline double posterior_odds(double log_lr_value, double pi) {
    check_prior(pi);
    return std::exp(log_lr_value) * pi / (1.0 - pi);
}

// gamma * pi / (1 - pi): the posterior odds a rejection must reach.
inline double pre_experimental_rejection_odds(double gamma, double pi) {
    if (!(gamma > 0.0)) throw invalid_input_error("gamma must be positive");
    check_prior(pi);
    return gamma * pi / (1.0 - pi);
}

inline bool reject_conditional(double odds, double gamma, double pi) {
    return odds >= pre_experimental_rejection_odds(gamma, pi);
}

// Smallest analysis time with LR >= 1/alpha, if any.
inline std::optional<std::int64_t> surviving_monitor(const SeriesTrajectory& tr,
                                                     const Alternative& alt, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw invalid_input_error("alpha must lie in (0, 1)");
    const double threshold = -std::log(alpha);
    double sum = 0.0;
    std::int64_t t = 0;
    for (std::int64_t a : tr.analysis_times) {
        if (a < 1 || a > static_cast<std::int64_t>(tr.outcomes.size())) {
            throw invalid_input_error("analysis time outside the realized series");
        }
        while (t < a) sum += tr.outcomes[static_cast<std::size_t>(t++)].z;
        if (log_lr(alt, sum, a) >= threshold) return a;
    }
    return std::nullopt;
}

inline std::optional<std::int64_t> surviving_monitor(const SeriesTrajectory& tr,
                                                     const SimpleAlternative& alt, double alpha) {
    return surviving_monitor(tr, Alternative{alt}, alpha);
}

struct ZTestRule {
    double alpha = 0.05;
    friend bool operator==(const ZTestRule&, const ZTestRule&) = default;
};

// Reject when LR >= 1/alpha.
struct LrThresholdRule {
    double alpha = 0.05;
    Alternative alternative = SimpleAlternative{1.0};
    friend bool operator==(const LrThresholdRule&, const LrThresholdRule&) = default;
};

// Reject when posterior odds >= gamma * pi / (1 - pi).
struct PosteriorOddsRule {
    double gamma = 16.0;
    double pi = 0.5;
    Alternative alternative = SimpleAlternative{1.0};
    friend bool operator==(const PosteriorOddsRule&, const PosteriorOddsRule&) = default;
};

using DecisionRule = std::variant<ZTestRule, LrThresholdRule, PosteriorOddsRule>;

inline std::string rule_name(const DecisionRule& rule) {
    switch (rule.index()) {
        case 0: return "z_test";
        case 1: return "lr_threshold";
        default: return "posterior_odds";
    }
}

inline void validate(const DecisionRule& rule) {
    std::visit(
        [](const auto& r) {
            using R = std::remove_cvref_t<decltype(r)>;
            if constexpr (std::is_same_v<R, PosteriorOddsRule>) {
                pre_experimental_rejection_odds(r.gamma, r.pi);
                validate(r.alternative);
            } else {
                if (!(r.alpha > 0.0 && r.alpha < 1.0)) {
                    throw invalid_input_error("alpha must lie in (0, 1)");
                }
                if constexpr (std::is_same_v<R, LrThresholdRule>) validate(r.alternative);
            }
        },
        rule);
}

// A rule with its thresholds precomputed, for use in the simulation loop.
class RuleEvaluator {
public:
    explicit RuleEvaluator(const DecisionRule& rule) : rule_(rule) {
        validate(rule_);
        if (const auto* z = std::get_if<ZTestRule>(&rule_)) {
            threshold_ = two_sided_critical(z->alpha);
        } else if (const auto* lr = std::get_if<LrThresholdRule>(&rule_)) {
            threshold_ = -std::log(lr->alpha);
            alt_ = lr->alternative;
        } else {
            const auto& po = std::get<PosteriorOddsRule>(rule_);
            // odds >= gamma pi/(1-pi)  <=>  log LR >= log gamma; compared in log space.
            threshold_ = std::log(po.gamma);
            alt_ = po.alternative;
        }
    }

    bool rejects(std::int64_t t, double combined_z, double sum_z) const {
        if (rule_.index() == 0) return std::abs(combined_z) >= threshold_;
        return log_lr(alt_, sum_z, t) >= threshold_;
    }

    bool rejects(const SeriesTrajectory& tr, std::int64_t t) const {
        return rejects(t, tr.meta_at(t).combined_z, tr.sum_z_at(t));
    }

    const DecisionRule& rule() const { return rule_; }

private:
    DecisionRule rule_;
    Alternative alt_ = SimpleAlternative{};
    double threshold_ = 0.0;
};

enum class RatioBasis {
    conditional,  // rates among analyses at t
    per_series,   // rates among all series: P[reject at t, analysis at t, T >= t]
};

struct RatioEstimate {
    double ratio = 0.0;
    double se = 0.0;             // delta method; NaN when lower_bound_only
    bool lower_bound_only = false;  // H0 had no rejections: ratio is a 95% lower bound
    RateEstimate h1;
    RateEstimate h0;
};

// H1 rejection rate over H0 rejection rate at time t.
inline RatioEstimate true_false_rejection_ratio(const ErrorTally& tally_h1,
                                                const ErrorTally& tally_h0, std::int64_t t,
                                                RatioBasis basis = RatioBasis::conditional) {
    const auto rate = [&](const ErrorTally& tally) {
        if (basis == RatioBasis::conditional) return conditional_rate(tally, t);
        return binomial_rate(tally.at(t).rejections, tally.series_total);
    };
    RatioEstimate out;
    out.h1 = rate(tally_h1);
    out.h0 = rate(tally_h0);
    if (out.h0.numerator == 0) {
        // Rule of three: with 0 of n, 3/n bounds the H0 rate from above at ~95%.
        out.lower_bound_only = true;
        out.ratio = out.h1.value / (3.0 / static_cast<double>(out.h0.denominator));
        out.se = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    out.ratio = out.h1.value / out.h0.value;
    const double rel1 = out.h1.value > 0.0 ? out.h1.se / out.h1.value : 0.0;
    const double rel0 = out.h0.se / out.h0.value;
    out.se = out.ratio * std::sqrt(rel1 * rel1 + rel0 * rel0);
    return out;
}

}  // namespace accumbias
