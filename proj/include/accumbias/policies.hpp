#pragma once

// Accumulation policies: how a study series grows (continuation hazards) and
// when it gets meta-analyzed. Every policy reads data and parameters only and
// never the hypothesis that generated the data.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "accumbias/errors.hpp"
#include "accumbias/meta_core.hpp"
#include "accumbias/normal.hpp"

namespace accumbias {

struct PolicyDecision {
    double continue_prob = 1.0;  // 1 - lambda(t | history)
    double analyze_prob = 1.0;   // P[analysis at t | T >= t, history]
};

enum class Category : std::uint8_t {
    significant_positive = 0,
    nonsignificant = 1,
    significant_negative = 2,
};

inline Category classify(double z, double critical) {
    if (z >= critical) return Category::significant_positive;
    if (z <= -critical) return Category::significant_negative;
    return Category::nonsignificant;
}

namespace detail {
inline void check_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw invalid_input_error(std::string(what) + " must lie in [0, 1]");
    }
}
inline void check_time(std::int64_t t) {
    if (t < 1) throw invalid_input_error("time index t must be >= 1");
}
}  // namespace detail

// New-study probabilities. The *1 fields govern the pilot study (t = 1).
struct GoldRushParams {
    double omega_s1 = 1.0;
    double omega_x1 = 0.0;
    double omega_ns1 = 0.1;
    double omega_s = 1.0;
    double omega_x = 0.0;
    double omega_ns = 0.02;
    double alpha = 0.05;

    void validate() const {
        detail::check_probability(omega_s1, "omega_s1");
        detail::check_probability(omega_x1, "omega_x1");
        detail::check_probability(omega_ns1, "omega_ns1");
        detail::check_probability(omega_s, "omega_s");
        detail::check_probability(omega_x, "omega_x");
        detail::check_probability(omega_ns, "omega_ns");
        if (!(alpha > 0.0 && alpha < 1.0)) throw invalid_input_error("alpha must lie in (0, 1)");
    }

    double omega(std::int64_t t, Category c) const {
        const bool pilot = t == 1;
        switch (c) {
            case Category::significant_positive: return pilot ? omega_s1 : omega_s;
            case Category::significant_negative: return pilot ? omega_x1 : omega_x;
            case Category::nonsignificant: break;
        }
        return pilot ? omega_ns1 : omega_ns;
    }

    friend bool operator==(const GoldRushParams&, const GoldRushParams&) = default;
};

struct PowerLawParams {
    double delta_h1 = 0.25;  // minimally clinically relevant effect
    double tau = 1.0;

    void validate() const {
        if (!(delta_h1 > 0.0)) throw invalid_input_error("delta_h1 must be positive");
        if (!(tau > 0.0)) throw invalid_input_error("tau must be positive");
    }
    friend bool operator==(const PowerLawParams&, const PowerLawParams&) = default;
};

struct TimingWindowParams {
    std::int64_t a = 1;
    std::int64_t b = 3;
    double delta_h1 = 0.25;

    void validate() const {
        if (a < 0 || b < 0 || a > b) throw invalid_input_error("timing window needs 0 <= a <= b");
        if (!(delta_h1 > 0.0)) throw invalid_input_error("delta_h1 must be positive");
    }
    friend bool operator==(const TimingWindowParams&, const TimingWindowParams&) = default;
};

inline double gold_rush_hazard_at(std::int64_t t, double z_t, const GoldRushParams& p,
                                  double critical) {
    detail::check_time(t);
    return 1.0 - p.omega(t, classify(z_t, critical));
}

// lambda(t | z_t) = 1 - (omega_s 1{z >= c} + omega_x 1{z <= -c} + omega_ns 1{|z| < c}).
inline double gold_rush_hazard(std::int64_t t, double z_t, const GoldRushParams& p) {
    return gold_rush_hazard_at(t, z_t, p, two_sided_critical(p.alpha));
}

// lambda(t | M^(t-1)) = 1 - (M/Delta)^tau on 0 < M < Delta, 1 otherwise; lambda(1) = 0.
inline double power_law_hazard(std::int64_t t, double m_prev, const PowerLawParams& p) {
    detail::check_time(t);
    if (t <= 1) return 0.0;
    if (m_prev > 0.0 && m_prev < p.delta_h1) {
        return 1.0 - std::pow(m_prev / p.delta_h1, p.tau);
    }
    return 1.0;
}

inline double lsr_hazard_at(std::int64_t t, double combined_z, double critical) {
    detail::check_time(t);
    return std::abs(combined_z) >= critical ? 1.0 : 0.0;
}

// Stop as soon as the cumulative meta-analysis is significant.
inline double lsr_hazard(std::int64_t t, double combined_z, double alpha) {
    return lsr_hazard_at(t, combined_z, two_sided_critical(alpha));
}

// 1 iff the number of studies with mean_diff > delta_h1 lies in [a, b].
inline double timing_window_analyze(std::span<const StudyOutcome> studies,
                                    const TimingWindowParams& p) {
    std::int64_t positive = 0;
    for (const auto& s : studies) {
        if (s.mean_diff > p.delta_h1) ++positive;
    }
    return (positive >= p.a && positive <= p.b) ? 1.0 : 0.0;
}

// S(t-1) = prod_{i=0}^{t-1} (1 - lambda(i)); hazards[0] is lambda(0) and must be 0.
inline double survival_from_hazards(std::span<const double> hazards) {
    if (hazards.empty()) throw invalid_input_error("survival_from_hazards: empty hazard list");
    if (hazards.front() != 0.0) {
        throw invalid_input_error("lambda(0) must be 0: every series has a first study");
    }
    double s = 1.0;
    for (double h : hazards) {
        detail::check_probability(h, "hazard");
        s *= 1.0 - h;
    }
    return s;
}

// P[T = t] = S(t-1) - S(t), for survivals S(0), S(1), ...
inline std::vector<double> stopping_mass(std::span<const double> survivals) {
    if (survivals.empty()) throw invalid_input_error("stopping_mass: empty survival list");
    if (std::abs(survivals.front() - 1.0) > 1e-12) {
        throw invalid_input_error("stopping_mass: S(0) must be 1");
    }
    std::vector<double> mass;
    mass.reserve(survivals.size() - 1);
    for (std::size_t i = 1; i < survivals.size(); ++i) {
        if (survivals[i] > survivals[i - 1] || survivals[i] < 0.0) {
            throw invalid_input_error("stopping_mass: survivals must be nonincreasing and >= 0");
        }
        mass.push_back(survivals[i - 1] - survivals[i]);
    }
    return mass;
}

// What a policy sees after study t: the realized studies 1..t and the
// synthesis after each of them (metas[i] summarizes studies 1..i+1).
struct PolicyContext {
    std::int64_t t;
    std::span<const StudyOutcome> studies;
    std::span<const MetaState> metas;
};

class GoldRushPolicy {
public:
    explicit GoldRushPolicy(GoldRushParams params = {}, double analyze_prob = 1.0)
        : params_(params), analyze_prob_(analyze_prob) {
        params_.validate();
        detail::check_probability(analyze_prob_, "analyze_prob");
        critical_ = two_sided_critical(params_.alpha);
    }

    PolicyDecision decide(const PolicyContext& ctx) const {
        const double z = ctx.studies[static_cast<std::size_t>(ctx.t - 1)].z;
        return {1.0 - gold_rush_hazard_at(ctx.t, z, params_, critical_), analyze_prob_};
    }

    const GoldRushParams& params() const { return params_; }
    double analyze_prob() const { return analyze_prob_; }
    double critical() const { return critical_; }
    static constexpr std::string_view name = "gold_rush";

private:
    GoldRushParams params_;
    double analyze_prob_;
    double critical_ = 0.0;
};

class PowerLawPolicy {
public:
    explicit PowerLawPolicy(PowerLawParams params = {}, double analyze_prob = 1.0)
        : params_(params), analyze_prob_(analyze_prob) {
        params_.validate();
        detail::check_probability(analyze_prob_, "analyze_prob");
    }

    PolicyDecision decide(const PolicyContext& ctx) const {
        // metas[t-2] is M^(t-1); it only exists from t = 2 onwards, where it is needed.
        const double m_prev =
            ctx.t >= 2 ? ctx.metas[static_cast<std::size_t>(ctx.t - 2)].combined_estimate : 0.0;
        return {1.0 - power_law_hazard(ctx.t, m_prev, params_), analyze_prob_};
    }

    const PowerLawParams& params() const { return params_; }
    double analyze_prob() const { return analyze_prob_; }
    static constexpr std::string_view name = "power_law";

private:
    PowerLawParams params_;
    double analyze_prob_;
};

// Living systematic review: analyze after every study, stop at the first
// significant cumulative Z.
class LsrPolicy {
public:
    explicit LsrPolicy(double alpha = 0.05) : alpha_(alpha), critical_(two_sided_critical(alpha)) {}

    PolicyDecision decide(const PolicyContext& ctx) const {
        const double z = ctx.metas[static_cast<std::size_t>(ctx.t - 1)].combined_z;
        return {1.0 - lsr_hazard_at(ctx.t, z, critical_), 1.0};
    }

    double alpha() const { return alpha_; }
    static constexpr std::string_view name = "lsr";

private:
    double alpha_;
    double critical_;
};

// Analysis timing depends on the count of positive findings; continuation is a
// constant, data-independent probability.
class TimingWindowPolicy {
public:
    explicit TimingWindowPolicy(TimingWindowParams params = {}, double continue_prob = 0.9)
        : params_(params), continue_prob_(continue_prob) {
        params_.validate();
        detail::check_probability(continue_prob_, "continue_prob");
    }

    PolicyDecision decide(const PolicyContext& ctx) const {
        return {continue_prob_, timing_window_analyze(ctx.studies.first(static_cast<std::size_t>(ctx.t)), params_)};
    }

    const TimingWindowParams& params() const { return params_; }
    double continue_prob() const { return continue_prob_; }
    static constexpr std::string_view name = "timing_window";

private:
    TimingWindowParams params_;
    double continue_prob_;
};

// Unbiased baseline: constant continuation, analysis at one fixed size
// (analysis_time = 0 analyzes after every study).
class IndependentPolicy {
public:
    explicit IndependentPolicy(double continue_prob = 0.9, std::int64_t analysis_time = 0)
        : continue_prob_(continue_prob), analysis_time_(analysis_time) {
        detail::check_probability(continue_prob_, "continue_prob");
        if (analysis_time_ < 0) throw invalid_input_error("analysis_time must be >= 0");
    }

    PolicyDecision decide(const PolicyContext& ctx) const {
        const bool analyze = analysis_time_ == 0 || ctx.t == analysis_time_;
        return {continue_prob_, analyze ? 1.0 : 0.0};
    }

    double continue_prob() const { return continue_prob_; }
    std::int64_t analysis_time() const { return analysis_time_; }
    static constexpr std::string_view name = "independent";

private:
    double continue_prob_;
    std::int64_t analysis_time_;
};

using Policy =
    std::variant<GoldRushPolicy, PowerLawPolicy, LsrPolicy, TimingWindowPolicy, IndependentPolicy>;

inline PolicyDecision decide(const Policy& policy, const PolicyContext& ctx) {
    return std::visit([&](const auto& p) { return p.decide(ctx); }, policy);
}

inline std::string_view policy_name(const Policy& policy) {
    return std::visit([](const auto& p) { return std::remove_cvref_t<decltype(p)>::name; }, policy);
}

}  // namespace accumbias
