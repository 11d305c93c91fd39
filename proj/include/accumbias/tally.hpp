#pragma once

// Mergeable error counts. Merging is field-wise addition, so tallies from any
// partition of the replications fold to the same result in any order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "accumbias/errors.hpp"

namespace accumbias {

struct TimeCounts {
    std::int64_t series_reaching = 0;  // T >= t
    std::int64_t analyses = 0;         // analysis event at t
    std::int64_t rejections = 0;       // rejection at an analysis at t

    friend bool operator==(const TimeCounts&, const TimeCounts&) = default;
};

struct ErrorTally {
    std::vector<TimeCounts> per_t;             // per_t[t - 1]
    std::int64_t series_total = 0;
    std::int64_t series_with_any_rejection = 0;
    std::int64_t censored = 0;
    std::vector<std::int64_t> first_error_at;  // first_error_at[t - 1]

    std::int64_t horizon() const { return static_cast<std::int64_t>(per_t.size()); }

    const TimeCounts& at(std::int64_t t) const {
        static const TimeCounts empty{};
        if (t < 1 || t > horizon()) return empty;
        return per_t[static_cast<std::size_t>(t - 1)];
    }

    std::int64_t first_errors(std::int64_t t) const {
        if (t < 1 || t > static_cast<std::int64_t>(first_error_at.size())) return 0;
        return first_error_at[static_cast<std::size_t>(t - 1)];
    }

    TimeCounts& grow_to(std::int64_t t) {
        if (t > horizon()) per_t.resize(static_cast<std::size_t>(t));
        return per_t[static_cast<std::size_t>(t - 1)];
    }

    void add_first_error(std::int64_t t) {
        if (t > static_cast<std::int64_t>(first_error_at.size())) {
            first_error_at.resize(static_cast<std::size_t>(t), 0);
        }
        ++first_error_at[static_cast<std::size_t>(t - 1)];
    }

    std::int64_t first_error_total() const {
        std::int64_t s = 0;
        for (auto c : first_error_at) s += c;
        return s;
    }

    void merge(const ErrorTally& other) {
        if (other.per_t.size() > per_t.size()) per_t.resize(other.per_t.size());
        for (std::size_t i = 0; i < other.per_t.size(); ++i) {
            per_t[i].series_reaching += other.per_t[i].series_reaching;
            per_t[i].analyses += other.per_t[i].analyses;
            per_t[i].rejections += other.per_t[i].rejections;
        }
        if (other.first_error_at.size() > first_error_at.size()) {
            first_error_at.resize(other.first_error_at.size(), 0);
        }
        for (std::size_t i = 0; i < other.first_error_at.size(); ++i) {
            first_error_at[i] += other.first_error_at[i];
        }
        series_total += other.series_total;
        series_with_any_rejection += other.series_with_any_rejection;
        censored += other.censored;
    }

    friend bool operator==(const ErrorTally&, const ErrorTally&) = default;
};

inline ErrorTally merged(ErrorTally a, const ErrorTally& b) {
    a.merge(b);
    return a;
}

struct RateEstimate {
    double value = 0.0;
    double se = 0.0;  // binomial sqrt(p (1 - p) / denominator)
    std::int64_t numerator = 0;
    std::int64_t denominator = 0;
};

inline RateEstimate binomial_rate(std::int64_t k, std::int64_t n) {
    if (n <= 0) throw undefined_rate_error("rate with zero denominator");
    const double p = static_cast<double>(k) / static_cast<double>(n);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), k, n};
}

// Rejections among analyses performed at t (given T >= t).
inline RateEstimate conditional_rate(const ErrorTally& tally, std::int64_t t) {
    const auto& c = tally.at(t);
    if (c.analyses == 0) {
        throw undefined_rate_error("no analyses at t = " + std::to_string(t) + " (series reaching: " +
                                   std::to_string(c.series_reaching) + ")");
    }
    return binomial_rate(c.rejections, c.analyses);
}

// Fraction of series with a rejection at any of their analysis times.
inline RateEstimate surviving_rate(const ErrorTally& tally) {
    if (tally.series_total <= 0) throw invalid_input_error("surviving_rate: empty tally");
    return binomial_rate(tally.series_with_any_rejection, tally.series_total);
}

}  // namespace accumbias
