#pragma once

// Common-effect (fixed-effect) meta-analysis with a known, shared sigma_D.
//
// A study is carried on two scales at once: its standardized Z-score and its
// mean difference D_i on the original scale. Policies that threshold on
// significance read z; policies that threshold on a clinically relevant effect
// read mean_diff or the cumulative estimate M.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include "accumbias/errors.hpp"

namespace accumbias {

struct StudyOutcome {
    double z = 0.0;           // standardized study Z-score
    std::int64_t n = 1;       // per-arm sample size
    double mean_diff = 0.0;   // treatment-effect estimate on the original scale
    double sigma_d = 1.0;     // common standard deviation of difference scores

    static StudyOutcome from_z(double z, std::int64_t n, double sigma_d) {
        return StudyOutcome{z, n, z * sigma_d / std::sqrt(static_cast<double>(n)), sigma_d};
    }

    static StudyOutcome from_mean_diff(double mean_diff, std::int64_t n, double sigma_d) {
        return StudyOutcome{mean_diff / (sigma_d / std::sqrt(static_cast<double>(n))), n,
                            mean_diff, sigma_d};
    }

    double standard_error() const { return sigma_d / std::sqrt(static_cast<double>(n)); }
};

// Throws invalid_input_error if n < 1, sigma_d <= 0, or the two scales disagree
// by more than 1e-12 relative.
inline void validate(const StudyOutcome& s) {
    if (s.n < 1) {
        throw invalid_input_error("study sample size must be >= 1");
    }
    if (!(s.sigma_d > 0.0) || !std::isfinite(s.sigma_d)) {
        throw invalid_input_error("sigma_d must be positive and finite");
    }
    const double implied_z = s.mean_diff / s.standard_error();
    const double scale = std::max({1.0, std::abs(s.z), std::abs(implied_z)});
    if (std::abs(implied_z - s.z) > 1e-12 * scale) {
        throw invalid_input_error("study z and mean_diff are inconsistent");
    }
}

struct MetaState {
    std::int64_t t = 0;
    double combined_z = 0.0;         // Z^(t)
    double combined_estimate = 0.0;  // M^(t)
    double combined_se = 0.0;        // SE of M^(t)
    std::int64_t total_n = 0;        // N^(t)
    double cum_log_lr = 0.0;         // filled by the engine; 0 when unset
};

// Running synthesis over a growing study series. Adding a study is O(1), so
// the engine can snapshot MetaState after every study.
class MetaAccumulator {
public:
    void add(const StudyOutcome& s) {
        if (t_ == 0) {
            sigma_d_ = s.sigma_d;
        } else if (!same_sigma(s.sigma_d)) {
            throw model_violation_error("all studies must share sigma_d");
        }
        const double n = static_cast<double>(s.n);
        ++t_;
        total_n_ += s.n;
        sum_sqrt_n_z_ += std::sqrt(n) * s.z;
        sum_n_mean_diff_ += n * s.mean_diff;
        sum_z_ += s.z;
    }

    MetaState state() const {
        if (t_ == 0) {
            throw invalid_input_error("meta-analysis of an empty study list");
        }
        const double total = static_cast<double>(total_n_);
        MetaState m;
        m.t = t_;
        m.total_n = total_n_;
        m.combined_z = sum_sqrt_n_z_ / std::sqrt(total);
        // W_i = n_i / sigma^2, so M = sum(n_i D_i) / N and SE = sigma / sqrt(N).
        m.combined_estimate = sum_n_mean_diff_ / total;
        m.combined_se = sigma_d_ / std::sqrt(total);
        return m;
    }

    std::int64_t size() const { return t_; }
    double sum_z() const { return sum_z_; }

    void reset() { *this = MetaAccumulator{}; }

private:
    bool same_sigma(double sigma) const {
        return std::abs(sigma - sigma_d_) <= 1e-12 * std::max(std::abs(sigma), std::abs(sigma_d_));
    }

    std::int64_t t_ = 0;
    std::int64_t total_n_ = 0;
    double sigma_d_ = 0.0;
    double sum_sqrt_n_z_ = 0.0;
    double sum_n_mean_diff_ = 0.0;
    double sum_z_ = 0.0;
};

// Full synthesis: M^(t) = sum W_i D_i / sum W_i with W_i = 1/SE_i^2, Z^(t) = M/SE_M.
inline MetaState combine_estimate(std::span<const StudyOutcome> studies) {
    if (studies.empty()) {
        throw invalid_input_error("combine_estimate: empty study list");
    }
    const double sigma = studies.front().sigma_d;
    double sum_w = 0.0;
    double sum_w_d = 0.0;
    std::int64_t total_n = 0;
    for (const auto& s : studies) {
        if (s.n < 1 || !(s.sigma_d > 0.0)) {
            throw invalid_input_error("combine_estimate: invalid study");
        }
        if (std::abs(s.sigma_d - sigma) > 1e-12 * std::max(s.sigma_d, sigma)) {
            throw model_violation_error("combine_estimate: all studies must share sigma_d");
        }
        const double w = 1.0 / (s.standard_error() * s.standard_error());
        sum_w += w;
        sum_w_d += w * s.mean_diff;
        total_n += s.n;
    }
    MetaState m;
    m.t = static_cast<std::int64_t>(studies.size());
    m.total_n = total_n;
    m.combined_estimate = sum_w_d / sum_w;
    m.combined_se = std::sqrt(1.0 / sum_w);
    m.combined_z = m.combined_estimate / m.combined_se;
    return m;
}

// Z^(t) = sum sqrt(n_i) Z_i / sqrt(N^(t)).
inline double combine_z(std::span<const StudyOutcome> studies) {
    if (studies.empty()) {
        throw invalid_input_error("combine_z: empty study list");
    }
    const double sigma = studies.front().sigma_d;
    double num = 0.0;
    std::int64_t total_n = 0;
    for (const auto& s : studies) {
        if (s.n < 1) {
            throw invalid_input_error("combine_z: sample size must be >= 1");
        }
        if (std::abs(s.sigma_d - sigma) > 1e-12 * std::max(std::abs(s.sigma_d), std::abs(sigma))) {
            throw model_violation_error("combine_z: all studies must share sigma_d");
        }
        num += std::sqrt(static_cast<double>(s.n)) * s.z;
        total_n += s.n;
    }
    return num / std::sqrt(static_cast<double>(total_n));
}

}  // namespace accumbias
