#pragma once

// Seeded Monte Carlo over study series.
//
// Replications are cut into fixed-size chunks. Each chunk is simulated into its
// own result and the chunk results are folded in chunk order, so the output is
// bit-identical for any number of worker threads.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "accumbias/errors.hpp"
#include "accumbias/inference.hpp"
#include "accumbias/meta_core.hpp"
#include "accumbias/policies.hpp"
#include "accumbias/rng.hpp"
#include "accumbias/tally.hpp"
#include "accumbias/trajectory.hpp"

namespace accumbias {

struct SimConfig {
    std::int64_t replications = 100000;
    std::uint64_t seed = 20190101;
    std::int64_t t_cap = 100;
    double hypothesis_mean = 0.0;  // mean of every study z-score: 0 under H0
    std::int64_t equal_n = 16;
    double sigma_d = 1.0;
    std::vector<std::int64_t> sizes;  // per-position sizes; the last one repeats. Empty: equal_n.
    Alternative alternative = SimpleAlternative{1.0};  // for MetaState::cum_log_lr
    unsigned threads = 1;                               // 0: hardware concurrency
    std::int64_t chunk_size = 65536;

    void validate() const {
        if (replications < 1) throw invalid_input_error("replications must be >= 1");
        if (t_cap < 1) throw invalid_input_error("t_cap must be >= 1");
        if (!std::isfinite(hypothesis_mean)) throw invalid_input_error("hypothesis_mean must be finite");
        if (equal_n < 1) throw invalid_input_error("equal_n must be >= 1");
        if (!(sigma_d > 0.0) || !std::isfinite(sigma_d)) {
            throw invalid_input_error("sigma_d must be positive and finite");
        }
        for (auto n : sizes) {
            if (n < 1) throw invalid_input_error("study sizes must be >= 1");
        }
        if (chunk_size < 1) throw invalid_input_error("chunk_size must be >= 1");
        accumbias::validate(alternative);
    }

    std::int64_t size_at(std::int64_t t) const {
        if (sizes.empty()) return equal_n;
        const auto i = std::min<std::size_t>(static_cast<std::size_t>(t - 1), sizes.size() - 1);
        return sizes[i];
    }
};

namespace detail {
inline bool draw(double p, Xoshiro256& gen) {
    if (p >= 1.0) return true;
    if (p <= 0.0) return false;
    return uniform01(gen) < p;
}
}  // namespace detail

// Grows one series. next_z() supplies study z-scores in order; decision draws
// come from `decision` and happen only for probabilities strictly inside (0, 1).
// At each t the analysis event is drawn before the continuation event.
template <class ZSource>
void simulate_series_with(const Policy& policy, const SimConfig& config, ZSource&& next_z,
                          Xoshiro256& decision, SeriesTrajectory& out) {
    out.clear();
    MetaAccumulator acc;
    for (std::int64_t t = 1;; ++t) {
        const auto s = StudyOutcome::from_z(next_z(), config.size_at(t), config.sigma_d);
        acc.add(s);
        MetaState meta = acc.state();
        meta.cum_log_lr = log_lr(config.alternative, acc.sum_z(), t);
        out.outcomes.push_back(s);
        out.meta_states.push_back(meta);
        out.sum_z.push_back(acc.sum_z());
        out.t_realized = t;

        const PolicyContext ctx{t, out.outcomes, out.meta_states};
        const PolicyDecision d = decide(policy, ctx);
        if (detail::draw(d.analyze_prob, decision)) out.analysis_times.push_back(t);
        const bool more = detail::draw(d.continue_prob, decision);
        if (!more) return;
        if (t >= config.t_cap) {
            out.censored = true;
            return;
        }
    }
}

// Replication `replication` of a run, using its own data and decision streams.
inline void simulate_series(const Policy& policy, const SimConfig& config,
                            std::uint64_t replication, SeriesTrajectory& out) {
    auto data = derive_stream(config.seed, replication, StreamPurpose::data);
    auto decision = derive_stream(config.seed, replication, StreamPurpose::decision);
    std::normal_distribution<double> normal(config.hypothesis_mean, 1.0);
    simulate_series_with(policy, config, [&] { return normal(data); }, decision, out);
}

inline SeriesTrajectory simulate_series(const Policy& policy, const SimConfig& config,
                                        std::uint64_t replication) {
    SeriesTrajectory out;
    simulate_series(policy, config, replication, out);
    return out;
}

// Power sums of a sample; merging adds them.
struct RunningMoments {
    std::int64_t count = 0;
    double s1 = 0.0;
    double s2 = 0.0;
    double s3 = 0.0;

    void add(double x) {
        ++count;
        s1 += x;
        s2 += x * x;
        s3 += x * x * x;
    }
    void merge(const RunningMoments& o) {
        count += o.count;
        s1 += o.s1;
        s2 += o.s2;
        s3 += o.s3;
    }
    double mean() const { return count > 0 ? s1 / static_cast<double>(count) : 0.0; }
    // Unbiased (n - 1) variance.
    double variance() const {
        if (count < 2) return 0.0;
        const double n = static_cast<double>(count);
        const double m = s1 / n;
        return std::max(0.0, (s2 - n * m * m) / (n - 1.0));
    }
    double se_mean() const {
        return count > 1 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
    }
    // Moment skewness m3 / m2^(3/2).
    double skewness() const {
        if (count < 3) return 0.0;
        const double n = static_cast<double>(count);
        const double m = s1 / n;
        const double m2 = s2 / n - m * m;
        const double m3 = s3 / n - 3.0 * m * s2 / n + 2.0 * m * m * m;
        return m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    }
    friend bool operator==(const RunningMoments&, const RunningMoments&) = default;
};

// Fixed-width histogram; width 0.1 over [-6, 6] by default.
struct Histogram {
    double lo = -6.0;
    double width = 0.1;
    std::vector<std::int64_t> counts = std::vector<std::int64_t>(120, 0);
    std::int64_t underflow = 0;
    std::int64_t overflow = 0;

    std::int64_t total() const {
        std::int64_t s = underflow + overflow;
        for (auto c : counts) s += c;
        return s;
    }
    double bin_center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * width; }
    void add(double x) {
        const double pos = (x - lo) / width;
        if (pos < 0.0) {
            ++underflow;
        } else if (pos >= static_cast<double>(counts.size())) {
            ++overflow;
        } else {
            ++counts[static_cast<std::size_t>(pos)];
        }
    }
    double density(std::size_t i) const {
        const auto n = total();
        return n > 0 ? static_cast<double>(counts[i]) / (static_cast<double>(n) * width) : 0.0;
    }
    void merge(const Histogram& o) {
        for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
        underflow += o.underflow;
        overflow += o.overflow;
    }
    friend bool operator==(const Histogram&, const Histogram&) = default;
};

struct TimeSummary {
    RunningMoments meta_z;             // Z^(t) | T >= t
    RunningMoments study_z;            // Z_t | T >= t
    RunningMoments study_z_continued;  // Z_t | T >= t+1
    std::int64_t continued_significant = 0;  // series with T >= t+1 and Z_t >= z_{alpha/2}

    void merge(const TimeSummary& o) {
        meta_z.merge(o.meta_z);
        study_z.merge(o.study_z);
        study_z_continued.merge(o.study_z_continued);
        continued_significant += o.continued_significant;
    }
    friend bool operator==(const TimeSummary&, const TimeSummary&) = default;
};

struct SamplePoint {
    double first_z = 0.0;  // Z_1 of the series
    double meta_z = 0.0;   // Z^(t)
    friend bool operator==(const SamplePoint&, const SamplePoint&) = default;
};

struct ExperimentOptions {
    std::vector<std::int64_t> histogram_times;  // Z^(t) | T >= t histograms
    std::vector<std::int64_t> sample_times;     // raw Z^(t) | T >= t samples
    std::int64_t max_samples = 0;               // per sample time, first in replication order
    double alpha = 0.05;                        // significance for continued_significant
};

struct ExperimentResult {
    std::vector<ErrorTally> tallies;  // one per decision rule, same order
    std::vector<TimeSummary> per_t;   // per_t[t - 1]
    std::vector<Histogram> histograms;
    std::vector<std::vector<SamplePoint>> samples;
    RunningMoments length;  // realized T
    std::int64_t replications = 0;

    const TimeSummary& at(std::int64_t t) const {
        static const TimeSummary empty{};
        if (t < 1 || t > static_cast<std::int64_t>(per_t.size())) return empty;
        return per_t[static_cast<std::size_t>(t - 1)];
    }

    void merge(const ExperimentResult& o, std::int64_t max_samples) {
        if (tallies.size() < o.tallies.size()) tallies.resize(o.tallies.size());
        for (std::size_t i = 0; i < o.tallies.size(); ++i) tallies[i].merge(o.tallies[i]);
        if (per_t.size() < o.per_t.size()) per_t.resize(o.per_t.size());
        for (std::size_t i = 0; i < o.per_t.size(); ++i) per_t[i].merge(o.per_t[i]);
        if (histograms.size() < o.histograms.size()) histograms.resize(o.histograms.size());
        for (std::size_t i = 0; i < o.histograms.size(); ++i) histograms[i].merge(o.histograms[i]);
        if (samples.size() < o.samples.size()) samples.resize(o.samples.size());
        for (std::size_t i = 0; i < o.samples.size(); ++i) {
            auto& dst = samples[i];
            for (const auto& p : o.samples[i]) {
                if (static_cast<std::int64_t>(dst.size()) >= max_samples) break;
                dst.push_back(p);
            }
        }
        length.merge(o.length);
        replications += o.replications;
    }
};

namespace detail {

inline void record_series(const SeriesTrajectory& tr, std::span<const RuleEvaluator> rules,
                          const ExperimentOptions& opt, double critical, ExperimentResult& r) {
    const std::int64_t T = tr.t_realized;
    ++r.replications;
    r.length.add(static_cast<double>(T));
    if (static_cast<std::int64_t>(r.per_t.size()) < T) r.per_t.resize(static_cast<std::size_t>(T));
    const bool grew_past_end = tr.censored;
    for (std::int64_t t = 1; t <= T; ++t) {
        auto& s = r.per_t[static_cast<std::size_t>(t - 1)];
        const double z = tr.outcomes[static_cast<std::size_t>(t - 1)].z;
        s.meta_z.add(tr.meta_at(t).combined_z);
        s.study_z.add(z);
        // Z_t | T >= t+1. A censored series did continue past its last study.
        if (t < T || grew_past_end) {
            s.study_z_continued.add(z);
            if (z >= critical) ++s.continued_significant;
        }
    }
    for (std::size_t h = 0; h < opt.histogram_times.size(); ++h) {
        const auto t = opt.histogram_times[h];
        if (t >= 1 && t <= T) r.histograms[h].add(tr.meta_at(t).combined_z);
    }
    for (std::size_t k = 0; k < opt.sample_times.size(); ++k) {
        const auto t = opt.sample_times[k];
        if (t >= 1 && t <= T && static_cast<std::int64_t>(r.samples[k].size()) < opt.max_samples) {
            r.samples[k].push_back({tr.outcomes.front().z, tr.meta_at(t).combined_z});
        }
    }
    for (std::size_t i = 0; i < rules.size(); ++i) {
        auto& tally = r.tallies[i];
        ++tally.series_total;
        if (tr.censored) ++tally.censored;
        tally.grow_to(T);
        for (std::int64_t t = 1; t <= T; ++t) ++tally.per_t[static_cast<std::size_t>(t - 1)].series_reaching;
        bool rejected = false;
        for (auto t : tr.analysis_times) {
            auto& c = tally.per_t[static_cast<std::size_t>(t - 1)];
            ++c.analyses;
            if (rules[i].rejects(tr, t)) {
                ++c.rejections;
                if (!rejected) tally.add_first_error(t);
                rejected = true;
            }
        }
        if (rejected) ++tally.series_with_any_rejection;
    }
}

inline ExperimentResult empty_result(std::size_t n_rules, const ExperimentOptions& opt) {
    ExperimentResult r;
    r.tallies.resize(n_rules);
    r.histograms.resize(opt.histogram_times.size());
    r.samples.resize(opt.sample_times.size());
    return r;
}

}  // namespace detail

inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

inline ExperimentResult run_experiment(const Policy& policy, const SimConfig& config,
                                       std::span<const DecisionRule> rules,
                                       const ExperimentOptions& options = {}) {
    config.validate();
    if (options.max_samples < 0) throw invalid_input_error("max_samples must be >= 0");
    const double critical = two_sided_critical(options.alpha);
    std::vector<RuleEvaluator> evaluators;
    evaluators.reserve(rules.size());
    for (const auto& r : rules) evaluators.emplace_back(r);

    const std::int64_t chunk = config.chunk_size;
    const std::int64_t n_chunks = (config.replications + chunk - 1) / chunk;
    std::vector<ExperimentResult> results(static_cast<std::size_t>(n_chunks));
    std::atomic<std::int64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    const auto worker = [&] {
        SeriesTrajectory tr;
        try {
            for (std::int64_t c = next++; c < n_chunks; c = next++) {
                auto r = detail::empty_result(evaluators.size(), options);
                const std::int64_t begin = c * chunk;
                const std::int64_t end = std::min(config.replications, begin + chunk);
                for (std::int64_t rep = begin; rep < end; ++rep) {
                    simulate_series(policy, config, static_cast<std::uint64_t>(rep), tr);
                    detail::record_series(tr, evaluators, options, critical, r);
                }
                results[static_cast<std::size_t>(c)] = std::move(r);
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = n_chunks;
        }
    };

    const unsigned n_threads =
        std::min<unsigned>(resolve_threads(config.threads), static_cast<unsigned>(n_chunks));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    auto total = detail::empty_result(evaluators.size(), options);
    for (const auto& r : results) total.merge(r, options.max_samples);
    return total;
}

inline ExperimentResult run_experiment(const Policy& policy, const SimConfig& config,
                                       const DecisionRule& rule,
                                       const ExperimentOptions& options = {}) {
    return run_experiment(policy, config, std::span<const DecisionRule>(&rule, 1), options);
}

}  // namespace accumbias
