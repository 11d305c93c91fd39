#pragma once

// Subcommand implementations. Each command turns a RunConfig into one or more
// CSV tables; the tools/ front end handles flags, files and exit codes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "accumbias/analytics.hpp"
#include "accumbias/config.hpp"
#include "accumbias/csv.hpp"
#include "accumbias/engine.hpp"
#include "accumbias/inference.hpp"
#include "accumbias/meta_core.hpp"
#include "accumbias/policies.hpp"
#include "accumbias/version.hpp"

namespace accumbias {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int invalid_config = 1;
inline constexpr int runtime_failure = 2;
inline constexpr int property_fail = 3;
}  // namespace exit_code

struct NamedTable {
    std::string file;
    CsvTable table;
};

struct CommandOutput {
    std::vector<NamedTable> tables;
    std::vector<std::string> report;  // human-readable lines
    bool property_failed = false;
};

namespace detail {

inline void provenance(CsvTable& t, const RunConfig& c, std::string_view what) {
    t.comment("table", std::string(what));
    t.comment("seed", std::to_string(c.sim.seed));
    t.comment("replications", std::to_string(c.sim.replications));
    t.comment("version", std::string(version));
}

inline void require_gold_rush(const RunConfig& c) {
    if (c.policy.name != "gold_rush") {
        throw config_error("this command needs policy.name = gold_rush, got '" + c.policy.name + "'");
    }
}

// The Gold Rush tables describe H0, so the hypothesis mean is pinned to 0.
inline SimConfig null_sim(const RunConfig& c) {
    SimConfig s = c.resolved_sim();
    s.hypothesis_mean = 0.0;
    return s;
}

inline std::string mc_mean(const RunningMoments& m) {
    return m.count > 0 ? csv_num(m.mean()) : std::string(csv_na);
}
inline std::string mc_se(const RunningMoments& m) {
    return m.count > 1 ? csv_num(m.se_mean()) : std::string(csv_na);
}

}  // namespace detail

// ---- table1 ----------------------------------------------------------------

struct Table1Row {
    std::int64_t t = 0;
    double e_given_next = 0.0;  // E0[Z_t | T >= t+1]
    double e_meta_z = 0.0;      // E0[Z^(t) | T >= t]
    RunningMoments mc_z;        // Z_t | T >= t
    RunningMoments mc_z_given_next;
    RunningMoments mc_meta_z;
};

inline std::vector<Table1Row> table1_rows(const RunConfig& c) {
    detail::require_gold_rush(c);
    const auto& p = c.policy.gold_rush;
    const auto result = run_experiment(c.policy.make(), detail::null_sim(c), std::span<const DecisionRule>{},
                                       ExperimentOptions{{}, {}, 0, p.alpha});
    std::vector<Table1Row> rows;
    for (std::int64_t t = 1; t <= c.output.t_max; ++t) {
        const auto& s = result.at(t);
        rows.push_back({t, expected_given_continuation(t, p), expected_meta_z(t, p), s.study_z,
                        s.study_z_continued, s.meta_z});
    }
    return rows;
}

inline CsvTable table1_csv(const RunConfig& c) {
    CsvTable t({"t", "e_z", "e_z_given_next", "e_meta_z", "mc_z", "mc_z_se", "mc_z_given_next",
                "mc_z_given_next_se", "mc_meta_z", "mc_meta_z_se", "mc_series", "e_meta_z_full",
                "mc_meta_z_full", "mc_meta_z_se_full"});
    detail::provenance(t, c, "expected z-scores under H0, Gold Rush");
    for (const auto& r : table1_rows(c)) {
        const bool has = r.mc_meta_z.count > 1;
        t.row({csv_int(r.t), csv_num(0.0), csv_num(r.e_given_next), csv_num(r.e_meta_z),
               detail::mc_mean(r.mc_z), detail::mc_se(r.mc_z), detail::mc_mean(r.mc_z_given_next),
               detail::mc_se(r.mc_z_given_next), detail::mc_mean(r.mc_meta_z),
               detail::mc_se(r.mc_meta_z), csv_int(r.mc_meta_z.count), csv_full(r.e_meta_z),
               has ? csv_full(r.mc_meta_z.mean()) : std::string(csv_na),
               has ? csv_full(r.mc_meta_z.se_mean()) : std::string(csv_na)});
    }
    return t;
}

// ---- table2 ----------------------------------------------------------------

struct Table2Row {
    std::int64_t t = 0;
    double bias_only = 0.0;
    std::optional<RateEstimate> simulated;  // empty when no series reached t
    std::int64_t series_reaching = 0;
};

inline std::vector<Table2Row> table2_rows(const RunConfig& c) {
    detail::require_gold_rush(c);
    const auto& p = c.policy.gold_rush;
    const DecisionRule rule = ZTestRule{p.alpha};
    const auto result = run_experiment(c.policy.make(), detail::null_sim(c), rule,
                                       ExperimentOptions{{}, {}, 0, p.alpha});
    const auto& tally = result.tallies.front();
    std::vector<Table2Row> rows;
    for (std::int64_t t = 1; t <= c.output.t_max; ++t) {
        Table2Row r{t, bias_only_type1(t, p), std::nullopt, tally.at(t).series_reaching};
        if (tally.at(t).analyses > 0) r.simulated = conditional_rate(tally, t);
        rows.push_back(r);
    }
    return rows;
}

inline CsvTable table2_csv(const RunConfig& c) {
    CsvTable t({"t", "alpha", "bias_only", "simulated", "simulated_se", "analyses", "rejections",
                "ordering_holds", "bias_only_full", "simulated_full", "simulated_se_full"});
    detail::provenance(t, c, "conditional type-I error of the z-test under H0, Gold Rush");
    const double alpha = c.policy.gold_rush.alpha;
    for (const auto& r : table2_rows(c)) {
        std::string sim = std::string(csv_na), se = sim, sim_full = sim, se_full = sim;
        std::string holds = sim;
        std::int64_t analyses = 0, rejections = 0;
        if (r.simulated) {
            sim = csv_num(r.simulated->value);
            se = csv_num(r.simulated->se);
            sim_full = csv_full(r.simulated->value);
            se_full = csv_full(r.simulated->se);
            analyses = r.simulated->denominator;
            rejections = r.simulated->numerator;
            if (r.t >= 2) holds = (r.simulated->value > r.bias_only && r.bias_only > alpha) ? "1" : "0";
        }
        t.row({csv_int(r.t), csv_num(alpha), csv_num(r.bias_only), sim, se, csv_int(analyses),
               csv_int(rejections), holds, csv_full(r.bias_only), sim_full, se_full});
    }
    return t;
}

// ---- figure2 ---------------------------------------------------------------

struct Figure2Data {
    std::vector<std::int64_t> times;
    std::vector<Histogram> histograms;
    std::vector<RunningMoments> moments;
    std::vector<MixtureComponent> z2_components;  // exact, from the category enumeration
    MixtureVariance z2_mixture;
};

inline Figure2Data figure2_data(const RunConfig& c) {
    detail::require_gold_rush(c);
    const auto& p = c.policy.gold_rush;
    Figure2Data d;
    d.times = c.output.histogram_times;
    const auto result = run_experiment(c.policy.make(), detail::null_sim(c), std::span<const DecisionRule>{},
                                       ExperimentOptions{d.times, {}, 0, p.alpha});
    d.histograms = result.histograms;
    for (auto t : d.times) d.moments.push_back(result.at(t).meta_z);
    d.z2_components = enumerate_categories(1, p).meta_z2_components();
    std::vector<double> means, vars, weights;
    for (const auto& comp : d.z2_components) {
        means.push_back(comp.mean);
        vars.push_back(comp.variance);
        weights.push_back(comp.weight);
    }
    d.z2_mixture = mixture_variance_decomposition(means, vars, weights);
    return d;
}

inline std::pair<CsvTable, CsvTable> figure2_csv(const RunConfig& c) {
    const auto& p = c.policy.gold_rush;
    const auto d = figure2_data(c);
    std::vector<std::string> cols{"z"};
    for (auto t : d.times) cols.push_back("density_t" + std::to_string(t));
    for (auto t : d.times) {
        if (t >= 2) cols.push_back("shifted_normal_t" + std::to_string(t));
    }
    const bool has_t2 = std::find(d.times.begin(), d.times.end(), 2) != d.times.end();
    if (has_t2) cols.push_back("exact_t2");
    CsvTable density(cols);
    detail::provenance(density, c, "sampling densities of Z^(t) | T >= t under H0, Gold Rush");
    const Histogram grid;
    for (std::size_t i = 0; i < grid.counts.size(); ++i) {
        const double z = grid.bin_center(i);
        std::vector<std::string> row{csv_num(z)};
        for (const auto& h : d.histograms) row.push_back(csv_num(h.density(i)));
        for (auto t : d.times) {
            if (t >= 2) row.push_back(csv_num(normal_pdf(z - expected_meta_z(t, p))));
        }
        if (has_t2) row.push_back(csv_num(meta_z2_density(z, p)));
        density.row(std::move(row));
    }

    CsvTable summary({"distribution", "source", "count", "weight", "mean", "variance", "skewness"});
    detail::provenance(summary, c, "summary of the figure densities");
    for (std::size_t k = 0; k < d.times.size(); ++k) {
        const auto& m = d.moments[k];
        summary.row({"meta_z_t" + std::to_string(d.times[k]), "simulated", csv_int(m.count),
                     std::string(csv_na), csv_num(m.mean()), csv_num(m.variance()),
                     csv_num(m.skewness())});
    }
    double total_w = 0.0;
    for (const auto& comp : d.z2_components) total_w += comp.weight;
    const std::array<std::string_view, 3> cat_names{"significant_positive", "nonsignificant",
                                                    "significant_negative"};
    const auto paths = enumerate_categories(1, p).paths(1);
    std::size_t k = 0;
    for (const auto& path : paths) {
        if (path.continue_mass <= 0.0) continue;
        const auto& comp = d.z2_components[k++];
        summary.row({"meta_z_t2_given_" + std::string(cat_names[static_cast<std::size_t>(path.at(0))]),
                     "exact", std::string(csv_na), csv_num(comp.weight / total_w),
                     csv_num(comp.mean), csv_num(comp.variance), std::string(csv_na)});
    }
    summary.row({"meta_z_t2_mixture", "exact", std::string(csv_na), csv_num(1.0),
                 csv_num(expected_meta_z(2, p)), csv_num(d.z2_mixture.mixture_var),
                 std::string(csv_na)});
    return {std::move(density), std::move(summary)};
}

// ---- bound-suite -----------------------------------------------------------

struct SuiteEntry {
    std::string policy;
    std::string rule;
    std::string hypothesis;  // "H0" or "H1"
    RateEstimate surviving;
    double bound = std::numeric_limits<double>::quiet_NaN();  // H0 LR rule only
    bool checked = false;
    bool pass = true;
    ErrorTally tally;
};

// The policy named `name`, with the config's parameters when it is the
// configured policy and defaults otherwise.
inline PolicySpec suite_policy(const RunConfig& c, const std::string& name) {
    if (c.policy.name == name) return c.policy;
    PolicySpec s;
    s.name = name;
    return s;
}

inline std::vector<SuiteEntry> bound_suite(const RunConfig& c) {
    const double alpha = c.rule.alpha;
    const SimConfig base = c.resolved_sim();
    const double delta = c.rule.resolved_delta(base);
    const std::vector<DecisionRule> rules{ZTestRule{alpha},
                                          LrThresholdRule{alpha, c.rule.make_alternative(base)}};
    std::vector<SuiteEntry> out;
    for (const auto& name : c.output.suite_policies) {
        const Policy policy = suite_policy(c, name).make();
        for (int h = 0; h < 2; ++h) {
            SimConfig sim = base;
            sim.hypothesis_mean = h == 0 ? 0.0 : delta;
            const auto result = run_experiment(policy, sim, rules);
            for (std::size_t i = 0; i < rules.size(); ++i) {
                SuiteEntry e;
                e.policy = name;
                e.rule = rule_name(rules[i]);
                e.hypothesis = h == 0 ? "H0" : "H1";
                e.tally = result.tallies[i];
                e.surviving = surviving_rate(e.tally);
                if (h == 0 && i == 1) {
                    const double r = static_cast<double>(sim.replications);
                    e.bound = alpha + 3.0 * std::sqrt(alpha * (1.0 - alpha) / r);
                    e.checked = true;
                    e.pass = e.surviving.value <= e.bound &&
                             e.tally.first_error_total() == e.tally.series_with_any_rejection;
                }
                out.push_back(std::move(e));
            }
        }
    }
    return out;
}

inline std::pair<CsvTable, CsvTable> bound_suite_csv(const RunConfig& c,
                                                     const std::vector<SuiteEntry>& entries) {
    CsvTable summary({"policy", "rule", "hypothesis", "series", "any_rejection", "surviving_rate",
                      "surviving_se", "first_error_sum", "censored", "bound", "status"});
    detail::provenance(summary, c, "surviving rejection rates per policy, rule and hypothesis");
    CsvTable times({"policy", "rule", "hypothesis", "t", "series_reaching", "analyses",
                    "rejections", "conditional_rate", "first_errors"});
    detail::provenance(times, c, "per-time counts behind the bound suite");
    for (const auto& e : entries) {
        summary.row({e.policy, e.rule, e.hypothesis, csv_int(e.tally.series_total),
                     csv_int(e.tally.series_with_any_rejection), csv_num(e.surviving.value),
                     csv_num(e.surviving.se), csv_int(e.tally.first_error_total()),
                     csv_int(e.tally.censored), csv_num(e.bound),
                     e.checked ? (e.pass ? "PASS" : "FAIL") : "NA"});
        for (std::int64_t t = 1; t <= e.tally.horizon(); ++t) {
            const auto& tc = e.tally.at(t);
            const std::string rate =
                tc.analyses > 0 ? csv_num(conditional_rate(e.tally, t).value) : std::string(csv_na);
            times.row({e.policy, e.rule, e.hypothesis, csv_int(t), csv_int(tc.series_reaching),
                       csv_int(tc.analyses), csv_int(tc.rejections), rate,
                       csv_int(e.tally.first_errors(t))});
        }
    }
    return {std::move(summary), std::move(times)};
}

// ---- simulate --------------------------------------------------------------

inline std::pair<CsvTable, CsvTable> simulate_csv(const RunConfig& c) {
    const SimConfig sim = c.resolved_sim();
    const DecisionRule rule = c.rule.make(sim);
    const auto result = run_experiment(c.policy.make(), sim, rule);
    const auto& tally = result.tallies.front();

    CsvTable per_t({"t", "series_reaching", "analyses", "rejections", "conditional_rate",
                    "conditional_se", "first_errors", "meta_z_mean", "meta_z_variance"});
    detail::provenance(per_t, c, "simulation: " + c.policy.name + " with " + c.rule.kind);
    for (std::int64_t t = 1; t <= tally.horizon(); ++t) {
        const auto& tc = tally.at(t);
        std::string rate = std::string(csv_na), se = rate;
        if (tc.analyses > 0) {
            const auto r = conditional_rate(tally, t);
            rate = csv_num(r.value);
            se = csv_num(r.se);
        }
        const auto& m = result.at(t).meta_z;
        per_t.row({csv_int(t), csv_int(tc.series_reaching), csv_int(tc.analyses),
                   csv_int(tc.rejections), rate, se, csv_int(tally.first_errors(t)),
                   csv_num(m.mean()), m.count > 1 ? csv_num(m.variance()) : std::string(csv_na)});
    }

    CsvTable summary({"series", "any_rejection", "surviving_rate", "surviving_se", "censored",
                      "mean_length", "hypothesis_mean"});
    detail::provenance(summary, c, "simulation summary");
    const auto s = surviving_rate(tally);
    summary.row({csv_int(tally.series_total), csv_int(tally.series_with_any_rejection),
                 csv_num(s.value), csv_num(s.se), csv_int(tally.censored),
                 csv_num(result.length.mean()), csv_num(sim.hypothesis_mean)});
    return {std::move(per_t), std::move(summary)};
}

// ---- analytic --------------------------------------------------------------

inline CsvTable analytic_csv(const RunConfig& c) {
    detail::require_gold_rush(c);
    const auto& p = c.policy.gold_rush;
    CsvTable t({"t", "abar0", "e_z_given_next", "e_meta_z", "bias_only_type1"});
    t.comment("table", "closed-form Gold Rush quantities under H0");
    t.comment("critical_value", csv_full(two_sided_critical(p.alpha)));
    t.comment("tail_expectation", csv_full(tail_expectation(two_sided_critical(p.alpha))));
    t.comment("long_run_significant_fraction", csv_full(long_run_significant_fraction(p)));
    t.comment("version", std::string(version));
    for (std::int64_t k = 1; k <= c.output.t_max; ++k) {
        t.row({csv_int(k), csv_num(abar0(k, p)), csv_num(expected_given_continuation(k, p)),
               csv_num(expected_meta_z(k, p)), csv_num(bias_only_type1(k, p))});
    }
    return t;
}

// ---- selftest --------------------------------------------------------------

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Closed forms against independent evaluations (quadrature, enumeration,
// direct arithmetic). Deterministic and fast.
inline std::vector<CheckResult> selftest_checks() {
    using boost::math::quadrature::gauss_kronrod;
    std::vector<CheckResult> out;
    const auto check = [&](std::string name, double got, double want, double tol) {
        const bool ok = std::abs(got - want) <= tol;
        out.push_back({std::move(name), ok,
                       "got " + format_double(got) + ", want " + format_double(want) + " +- " +
                           format_double(tol)});
    };
    const GoldRushParams p;
    const double c = two_sided_critical(p.alpha);

    check("critical value round trip", normal_cdf(c), 0.975, 1e-12);
    const double tail_quad =
        gauss_kronrod<double, 61>::integrate([](double z) { return z * normal_pdf(z); }, c,
                                             c + 40.0, 15, 1e-14) /
        normal_sf(c);
    check("tail expectation vs quadrature", tail_expectation(c), tail_quad, 1e-9);
    check("half-normal mean", tail_expectation(0.0), std::sqrt(2.0 / std::numbers::pi), 1e-12);

    const auto en = enumerate_categories(8, p);
    for (std::int64_t t = 1; t <= 8; ++t) {
        check("surviving mass t=" + std::to_string(t), en.surviving_mass(t), abar0(t, p), 1e-12);
    }
    for (std::int64_t t = 2; t <= 6; ++t) {
        check("mixture mean of Z^(t) t=" + std::to_string(t), en.conditional_mean_meta_z(t),
              expected_meta_z(t, p), 1e-9);
    }

    const double density_mass =
        gauss_kronrod<double, 61>::integrate([&](double z) { return meta_z2_density(z, p); },
                                             -40.0, 40.0, 15, 1e-14);
    check("exact Z^(2) density integrates to 1", density_mass, 1.0, 1e-9);
    const double density_mean =
        gauss_kronrod<double, 61>::integrate([&](double z) { return z * meta_z2_density(z, p); },
                                             -40.0, 40.0, 15, 1e-14);
    check("exact Z^(2) density mean", density_mean, expected_meta_z(2, p), 1e-9);

    for (double d : {0.0, 0.5, 1.0, 2.0, 3.0}) {
        check("betting factor delta=" + format_double(d),
              betting_factor_expectation_check(SimpleAlternative{d}), 1.0, 1e-8);
    }

    const std::vector<StudyOutcome> two{StudyOutcome::from_z(2.0, 16, 1.0),
                                        StudyOutcome::from_z(2.0, 16, 1.0)};
    const double direct = std::log(normal_pdf(1.0) * normal_pdf(1.0) /
                                   (normal_pdf(2.0) * normal_pdf(2.0)));
    check("log LR vs density ratio", log_lr(two, SimpleAlternative{1.0}), direct, 1e-12);

    const std::vector<StudyOutcome> mixed{StudyOutcome::from_mean_diff(1.0, 1, 1.0),
                                          StudyOutcome::from_mean_diff(0.0, 3, 1.0)};
    check("combined estimate", combine_estimate(mixed).combined_estimate, 0.25, 1e-12);
    check("combined z scales agree", combine_estimate(mixed).combined_z, combine_z(mixed), 1e-12);
    return out;
}

// ---- dispatch --------------------------------------------------------------

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"table1",   "table2",  "figure2", "bound-suite",
                                                "simulate", "analytic", "selftest"};
    return names;
}

inline CommandOutput run_command(const std::string& command, const RunConfig& c) {
    CommandOutput out;
    if (command == "table1") {
        out.tables.push_back({"table1.csv", table1_csv(c)});
    } else if (command == "table2") {
        out.tables.push_back({"table2.csv", table2_csv(c)});
    } else if (command == "figure2") {
        auto [density, summary] = figure2_csv(c);
        out.tables.push_back({"figure2.csv", std::move(density)});
        out.tables.push_back({"figure2_summary.csv", std::move(summary)});
    } else if (command == "bound-suite") {
        const auto entries = bound_suite(c);
        auto [summary, times] = bound_suite_csv(c, entries);
        out.tables.push_back({"bound_suite.csv", std::move(summary)});
        out.tables.push_back({"bound_suite_times.csv", std::move(times)});
        for (const auto& e : entries) {
            if (!e.checked) continue;
            out.report.push_back(std::string(e.pass ? "PASS" : "FAIL") + " " + e.policy + " " +
                                 e.rule + " H0 surviving rate " + csv_num(e.surviving.value) +
                                 " <= " + csv_num(e.bound));
            if (!e.pass) out.property_failed = true;
        }
    } else if (command == "simulate") {
        auto [per_t, summary] = simulate_csv(c);
        out.tables.push_back({"simulate.csv", std::move(per_t)});
        out.tables.push_back({"simulate_summary.csv", std::move(summary)});
    } else if (command == "analytic") {
        out.tables.push_back({"analytic.csv", analytic_csv(c)});
        out.report.push_back(out.tables.back().table.str());
    } else if (command == "selftest") {
        for (const auto& r : selftest_checks()) {
            out.report.push_back(std::string(r.pass ? "PASS " : "FAIL ") + r.name + ": " + r.detail);
            if (!r.pass) out.property_failed = true;
        }
    } else {
        throw config_error("unknown command '" + command + "'");
    }
    return out;
}

}  // namespace accumbias
