// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "accumbias/accumbias.hpp"
#include "oracles.hpp"

using namespace accumbias;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
    std::printf("%s [%d] %s: %s\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

void note(const std::string& line) {
    std::printf("      %s\n", line.c_str());
    std::fflush(stdout);
}

std::string f(double x, int digits = 6) { return format_double(x, digits); }

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

SimConfig null_config(std::int64_t reps, std::uint64_t seed) {
    SimConfig c;
    c.replications = reps;
    c.seed = seed;
    c.threads = 0;
    return c;
}

const GoldRushParams defaults{};
const std::span<const DecisionRule> no_rules{};

void criterion_1() {
    const double v = tail_expectation(1.959964);
    report(1, std::abs(v - 2.338) <= 0.001, "E0[Z | Z >= 1.959964] = 2.338 +- 0.001", f(v));
}

void criterion_2() {
    const double pilot = expected_pilot_given_next(defaults);
    const double later = expected_later_given_next(defaults);
    const bool ok = std::abs(pilot - 0.487) <= 0.001 && std::abs(later - 1.328) <= 0.001;
    report(2, ok, "E0[Z_1 | T >= 2] = 0.487 and E0[Z_t | T >= t+1] = 1.328 (+- 0.001)",
           f(pilot) + ", " + f(later));
}

void criterion_3() {
    constexpr std::int64_t reps = 100'000'000;
    Stopwatch sw;
    const auto r = run_experiment(GoldRushPolicy{}, null_config(reps, 101), no_rules);
    bool ok = true;
    for (std::int64_t t = 2; t <= 6; ++t) {
        const auto& m = r.at(t).meta_z;
        const double analytic = expected_meta_z(t, defaults);
        const bool enough = m.count >= 2;
        const double z = enough ? (m.mean() - analytic) / m.se_mean() : NAN;
        const bool within = enough && std::abs(z) <= 3.0;
        ok = ok && within;
        note("t=" + std::to_string(t) + " analytic " + f(analytic) + " mc " + f(m.mean()) + " se " +
             f(m.se_mean(), 3) + " series " + std::to_string(m.count) + " z " + f(z, 3));
    }
    const bool anchors = std::abs(expected_meta_z(2, defaults) - 0.344) <= 0.001 &&
                         std::abs(expected_meta_z(3, defaults) - 1.048) <= 0.001;
    report(3, ok && anchors,
           "E0[Z^(t) | T >= t] closed form vs Monte Carlo, t = 2..6, 1e8 replications, 3 SE",
           "t=2 " + f(expected_meta_z(2, defaults)) + ", t=3 " + f(expected_meta_z(3, defaults)) + ", " +
               f(sw.seconds(), 3) + " s");
}

void criterion_4() {
    RunConfig cfg;
    cfg.sim = null_config(10'000'000, 202);
    cfg.output.t_max = 5;
    Stopwatch sw;
    const auto rows = table2_rows(cfg);
    bool ok = true;
    for (const auto& row : rows) {
        if (row.t < 2) continue;
        if (!row.simulated) {
            ok = false;
            note("t=" + std::to_string(row.t) + " no series reached this size");
            continue;
        }
        const auto& s = *row.simulated;
        const double gap_sim = (s.value - row.bias_only) / s.se;
        const bool holds = gap_sim > 3.0 && row.bias_only > 0.05;
        ok = ok && holds;
        note("t=" + std::to_string(row.t) + " simulated " + f(s.value) + " (se " + f(s.se, 3) +
             ", analyses " + std::to_string(s.denominator) + ") bias-only " + f(row.bias_only) +
             " gap/se " + f(gap_sim, 3) + (holds ? "" : "  <-- gap below 3 SE"));
    }
    const double b3 = bias_only_type1(3, defaults);
    report(4, ok && std::abs(b3 - 0.182) <= 0.001,
           "simulated > bias-only > 0.05 for t = 2..5 with 3 SE gaps at 1e7 replications; bias-only(3) = 0.182",
           "bias-only(3) " + f(b3) + ", " + f(sw.seconds(), 3) + " s");
}

double skewness_of(const std::vector<double>& xs) {
    RunningMoments m;
    for (double x : xs) m.add(x);
    return m.skewness();
}

void criterion_5() {
    constexpr std::int64_t reps = 10'000'000;
    Stopwatch sw;
    const auto r = run_experiment(GoldRushPolicy{}, null_config(reps, 303), no_rules,
                                  ExperimentOptions{{1, 2, 3}, {3}, reps, 0.05});
    std::vector<double> z3;
    for (const auto& s : r.samples[0]) z3.push_back(s.meta_z);
    const double skew = skewness_of(z3);

    std::mt19937_64 gen(12345);
    std::uniform_int_distribution<std::size_t> pick(0, z3.size() - 1);
    std::vector<double> boot;
    std::vector<double> resample(z3.size());
    for (int b = 0; b < 1000; ++b) {
        for (auto& x : resample) x = z3[pick(gen)];
        boot.push_back(skewness_of(resample));
    }
    std::sort(boot.begin(), boot.end());
    const double lo = boot[24], hi = boot[974];

    const auto comps = enumerate_categories(1, defaults).meta_z2_components();
    double max_comp = 0.0;
    for (const auto& c : comps) max_comp = std::max(max_comp, c.variance);
    const double var2 = r.at(2).meta_z.variance();

    const bool ok = skew < -0.05 && hi < 0.0 && var2 > max_comp;
    report(5, ok, "skew(Z^(3) | T >= 3) < -0.05 with bootstrap CI below 0; Var(Z^(2) | T >= 2) above both components",
           "skew " + f(skew, 4) + " CI [" + f(lo, 4) + ", " + f(hi, 4) + "] n " +
               std::to_string(z3.size()) + "; var " + f(var2, 4) + " vs components " +
               f(comps[0].variance, 4) + ", " + f(comps[1].variance, 4) + "; " + f(sw.seconds(), 3) + " s");
}

void criterion_6() {
    const double a2 = abar0(2, defaults);
    const bool exact = std::abs(a2 - 0.12) <= 1e-15;
    const auto e = enumerate_categories(8, defaults);
    double worst = 0.0;
    for (std::int64_t t = 1; t <= 8; ++t) worst = std::max(worst, std::abs(e.surviving_mass(t) - abar0(t, defaults)));

    const auto r = run_experiment(GoldRushPolicy{}, null_config(10'000'000, 606), no_rules);
    std::int64_t sig = 0, cont = 0;
    for (std::int64_t t = 2; t <= static_cast<std::int64_t>(r.per_t.size()); ++t) {
        sig += r.at(t).continued_significant;
        cont += r.at(t).study_z_continued.count;
    }
    const auto frac = binomial_rate(sig, cont);
    const double target = long_run_significant_fraction(defaults);
    const bool ok = exact && worst <= 1e-12 && std::abs(frac.value - target) <= 3.0 * frac.se &&
                    std::abs(target - 0.568) <= 0.001;
    report(6, ok, "Abar0(2) = 0.12; enumeration = Abar0(t) for t <= 8; long-run significant fraction 0.568",
           "Abar0(2) " + format_double(a2) + ", max enum diff " + f(worst, 3) + ", fraction " +
               f(frac.value, 4) + " +- " + f(frac.se, 2) + " (n " + std::to_string(cont) + ", target " +
               f(target, 4) + ")");
}

std::vector<std::pair<std::string, Policy>> suite() {
    return {{"gold_rush", GoldRushPolicy{}},
            {"power_law", PowerLawPolicy{}},
            {"lsr", LsrPolicy{}},
            {"timing_window", TimingWindowPolicy{}},
            {"independent", IndependentPolicy{}}};
}

void criterion_7() {
    constexpr std::int64_t reps = 1'000'000;
    const double bound = 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / static_cast<double>(reps));
    const DecisionRule rule = LrThresholdRule{0.05, SimpleAlternative{1.0}};
    Stopwatch sw;
    bool ok = true;
    std::uint64_t seed = 700;
    for (const auto& [name, policy] : suite()) {
        const auto r = run_experiment(policy, null_config(reps, ++seed), rule);
        const auto& t = r.tallies[0];
        const auto s = surviving_rate(t);
        const bool sums = t.first_error_total() == t.series_with_any_rejection;
        ok = ok && s.value <= bound && sums;
        note(name + ": surviving " + f(s.value, 4) + " (any " + std::to_string(t.series_with_any_rejection) +
             ", first-error sum " + std::to_string(t.first_error_total()) + ")");
    }
    report(7, ok, "H0 surviving rate of the LR >= 20 rule <= 0.05 + 3 SE for all five policies (1e6 each)",
           "bound " + f(bound, 5) + ", " + f(sw.seconds(), 3) + " s");
}

void criterion_8() {
    constexpr std::int64_t reps = 10'000'000;
    const DecisionRule rule = PosteriorOddsRule{16.0, 0.5, SimpleAlternative{1.0}};
    Stopwatch sw;
    auto h0 = null_config(reps, 808);
    auto h1 = null_config(reps, 809);
    h1.hypothesis_mean = 1.0;
    const auto r0 = run_experiment(GoldRushPolicy{}, h0, rule);
    const auto r1 = run_experiment(GoldRushPolicy{}, h1, rule);
    bool ok = true;
    for (std::int64_t t = 1; t <= 3; ++t) {
        const auto c = true_false_rejection_ratio(r1.tallies[0], r0.tallies[0], t);
        const bool holds = c.lower_bound_only ? c.ratio >= 16.0 : c.ratio >= 16.0 - 3.0 * c.se;
        ok = ok && holds;
        const auto s = true_false_rejection_ratio(r1.tallies[0], r0.tallies[0], t, RatioBasis::per_series);
        note("t=" + std::to_string(t) + " conditional ratio " + f(c.ratio, 4) +
             (c.lower_bound_only ? " (lower bound)" : " +- " + f(c.se, 3)) + " [H1 " + f(c.h1.value, 4) +
             " of " + std::to_string(c.h1.denominator) + ", H0 " + f(c.h0.value, 4) + " of " +
             std::to_string(c.h0.denominator) + "]" + (holds ? "" : "  <-- below 16 - 3 SE"));
        note("     per-series ratio P1[reject at t] / P0[reject at t] " + f(s.ratio, 4) +
             (s.lower_bound_only ? " (lower bound)" : " +- " + f(s.se, 3)));
    }
    report(8, ok, "Gold Rush, posterior odds gamma = 16, pi = 0.5, delta = 1: conditional true:false ratio >= 16 - 3 SE at t = 1..3",
           f(sw.seconds(), 3) + " s");
}

void criterion_9() {
    bool ok = true;
    std::string detail;
    for (double d : {0.0, 0.5, 1.0, 2.0, 3.0}) {
        const double v = betting_factor_expectation_check(SimpleAlternative{d});
        ok = ok && std::abs(v - 1.0) <= 1e-8;
        detail += "d=" + f(d, 2) + ": " + f(v - 1.0, 3) + "  ";
    }
    report(9, ok, "E0[LR(Z)] = 1 +- 1e-8 for delta in {0, 0.5, 1, 2, 3}", "deviations " + detail);
}

void criterion_10() {
    constexpr std::int64_t reps = 1'000'000;
    auto cfg = null_config(reps, 1010);
    cfg.t_cap = 20;
    const DecisionRule rule = ZTestRule{0.05};
    const auto r = run_experiment(LsrPolicy{}, cfg, rule);
    const auto s = surviving_rate(r.tallies[0]);
    report(10, s.value - 3.0 * s.se > 0.10, "LSR with the z-test under H0, t_cap = 20: surviving rate > 0.10 with 3 SE margin",
           f(s.value, 4) + " +- " + f(s.se, 2));
}

void criterion_11() {
    RunConfig cfg;
    cfg.sim = null_config(10'000'000, 1111);
    cfg.output.t_max = 6;
    Stopwatch sw;
    cfg.sim.threads = 1;
    const auto one = table2_csv(cfg).str();
    cfg.sim.threads = 4;
    const auto four = table2_csv(cfg).str();
    report(11, one == four && !one.empty(), "table2 CSV byte-identical with 1 and 4 threads",
           std::to_string(one.size()) + " bytes, FNV-1a " + fnv1a_hex(one) + " vs " + fnv1a_hex(four) + ", " +
               f(sw.seconds(), 3) + " s");
}

}  // namespace

int main() {
    Stopwatch total;
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    std::printf("%d of 11 criteria failed (%.1f s)\n", failures, total.seconds());
    return failures == 0 ? 0 : 1;
}
