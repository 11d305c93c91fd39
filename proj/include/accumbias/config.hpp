#pragma once

// Run configuration: an INI file with sections [policy], [sim], [rule] and
// [output]. Parsing is strict: unknown sections or keys, keys that do not apply
// to the selected policy or rule, and malformed numbers are all errors.
//
//   [policy]
//   name = gold_rush
//   omega_ns = 0.02
//
//   [sim]
//   replications = 1000000
//   seed = 42

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "accumbias/engine.hpp"
#include "accumbias/errors.hpp"
#include "accumbias/inference.hpp"
#include "accumbias/policies.hpp"

namespace accumbias {

inline constexpr std::array<std::string_view, 5> policy_names{
    "gold_rush", "power_law", "lsr", "timing_window", "independent"};

struct PolicySpec {
    std::string name = "gold_rush";
    GoldRushParams gold_rush;
    PowerLawParams power_law;
    TimingWindowParams timing_window;
    double lsr_alpha = 0.05;
    double analyze_prob = 1.0;    // gold_rush, power_law
    double continue_prob = 0.9;   // timing_window, independent
    std::int64_t analysis_time = 0;  // independent

    Policy make() const {
        if (name == "gold_rush") return GoldRushPolicy(gold_rush, analyze_prob);
        if (name == "power_law") return PowerLawPolicy(power_law, analyze_prob);
        if (name == "lsr") return LsrPolicy(lsr_alpha);
        if (name == "timing_window") return TimingWindowPolicy(timing_window, continue_prob);
        if (name == "independent") return IndependentPolicy(continue_prob, analysis_time);
        throw config_error("unknown policy '" + name + "'");
    }

    friend bool operator==(const PolicySpec&, const PolicySpec&) = default;
};

struct RuleSpec {
    std::string kind = "z_test";  // z_test | lr_threshold | posterior_odds
    double alpha = 0.05;
    double gamma = 16.0;
    double pi = 0.5;
    std::string alternative = "simple";  // simple | symmetric
    std::optional<double> delta;         // unset: sqrt(equal_n) * delta_h1 / sigma_d
    double delta_h1 = 0.25;

    double resolved_delta(const SimConfig& sim) const {
        return delta ? *delta : delta_from_effect(sim.equal_n, delta_h1, sim.sigma_d);
    }

    Alternative make_alternative(const SimConfig& sim) const {
        const double d = resolved_delta(sim);
        if (alternative == "simple") return SimpleAlternative{d};
        if (alternative == "symmetric") return SymmetricAlternative{d};
        throw config_error("unknown alternative '" + alternative + "'");
    }

    DecisionRule make(const SimConfig& sim) const {
        if (kind == "z_test") return ZTestRule{alpha};
        if (kind == "lr_threshold") return LrThresholdRule{alpha, make_alternative(sim)};
        if (kind == "posterior_odds") return PosteriorOddsRule{gamma, pi, make_alternative(sim)};
        throw config_error("unknown rule kind '" + kind + "'");
    }

    friend bool operator==(const RuleSpec&, const RuleSpec&) = default;
};

struct OutputSpec {
    std::string dir = "out";
    std::int64_t t_max = 10;  // last table row
    std::vector<std::int64_t> histogram_times{1, 2, 3};
    std::vector<std::string> suite_policies{policy_names.begin(), policy_names.end()};

    friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

struct RunConfig {
    PolicySpec policy;
    SimConfig sim;
    RuleSpec rule;
    OutputSpec output;

    // Policy, decision rule and the alternative behind MetaState::cum_log_lr.
    SimConfig resolved_sim() const {
        SimConfig s = sim;
        s.alternative = rule.make_alternative(sim);
        return s;
    }

    void validate() const {
        try {
            (void)policy.make();
            const auto s = resolved_sim();
            s.validate();
            accumbias::validate(rule.make(s));
        } catch (const config_error&) {
            throw;
        } catch (const std::exception& e) {
            throw config_error(e.what());
        }
        if (output.t_max < 1 || output.t_max > 1000) throw config_error("output.t_max must lie in [1, 1000]");
        for (auto t : output.histogram_times) {
            if (t < 1) throw config_error("output.histogram_times entries must be >= 1");
        }
        for (const auto& n : output.suite_policies) {
            if (std::find(policy_names.begin(), policy_names.end(), n) == policy_names.end()) {
                throw config_error("output.suite_policies: unknown policy '" + n + "'");
            }
        }
    }

    friend bool operator==(const RunConfig& a, const RunConfig& b) {
        return a.policy == b.policy && a.rule == b.rule && a.output == b.output &&
               a.sim.replications == b.sim.replications && a.sim.seed == b.sim.seed &&
               a.sim.t_cap == b.sim.t_cap && a.sim.hypothesis_mean == b.sim.hypothesis_mean &&
               a.sim.equal_n == b.sim.equal_n && a.sim.sigma_d == b.sim.sigma_d &&
               a.sim.sizes == b.sim.sizes && a.sim.threads == b.sim.threads &&
               a.sim.chunk_size == b.sim.chunk_size;
    }
};

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) {
    std::array<char, 64> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), r.ptr);
}

// Fixed number of significant digits, locale independent.
inline std::string format_double(double x, int significant) {
    std::array<char, 64> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), x,
                                 std::chars_format::general, significant);
    return std::string(buf.data(), r.ptr);
}

namespace detail {

template <class T>
T parse_number(const std::string& text, const std::string& key) {
    T value{};
    const char* first = text.data();
    const char* last = first + text.size();
    const auto r = std::from_chars(first, last, value);
    if (r.ec != std::errc{} || r.ptr != last || text.empty()) {
        throw config_error("invalid number for '" + key + "': '" + text + "'");
    }
    return value;
}

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw config_error("empty entry in list '" + text + "'");
        out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& key) {
    std::vector<T> out;
    for (const auto& s : split_list(text)) out.push_back(parse_number<T>(s, key));
    return out;
}

template <class T>
std::string join(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        if constexpr (std::is_same_v<T, std::string>) {
            out += xs[i];
        } else {
            out += std::to_string(xs[i]);
        }
    }
    return out;
}

inline std::set<std::string> policy_keys(const std::string& name) {
    if (name == "gold_rush") {
        return {"name", "omega_s1", "omega_x1", "omega_ns1", "omega_s", "omega_x", "omega_ns",
                "alpha", "analyze_prob"};
    }
    if (name == "power_law") return {"name", "delta_h1", "tau", "analyze_prob"};
    if (name == "lsr") return {"name", "alpha"};
    if (name == "timing_window") return {"name", "a", "b", "delta_h1", "continue_prob"};
    if (name == "independent") return {"name", "continue_prob", "analysis_time"};
    throw config_error("unknown policy '" + name + "'");
}

inline std::set<std::string> rule_keys(const std::string& kind) {
    if (kind == "z_test") return {"kind", "alpha"};
    if (kind == "lr_threshold") return {"kind", "alpha", "alternative", "delta", "delta_h1"};
    if (kind == "posterior_odds") {
        return {"kind", "gamma", "pi", "alternative", "delta", "delta_h1"};
    }
    throw config_error("unknown rule kind '" + kind + "'");
}

inline const std::set<std::string> sim_keys{"replications", "seed",    "t_cap",   "hypothesis_mean",
                                            "equal_n",      "sigma_d", "sizes",   "threads",
                                            "chunk_size"};
inline const std::set<std::string> output_keys{"dir", "t_max", "histogram_times", "suite_policies"};

// Reads one section, rejecting keys outside `allowed`.
class SectionReader {
public:
    SectionReader(const boost::property_tree::ptree& section, std::string name,
                  const std::set<std::string>& allowed)
        : section_(section), name_(std::move(name)) {
        for (const auto& [key, child] : section_) {
            if (!child.empty()) throw config_error("nested key '" + name_ + "." + key + "'");
            if (!allowed.contains(key)) throw config_error("unknown key '" + name_ + "." + key + "'");
        }
    }

    std::optional<std::string> text(const std::string& key) const {
        if (auto v = section_.get_optional<std::string>(key)) return *v;
        return std::nullopt;
    }

    template <class T>
    void read(const std::string& key, T& out) const {
        const auto v = text(key);
        if (!v) return;
        const std::string full = name_ + "." + key;
        if constexpr (std::is_same_v<T, std::string>) {
            out = *v;
        } else if constexpr (std::is_same_v<T, std::optional<double>>) {
            out = parse_number<double>(*v, full);
        } else {
            out = parse_number<T>(*v, full);
        }
    }

private:
    const boost::property_tree::ptree& section_;
    std::string name_;
};

}  // namespace detail

inline RunConfig parse_config(std::istream& in) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw config_error(std::string("config syntax: ") + e.what());
    }
    static const pt::ptree empty;
    for (const auto& [key, child] : tree) {
        if (child.empty() && !child.data().empty()) {
            throw config_error("key '" + key + "' outside of a section");
        }
        if (key != "policy" && key != "sim" && key != "rule" && key != "output") {
            throw config_error("unknown section [" + key + "]");
        }
    }
    const auto section = [&](const char* name) -> const pt::ptree& {
        const auto it = tree.find(name);
        return it == tree.not_found() ? empty : it->second;
    };

    RunConfig cfg;

    const auto& policy = section("policy");
    cfg.policy.name = policy.get<std::string>("name", cfg.policy.name);
    detail::SectionReader p(policy, "policy", detail::policy_keys(cfg.policy.name));
    auto& g = cfg.policy.gold_rush;
    p.read("omega_s1", g.omega_s1);
    p.read("omega_x1", g.omega_x1);
    p.read("omega_ns1", g.omega_ns1);
    p.read("omega_s", g.omega_s);
    p.read("omega_x", g.omega_x);
    p.read("omega_ns", g.omega_ns);
    p.read("analyze_prob", cfg.policy.analyze_prob);
    p.read("continue_prob", cfg.policy.continue_prob);
    p.read("analysis_time", cfg.policy.analysis_time);
    p.read("tau", cfg.policy.power_law.tau);
    p.read("a", cfg.policy.timing_window.a);
    p.read("b", cfg.policy.timing_window.b);
    if (cfg.policy.name == "power_law") p.read("delta_h1", cfg.policy.power_law.delta_h1);
    if (cfg.policy.name == "timing_window") p.read("delta_h1", cfg.policy.timing_window.delta_h1);
    if (cfg.policy.name == "lsr") p.read("alpha", cfg.policy.lsr_alpha);
    if (cfg.policy.name == "gold_rush") p.read("alpha", g.alpha);

    detail::SectionReader s(section("sim"), "sim", detail::sim_keys);
    s.read("replications", cfg.sim.replications);
    s.read("seed", cfg.sim.seed);
    s.read("t_cap", cfg.sim.t_cap);
    s.read("hypothesis_mean", cfg.sim.hypothesis_mean);
    s.read("equal_n", cfg.sim.equal_n);
    s.read("sigma_d", cfg.sim.sigma_d);
    s.read("threads", cfg.sim.threads);
    s.read("chunk_size", cfg.sim.chunk_size);
    if (auto v = s.text("sizes")) cfg.sim.sizes = detail::parse_list<std::int64_t>(*v, "sim.sizes");

    const auto& rule = section("rule");
    cfg.rule.kind = rule.get<std::string>("kind", cfg.rule.kind);
    detail::SectionReader r(rule, "rule", detail::rule_keys(cfg.rule.kind));
    r.read("alpha", cfg.rule.alpha);
    r.read("gamma", cfg.rule.gamma);
    r.read("pi", cfg.rule.pi);
    r.read("alternative", cfg.rule.alternative);
    r.read("delta", cfg.rule.delta);
    r.read("delta_h1", cfg.rule.delta_h1);

    detail::SectionReader o(section("output"), "output", detail::output_keys);
    o.read("dir", cfg.output.dir);
    o.read("t_max", cfg.output.t_max);
    if (auto v = o.text("histogram_times")) {
        cfg.output.histogram_times = detail::parse_list<std::int64_t>(*v, "output.histogram_times");
    }
    if (auto v = o.text("suite_policies")) cfg.output.suite_policies = detail::split_list(*v);

    cfg.validate();
    return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config '" + path + "'");
    return parse_config(in);
}

// Canonical text: only keys that apply to the selected policy and rule, floats
// in shortest round-trip form. parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const RunConfig& c) {
    std::ostringstream out;
    const auto kv = [&](std::string_view key, const std::string& value) {
        out << key << " = " << value << '\n';
    };
    const auto num = [](double x) { return format_double(x); };

    out << "[policy]\n";
    kv("name", c.policy.name);
    const auto& pn = c.policy.name;
    if (pn == "gold_rush") {
        const auto& g = c.policy.gold_rush;
        kv("omega_s1", num(g.omega_s1));
        kv("omega_x1", num(g.omega_x1));
        kv("omega_ns1", num(g.omega_ns1));
        kv("omega_s", num(g.omega_s));
        kv("omega_x", num(g.omega_x));
        kv("omega_ns", num(g.omega_ns));
        kv("alpha", num(g.alpha));
        kv("analyze_prob", num(c.policy.analyze_prob));
    } else if (pn == "power_law") {
        kv("delta_h1", num(c.policy.power_law.delta_h1));
        kv("tau", num(c.policy.power_law.tau));
        kv("analyze_prob", num(c.policy.analyze_prob));
    } else if (pn == "lsr") {
        kv("alpha", num(c.policy.lsr_alpha));
    } else if (pn == "timing_window") {
        kv("a", std::to_string(c.policy.timing_window.a));
        kv("b", std::to_string(c.policy.timing_window.b));
        kv("delta_h1", num(c.policy.timing_window.delta_h1));
        kv("continue_prob", num(c.policy.continue_prob));
    } else {
        kv("continue_prob", num(c.policy.continue_prob));
        kv("analysis_time", std::to_string(c.policy.analysis_time));
    }

    out << "\n[sim]\n";
    kv("replications", std::to_string(c.sim.replications));
    kv("seed", std::to_string(c.sim.seed));
    kv("t_cap", std::to_string(c.sim.t_cap));
    kv("hypothesis_mean", num(c.sim.hypothesis_mean));
    kv("equal_n", std::to_string(c.sim.equal_n));
    kv("sigma_d", num(c.sim.sigma_d));
    if (!c.sim.sizes.empty()) kv("sizes", detail::join(c.sim.sizes));
    kv("threads", std::to_string(c.sim.threads));
    kv("chunk_size", std::to_string(c.sim.chunk_size));

    out << "\n[rule]\n";
    kv("kind", c.rule.kind);
    if (c.rule.kind == "posterior_odds") {
        kv("gamma", num(c.rule.gamma));
        kv("pi", num(c.rule.pi));
    } else {
        kv("alpha", num(c.rule.alpha));
    }
    if (c.rule.kind != "z_test") {
        kv("alternative", c.rule.alternative);
        if (c.rule.delta) kv("delta", num(*c.rule.delta));
        kv("delta_h1", num(c.rule.delta_h1));
    }

    out << "\n[output]\n";
    kv("dir", c.output.dir);
    kv("t_max", std::to_string(c.output.t_max));
    kv("histogram_times", detail::join(c.output.histogram_times));
    kv("suite_policies", detail::join(c.output.suite_policies));
    return out.str();
}

// 64-bit FNV-1a, as 16 hex digits.
inline std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::array<char, 17> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + 16, h, 16);
    std::string hex(buf.data(), r.ptr);
    return std::string(16 - hex.size(), '0') + hex;
}

// Hash of the canonical serialization, so formatting differences in the input
// file do not change it.
inline std::string config_hash(const RunConfig& c) {
    return fnv1a_hex(serialize_config(c));
}

}  // namespace accumbias
