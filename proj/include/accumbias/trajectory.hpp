#pragma once

#include <cstdint>
#include <vector>

#include "accumbias/meta_core.hpp"

namespace accumbias {

// One realized study series. Index i of outcomes, meta_states and sum_z refers
// to time t = i + 1.
struct SeriesTrajectory {
    std::vector<StudyOutcome> outcomes;
    std::int64_t t_realized = 0;
    bool censored = false;                     // stopped by the horizon, not by the policy
    std::vector<std::int64_t> analysis_times;  // increasing, within 1..t_realized
    std::vector<MetaState> meta_states;
    std::vector<double> sum_z;                 // running sum of study z-scores

    void clear() {
        outcomes.clear();
        t_realized = 0;
        censored = false;
        analysis_times.clear();
        meta_states.clear();
        sum_z.clear();
    }

    const MetaState& meta_at(std::int64_t t) const {
        return meta_states[static_cast<std::size_t>(t - 1)];
    }
    double sum_z_at(std::int64_t t) const { return sum_z[static_cast<std::size_t>(t - 1)]; }
};

}  // namespace accumbias
