#pragma once

#include "freshness/mdp.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace freshness {

/// A violation of the threshold structure along one age line: the policy
/// updates at age `lower` but idles at the larger age `upper`.
struct ThresholdViolation {
    std::size_t line = 0;
    int lower = 0;
    int upper = 0;
};

/// Threshold of each line, or the first violation found.
struct LineThresholds {
    std::vector<int> thresholds;
    std::optional<ThresholdViolation> violation;

    bool ok() const { return !violation.has_value(); }
};

/// Each line lists state indices in increasing age order, starting at age
/// `first_age`. A line is threshold-shaped iff its actions read 0...0 1...1;
/// the threshold is the first age with action 1, or one past the last age
/// when the line never updates.
inline LineThresholds line_thresholds(const Policy& policy, const std::vector<std::vector<StateIndex>>& lines,
                                      int first_age) {
    LineThresholds out;
    out.thresholds.reserve(lines.size());
    for (std::size_t k = 0; k < lines.size(); ++k) {
        const auto& line = lines[k];
        const int past_end = first_age + static_cast<int>(line.size());
        int threshold = past_end;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const int age = first_age + static_cast<int>(i);
            const bool update = policy[line[i]] == kUpdate;
            if (threshold == past_end) {
                if (update) threshold = age;
            } else if (!update) {
                out.violation = ThresholdViolation{k, threshold, age};
                return out;
            }
        }
        out.thresholds.push_back(threshold);
    }
    return out;
}

} // namespace freshness
