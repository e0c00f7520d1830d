#pragma once

#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "mixclust/common.hpp"

namespace mixclust {

/// Adjusted Rand index between two labelings of the same objects.
/// Chance-corrected; 1 for identical partitions (up to relabeling).
inline double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw ValueError("label vectors must have equal length");
    const std::size_t n = a.size();
    if (n < 2) return 1.0;
    std::map<std::pair<int, int>, long> joint;
    std::map<int, long> count_a, count_b;
    for (std::size_t i = 0; i < n; ++i) {
        ++joint[{a[i], b[i]}];
        ++count_a[a[i]];
        ++count_b[b[i]];
    }
    auto choose2 = [](long m) { return 0.5 * static_cast<double>(m) * static_cast<double>(m - 1); };
    double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (const auto& [key, c] : joint) sum_joint += choose2(c);
    for (const auto& [key, c] : count_a) sum_a += choose2(c);
    for (const auto& [key, c] : count_b) sum_b += choose2(c);
    const double total = choose2(static_cast<long>(n));
    const double expected = sum_a * sum_b / total;
    const double maximum = 0.5 * (sum_a + sum_b);
    if (maximum == expected) return sum_joint == expected ? 1.0 : 0.0;
    return (sum_joint - expected) / (maximum - expected);
}

/// Empirical entropy of a labeling, in nats.
inline double label_entropy(std::span<const int> labels) {
    std::map<int, long> counts;
    for (int z : labels) ++counts[z];
    const double n = static_cast<double>(labels.size());
    double h = 0.0;
    for (const auto& [z, c] : counts) {
        const double p = static_cast<double>(c) / n;
        h -= p * std::log(p);
    }
    return h;
}

}  // namespace mixclust
