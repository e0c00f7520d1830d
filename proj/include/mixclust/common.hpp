#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#define MIXCLUST_VERSION "0.1.0"

namespace mixclust {

// Error taxonomy shared by the whole library. The CLI maps these onto its
// exit-code contract: parse/value/schema/usage -> 1, fit -> 2.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValueError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLogTwoPi = 1.8378770664093454836;

/// log(sum_i exp(v[i])) with the usual max shift; -inf for an empty or
/// all-(-inf) input.
inline double log_sum_exp(std::span<const double> v) {
    double m = kNegInf;
    for (double x : v)
        if (x > m) m = x;
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

inline double relative_change(double cur, double prev) {
    return std::abs(cur - prev) / (std::abs(prev) + 1.0);
}

/// FNV-1a, used for config hashes and for deriving per-object RNG streams
/// from object ids.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

template <typename T>
int argmax_lowest(std::span<const T> row) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(row.size()); ++i)
        if (row[i] > row[best]) best = i;
    return best;
}

}  // namespace mixclust
