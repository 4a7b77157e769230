#pragma once
// Paired two-sided Fisher randomization (permutation) test, sampled and exact.

#include <cmath>
#include <cstdint>
#include <vector>

#include "kblink/error.hpp"
#include "kblink/rng.hpp"
#include "kblink/types.hpp"

namespace kblink {

struct SigTestResult {
    double observed_diff = 0.0;
    double p_value = 1.0;
    std::size_t rounds = 0;
    double alpha = 0.05;
    bool significant = false;
};

namespace detail {

// Signed sum in index order so the identity and full-flip patterns reproduce
// the observed sum exactly in floating point.
inline double signed_sum(const std::vector<double>& diffs, const std::vector<int>& signs) {
    double s = 0.0;
    for (std::size_t i = 0; i < diffs.size(); ++i) s += signs[i] ? -diffs[i] : diffs[i];
    return s;
}

} // namespace detail

// Statistic mean(a) - mean(b); each round flips every pair independently with
// probability 1/2; two-sided; p = (c + 1) / (rounds + 1).
inline SigTestResult randomization_test(const std::vector<double>& a, const std::vector<double>& b,
                                        std::size_t rounds = 10000, double alpha = 0.05,
                                        std::uint64_t seed = 7) {
    if (a.size() != b.size()) throw DataError("randomization_test: length mismatch");
    if (a.empty()) throw DataError("randomization_test: empty input");
    if (rounds < 1) throw ConfigError("randomization_test: rounds must be at least 1");
    std::size_t n = a.size();
    std::vector<double> diffs(n);
    for (std::size_t i = 0; i < n; ++i) diffs[i] = a[i] - b[i];
    std::vector<int> signs(n, 0);
    double observed_sum = detail::signed_sum(diffs, signs);
    double obs_abs = std::fabs(observed_sum);

    Rng rng(seed);
    std::size_t c = 0;
    for (std::size_t r = 0; r < rounds; ++r) {
        for (std::size_t i = 0; i < n; ++i) signs[i] = rng.bernoulli(0.5) ? 1 : 0;
        if (std::fabs(detail::signed_sum(diffs, signs)) >= obs_abs) ++c;
    }
    SigTestResult res;
    res.observed_diff = observed_sum / static_cast<double>(n);
    res.rounds = rounds;
    res.alpha = alpha;
    res.p_value = static_cast<double>(c + 1) / static_cast<double>(rounds + 1);
    res.significant = res.p_value < alpha;
    return res;
}

// Exhaustive 2^N flip enumeration; p = qualifying patterns / 2^N. The identity
// pattern always qualifies, so p > 0.
inline SigTestResult exact_randomization_test(const std::vector<double>& a,
                                              const std::vector<double>& b, double alpha = 0.05) {
    if (a.size() != b.size()) throw DataError("exact_randomization_test: length mismatch");
    if (a.empty()) throw DataError("exact_randomization_test: empty input");
    if (a.size() > 20) throw ConfigError("exact_randomization_test: N must be at most 20");
    std::size_t n = a.size();
    std::vector<double> diffs(n);
    for (std::size_t i = 0; i < n; ++i) diffs[i] = a[i] - b[i];
    std::vector<int> signs(n, 0);
    double observed_sum = detail::signed_sum(diffs, signs);
    double obs_abs = std::fabs(observed_sum);

    std::uint64_t total = 1ULL << n;
    std::size_t c = 0;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        for (std::size_t i = 0; i < n; ++i) signs[i] = (mask >> i) & 1ULL;
        if (std::fabs(detail::signed_sum(diffs, signs)) >= obs_abs) ++c;
    }
    SigTestResult res;
    res.observed_diff = observed_sum / static_cast<double>(n);
    res.rounds = static_cast<std::size_t>(total);
    res.alpha = alpha;
    res.p_value = static_cast<double>(c) / static_cast<double>(total);
    res.significant = res.p_value < alpha;
    return res;
}

} // namespace kblink
