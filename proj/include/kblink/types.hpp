#pragma once
// Shared numeric primitives: dense vectors, row-major matrices, scored rankings.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "kblink/error.hpp"

namespace kblink {

using Vec = std::vector<double>;

// Row-major dense matrix.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
    double* row(std::size_t i) { return a.data() + i * cols; }
    const double* row(std::size_t i) const { return a.data() + i * cols; }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

inline double dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

inline double dot(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw DataError("dot: dimension mismatch");
    return dot(x.data(), y.data(), x.size());
}

inline double l2_norm(const Vec& x) { return std::sqrt(dot(x.data(), x.data(), x.size())); }

inline double cosine(const Vec& x, const Vec& y) {
    double nx = l2_norm(x);
    double ny = l2_norm(y);
    if (nx == 0.0 || ny == 0.0) throw NumericError("cosine: zero-norm vector");
    return dot(x, y) / (nx * ny);
}

inline bool all_finite(const Vec& x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

// Stable log(sum(exp(x))).
inline double logsumexp(const Vec& x) {
    if (x.empty()) throw NumericError("logsumexp: empty input");
    double m = *std::max_element(x.begin(), x.end());
    double s = 0.0;
    for (double v : x) s += std::exp(v - m);
    return m + std::log(s);
}

// One retrieval / reranking result row.
struct ScoredOrdinal {
    std::size_t ordinal;
    double score;
};

// Descending score, ties by ascending ordinal.
using Ranking = std::vector<ScoredOrdinal>;

inline void sort_ranking(Ranking& r) {
    std::sort(r.begin(), r.end(), [](const ScoredOrdinal& a, const ScoredOrdinal& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.ordinal < b.ordinal;
    });
}

} // namespace kblink
