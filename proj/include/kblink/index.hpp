#pragma once
// Exact brute-force top-k cosine retrieval over unit-normalized entity rows.

#include <string>
#include <vector>

#include "kblink/corpus.hpp"
#include "kblink/encoder.hpp"
#include "kblink/error.hpp"
#include "kblink/tokenizer.hpp"
#include "kblink/types.hpp"

namespace kblink {

struct EntityIndex {
    Mat vectors;                       // N x d, rows unit-norm
    std::vector<std::size_t> ordinals; // row -> catalog ordinal

    std::size_t size() const { return vectors.rows; }
};

inline EntityIndex build_index(const EncoderParams& candidate_params, const UnifiedCatalog& catalog,
                               const Vocab& vocab, std::size_t max_len = 128) {
    EntityIndex index;
    index.vectors = Mat(catalog.size(), candidate_params.d);
    index.ordinals.resize(catalog.size());
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        TokenSeq seq = encode_candidate(catalog.entities[i], vocab, max_len);
        Vec v = encode(candidate_params, seq);
        double n = l2_norm(v);
        if (n == 0.0)
            throw NumericError("build_index: zero-norm embedding at ordinal " + std::to_string(i));
        double* row = index.vectors.row(i);
        for (std::size_t j = 0; j < candidate_params.d; ++j) row[j] = v[j] / n;
        index.ordinals[i] = i;
    }
    return index;
}

// Top min(k, N) rows by dot product with the normalized query; descending
// score, ties by ascending ordinal.
inline Ranking search(const EntityIndex& index, const Vec& query, std::size_t k) {
    if (index.size() == 0) throw DataError("search: empty index");
    if (k == 0) throw ConfigError("search: k must be at least 1");
    if (query.size() != index.vectors.cols) throw DataError("search: query dimension mismatch");
    double qn = l2_norm(query);
    if (qn == 0.0) throw NumericError("search: zero-norm query");

    Ranking all;
    all.reserve(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        double s = dot(index.vectors.row(i), query.data(), query.size()) / qn;
        all.push_back({index.ordinals[i], s});
    }
    sort_ranking(all);
    if (all.size() > k) all.resize(k);
    return all;
}

} // namespace kblink
