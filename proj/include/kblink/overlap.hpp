#pragma once
// Overlapping-entity extraction: exact normalized-title match, then a semantic
// filter thresholding description-embedding cosine similarity.

#include <cctype>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "kblink/corpus.hpp"
#include "kblink/encoder.hpp"
#include "kblink/error.hpp"
#include "kblink/rng.hpp"
#include "kblink/tokenizer.hpp"
#include "kblink/types.hpp"

namespace kblink {

struct SimilarityStats {
    double max = 0.0;
    double average = 0.0;
    double min = 0.0;
    std::size_t count = 0;
};

// Lowercase and collapse whitespace runs to single spaces, trimming the ends.
inline std::string normalize_title(const std::string& title) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : title) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

// All (a, b) pairs with equal normalized titles; duplicate titles fan out as a
// cross product. Output ordered by a-ordinal then b-ordinal.
inline std::vector<OverlapPair> fuzzy_title_match(const UnifiedCatalog& catalog,
                                                  const std::string& kb_a,
                                                  const std::string& kb_b) {
    std::map<std::string, std::vector<std::size_t>> b_by_title;
    for (std::size_t i = 0; i < catalog.size(); ++i)
        if (catalog.entities[i].kb_id == kb_b)
            b_by_title[normalize_title(catalog.entities[i].title)].push_back(i);
    std::vector<OverlapPair> out;
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        if (catalog.entities[i].kb_id != kb_a) continue;
        auto it = b_by_title.find(normalize_title(catalog.entities[i].title));
        if (it == b_by_title.end()) continue;
        for (std::size_t j : it->second) {
            OverlapPair p;
            p.general_ordinal = i;
            p.specific_ordinal = j;
            out.push_back(p);
        }
    }
    return out;
}

// Description-only encoder input: CLS, description tokens, SEP.
inline TokenSeq encode_description(const EntityRecord& e, const Vocab& vocab,
                                   std::size_t max_len = 128) {
    if (max_len < 2) throw ConfigError("encode_description: max_len must be at least 2");
    TokenSeq seq;
    seq.max_len = max_len;
    seq.ids.push_back(CLS);
    std::vector<std::string> toks = tokenize(e.description);
    std::size_t keep = std::min(toks.size(), max_len - 2);
    for (std::size_t i = 0; i < keep; ++i) seq.ids.push_back(vocab.id_of(toks[i]));
    seq.ids.push_back(SEP);
    return seq;
}

// Keeps pairs whose description-embedding cosine reaches the threshold, filling
// each pair's similarity; stats cover every input pair, kept or not.
inline std::pair<std::vector<OverlapPair>, SimilarityStats>
semantic_filter(const std::vector<OverlapPair>& pairs, const EncoderParams& candidate_params,
                const UnifiedCatalog& catalog, const Vocab& vocab, double threshold,
                std::size_t max_len = 128) {
    if (threshold < -1.0 || threshold > 1.0)
        throw ConfigError("semantic_filter: threshold outside [-1,1]");
    std::vector<OverlapPair> kept;
    SimilarityStats stats;
    std::map<std::size_t, Vec> cache;
    auto embed = [&](std::size_t ordinal) -> const Vec& {
        auto it = cache.find(ordinal);
        if (it == cache.end()) {
            if (ordinal >= catalog.size()) throw DataError("semantic_filter: unknown ordinal");
            it = cache
                     .emplace(ordinal,
                              encode(candidate_params,
                                     encode_description(catalog.entities[ordinal], vocab, max_len)))
                     .first;
        }
        return it->second;
    };
    double sum = 0.0;
    for (const auto& p : pairs) {
        double sim = cosine(embed(p.general_ordinal), embed(p.specific_ordinal));
        if (stats.count == 0) {
            stats.max = stats.min = sim;
        } else {
            stats.max = std::max(stats.max, sim);
            stats.min = std::min(stats.min, sim);
        }
        sum += sim;
        ++stats.count;
        if (sim >= threshold) {
            OverlapPair q = p;
            q.similarity = sim;
            kept.push_back(q);
        }
    }
    if (stats.count > 0) stats.average = sum / static_cast<double>(stats.count);
    return {kept, stats};
}

// Uniform sample without replacement of min(n, |pairs|), deterministic per seed.
inline std::vector<OverlapPair> sample_pairs(const std::vector<OverlapPair>& pairs, std::size_t n,
                                             std::uint64_t seed) {
    if (n == 0) throw ConfigError("sample_pairs: n must be at least 1");
    Rng rng(seed);
    std::size_t k = std::min(n, pairs.size());
    std::vector<std::size_t> picks = rng.sample_without_replacement(pairs.size(), k);
    std::vector<OverlapPair> out;
    out.reserve(k);
    for (std::size_t idx : picks) out.push_back(pairs[idx]);
    return out;
}

} // namespace kblink
