#pragma once
// Linking metrics (AP@k, MAP@10, AP@1) and intrinsic overlap metrics (MRR, ACS).

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "kblink/corpus.hpp"
#include "kblink/crossencoder.hpp"
#include "kblink/encoder.hpp"
#include "kblink/error.hpp"
#include "kblink/index.hpp"
#include "kblink/tokenizer.hpp"
#include "kblink/types.hpp"

namespace kblink {

struct EvalReport {
    std::vector<double> per_mention_ap10;
    std::vector<int> per_mention_rel1;
    double ap_at_1 = 0.0;
    double map_at_10 = 0.0;
    std::size_t k = 10;
    std::string stage = "bi-encoder"; // or "cross-encoder"
};

struct IntrinsicReport {
    double mrr = 0.0;
    double acs = 0.0;
    std::size_t pair_count = 0;
};

// Single gold entity, so AP@k collapses to 1/rank when found, else 0.
inline double ap_at_k(const Ranking& ranking, std::size_t gold_ordinal, std::size_t k = 10) {
    std::size_t depth = std::min(k, ranking.size());
    for (std::size_t r = 0; r < depth; ++r)
        if (ranking[r].ordinal == gold_ordinal) return 1.0 / static_cast<double>(r + 1);
    return 0.0;
}

inline double map_at_k(const std::vector<double>& per_mention) {
    if (per_mention.empty()) throw DataError("map_at_k: empty list");
    double s = 0.0;
    for (double v : per_mention) s += v;
    return s / static_cast<double>(per_mention.size());
}

inline double ap_at_1(const std::vector<int>& rel1) {
    if (rel1.empty()) throw DataError("ap_at_1: empty list");
    double s = 0.0;
    for (int v : rel1) s += v;
    return s / static_cast<double>(rel1.size());
}

inline EvalReport evaluate_linking(const EncoderParams& context_params, const EntityIndex& index,
                                   const std::vector<MentionRecord>& mentions,
                                   const UnifiedCatalog& catalog, const Vocab& vocab,
                                   std::size_t k = 10, std::size_t max_len = 128,
                                   const CrossEncoderModel* cross = nullptr) {
    EvalReport report;
    report.k = k;
    report.stage = cross ? "cross-encoder" : "bi-encoder";
    for (const auto& m : mentions) {
        if (!catalog.contains(m.gold_kb_id, m.gold_entity_id))
            throw DataError("evaluate_linking: unresolvable gold for mention " + m.mention_id);
        std::size_t gold = catalog.ordinal(m.gold_kb_id, m.gold_entity_id);
        Vec v = encode(context_params, encode_context(m, vocab, max_len));
        Ranking ranking = search(index, v, k);
        if (cross) {
            std::vector<std::size_t> ords;
            ords.reserve(ranking.size());
            for (const auto& s : ranking) ords.push_back(s.ordinal);
            ranking = rerank(*cross, m, ords, catalog, vocab, max_len);
        }
        report.per_mention_rel1.push_back(!ranking.empty() && ranking[0].ordinal == gold ? 1 : 0);
        report.per_mention_ap10.push_back(ap_at_k(ranking, gold, k));
    }
    report.ap_at_1 = ap_at_1(report.per_mention_rel1);
    report.map_at_10 = map_at_k(report.per_mention_ap10);
    return report;
}

// MRR direction general -> specific: rank each pair's specific entity within
// the deduplicated pool of all specific-side entities of the pair set, ordered
// by cosine to the general entity's embedding (ties by ascending ordinal).
inline IntrinsicReport intrinsic_eval(const EncoderParams& candidate_params,
                                      const std::vector<OverlapPair>& pairs,
                                      const UnifiedCatalog& catalog, const Vocab& vocab,
                                      std::size_t max_len = 128) {
    if (pairs.empty()) throw DataError("intrinsic_eval: empty pair list");
    std::map<std::size_t, Vec> embed_of;
    auto embed = [&](std::size_t ordinal) -> const Vec& {
        auto it = embed_of.find(ordinal);
        if (it == embed_of.end()) {
            if (ordinal >= catalog.size()) throw DataError("intrinsic_eval: unknown ordinal");
            TokenSeq seq = encode_candidate(catalog.entities[ordinal], vocab, max_len);
            it = embed_of.emplace(ordinal, encode(candidate_params, seq)).first;
        }
        return it->second;
    };

    std::vector<std::size_t> pool;
    for (const auto& p : pairs) pool.push_back(p.specific_ordinal);
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    for (std::size_t ord : pool) embed(ord);

    IntrinsicReport rep;
    rep.pair_count = pairs.size();
    double mrr_sum = 0.0, acs_sum = 0.0;
    for (const auto& p : pairs) {
        const Vec& g = embed(p.general_ordinal);
        const Vec& s = embed(p.specific_ordinal);
        acs_sum += cosine(g, s);
        double own = cosine(g, s);
        std::size_t rank = 1;
        for (std::size_t ord : pool) {
            if (ord == p.specific_ordinal) continue;
            double c = cosine(g, embed(ord));
            if (c > own || (c == own && ord < p.specific_ordinal)) ++rank;
        }
        mrr_sum += 1.0 / static_cast<double>(rank);
    }
    rep.mrr = mrr_sum / static_cast<double>(pairs.size());
    rep.acs = acs_sum / static_cast<double>(pairs.size());
    return rep;
}

} // namespace kblink
