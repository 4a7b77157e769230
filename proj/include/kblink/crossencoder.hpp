#pragma once
// Cross-encoder re-ranker: encode the concatenated mention-candidate sequence
// and score it with a learned linear layer.

#include <vector>

#include "kblink/corpus.hpp"
#include "kblink/encoder.hpp"
#include "kblink/error.hpp"
#include "kblink/tokenizer.hpp"
#include "kblink/types.hpp"

namespace kblink {

struct CrossEncoderModel {
    EncoderParams encoder_params;
    Vec w; // classification weights, dimension d
};

inline CrossEncoderModel init_cross_encoder(std::size_t vocab_size, std::size_t d,
                                            std::uint64_t seed) {
    CrossEncoderModel m;
    m.encoder_params = init_params(vocab_size, d, seed);
    Rng rng(seed ^ 0xc2b2ae3d27d4eb4fULL);
    m.w.resize(d);
    for (auto& x : m.w) x = rng.uniform(-0.05, 0.05);
    return m;
}

inline double score_pair(const CrossEncoderModel& model, const TokenSeq& pair_seq) {
    if (model.w.size() != model.encoder_params.d)
        throw DataError("score_pair: weight dimension mismatch");
    return dot(encode(model.encoder_params, pair_seq), model.w);
}

struct RankLossResult {
    double loss;
    Vec d_logits;
};

inline RankLossResult rank_loss(const Vec& logits, std::size_t gold_index) {
    if (logits.size() < 2) throw NumericError("rank_loss: need at least 2 candidates");
    if (gold_index >= logits.size()) throw NumericError("rank_loss: gold index out of range");
    if (!all_finite(logits)) throw NumericError("rank_loss: non-finite logits");
    double lse = logsumexp(logits);
    RankLossResult r;
    r.loss = -logits[gold_index] + lse;
    r.d_logits.resize(logits.size());
    for (std::size_t j = 0; j < logits.size(); ++j) r.d_logits[j] = std::exp(logits[j] - lse);
    r.d_logits[gold_index] -= 1.0;
    return r;
}

inline Ranking rerank(const CrossEncoderModel& model, const MentionRecord& mention,
                      const std::vector<std::size_t>& candidate_ordinals,
                      const UnifiedCatalog& catalog, const Vocab& vocab,
                      std::size_t max_len = 128) {
    if (candidate_ordinals.empty()) throw DataError("rerank: empty candidate list");
    Ranking r;
    r.reserve(candidate_ordinals.size());
    for (std::size_t ord : candidate_ordinals) {
        if (ord >= catalog.size()) throw DataError("rerank: unknown ordinal");
        TokenSeq seq = encode_cross(mention, catalog.entities[ord], vocab, max_len);
        r.push_back({ord, score_pair(model, seq)});
    }
    sort_ranking(r);
    return r;
}

} // namespace kblink
