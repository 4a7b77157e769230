#pragma once
// Bi-encoder ownership of θm/θr: contrastive and alignment losses with exact
// gradients, SGD, and the variant-configured two-stage training loop.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kblink/corpus.hpp"
#include "kblink/encoder.hpp"
#include "kblink/error.hpp"
#include "kblink/eval.hpp"
#include "kblink/index.hpp"
#include "kblink/rng.hpp"
#include "kblink/tokenizer.hpp"
#include "kblink/types.hpp"

namespace kblink {

struct BiEncoderModel {
    EncoderParams context_params;   // θm
    EncoderParams candidate_params; // θr
};

inline BiEncoderModel init_biencoder(std::size_t vocab_size, std::size_t d, std::uint64_t seed) {
    BiEncoderModel m;
    m.context_params = init_params(vocab_size, d, seed * 2 + 1);
    m.candidate_params = init_params(vocab_size, d, seed * 2 + 2);
    return m;
}

struct VariantConfig {
    std::string name;
    bool train_context = true;
    bool train_candidate = true;
    bool overlap_stage = false;
    bool augmentation = false;
    double lambda_mse = 0.0;

    static VariantConfig from_name(const std::string& name, double lambda_mse = 0.0) {
        VariantConfig v;
        v.name = name;
        v.lambda_mse = lambda_mse;
        if (name == "C") {
        } else if (name == "CO") {
            v.overlap_stage = true;
        } else if (name == "CA") {
            v.augmentation = true;
        } else if (name == "COA") {
            v.overlap_stage = true;
            v.augmentation = true;
        } else if (name == "D") {
            v.train_context = false;
        } else if (name == "DA") {
            v.train_context = false;
            v.augmentation = true;
        } else {
            throw ConfigError("unknown variant \"" + name + "\" (expected C/CO/CA/COA/D/DA)");
        }
        v.validate();
        return v;
    }

    void validate() const {
        if (lambda_mse < 0.0 || lambda_mse > 1.0)
            throw ConfigError("variant: lambda_mse outside [0,1]");
        if (!train_candidate) throw ConfigError("variant: candidate encoder must be trainable");
        bool is_d = (name == "D" || name == "DA");
        if (is_d && train_context) throw ConfigError("variant: D/DA require frozen context encoder");
        if (!is_d && !train_context)
            throw ConfigError("variant: C-family requires trainable context encoder");
    }
};

struct TrainConfig {
    std::size_t batch_size = 16;
    double learning_rate = 3e-5;
    std::size_t epochs = 5;
    std::uint64_t seed = 7;
    std::size_t top_k = 10;
    std::size_t max_len = 128;
    bool literal_negatives = false; // study mode: exclude the gold from the normalizer

    void validate() const {
        if (batch_size < 2) throw ConfigError("train: batch_size must be at least 2");
        if (epochs == 0) throw ConfigError("train: epochs must be positive");
        if (top_k == 0) throw ConfigError("train: top_k must be positive");
    }
};

struct TrainHistory {
    struct EpochEntry {
        double train_loss;
        double validation_ap1;
    };
    double initial_validation_ap1 = 0.0;
    std::vector<EpochEntry> stage1;
    std::vector<EpochEntry> stage2;
    // Best checkpoint over all post-epoch candidates (stage 1 then stage 2),
    // 0-based; ties keep the earliest epoch.
    std::size_t best_epoch = 0;
    double best_validation_ap1 = 0.0;
    // Intrinsic metrics over the training overlap pairs immediately before and
    // after stage 2 (alignment trend; only set when the stage runs).
    double overlap_pre_acs = 0.0, overlap_post_acs = 0.0;
    double overlap_pre_mrr = 0.0, overlap_post_mrr = 0.0;
};

struct ContrastiveResult {
    double loss;
    std::vector<Vec> d_context;
    std::vector<Vec> d_candidate;
};

// Softmax cross-entropy over the batch: row i's candidates are all B batch
// candidates, gold included. literal_negatives drops the gold from the
// normalizer (the exact formula as written permits negative losses).
inline ContrastiveResult inbatch_contrastive_loss(const std::vector<Vec>& context_vecs,
                                                  const std::vector<Vec>& candidate_vecs,
                                                  bool literal_negatives = false) {
    std::size_t B = context_vecs.size();
    if (B < 2 || candidate_vecs.size() != B)
        throw NumericError("contrastive loss: need aligned batches of size >= 2");
    std::size_t d = context_vecs[0].size();
    for (const auto& v : context_vecs)
        if (v.size() != d || !all_finite(v))
            throw NumericError("contrastive loss: bad context vector");
    for (const auto& v : candidate_vecs)
        if (v.size() != d || !all_finite(v))
            throw NumericError("contrastive loss: bad candidate vector");

    ContrastiveResult r;
    r.loss = 0.0;
    r.d_context.assign(B, Vec(d, 0.0));
    r.d_candidate.assign(B, Vec(d, 0.0));
    double inv_b = 1.0 / static_cast<double>(B);
    Vec scores(B);
    for (std::size_t i = 0; i < B; ++i) {
        for (std::size_t j = 0; j < B; ++j) scores[j] = dot(context_vecs[i], candidate_vecs[j]);
        double gold = scores[i];
        Vec norm_scores;
        if (literal_negatives) {
            for (std::size_t j = 0; j < B; ++j)
                if (j != i) norm_scores.push_back(scores[j]);
        } else {
            norm_scores = scores;
        }
        double lse = logsumexp(norm_scores);
        r.loss += (-gold + lse) * inv_b;
        // d loss_i / d score_ij = softmax_j - [j == i] (softmax over the
        // normalizer's candidate set; zero elsewhere).
        for (std::size_t j = 0; j < B; ++j) {
            double ds = 0.0;
            if (!literal_negatives || j != i) ds += std::exp(scores[j] - lse);
            if (j == i) ds -= 1.0;
            if (ds == 0.0) continue;
            ds *= inv_b;
            for (std::size_t t = 0; t < d; ++t) {
                r.d_context[i][t] += ds * candidate_vecs[j][t];
                r.d_candidate[j][t] += ds * context_vecs[i][t];
            }
        }
    }
    return r;
}

struct AlignmentResult {
    double loss;
    std::vector<Vec> d_o1;
    std::vector<Vec> d_o2;
};

// Pull aligned overlap pairs together against in-batch cross-side negatives,
// with an optional MSE term weighted by lambda_mse.
inline AlignmentResult overlap_alignment_loss(const std::vector<Vec>& o1_vecs,
                                              const std::vector<Vec>& o2_vecs, double lambda_mse) {
    std::size_t B = o1_vecs.size();
    if (lambda_mse < 0.0 || lambda_mse > 1.0)
        throw ConfigError("alignment loss: lambda_mse outside [0,1]");
    if (B < 2 || o2_vecs.size() != B)
        throw NumericError("alignment loss: need aligned batches of size >= 2");
    std::size_t d = o1_vecs[0].size();
    for (const auto& v : o1_vecs)
        if (v.size() != d || !all_finite(v)) throw NumericError("alignment loss: bad o1 vector");
    for (const auto& v : o2_vecs)
        if (v.size() != d || !all_finite(v)) throw NumericError("alignment loss: bad o2 vector");

    AlignmentResult r;
    r.loss = 0.0;
    r.d_o1.assign(B, Vec(d, 0.0));
    r.d_o2.assign(B, Vec(d, 0.0));
    double inv_b = 1.0 / static_cast<double>(B);
    Vec s(B), t(B);
    for (std::size_t i = 0; i < B; ++i) {
        for (std::size_t j = 0; j < B; ++j) {
            s[j] = dot(o1_vecs[i], o2_vecs[j]);
            t[j] = dot(o2_vecs[i], o1_vecs[j]);
        }
        double lse_s = logsumexp(s);
        double lse_t = logsumexp(t);
        double mse = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            double diff = o1_vecs[i][k] - o2_vecs[i][k];
            mse += diff * diff;
        }
        r.loss += (-s[i] + lse_s + lse_t + lambda_mse * mse) * inv_b;

        for (std::size_t k = 0; k < d; ++k) {
            r.d_o1[i][k] -= inv_b * o2_vecs[i][k];
            r.d_o2[i][k] -= inv_b * o1_vecs[i][k];
            double diff = o1_vecs[i][k] - o2_vecs[i][k];
            r.d_o1[i][k] += inv_b * 2.0 * lambda_mse * diff;
            r.d_o2[i][k] -= inv_b * 2.0 * lambda_mse * diff;
        }
        for (std::size_t j = 0; j < B; ++j) {
            double ps = std::exp(s[j] - lse_s) * inv_b;
            double pt = std::exp(t[j] - lse_t) * inv_b;
            for (std::size_t k = 0; k < d; ++k) {
                r.d_o1[i][k] += ps * o2_vecs[j][k];
                r.d_o2[j][k] += ps * o1_vecs[i][k];
                r.d_o2[i][k] += pt * o1_vecs[j][k];
                r.d_o1[j][k] += pt * o2_vecs[i][k];
            }
        }
    }
    return r;
}

inline void sgd_step(EncoderParams& params, const EncoderGrad& grads, double learning_rate) {
    if (!params.embedding.same_shape(grads.embedding) ||
        !params.proj_weight.same_shape(grads.proj_weight) ||
        params.proj_bias.size() != grads.proj_bias.size())
        throw NumericError("sgd_step: shape mismatch");
    for (std::size_t i = 0; i < params.embedding.a.size(); ++i)
        params.embedding.a[i] -= learning_rate * grads.embedding.a[i];
    for (std::size_t i = 0; i < params.proj_weight.a.size(); ++i)
        params.proj_weight.a[i] -= learning_rate * grads.proj_weight.a[i];
    for (std::size_t i = 0; i < params.proj_bias.size(); ++i)
        params.proj_bias[i] -= learning_rate * grads.proj_bias[i];
}

inline EntityIndex build_index(const BiEncoderModel& model, const UnifiedCatalog& catalog,
                               const Vocab& vocab, std::size_t max_len = 128) {
    return build_index(model.candidate_params, catalog, vocab, max_len);
}

namespace detail {

inline double validation_ap1(const BiEncoderModel& model, const std::vector<MentionRecord>& valid,
                             const UnifiedCatalog& catalog, const Vocab& vocab,
                             const TrainConfig& tcfg) {
    EntityIndex index = build_index(model.candidate_params, catalog, vocab, tcfg.max_len);
    EvalReport rep = evaluate_linking(model.context_params, index, valid, catalog, vocab,
                                      tcfg.top_k, tcfg.max_len);
    return rep.ap_at_1;
}

} // namespace detail

// Stage 1: epochs of in-batch contrastive training over the mention stream
// (specific train split, plus the general train split when augmentation is on,
// as one shuffled pool). Stage 2 (overlap variants): epochs of alignment-loss
// training over the overlap pairs, updating the candidate encoder only.
// Validation AP@1 is measured after every epoch and the best checkpoint is
// returned; stage 2 continues from the best stage-1 checkpoint.
inline std::pair<BiEncoderModel, TrainHistory>
train_variant(const BiEncoderModel& init, const DatasetSplit& specific_split,
              const DatasetSplit* general_split, const std::vector<OverlapPair>* overlap_pairs,
              const VariantConfig& variant, const TrainConfig& tcfg, const UnifiedCatalog& catalog,
              const Vocab& vocab) {
    variant.validate();
    tcfg.validate();
    if (variant.augmentation && (general_split == nullptr || general_split->train.empty()))
        throw ConfigError("train: augmentation variant requires a general-domain train split");
    if (variant.overlap_stage && (overlap_pairs == nullptr || overlap_pairs->empty()))
        throw ConfigError("train: overlap variant requires a non-empty overlap pair list");
    if (specific_split.train.empty()) throw DataError("train: empty specific train split");
    if (specific_split.valid.empty()) throw DataError("train: empty validation split");

    Rng rng(tcfg.seed);
    BiEncoderModel model = init;
    TrainHistory history;
    history.initial_validation_ap1 =
        detail::validation_ap1(model, specific_split.valid, catalog, vocab, tcfg);

    BiEncoderModel best = model;
    double best_ap1 = -1.0;
    std::size_t best_epoch = 0;
    std::size_t epoch_counter = 0;
    auto consider = [&](const BiEncoderModel& m, double ap1) {
        if (ap1 > best_ap1) {
            best_ap1 = ap1;
            best = m;
            best_epoch = epoch_counter;
        }
        ++epoch_counter;
    };

    std::vector<const MentionRecord*> pool;
    for (const auto& m : specific_split.train) pool.push_back(&m);
    if (variant.augmentation)
        for (const auto& m : general_split->train) pool.push_back(&m);

    for (std::size_t epoch = 0; epoch < tcfg.epochs; ++epoch) {
        rng.shuffle(pool);
        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start + 2 <= pool.size(); start += tcfg.batch_size) {
            std::size_t b = std::min(tcfg.batch_size, pool.size() - start);
            if (b < 2) break;
            std::vector<Vec> ctx_vecs(b), cand_vecs(b);
            std::vector<TokenSeq> ctx_seqs(b), cand_seqs(b);
            for (std::size_t i = 0; i < b; ++i) {
                const MentionRecord& m = *pool[start + i];
                std::size_t gold = catalog.ordinal(m.gold_kb_id, m.gold_entity_id);
                ctx_seqs[i] = encode_context(m, vocab, tcfg.max_len);
                cand_seqs[i] = encode_candidate(catalog.entities[gold], vocab, tcfg.max_len);
                ctx_vecs[i] = encode(model.context_params, ctx_seqs[i]);
                cand_vecs[i] = encode(model.candidate_params, cand_seqs[i]);
            }
            ContrastiveResult res =
                inbatch_contrastive_loss(ctx_vecs, cand_vecs, tcfg.literal_negatives);
            loss_sum += res.loss;
            ++n_batches;
            EncoderGrad ctx_grad = EncoderGrad::zeros_like(model.context_params);
            EncoderGrad cand_grad = EncoderGrad::zeros_like(model.candidate_params);
            for (std::size_t i = 0; i < b; ++i) {
                if (variant.train_context)
                    ctx_grad.add_scaled(
                        encode_backward(model.context_params, ctx_seqs[i], res.d_context[i]), 1.0);
                cand_grad.add_scaled(
                    encode_backward(model.candidate_params, cand_seqs[i], res.d_candidate[i]), 1.0);
            }
            if (variant.train_context) sgd_step(model.context_params, ctx_grad, tcfg.learning_rate);
            sgd_step(model.candidate_params, cand_grad, tcfg.learning_rate);
        }
        TrainHistory::EpochEntry entry;
        entry.train_loss = n_batches ? loss_sum / static_cast<double>(n_batches) : 0.0;
        entry.validation_ap1 =
            detail::validation_ap1(model, specific_split.valid, catalog, vocab, tcfg);
        history.stage1.push_back(entry);
        consider(model, entry.validation_ap1);
    }

    if (variant.overlap_stage) {
        model = best; // alignment fine-tunes the selected stage-1 checkpoint
        IntrinsicReport pre =
            intrinsic_eval(model.candidate_params, *overlap_pairs, catalog, vocab, tcfg.max_len);
        history.overlap_pre_acs = pre.acs;
        history.overlap_pre_mrr = pre.mrr;

        std::vector<const OverlapPair*> pairs;
        for (const auto& p : *overlap_pairs) pairs.push_back(&p);
        for (std::size_t epoch = 0; epoch < tcfg.epochs; ++epoch) {
            rng.shuffle(pairs);
            double loss_sum = 0.0;
            std::size_t n_batches = 0;
            for (std::size_t start = 0; start + 2 <= pairs.size(); start += tcfg.batch_size) {
                std::size_t b = std::min(tcfg.batch_size, pairs.size() - start);
                if (b < 2) break;
                std::vector<Vec> o1_vecs(b), o2_vecs(b);
                std::vector<TokenSeq> o1_seqs(b), o2_seqs(b);
                for (std::size_t i = 0; i < b; ++i) {
                    const OverlapPair& p = *pairs[start + i];
                    o1_seqs[i] = encode_candidate(catalog.entities.at(p.general_ordinal), vocab,
                                                  tcfg.max_len);
                    o2_seqs[i] = encode_candidate(catalog.entities.at(p.specific_ordinal), vocab,
                                                  tcfg.max_len);
                    o1_vecs[i] = encode(model.candidate_params, o1_seqs[i]);
                    o2_vecs[i] = encode(model.candidate_params, o2_seqs[i]);
                }
                AlignmentResult res =
                    overlap_alignment_loss(o1_vecs, o2_vecs, variant.lambda_mse);
                loss_sum += res.loss;
                ++n_batches;
                EncoderGrad grad = EncoderGrad::zeros_like(model.candidate_params);
                for (std::size_t i = 0; i < b; ++i) {
                    grad.add_scaled(
                        encode_backward(model.candidate_params, o1_seqs[i], res.d_o1[i]), 1.0);
                    grad.add_scaled(
                        encode_backward(model.candidate_params, o2_seqs[i], res.d_o2[i]), 1.0);
                }
                sgd_step(model.candidate_params, grad, tcfg.learning_rate);
            }
            TrainHistory::EpochEntry entry;
            entry.train_loss = n_batches ? loss_sum / static_cast<double>(n_batches) : 0.0;
            entry.validation_ap1 =
                detail::validation_ap1(model, specific_split.valid, catalog, vocab, tcfg);
            history.stage2.push_back(entry);
            consider(model, entry.validation_ap1);
        }
        IntrinsicReport post =
            intrinsic_eval(model.candidate_params, *overlap_pairs, catalog, vocab, tcfg.max_len);
        history.overlap_post_acs = post.acs;
        history.overlap_post_mrr = post.mrr;
    }

    history.best_epoch = best_epoch;
    history.best_validation_ap1 = best_ap1;
    return {best, history};
}

} // namespace kblink
