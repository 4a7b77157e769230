#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "kblink/crossencoder.hpp"
#include "kblink/synth.hpp"

using namespace kblink;

namespace {

struct CrossWorld {
    UnifiedCatalog catalog;
    Vocab vocab;
    MentionRecord mention;
};

CrossWorld cross_world() {
    SyntheticWorldConfig cfg;
    cfg.n_general = 8;
    cfg.n_specific = 6;
    cfg.n_overlap = 2;
    cfg.n_train = 6;
    cfg.n_valid = 2;
    cfg.n_test = 2;
    cfg.vocab_pool = 25;
    auto w = generate_synthetic_world(cfg);
    CrossWorld cw;
    cw.catalog =
        build_catalog({{"general", w.general_entities}, {"specific", w.specific_entities}});
    std::vector<std::string> texts;
    for (const auto& e : cw.catalog.entities) texts.push_back(e.title + " " + e.description);
    cw.vocab = build_vocab(texts, 300);
    cw.mention = w.specific_mentions.train[0];
    return cw;
}

} // namespace

TEST_CASE("CrossEncoder - score is the dot with the classification weights", "[crossencoder]") {
    CrossWorld cw = cross_world();
    auto model = init_cross_encoder(cw.vocab.size(), 8, 77);
    TokenSeq seq = encode_cross(cw.mention, cw.catalog.entities[0], cw.vocab, 32);

    model.w.assign(8, 0.0);
    CHECK(score_pair(model, seq) == 0.0);

    Vec v = encode(model.encoder_params, seq);
    model.w = v;
    CHECK(score_pair(model, seq) == Catch::Approx(dot(v, v)).margin(1e-12));
    CHECK(score_pair(model, seq) > 0.0);

    // Independent recomputation.
    auto model2 = init_cross_encoder(cw.vocab.size(), 8, 78);
    double got = score_pair(model2, seq);
    double want = 0.0;
    Vec enc = encode(model2.encoder_params, seq);
    for (std::size_t i = 0; i < enc.size(); ++i) want += enc[i] * model2.w[i];
    CHECK(got == Catch::Approx(want).margin(1e-12));

    model.w.assign(4, 0.0);
    CHECK_THROWS_AS(score_pair(model, seq), DataError);
}

TEST_CASE("CrossEncoder - rank loss closed forms and gradient", "[crossencoder]") {
    Vec uniform(10, 0.7);
    auto r = rank_loss(uniform, 3);
    CHECK(r.loss == Catch::Approx(std::log(10.0)).margin(1e-9));

    Vec dominant(5, 0.0);
    dominant[2] = 20.0;
    CHECK(rank_loss(dominant, 2).loss < 1e-7);

    // Shift invariance.
    Rng rng(61);
    Vec logits(5);
    for (auto& x : logits) x = rng.uniform(-2.0, 2.0);
    auto base = rank_loss(logits, 1);
    Vec shifted = logits;
    for (auto& x : shifted) x += 3.5;
    CHECK(rank_loss(shifted, 1).loss == Catch::Approx(base.loss).margin(1e-9));

    // Central differences on the logits.
    for (std::size_t j = 0; j < logits.size(); ++j) {
        double eps = 1e-6;
        Vec up = logits, down = logits;
        up[j] += eps;
        down[j] -= eps;
        double num = (rank_loss(up, 1).loss - rank_loss(down, 1).loss) / (2.0 * eps);
        CHECK(base.d_logits[j] == Catch::Approx(num).margin(1e-6));
    }

    CHECK_THROWS_AS(rank_loss(logits, 5), NumericError);
    CHECK_THROWS_AS(rank_loss(Vec{1.0}, 0), NumericError);
}

TEST_CASE("CrossEncoder - rerank is a score-sorted permutation", "[crossencoder]") {
    CrossWorld cw = cross_world();
    auto model = init_cross_encoder(cw.vocab.size(), 8, 80);

    auto single = rerank(model, cw.mention, {4}, cw.catalog, cw.vocab, 32);
    REQUIRE(single.size() == 1);
    CHECK(single[0].ordinal == 4);

    std::vector<std::size_t> cands = {9, 1, 7, 3, 11, 0, 5, 2, 13, 8};
    auto ranked = rerank(model, cw.mention, cands, cw.catalog, cw.vocab, 32);
    REQUIRE(ranked.size() == cands.size());
    std::vector<std::size_t> seen;
    for (const auto& s : ranked) seen.push_back(s.ordinal);
    std::sort(seen.begin(), seen.end());
    std::vector<std::size_t> expect = cands;
    std::sort(expect.begin(), expect.end());
    CHECK(seen == expect);

    // Brute-force sort of score_pair outputs agrees.
    std::vector<ScoredOrdinal> brute;
    for (std::size_t ord : cands) {
        TokenSeq seq = encode_cross(cw.mention, cw.catalog.entities[ord], cw.vocab, 32);
        brute.push_back({ord, score_pair(model, seq)});
    }
    std::sort(brute.begin(), brute.end(), [](const ScoredOrdinal& a, const ScoredOrdinal& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.ordinal < b.ordinal;
    });
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        CHECK(ranked[i].ordinal == brute[i].ordinal);
        CHECK(ranked[i].score == brute[i].score);
    }

    // Zero weights: every score ties at 0, ordinals ascend.
    model.w.assign(8, 0.0);
    auto tied = rerank(model, cw.mention, {7, 2, 9}, cw.catalog, cw.vocab, 32);
    CHECK(tied[0].ordinal == 2);
    CHECK(tied[1].ordinal == 7);
    CHECK(tied[2].ordinal == 9);

    CHECK_THROWS_AS(rerank(model, cw.mention, {}, cw.catalog, cw.vocab, 32), DataError);
    CHECK_THROWS_AS(rerank(model, cw.mention, {99}, cw.catalog, cw.vocab, 32), DataError);
}
