#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "kblink/index.hpp"
#include "kblink/synth.hpp"

using namespace kblink;

namespace {

EntityIndex random_index(Rng& rng, std::size_t n, std::size_t d) {
    EntityIndex idx;
    idx.vectors = Mat(n, d);
    idx.ordinals.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vec v(d);
        for (auto& x : v) x = rng.uniform(-1.0, 1.0);
        double norm = l2_norm(v);
        for (std::size_t j = 0; j < d; ++j) idx.vectors(i, j) = v[j] / norm;
        idx.ordinals[i] = i;
    }
    return idx;
}

// Independent full-sort reference.
Ranking brute_force(const EntityIndex& idx, const Vec& query, std::size_t k) {
    double qn = l2_norm(query);
    Ranking all;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < query.size(); ++j) s += idx.vectors(i, j) * query[j];
        all.push_back({idx.ordinals[i], s / qn});
    }
    std::stable_sort(all.begin(), all.end(), [](const ScoredOrdinal& a, const ScoredOrdinal& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.ordinal < b.ordinal;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

} // namespace

TEST_CASE("Index - build produces unit rows deterministically", "[index]") {
    SyntheticWorldConfig cfg;
    cfg.n_general = 5;
    cfg.n_specific = 3;
    cfg.n_overlap = 1;
    cfg.n_train = 4;
    cfg.n_valid = 2;
    cfg.n_test = 2;
    cfg.vocab_pool = 20;
    auto w = generate_synthetic_world(cfg);
    auto cat = build_catalog({{"general", w.general_entities}, {"specific", w.specific_entities}});
    std::vector<std::string> texts;
    for (const auto& e : cat.entities) texts.push_back(e.title + " " + e.description);
    auto vocab = build_vocab(texts, 300);
    auto params = init_params(vocab.size(), 8, 21);

    auto idx = build_index(params, cat, vocab, 32);
    REQUIRE(idx.size() == 8);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        double n = 0.0;
        for (std::size_t j = 0; j < 8; ++j) n += idx.vectors(i, j) * idx.vectors(i, j);
        CHECK(std::fabs(std::sqrt(n) - 1.0) < 1e-9);
    }
    auto idx2 = build_index(params, cat, vocab, 32);
    CHECK(idx.vectors.a == idx2.vectors.a);
    CHECK(idx.ordinals == idx2.ordinals);

    // Query equal to a row's pre-image lands on that row with score 1.
    Vec q = encode(params, encode_candidate(cat.entities[3], vocab, 32));
    auto r = search(idx, q, 1);
    REQUIRE(r.size() == 1);
    CHECK(r[0].ordinal == 3);
    CHECK(std::fabs(r[0].score - 1.0) < 1e-9);
}

TEST_CASE("Index - search equals brute force on random data", "[index][property]") {
    Rng rng(55);
    auto idx = random_index(rng, 200, 16);
    for (int trial = 0; trial < 25; ++trial) {
        Vec q(16);
        for (auto& x : q) x = rng.uniform(-1.0, 1.0);
        std::size_t k = 1 + rng.uniform_index(210);
        auto got = search(idx, q, k);
        auto want = brute_force(idx, q, k);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].ordinal == want[i].ordinal);
            CHECK(got[i].score == want[i].score);
        }
        // Non-increasing scores, all within [-1, 1].
        for (std::size_t i = 0; i + 1 < got.size(); ++i) CHECK(got[i].score >= got[i + 1].score);
        for (const auto& s : got) {
            CHECK(s.score <= 1.0 + 1e-12);
            CHECK(s.score >= -1.0 - 1e-12);
        }
        // Scale invariance of the query.
        Vec q3(16);
        for (std::size_t j = 0; j < 16; ++j) q3[j] = 3.0 * q[j];
        auto scaled = search(idx, q3, k);
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(scaled[i].ordinal == got[i].ordinal);
    }
}

TEST_CASE("Index - clamping, permutation, ties, and errors", "[index]") {
    Rng rng(56);
    auto idx = random_index(rng, 3, 4);
    Vec q{1.0, 0.0, 0.0, 0.0};
    CHECK(search(idx, q, 10).size() == 3);

    auto full = search(idx, q, 3);
    std::vector<std::size_t> ords;
    for (const auto& s : full) ords.push_back(s.ordinal);
    std::sort(ords.begin(), ords.end());
    CHECK(ords == std::vector<std::size_t>{0, 1, 2});

    // Duplicate rows tie; ascending ordinal breaks it.
    EntityIndex dup;
    dup.vectors = Mat(3, 2);
    dup.vectors(0, 0) = 1.0;
    dup.vectors(1, 0) = 1.0;
    dup.vectors(2, 1) = 1.0;
    dup.ordinals = {0, 1, 2};
    auto tied = search(dup, Vec{1.0, 0.0}, 3);
    CHECK(tied[0].ordinal == 0);
    CHECK(tied[1].ordinal == 1);
    CHECK(tied[2].ordinal == 2);

    EntityIndex empty;
    CHECK_THROWS_AS(search(empty, q, 1), DataError);
    CHECK_THROWS_AS(search(idx, Vec(4, 0.0), 1), NumericError);
    CHECK_THROWS_AS(search(idx, q, 0), ConfigError);
    CHECK_THROWS_AS(search(idx, Vec{1.0}, 1), DataError);
}
