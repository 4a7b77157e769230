#pragma once
// Deterministic synthetic two-KB world with planted overlapping entities.
// Stands in for the real corpora so every downstream module has ground truth.

#include <cstdint>
#include <string>
#include <vector>

#include "kblink/corpus.hpp"
#include "kblink/error.hpp"
#include "kblink/rng.hpp"

namespace kblink {

struct SyntheticWorldConfig {
    std::uint64_t seed = 7;
    std::size_t n_general = 200;
    std::size_t n_specific = 100;
    std::size_t n_overlap = 10;
    std::size_t n_train = 500;
    std::size_t n_valid = 100;
    std::size_t n_test = 200;
    std::size_t vocab_pool = 400;
    double distractor_similarity = 0.1;

    void validate() const {
        if (n_general == 0 || n_specific == 0) throw ConfigError("synth: entity counts must be positive");
        if (n_train == 0 || n_valid == 0 || n_test == 0)
            throw ConfigError("synth: mention split counts must be positive");
        if (vocab_pool == 0) throw ConfigError("synth: vocab_pool must be positive");
        if (n_overlap > n_general || n_overlap > n_specific)
            throw ConfigError("synth: n_overlap exceeds a KB size");
        if (distractor_similarity < 0.0 || distractor_similarity > 1.0)
            throw ConfigError("synth: distractor_similarity outside [0,1]");
    }
};

struct SyntheticWorld {
    std::vector<EntityRecord> general_entities;  // kb_id "general"
    std::vector<EntityRecord> specific_entities; // kb_id "specific"
    DatasetSplit specific_mentions;
    DatasetSplit general_mentions;
    std::vector<OverlapPair> overlap_truth; // ordinals in the general-then-specific catalog
};

namespace detail {

// Distinct pronounceable word per index: three syllables from a fixed table.
inline std::string synth_word(std::size_t idx) {
    static const char* syl[40] = {"ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du",
                                  "ka", "ke", "ki", "ko", "ku", "la", "le", "li", "lo", "lu",
                                  "ma", "me", "mi", "mo", "mu", "na", "ne", "ni", "no", "nu",
                                  "ra", "re", "ri", "ro", "ru", "ta", "te", "ti", "to", "tu"};
    std::string w;
    w += syl[idx % 40];
    idx /= 40;
    w += syl[idx % 40];
    idx /= 40;
    w += syl[idx % 40];
    return w;
}

inline std::string join_words(const std::vector<std::size_t>& idxs) {
    std::string s;
    for (std::size_t i = 0; i < idxs.size(); ++i) {
        if (i) s += ' ';
        s += synth_word(idxs[i]);
    }
    return s;
}

inline std::string pad4(std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04zu", n);
    return buf;
}

} // namespace detail

// Word-index layout: [0, vocab_pool) is the shared pool, then two title words
// per entity, then four signature words per entity, keyed by catalog ordinal.
// Planted pair i: specific entity i copies general entity i's title exactly and
// the first 10 of its 12 description words; the last two are the specific
// entity's own signature words, so twin descriptions are close but not equal.
inline SyntheticWorld generate_synthetic_world(const SyntheticWorldConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const std::size_t total = cfg.n_general + cfg.n_specific;
    const std::size_t title_base = cfg.vocab_pool;
    const std::size_t sig_base = cfg.vocab_pool + 2 * total;
    const std::size_t desc_len = 12;

    auto title_words = [&](std::size_t ordinal) {
        return std::vector<std::size_t>{title_base + 2 * ordinal, title_base + 2 * ordinal + 1};
    };
    auto own_word = [&](std::size_t ordinal, std::size_t slot) {
        // Cycle title then signature words.
        std::size_t which = slot % 6;
        if (which < 2) return title_base + 2 * ordinal + which;
        return sig_base + 4 * ordinal + (which - 2);
    };
    auto make_description = [&](std::size_t ordinal) {
        std::vector<std::size_t> words;
        words.reserve(desc_len);
        for (std::size_t t = 0; t < desc_len; ++t) {
            if (rng.bernoulli(cfg.distractor_similarity))
                words.push_back(rng.uniform_index(cfg.vocab_pool));
            else
                words.push_back(own_word(ordinal, t));
        }
        return words;
    };

    SyntheticWorld world;
    std::vector<std::vector<std::size_t>> desc_words(total);

    for (std::size_t i = 0; i < cfg.n_general; ++i) {
        EntityRecord e;
        e.kb_id = "general";
        e.entity_id = "g" + detail::pad4(i);
        e.title = detail::join_words(title_words(i));
        desc_words[i] = make_description(i);
        e.description = detail::join_words(desc_words[i]);
        world.general_entities.push_back(std::move(e));
    }
    for (std::size_t j = 0; j < cfg.n_specific; ++j) {
        std::size_t ordinal = cfg.n_general + j;
        EntityRecord e;
        e.kb_id = "specific";
        e.entity_id = "s" + detail::pad4(j);
        if (j < cfg.n_overlap) {
            e.title = world.general_entities[j].title;
            std::vector<std::size_t> words(desc_words[j].begin(), desc_words[j].begin() + 10);
            words.push_back(sig_base + 4 * ordinal);
            words.push_back(sig_base + 4 * ordinal + 1);
            desc_words[ordinal] = words;
        } else {
            e.title = detail::join_words(title_words(ordinal));
            desc_words[ordinal] = make_description(ordinal);
        }
        e.description = detail::join_words(desc_words[ordinal]);
        world.specific_entities.push_back(std::move(e));
    }

    auto make_mentions = [&](const std::string& kb_id, std::size_t first_ordinal,
                             std::size_t n_entities, const std::string& prefix, std::size_t count,
                             const std::vector<EntityRecord>& entities) {
        std::vector<MentionRecord> out;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            std::size_t pick = rng.uniform_index(n_entities);
            const EntityRecord& gold = entities[pick];
            const std::vector<std::size_t>& dw = desc_words[first_ordinal + pick];
            std::vector<std::size_t> left, right;
            for (std::size_t t = 0; t < 3; ++t) left.push_back(dw[rng.uniform_index(dw.size())]);
            for (std::size_t t = 0; t < 3; ++t) right.push_back(dw[rng.uniform_index(dw.size())]);
            MentionRecord m;
            m.mention_id = prefix + detail::pad4(i);
            m.context_left = detail::join_words(left);
            m.surface = gold.title;
            m.context_right = detail::join_words(right);
            m.gold_kb_id = kb_id;
            m.gold_entity_id = gold.entity_id;
            out.push_back(std::move(m));
        }
        return out;
    };

    world.specific_mentions.train =
        make_mentions("specific", cfg.n_general, cfg.n_specific, "sm-train-", cfg.n_train,
                      world.specific_entities);
    world.specific_mentions.valid =
        make_mentions("specific", cfg.n_general, cfg.n_specific, "sm-valid-", cfg.n_valid,
                      world.specific_entities);
    world.specific_mentions.test =
        make_mentions("specific", cfg.n_general, cfg.n_specific, "sm-test-", cfg.n_test,
                      world.specific_entities);
    world.general_mentions.train =
        make_mentions("general", 0, cfg.n_general, "gm-train-", cfg.n_train,
                      world.general_entities);
    world.general_mentions.valid =
        make_mentions("general", 0, cfg.n_general, "gm-valid-", cfg.n_valid,
                      world.general_entities);
    world.general_mentions.test =
        make_mentions("general", 0, cfg.n_general, "gm-test-", cfg.n_test, world.general_entities);

    for (std::size_t i = 0; i < cfg.n_overlap; ++i) {
        OverlapPair p;
        p.general_ordinal = i;
        p.specific_ordinal = cfg.n_general + i;
        world.overlap_truth.push_back(p);
    }
    return world;
}

} // namespace kblink
