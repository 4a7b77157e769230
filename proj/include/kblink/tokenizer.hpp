#pragma once
// Word-level tokenizer with reserved special tokens and the three fixed-length
// input layouts (context, candidate, cross-encoder pair).

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "kblink/corpus.hpp"
#include "kblink/error.hpp"

namespace kblink {

enum SpecialToken : int {
    PAD = 0,
    UNK = 1,
    CLS = 2,
    SEP = 3,
    MSTART = 4,
    MEND = 5,
    ENT = 6,
};

inline constexpr int kNumReserved = 7;
inline constexpr const char* kReservedNames[kNumReserved] = {
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MSTART]", "[MEND]", "[ENT]"};

struct Vocab {
    std::map<std::string, int> token_to_id;
    std::vector<std::string> id_to_token;

    std::size_t size() const { return id_to_token.size(); }

    int id_of(const std::string& token) const {
        auto it = token_to_id.find(token);
        return it == token_to_id.end() ? UNK : it->second;
    }
};

struct TokenSeq {
    std::vector<int> ids;
    std::size_t max_len = 128;
};

// Lowercased alphanumeric runs; anything else separates. Bytes >= 0x80 are
// kept as token characters so UTF-8 words survive untouched.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        bool word_char = std::isalnum(c) || c >= 0x80;
        if (word_char) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline Vocab make_reserved_vocab() {
    Vocab v;
    for (int i = 0; i < kNumReserved; ++i) {
        v.token_to_id[kReservedNames[i]] = i;
        v.id_to_token.push_back(kReservedNames[i]);
    }
    return v;
}

inline Vocab build_vocab(const std::vector<std::string>& texts, std::size_t max_size) {
    if (max_size <= static_cast<std::size_t>(kNumReserved))
        throw ConfigError("build_vocab: max_size must exceed the reserved token count");
    std::map<std::string, std::size_t> freq;
    for (const auto& t : texts)
        for (const auto& tok : tokenize(t)) ++freq[tok];
    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocab v = make_reserved_vocab();
    std::size_t keep = std::min(ranked.size(), max_size - kNumReserved);
    for (std::size_t i = 0; i < keep; ++i) {
        v.token_to_id[ranked[i].first] = static_cast<int>(v.id_to_token.size());
        v.id_to_token.push_back(ranked[i].first);
    }
    return v;
}

namespace detail {

inline std::vector<int> to_ids(const std::vector<std::string>& tokens, const Vocab& vocab) {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(vocab.id_of(t));
    return ids;
}

// CLS, left, MSTART, surface, MEND, right, SEP within `budget` tokens.
// Context trimmed symmetrically keeping tokens nearest the mention (odd spare
// token goes left); the surface is cut (from the right) only when it alone
// overflows the budget.
inline std::vector<int> context_ids(const MentionRecord& m, const Vocab& vocab,
                                    std::size_t budget) {
    std::vector<int> left = to_ids(tokenize(m.context_left), vocab);
    std::vector<int> surf = to_ids(tokenize(m.surface), vocab);
    std::vector<int> right = to_ids(tokenize(m.context_right), vocab);

    std::size_t body = budget - 4; // CLS, MSTART, MEND, SEP
    std::size_t s_keep = std::min(surf.size(), body);
    std::size_t rem = body - s_keep;
    std::size_t l_keep = std::min(left.size(), (rem + 1) / 2);
    std::size_t r_keep = std::min(right.size(), rem / 2);
    l_keep = std::min(left.size(), l_keep + (rem - l_keep - r_keep));
    r_keep = std::min(right.size(), r_keep + (rem - l_keep - r_keep));

    std::vector<int> ids;
    ids.reserve(4 + l_keep + s_keep + r_keep);
    ids.push_back(CLS);
    ids.insert(ids.end(), left.end() - static_cast<std::ptrdiff_t>(l_keep), left.end());
    ids.push_back(MSTART);
    ids.insert(ids.end(), surf.begin(), surf.begin() + static_cast<std::ptrdiff_t>(s_keep));
    ids.push_back(MEND);
    ids.insert(ids.end(), right.begin(), right.begin() + static_cast<std::ptrdiff_t>(r_keep));
    ids.push_back(SEP);
    return ids;
}

// Title, ENT, description, SEP (no leading CLS) within `budget` tokens.
// Description loses tokens from the right before the title does.
inline std::vector<int> candidate_tail_ids(const EntityRecord& e, const Vocab& vocab,
                                           std::size_t budget) {
    std::vector<int> title = to_ids(tokenize(e.title), vocab);
    std::vector<int> desc = to_ids(tokenize(e.description), vocab);
    std::size_t body = budget - 2; // ENT, SEP
    std::size_t t_keep = std::min(title.size(), body);
    std::size_t d_keep = std::min(desc.size(), body - t_keep);
    std::vector<int> ids;
    ids.reserve(2 + t_keep + d_keep);
    ids.insert(ids.end(), title.begin(), title.begin() + static_cast<std::ptrdiff_t>(t_keep));
    ids.push_back(ENT);
    ids.insert(ids.end(), desc.begin(), desc.begin() + static_cast<std::ptrdiff_t>(d_keep));
    ids.push_back(SEP);
    return ids;
}

} // namespace detail

inline TokenSeq encode_context(const MentionRecord& m, const Vocab& vocab,
                               std::size_t max_len = 128) {
    if (max_len < 8) throw ConfigError("encode_context: max_len must be at least 8");
    TokenSeq seq;
    seq.max_len = max_len;
    seq.ids = detail::context_ids(m, vocab, max_len);
    return seq;
}

inline TokenSeq encode_candidate(const EntityRecord& e, const Vocab& vocab,
                                 std::size_t max_len = 128) {
    if (max_len < 4) throw ConfigError("encode_candidate: max_len must be at least 4");
    TokenSeq seq;
    seq.max_len = max_len;
    seq.ids.push_back(CLS);
    std::vector<int> tail = detail::candidate_tail_ids(e, vocab, max_len - 1);
    seq.ids.insert(seq.ids.end(), tail.begin(), tail.end());
    return seq;
}

// Mention half (context layout incl. its SEP) then candidate half without CLS.
// The mention half gets ceil(max_len/2) of the budget so the prefix for a fixed
// mention is identical across candidates.
inline TokenSeq encode_cross(const MentionRecord& m, const EntityRecord& e, const Vocab& vocab,
                             std::size_t max_len = 128) {
    if (max_len < 10) throw ConfigError("encode_cross: max_len must be at least 10");
    std::size_t m_budget = (max_len + 1) / 2;
    std::size_t e_budget = max_len - m_budget;
    TokenSeq seq;
    seq.max_len = max_len;
    seq.ids = detail::context_ids(m, vocab, m_budget);
    std::vector<int> tail = detail::candidate_tail_ids(e, vocab, e_budget);
    seq.ids.insert(seq.ids.end(), tail.begin(), tail.end());
    return seq;
}

inline void save_vocab(const std::string& path, const Vocab& vocab) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write vocab file: " + path);
    for (std::size_t i = 0; i < vocab.id_to_token.size(); ++i) {
        nlohmann::json j;
        j["token"] = vocab.id_to_token[i];
        j["id"] = i;
        out << j.dump() << "\n";
    }
}

inline Vocab load_vocab(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open vocab file: " + path);
    Vocab v;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = detail::parse_jsonl_line(line, path, line_no);
        if (!j.contains("token") || !j.contains("id"))
            throw DataError(path + ":" + std::to_string(line_no) + ": expected token/id fields");
        std::string token = j.at("token").get<std::string>();
        std::size_t id = j.at("id").get<std::size_t>();
        if (id != v.id_to_token.size())
            throw DataError(path + ":" + std::to_string(line_no) + ": ids must be dense from 0");
        v.token_to_id[token] = static_cast<int>(id);
        v.id_to_token.push_back(token);
    }
    for (int i = 0; i < kNumReserved; ++i)
        if (v.size() <= static_cast<std::size_t>(i) || v.id_to_token[i] != kReservedNames[i])
            throw DataError(path + ": reserved tokens missing or out of order");
    return v;
}

} // namespace kblink
