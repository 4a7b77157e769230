#pragma once
// Corpus layer: entity/mention records, JSONL loaders, the unified catalog.

#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kblink/error.hpp"

namespace kblink {

struct EntityRecord {
    std::string kb_id;
    std::string entity_id;
    std::string title;
    std::string description;
};

struct MentionRecord {
    std::string mention_id;
    std::string context_left;
    std::string surface; // named "mention" on disk
    std::string context_right;
    std::string gold_kb_id;
    std::string gold_entity_id;
};

struct DatasetSplit {
    std::vector<MentionRecord> train;
    std::vector<MentionRecord> valid;
    std::vector<MentionRecord> test;
};

struct OverlapPair {
    std::size_t general_ordinal = 0;
    std::size_t specific_ordinal = 0;
    std::optional<double> similarity;
};

// All entities of all KBs in one ordinal space; general KB entities first.
struct UnifiedCatalog {
    std::vector<EntityRecord> entities;
    std::map<std::pair<std::string, std::string>, std::size_t> ordinal_of;

    std::size_t size() const { return entities.size(); }

    std::size_t ordinal(const std::string& kb_id, const std::string& entity_id) const {
        auto it = ordinal_of.find({kb_id, entity_id});
        if (it == ordinal_of.end())
            throw DataError("catalog: unknown entity (" + kb_id + ", " + entity_id + ")");
        return it->second;
    }

    bool contains(const std::string& kb_id, const std::string& entity_id) const {
        return ordinal_of.count({kb_id, entity_id}) > 0;
    }
};

namespace detail {

inline nlohmann::json parse_jsonl_line(const std::string& line, const std::string& path,
                                       std::size_t line_no) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw DataError(path + ":" + std::to_string(line_no) + ": malformed JSON object");
    return j;
}

inline std::string require_string(const nlohmann::json& j, const char* key, const std::string& path,
                                  std::size_t line_no) {
    if (!j.contains(key) || !j.at(key).is_string())
        throw DataError(path + ":" + std::to_string(line_no) + ": missing or non-string field \"" +
                        key + "\"");
    return j.at(key).get<std::string>();
}

} // namespace detail

inline std::vector<EntityRecord> load_entities(const std::string& path, const std::string& kb_id) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open entities file: " + path);
    std::vector<EntityRecord> out;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = detail::parse_jsonl_line(line, path, line_no);
        EntityRecord e;
        e.kb_id = kb_id;
        e.entity_id = detail::require_string(j, "entity_id", path, line_no);
        e.title = detail::require_string(j, "title", path, line_no);
        e.description = detail::require_string(j, "description", path, line_no);
        if (e.entity_id.empty())
            throw DataError(path + ":" + std::to_string(line_no) + ": empty entity_id");
        if (!seen.insert(e.entity_id).second)
            throw DataError(path + ":" + std::to_string(line_no) + ": duplicate entity_id \"" +
                            e.entity_id + "\"");
        out.push_back(std::move(e));
    }
    return out;
}

inline std::vector<MentionRecord> load_mentions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open mentions file: " + path);
    std::vector<MentionRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = detail::parse_jsonl_line(line, path, line_no);
        MentionRecord m;
        m.mention_id = detail::require_string(j, "mention_id", path, line_no);
        m.context_left = detail::require_string(j, "context_left", path, line_no);
        m.surface = detail::require_string(j, "mention", path, line_no);
        m.context_right = detail::require_string(j, "context_right", path, line_no);
        m.gold_kb_id = detail::require_string(j, "gold_kb_id", path, line_no);
        m.gold_entity_id = detail::require_string(j, "gold_entity_id", path, line_no);
        if (m.surface.empty())
            throw DataError(path + ":" + std::to_string(line_no) + ": empty mention surface");
        out.push_back(std::move(m));
    }
    return out;
}

inline void save_entities(const std::string& path, const std::vector<EntityRecord>& entities) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write entities file: " + path);
    for (const auto& e : entities) {
        nlohmann::json j;
        j["entity_id"] = e.entity_id;
        j["title"] = e.title;
        j["description"] = e.description;
        out << j.dump() << "\n";
    }
}

inline void save_mentions(const std::string& path, const std::vector<MentionRecord>& mentions) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write mentions file: " + path);
    for (const auto& m : mentions) {
        nlohmann::json j;
        j["mention_id"] = m.mention_id;
        j["context_left"] = m.context_left;
        j["mention"] = m.surface;
        j["context_right"] = m.context_right;
        j["gold_kb_id"] = m.gold_kb_id;
        j["gold_entity_id"] = m.gold_entity_id;
        out << j.dump() << "\n";
    }
}

inline UnifiedCatalog
build_catalog(const std::vector<std::pair<std::string, std::vector<EntityRecord>>>& kbs) {
    UnifiedCatalog cat;
    for (const auto& [kb_id, entities] : kbs) {
        for (const auto& e : entities) {
            EntityRecord rec = e;
            rec.kb_id = kb_id;
            auto key = std::make_pair(rec.kb_id, rec.entity_id);
            if (cat.ordinal_of.count(key))
                throw DataError("build_catalog: duplicate entity (" + rec.kb_id + ", " +
                                rec.entity_id + ")");
            cat.ordinal_of[key] = cat.entities.size();
            cat.entities.push_back(std::move(rec));
        }
    }
    return cat;
}

// Ground-truth overlap file: one pair per line,
// general_kb_id <TAB> general_entity_id <TAB> specific_kb_id <TAB> specific_entity_id.
inline void save_overlap_truth(const std::string& path, const std::vector<OverlapPair>& pairs,
                               const UnifiedCatalog& catalog) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write overlap file: " + path);
    for (const auto& p : pairs) {
        const EntityRecord& g = catalog.entities.at(p.general_ordinal);
        const EntityRecord& s = catalog.entities.at(p.specific_ordinal);
        out << g.kb_id << "\t" << g.entity_id << "\t" << s.kb_id << "\t" << s.entity_id << "\n";
    }
}

inline std::vector<OverlapPair> load_overlap_truth(const std::string& path,
                                                   const UnifiedCatalog& catalog) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open overlap file: " + path);
    std::vector<OverlapPair> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string g_kb, g_id, s_kb, s_id;
        if (!std::getline(ss, g_kb, '\t') || !std::getline(ss, g_id, '\t') ||
            !std::getline(ss, s_kb, '\t') || !std::getline(ss, s_id))
            throw DataError(path + ":" + std::to_string(line_no) + ": expected 4 tab-separated fields");
        OverlapPair p;
        p.general_ordinal = catalog.ordinal(g_kb, g_id);
        p.specific_ordinal = catalog.ordinal(s_kb, s_id);
        out.push_back(p);
    }
    return out;
}

// Kept-pairs file: general_ordinal <TAB> specific_ordinal <TAB> similarity (6 decimals).
inline void save_overlap_pairs(const std::string& path, const std::vector<OverlapPair>& pairs) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write overlap pairs file: " + path);
    char buf[64];
    for (const auto& p : pairs) {
        std::snprintf(buf, sizeof(buf), "%.6f", p.similarity.value_or(0.0));
        out << p.general_ordinal << "\t" << p.specific_ordinal << "\t" << buf << "\n";
    }
}

inline std::vector<OverlapPair> load_overlap_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open overlap pairs file: " + path);
    std::vector<OverlapPair> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        OverlapPair p;
        double sim;
        if (!(ss >> p.general_ordinal >> p.specific_ordinal >> sim))
            throw DataError(path + ":" + std::to_string(line_no) + ": expected 3 fields");
        p.similarity = sim;
        out.push_back(p);
    }
    return out;
}

} // namespace kblink
