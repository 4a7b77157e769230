#pragma once
// Flat key=value run configuration shared by every CLI subcommand, plus the
// standard artifact filenames inside the output directory.

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "kblink/error.hpp"

namespace kblink {

struct RunConfig {
    // io
    std::string out_dir = "out";
    std::string entities_general;  // defaults to <out_dir>/entities_general.jsonl
    std::string entities_specific; // defaults to <out_dir>/entities_specific.jsonl
    std::string overlap_truth;     // defaults to <out_dir>/overlap_truth.tsv
    std::string vocab_file;        // defaults to <out_dir>/vocab.jsonl
    // model
    std::size_t vocab_size = 5000;
    std::size_t d = 64;
    std::size_t max_len = 128;
    // training
    std::size_t batch_size = 16;
    double learning_rate = 3e-5;
    std::size_t epochs = 5;
    std::uint64_t seed = 7;
    std::size_t top_k = 10;
    std::string variant = "C";
    double lambda_mse = 0.0;
    bool literal_negatives = false;
    bool train_cross = false;
    // evaluation
    std::string stage = "bi-encoder"; // or "cross-encoder"
    std::string eval_split = "test";  // train | valid | test
    // overlap extraction / intrinsic
    double threshold = 0.5;
    std::size_t sample_n = 1000;
    // significance testing
    std::size_t rounds = 10000;
    double alpha = 0.05;
    std::string sig_a; // eval report JSON paths
    std::string sig_b;
    std::string sig_metric = "ap10"; // ap10 | rel1
    // synthetic world
    std::uint64_t synth_seed = 7;
    std::size_t n_general = 200;
    std::size_t n_specific = 100;
    std::size_t n_overlap = 10;
    std::size_t n_train = 500;
    std::size_t n_valid = 100;
    std::size_t n_test = 200;
    std::size_t vocab_pool = 400;
    double distractor_similarity = 0.1;
    // reporting
    bool timestamp = false; // off by default so reruns are byte-identical

    std::string path_in_out(const std::string& name) const { return out_dir + "/" + name; }
    std::string entities_general_path() const {
        return entities_general.empty() ? path_in_out("entities_general.jsonl") : entities_general;
    }
    std::string entities_specific_path() const {
        return entities_specific.empty() ? path_in_out("entities_specific.jsonl")
                                         : entities_specific;
    }
    std::string mentions_path(const std::string& domain, const std::string& split) const {
        return path_in_out("mentions_" + domain + "_" + split + ".jsonl");
    }
    std::string overlap_truth_path() const {
        return overlap_truth.empty() ? path_in_out("overlap_truth.tsv") : overlap_truth;
    }
    std::string vocab_path() const {
        return vocab_file.empty() ? path_in_out("vocab.jsonl") : vocab_file;
    }
    std::string checkpoint_path() const { return path_in_out("checkpoint_" + variant + ".bin"); }
    std::string cross_encoder_path() const { return path_in_out("cross_" + variant + ".bin"); }
    std::string history_path() const { return path_in_out("history_" + variant + ".json"); }
    std::string index_path() const { return path_in_out("index_" + variant + ".bin"); }
    std::string eval_report_path() const { return path_in_out("eval_" + variant + ".json"); }
    std::string intrinsic_report_path() const {
        return path_in_out("intrinsic_" + variant + ".json");
    }
    std::string overlap_pairs_path() const { return path_in_out("overlap_pairs.tsv"); }
    std::string overlap_stats_path() const { return path_in_out("overlap_stats.json"); }
    std::string sigtest_path() const { return path_in_out("sigtest.json"); }
    std::string link_report_path() const { return path_in_out("link_report.json"); }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: key \"" + key + "\" expects a boolean, got \"" + v + "\"");
}

inline std::uint64_t parse_u64(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        std::uint64_t x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: key \"" + key + "\" expects an unsigned integer, got \"" + v +
                          "\"");
    }
}

inline double parse_f64(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: key \"" + key + "\" expects a number, got \"" + v + "\"");
    }
}

} // namespace detail

// Every settable key, in the order reports echo them.
inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "out_dir",      "entities_general", "entities_specific", "overlap_truth",
        "vocab_file",   "vocab_size",       "d",                 "max_len",
        "batch_size",   "learning_rate",    "epochs",            "seed",
        "top_k",        "variant",          "lambda_mse",        "literal_negatives",
        "train_cross",  "stage",            "eval_split",        "threshold",
        "sample_n",     "rounds",           "alpha",             "sig_a",
        "sig_b",        "sig_metric",       "synth_seed",        "n_general",
        "n_specific",   "n_overlap",        "n_train",           "n_valid",
        "n_test",       "vocab_pool",       "distractor_similarity", "timestamp",
    };
    return keys;
}

inline void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    using namespace detail;
    if (key == "out_dir") cfg.out_dir = value;
    else if (key == "entities_general") cfg.entities_general = value;
    else if (key == "entities_specific") cfg.entities_specific = value;
    else if (key == "overlap_truth") cfg.overlap_truth = value;
    else if (key == "vocab_file") cfg.vocab_file = value;
    else if (key == "vocab_size") cfg.vocab_size = parse_u64(value, key);
    else if (key == "d") cfg.d = parse_u64(value, key);
    else if (key == "max_len") cfg.max_len = parse_u64(value, key);
    else if (key == "batch_size") cfg.batch_size = parse_u64(value, key);
    else if (key == "learning_rate") cfg.learning_rate = parse_f64(value, key);
    else if (key == "epochs") cfg.epochs = parse_u64(value, key);
    else if (key == "seed") cfg.seed = parse_u64(value, key);
    else if (key == "top_k") cfg.top_k = parse_u64(value, key);
    else if (key == "variant") cfg.variant = value;
    else if (key == "lambda_mse") cfg.lambda_mse = parse_f64(value, key);
    else if (key == "literal_negatives") cfg.literal_negatives = parse_bool(value, key);
    else if (key == "train_cross") cfg.train_cross = parse_bool(value, key);
    else if (key == "stage") cfg.stage = value;
    else if (key == "eval_split") cfg.eval_split = value;
    else if (key == "threshold") cfg.threshold = parse_f64(value, key);
    else if (key == "sample_n") cfg.sample_n = parse_u64(value, key);
    else if (key == "rounds") cfg.rounds = parse_u64(value, key);
    else if (key == "alpha") cfg.alpha = parse_f64(value, key);
    else if (key == "sig_a") cfg.sig_a = value;
    else if (key == "sig_b") cfg.sig_b = value;
    else if (key == "sig_metric") cfg.sig_metric = value;
    else if (key == "synth_seed") cfg.synth_seed = parse_u64(value, key);
    else if (key == "n_general") cfg.n_general = parse_u64(value, key);
    else if (key == "n_specific") cfg.n_specific = parse_u64(value, key);
    else if (key == "n_overlap") cfg.n_overlap = parse_u64(value, key);
    else if (key == "n_train") cfg.n_train = parse_u64(value, key);
    else if (key == "n_valid") cfg.n_valid = parse_u64(value, key);
    else if (key == "n_test") cfg.n_test = parse_u64(value, key);
    else if (key == "vocab_pool") cfg.vocab_pool = parse_u64(value, key);
    else if (key == "distractor_similarity") cfg.distractor_similarity = parse_f64(value, key);
    else if (key == "timestamp") cfg.timestamp = parse_bool(value, key);
    else throw ConfigError("config: unknown key \"" + key + "\"");
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        std::string key = detail::trim(t.substr(0, eq));
        std::string value = detail::trim(t.substr(eq + 1));
        apply_config_value(cfg, key, value);
    }
}

// Effective-config echo embedded in every report document.
inline nlohmann::json config_echo(const RunConfig& c) {
    nlohmann::json j;
    j["out_dir"] = c.out_dir;
    j["entities_general"] = c.entities_general_path();
    j["entities_specific"] = c.entities_specific_path();
    j["overlap_truth"] = c.overlap_truth_path();
    j["vocab_file"] = c.vocab_path();
    j["vocab_size"] = c.vocab_size;
    j["d"] = c.d;
    j["max_len"] = c.max_len;
    j["batch_size"] = c.batch_size;
    j["learning_rate"] = c.learning_rate;
    j["epochs"] = c.epochs;
    j["seed"] = c.seed;
    j["top_k"] = c.top_k;
    j["variant"] = c.variant;
    j["lambda_mse"] = c.lambda_mse;
    j["literal_negatives"] = c.literal_negatives;
    j["train_cross"] = c.train_cross;
    j["stage"] = c.stage;
    j["eval_split"] = c.eval_split;
    j["threshold"] = c.threshold;
    j["sample_n"] = c.sample_n;
    j["rounds"] = c.rounds;
    j["alpha"] = c.alpha;
    j["sig_metric"] = c.sig_metric;
    j["synth_seed"] = c.synth_seed;
    j["n_general"] = c.n_general;
    j["n_specific"] = c.n_specific;
    j["n_overlap"] = c.n_overlap;
    j["n_train"] = c.n_train;
    j["n_valid"] = c.n_valid;
    j["n_test"] = c.n_test;
    j["vocab_pool"] = c.vocab_pool;
    j["distractor_similarity"] = c.distractor_similarity;
    return j;
}

} // namespace kblink
