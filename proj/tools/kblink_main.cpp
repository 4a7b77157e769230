// kblink: one binary, nine subcommands, covering the whole pipeline from
// synthetic-world generation through significance testing. Every config key is
// settable in a key=value file (--config) and overridable by a same-named flag.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kblink/biencoder.hpp"
#include "kblink/config.hpp"
#include "kblink/corpus.hpp"
#include "kblink/crossencoder.hpp"
#include "kblink/encoder.hpp"
#include "kblink/error.hpp"
#include "kblink/eval.hpp"
#include "kblink/index.hpp"
#include "kblink/overlap.hpp"
#include "kblink/rng.hpp"
#include "kblink/serialize.hpp"
#include "kblink/stats.hpp"
#include "kblink/synth.hpp"
#include "kblink/tokenizer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kblink;

namespace {

// ---------------------------------------------------------------------------
// Shared plumbing

std::string iso_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

json base_report(const RunConfig& cfg, const std::string& command) {
    json j;
    j["command"] = command;
    j["config"] = config_echo(cfg);
    if (cfg.timestamp) j["timestamp"] = iso_now();
    return j;
}

void ensure_out_dir(const RunConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw DataError("cannot create output dir " + cfg.out_dir + ": " + ec.message());
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out) throw DataError("write failed: " + path);
}

UnifiedCatalog load_catalog_files(const RunConfig& cfg) {
    auto general = load_entities(cfg.entities_general_path(), "general");
    auto specific = load_entities(cfg.entities_specific_path(), "specific");
    return build_catalog({{"general", std::move(general)}, {"specific", std::move(specific)}});
}

DatasetSplit load_split_files(const RunConfig& cfg, const std::string& domain) {
    DatasetSplit s;
    s.train = load_mentions(cfg.mentions_path(domain, "train"));
    s.valid = load_mentions(cfg.mentions_path(domain, "valid"));
    s.test = load_mentions(cfg.mentions_path(domain, "test"));
    return s;
}

const std::vector<MentionRecord>& pick_split(const DatasetSplit& s, const std::string& name) {
    if (name == "train") return s.train;
    if (name == "valid") return s.valid;
    if (name == "test") return s.test;
    throw ConfigError("eval_split must be train, valid, or test, got \"" + name + "\"");
}

void check_stage(const std::string& stage) {
    if (stage != "bi-encoder" && stage != "cross-encoder")
        throw ConfigError("stage must be bi-encoder or cross-encoder, got \"" + stage + "\"");
}

// The alignment stage consumes extracted pairs when the overlap command has
// run, and falls back to the shipped truth table otherwise.
std::pair<std::vector<OverlapPair>, std::string> load_pairs_with_source(const RunConfig& cfg,
                                                                        const UnifiedCatalog& cat) {
    const std::string extracted = cfg.overlap_pairs_path();
    if (fs::exists(extracted)) return {load_overlap_pairs(extracted), extracted};
    const std::string truth = cfg.overlap_truth_path();
    return {load_overlap_truth(truth, cat), truth};
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_synth(const RunConfig& cfg) {
    SyntheticWorldConfig scfg;
    scfg.seed = cfg.synth_seed;
    scfg.n_general = cfg.n_general;
    scfg.n_specific = cfg.n_specific;
    scfg.n_overlap = cfg.n_overlap;
    scfg.n_train = cfg.n_train;
    scfg.n_valid = cfg.n_valid;
    scfg.n_test = cfg.n_test;
    scfg.vocab_pool = cfg.vocab_pool;
    scfg.distractor_similarity = cfg.distractor_similarity;
    SyntheticWorld world = generate_synthetic_world(scfg);

    ensure_out_dir(cfg);
    save_entities(cfg.entities_general_path(), world.general_entities);
    save_entities(cfg.entities_specific_path(), world.specific_entities);
    save_mentions(cfg.mentions_path("specific", "train"), world.specific_mentions.train);
    save_mentions(cfg.mentions_path("specific", "valid"), world.specific_mentions.valid);
    save_mentions(cfg.mentions_path("specific", "test"), world.specific_mentions.test);
    save_mentions(cfg.mentions_path("general", "train"), world.general_mentions.train);
    save_mentions(cfg.mentions_path("general", "valid"), world.general_mentions.valid);
    save_mentions(cfg.mentions_path("general", "test"), world.general_mentions.test);
    auto catalog = build_catalog(
        {{"general", world.general_entities}, {"specific", world.specific_entities}});
    save_overlap_truth(cfg.overlap_truth_path(), world.overlap_truth, catalog);

    std::cout << "synth: " << world.general_entities.size() << " general + "
              << world.specific_entities.size() << " specific entities, "
              << world.specific_mentions.train.size() << "/" << world.specific_mentions.valid.size()
              << "/" << world.specific_mentions.test.size() << " mentions per domain, "
              << world.overlap_truth.size() << " overlap pairs -> " << cfg.out_dir << "\n";
}

void cmd_vocab(const RunConfig& cfg) {
    std::vector<std::string> texts;
    for (const auto& e : load_entities(cfg.entities_general_path(), "general")) {
        texts.push_back(e.title);
        texts.push_back(e.description);
    }
    for (const auto& e : load_entities(cfg.entities_specific_path(), "specific")) {
        texts.push_back(e.title);
        texts.push_back(e.description);
    }
    // Mention files are optional so a KB-only corpus still yields a vocab.
    for (const std::string domain : {"specific", "general"})
        for (const std::string split : {"train", "valid", "test"}) {
            const std::string path = cfg.mentions_path(domain, split);
            if (!fs::exists(path)) continue;
            for (const auto& m : load_mentions(path))
                texts.push_back(m.context_left + " " + m.surface + " " + m.context_right);
        }
    Vocab vocab = build_vocab(texts, cfg.vocab_size);
    ensure_out_dir(cfg);
    save_vocab(cfg.vocab_path(), vocab);
    std::cout << "vocab: " << vocab.size() << " tokens (" << kNumReserved << " reserved) -> "
              << cfg.vocab_path() << "\n";
}

void train_cross_encoder(const RunConfig& cfg, const BiEncoderModel& model,
                         const DatasetSplit& specific, const UnifiedCatalog& catalog,
                         const Vocab& vocab) {
    CrossEncoderModel cross = init_cross_encoder(vocab.size(), cfg.d, cfg.seed);
    EntityIndex index = build_index(model, catalog, vocab, cfg.max_len);
    Rng rng(cfg.seed ^ 0x5bd1e995a4f0e1c3ULL);
    std::vector<std::size_t> order(specific.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t pos : order) {
            const MentionRecord& m = specific.train[pos];
            Vec q = encode(model.context_params, encode_context(m, vocab, cfg.max_len));
            Ranking retrieved = search(index, q, cfg.top_k);
            if (retrieved.size() < 2) continue;
            std::size_t gold = catalog.ordinal(m.gold_kb_id, m.gold_entity_id);
            std::size_t gold_pos = retrieved.size();
            for (std::size_t j = 0; j < retrieved.size(); ++j)
                if (retrieved[j].ordinal == gold) gold_pos = j;
            if (gold_pos == retrieved.size()) continue; // gold not retrieved; no signal

            std::vector<TokenSeq> seqs;
            std::vector<Vec> vecs;
            Vec logits;
            for (const auto& r : retrieved) {
                seqs.push_back(encode_cross(m, catalog.entities[r.ordinal], vocab, cfg.max_len));
                vecs.push_back(encode(cross.encoder_params, seqs.back()));
                logits.push_back(dot(vecs.back(), cross.w));
            }
            RankLossResult rl = rank_loss(logits, gold_pos);

            EncoderGrad grad = EncoderGrad::zeros_like(cross.encoder_params);
            Vec dw(cross.w.size(), 0.0);
            for (std::size_t j = 0; j < seqs.size(); ++j) {
                double g = rl.d_logits[j];
                for (std::size_t t = 0; t < dw.size(); ++t) dw[t] += g * vecs[j][t];
                Vec upstream(cross.w.size());
                for (std::size_t t = 0; t < upstream.size(); ++t) upstream[t] = g * cross.w[t];
                grad.add_scaled(encode_backward(cross.encoder_params, seqs[j], upstream), 1.0);
            }
            sgd_step(cross.encoder_params, grad, cfg.learning_rate);
            for (std::size_t t = 0; t < dw.size(); ++t) cross.w[t] -= cfg.learning_rate * dw[t];
        }
    }
    save_cross_encoder(cfg.cross_encoder_path(), cross);
    std::cout << "train: cross-encoder -> " << cfg.cross_encoder_path() << "\n";
}

void cmd_train(const RunConfig& cfg) {
    VariantConfig variant = VariantConfig::from_name(cfg.variant, cfg.lambda_mse);
    Vocab vocab = load_vocab(cfg.vocab_path());
    UnifiedCatalog catalog = load_catalog_files(cfg);
    DatasetSplit specific = load_split_files(cfg, "specific");

    std::optional<DatasetSplit> general;
    if (variant.augmentation) {
        // Absent general-domain data is a variant-consistency problem, not a
        // broken artifact.
        const std::string probe = cfg.mentions_path("general", "train");
        if (!fs::exists(probe))
            throw ConfigError("variant " + variant.name +
                              " needs general-domain mention splits (missing " + probe + ")");
        general = load_split_files(cfg, "general");
    }
    std::optional<std::vector<OverlapPair>> pairs;
    std::string pair_source;
    if (variant.overlap_stage) {
        auto [loaded, source] = load_pairs_with_source(cfg, catalog);
        pairs = std::move(loaded);
        pair_source = source;
    }

    TrainConfig tcfg;
    tcfg.batch_size = cfg.batch_size;
    tcfg.learning_rate = cfg.learning_rate;
    tcfg.epochs = cfg.epochs;
    tcfg.seed = cfg.seed;
    tcfg.top_k = cfg.top_k;
    tcfg.max_len = cfg.max_len;
    tcfg.literal_negatives = cfg.literal_negatives;

    BiEncoderModel init = init_biencoder(vocab.size(), cfg.d, cfg.seed);
    auto [model, history] =
        train_variant(init, specific, general ? &*general : nullptr, pairs ? &*pairs : nullptr,
                      variant, tcfg, catalog, vocab);

    ensure_out_dir(cfg);
    Checkpoint ck;
    ck.model = model;
    ck.variant = variant;
    ck.train = tcfg;
    save_checkpoint(cfg.checkpoint_path(), ck);

    json j = base_report(cfg, "train");
    j["variant"] = variant.name;
    j["initial_validation_ap1"] = history.initial_validation_ap1;
    auto stage_json = [](const std::vector<TrainHistory::EpochEntry>& entries) {
        json arr = json::array();
        for (std::size_t i = 0; i < entries.size(); ++i)
            arr.push_back({{"epoch", i + 1},
                           {"train_loss", entries[i].train_loss},
                           {"validation_ap1", entries[i].validation_ap1}});
        return arr;
    };
    j["stage1"] = stage_json(history.stage1);
    j["stage2"] = stage_json(history.stage2);
    j["best_epoch"] = history.best_epoch;
    j["best_validation_ap1"] = history.best_validation_ap1;
    if (variant.overlap_stage) {
        j["pair_source"] = pair_source;
        j["overlap_pre_acs"] = history.overlap_pre_acs;
        j["overlap_post_acs"] = history.overlap_post_acs;
        j["overlap_pre_mrr"] = history.overlap_pre_mrr;
        j["overlap_post_mrr"] = history.overlap_post_mrr;
    }
    write_json(cfg.history_path(), j);

    std::cout << "train[" << variant.name << "]: best epoch " << (history.best_epoch + 1)
              << ", validation AP@1 " << history.best_validation_ap1 << " -> "
              << cfg.checkpoint_path() << "\n";

    if (cfg.train_cross) train_cross_encoder(cfg, model, specific, catalog, vocab);
}

void cmd_index(const RunConfig& cfg) {
    Vocab vocab = load_vocab(cfg.vocab_path());
    UnifiedCatalog catalog = load_catalog_files(cfg);
    Checkpoint ck = load_checkpoint(cfg.checkpoint_path());
    EntityIndex index = build_index(ck.model, catalog, vocab, cfg.max_len);
    ensure_out_dir(cfg);
    save_index(cfg.index_path(), index);
    std::cout << "index: " << index.size() << " entities, d=" << index.vectors.cols << " -> "
              << cfg.index_path() << "\n";
}

void cmd_eval(const RunConfig& cfg) {
    check_stage(cfg.stage);
    Vocab vocab = load_vocab(cfg.vocab_path());
    UnifiedCatalog catalog = load_catalog_files(cfg);
    Checkpoint ck = load_checkpoint(cfg.checkpoint_path());
    EntityIndex index = load_index(cfg.index_path());
    DatasetSplit specific = load_split_files(cfg, "specific");
    const std::vector<MentionRecord>& mentions = pick_split(specific, cfg.eval_split);

    std::optional<CrossEncoderModel> cross;
    if (cfg.stage == "cross-encoder") cross = load_cross_encoder(cfg.cross_encoder_path());

    EvalReport report = evaluate_linking(ck.model.context_params, index, mentions, catalog, vocab,
                                         cfg.top_k, cfg.max_len, cross ? &*cross : nullptr);

    ensure_out_dir(cfg);
    json j = base_report(cfg, "eval");
    j["stage"] = report.stage;
    j["split"] = cfg.eval_split;
    j["k"] = report.k;
    j["n_mentions"] = report.per_mention_ap10.size();
    j["ap_at_1"] = report.ap_at_1;
    j["map_at_10"] = report.map_at_10;
    j["per_mention_ap10"] = report.per_mention_ap10;
    j["per_mention_rel1"] = report.per_mention_rel1;
    write_json(cfg.eval_report_path(), j);

    std::cout << "eval[" << cfg.variant << "/" << report.stage << "] split=" << cfg.eval_split
              << ": AP@1=" << report.ap_at_1 << " MAP@10=" << report.map_at_10 << " ("
              << mentions.size() << " mentions) -> " << cfg.eval_report_path() << "\n";
}

void cmd_intrinsic(const RunConfig& cfg) {
    Vocab vocab = load_vocab(cfg.vocab_path());
    UnifiedCatalog catalog = load_catalog_files(cfg);
    Checkpoint ck = load_checkpoint(cfg.checkpoint_path());
    auto [pairs, source] = load_pairs_with_source(cfg, catalog);
    std::vector<OverlapPair> sampled = sample_pairs(pairs, cfg.sample_n, cfg.seed);
    IntrinsicReport report =
        intrinsic_eval(ck.model.candidate_params, sampled, catalog, vocab, cfg.max_len);

    ensure_out_dir(cfg);
    json j = base_report(cfg, "intrinsic");
    j["pair_source"] = source;
    j["pair_count"] = report.pair_count;
    j["mrr"] = report.mrr;
    j["acs"] = report.acs;
    write_json(cfg.intrinsic_report_path(), j);

    std::cout << "intrinsic[" << cfg.variant << "]: MRR=" << report.mrr << " ACS=" << report.acs
              << " over " << report.pair_count << " pairs -> " << cfg.intrinsic_report_path()
              << "\n";
}

void cmd_overlap(const RunConfig& cfg) {
    Vocab vocab = load_vocab(cfg.vocab_path());
    UnifiedCatalog catalog = load_catalog_files(cfg);
    // Prefer a trained candidate encoder; before training, the seeded random
    // projection already separates the synthetic signature words well.
    EncoderParams params = fs::exists(cfg.checkpoint_path())
                               ? load_checkpoint(cfg.checkpoint_path()).model.candidate_params
                               : init_biencoder(vocab.size(), cfg.d, cfg.seed).candidate_params;

    std::vector<OverlapPair> candidates = fuzzy_title_match(catalog, "general", "specific");
    auto [kept, stats] =
        semantic_filter(candidates, params, catalog, vocab, cfg.threshold, cfg.max_len);

    ensure_out_dir(cfg);
    save_overlap_pairs(cfg.overlap_pairs_path(), kept);
    json j = base_report(cfg, "overlap");
    j["candidates"] = candidates.size();
    j["kept"] = kept.size();
    j["pairs_file"] = cfg.overlap_pairs_path();
    j["similarity"] = {{"max", stats.max},
                       {"average", stats.average},
                       {"min", stats.min},
                       {"count", stats.count}};
    write_json(cfg.overlap_stats_path(), j);

    std::cout << "overlap: kept " << kept.size() << " of " << candidates.size()
              << " title-matched pairs at threshold " << cfg.threshold << " -> "
              << cfg.overlap_pairs_path() << "\n";
}

std::vector<double> read_metric_array(const std::string& path, const std::string& metric) {
    std::string key;
    if (metric == "ap10") key = "per_mention_ap10";
    else if (metric == "rel1") key = "per_mention_rel1";
    else throw ConfigError("sig_metric must be ap10 or rel1, got \"" + metric + "\"");
    std::ifstream in(path);
    if (!in) throw DataError("cannot open eval report: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError(path + ": invalid JSON: " + std::string(e.what()));
    }
    if (!j.contains(key)) throw DataError(path + ": missing per-mention array \"" + key + "\"");
    try {
        return j.at(key).get<std::vector<double>>();
    } catch (const std::exception& e) {
        throw DataError(path + ": bad \"" + key + "\" array: " + std::string(e.what()));
    }
}

void cmd_sigtest(const RunConfig& cfg) {
    if (cfg.sig_a.empty() || cfg.sig_b.empty())
        throw ConfigError("sigtest needs --sig_a and --sig_b eval report paths");
    std::vector<double> a = read_metric_array(cfg.sig_a, cfg.sig_metric);
    std::vector<double> b = read_metric_array(cfg.sig_b, cfg.sig_metric);
    SigTestResult res = randomization_test(a, b, cfg.rounds, cfg.alpha, cfg.seed);

    ensure_out_dir(cfg);
    json j = base_report(cfg, "sigtest");
    j["a"] = cfg.sig_a;
    j["b"] = cfg.sig_b;
    j["metric"] = cfg.sig_metric;
    j["n"] = a.size();
    j["observed_diff"] = res.observed_diff;
    j["p_value"] = res.p_value;
    j["rounds"] = res.rounds;
    j["alpha"] = res.alpha;
    j["significant"] = res.significant;
    write_json(cfg.sigtest_path(), j);

    std::cout << "sigtest[" << cfg.sig_metric << "]: diff=" << res.observed_diff
              << " p=" << res.p_value << (res.significant ? " (significant)" : " (ns)") << " -> "
              << cfg.sigtest_path() << "\n";
}

struct LinkQuery {
    std::string left, surface, right;
};

void cmd_link(const RunConfig& cfg, const LinkQuery& q) {
    check_stage(cfg.stage);
    Vocab vocab = load_vocab(cfg.vocab_path());
    UnifiedCatalog catalog = load_catalog_files(cfg);
    Checkpoint ck = load_checkpoint(cfg.checkpoint_path());
    EntityIndex index = load_index(cfg.index_path());

    MentionRecord m;
    m.mention_id = "cli-query";
    m.context_left = q.left;
    m.surface = q.surface;
    m.context_right = q.right;

    Vec v = encode(ck.model.context_params, encode_context(m, vocab, cfg.max_len));
    Ranking ranking = search(index, v, cfg.top_k);
    if (cfg.stage == "cross-encoder") {
        CrossEncoderModel cross = load_cross_encoder(cfg.cross_encoder_path());
        std::vector<std::size_t> ordinals;
        for (const auto& r : ranking) ordinals.push_back(r.ordinal);
        ranking = rerank(cross, m, ordinals, catalog, vocab, cfg.max_len);
    }

    json results = json::array();
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        const EntityRecord& e = catalog.entities[ranking[i].ordinal];
        char score[32];
        std::snprintf(score, sizeof score, "%.6f", ranking[i].score);
        std::printf("%2zu. %-28s [%s/%s] score=%s\n", i + 1, e.title.c_str(), e.kb_id.c_str(),
                    e.entity_id.c_str(), score);
        results.push_back({{"rank", i + 1},
                           {"ordinal", ranking[i].ordinal},
                           {"kb_id", e.kb_id},
                           {"entity_id", e.entity_id},
                           {"title", e.title},
                           {"score", ranking[i].score}});
    }

    ensure_out_dir(cfg);
    json j = base_report(cfg, "link");
    j["stage"] = cfg.stage;
    j["query"] = {{"context_left", q.left}, {"mention", q.surface}, {"context_right", q.right}};
    j["results"] = results;
    write_json(cfg.link_report_path(), j);
}

// ---------------------------------------------------------------------------
// Argument wiring: every config key becomes a same-named long flag; --config
// loads the file first, then flag overrides apply in registration order.

struct CommonArgs {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;

    RunConfig resolve() const {
        RunConfig cfg;
        if (!config_path.empty()) load_config_file(cfg, config_path);
        for (const auto& [key, value] : overrides) apply_config_value(cfg, key, value);
        return cfg;
    }
};

CommonArgs* attach_common(CLI::App* sub) {
    static std::vector<std::unique_ptr<CommonArgs>> storage;
    storage.push_back(std::make_unique<CommonArgs>());
    CommonArgs* c = storage.back().get();
    sub->add_option("--config", c->config_path, "key=value config file loaded before flags");
    for (const auto& key : config_keys()) {
        std::string names = "--" + key;
        if (key == "top_k") names += ",--k";
        if (key == "out_dir") names += ",--out-dir";
        sub->add_option_function<std::string>(
            names, [c, key](const std::string& v) { c->overrides.emplace_back(key, v); },
            "override config key " + key);
    }
    return c;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"kblink: cross-domain neural entity linking over merged knowledge bases"};
    app.require_subcommand(1);

    auto add = [&](const std::string& name, const std::string& desc, auto runner) {
        CLI::App* sub = app.add_subcommand(name, desc);
        CommonArgs* args = attach_common(sub);
        sub->callback([args, runner] { runner(args->resolve()); });
        return sub;
    };

    add("synth", "generate the synthetic two-domain world", cmd_synth);
    add("vocab", "build the token vocabulary from entities and mentions", cmd_vocab);
    add("train", "train a bi-encoder variant (C, CO, CA, COA, D, DA)", cmd_train);
    add("index", "embed the merged catalog into a dense index", cmd_index);
    add("eval", "run linking evaluation over a mention split", cmd_eval);
    add("intrinsic", "intrinsic MRR/ACS over overlap pairs", cmd_intrinsic);
    add("overlap", "extract overlapping entities (title match + semantic filter)", cmd_overlap);
    add("sigtest", "Fisher randomization test between two eval reports", cmd_sigtest);

    CLI::App* link = app.add_subcommand("link", "link one mention text against the index");
    CommonArgs* link_args = attach_common(link);
    auto query = std::make_shared<LinkQuery>();
    link->add_option("--left", query->left, "context left of the mention");
    link->add_option("--mention", query->surface, "mention surface text")->required();
    link->add_option("--right", query->right, "context right of the mention");
    link->callback([link_args, query] { cmd_link(link_args->resolve(), *query); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
