#include "docdate/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <tuple>

#include "docdate/checkpoint.hpp"
#include "docdate/ensemble_eval.hpp"
#include "docdate/gradcheck.hpp"
#include "docdate/model.hpp"
#include "docdate/rng.hpp"
#include "docdate/synthetic.hpp"
#include "docdate/training.hpp"

namespace docdate {

namespace {

namespace fs = std::filesystem;

// Every configuration key with its default. The registry is the single
// authority on what exists; anything else is rejected on sight.
const std::vector<std::pair<std::string, std::string>>& default_items() {
    static const std::vector<std::pair<std::string, std::string>> kDefaults = {
        // shared
        {"seed", "1"},
        {"corpus", "corpus.jsonl"},
        {"embeddings", "embeddings.txt"},
        {"dump_splits", "false"},
        {"splits_out", ""},
        // gen
        {"num_docs", "100"},
        {"start_year", "1995"},
        {"end_year", "2002"},
        {"doc_len_lo", "12"},
        {"doc_len_hi", "24"},
        {"signal_strength", "1"},
        // model widths (embed_dim also sizes generated embeddings)
        {"embed_dim", "300"},
        {"lstm_hidden", "128"},
        {"k_syn", "128"},
        {"attn_pool_dim", "128"},
        {"attn_feat_dim", "128"},
        {"fc_dim", "128"},
        {"num_at_layers", "2"},
        {"keep_prob", "0.8"},
        // train
        {"head", "ac"},
        {"lr", "0.001"},
        {"epochs", "30"},
        {"batch_size", "32"},
        {"checkpoint_out", "model.ckpt"},
        {"metrics_out", ""},
        // eval / tune / mcnemar / export-attention
        {"eval_head", "ac"},
        {"checkpoint", "model.ckpt"},
        {"ac_checkpoint", "ac.ckpt"},
        {"oe_checkpoint", "oe.ckpt"},
        {"lambda", "0.5"},
        {"report_out", ""},
        {"bucket_key", "none"},
        {"bucket_edges", ""},
        {"tune_split", "validation"},
        {"grid_step", "0.01"},
        {"tune_out", ""},
        {"doc_id", ""},
        {"attention_out", ""},
        // grad-check
        {"gc_tol", "0.001"},
    };
    return kDefaults;
}

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

void require_input_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw ConfigError(what + " path must not be empty");
    if (!fs::exists(path)) throw ConfigError(what + " not found: " + path);
}

// Empty means "write to stdout" for optional outputs; callers that require a
// real file pass required = true.
void require_output_path(const std::string& path, const std::string& what, bool required = false) {
    if (path.empty()) {
        if (required) throw ConfigError(what + " path must not be empty");
        return;
    }
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty() && !fs::exists(parent))
        throw ConfigError("output directory for " + what + " does not exist: " + parent.string());
}

void emit_lines(const std::vector<std::string>& lines, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        for (const auto& l : lines) out << l << '\n';
        return;
    }
    std::ofstream f(path);
    if (!f) throw IoError("cannot write file: " + path);
    for (const auto& l : lines) f << l << '\n';
    f.flush();
    if (!f) throw IoError("error while writing file: " + path);
    out << "wrote " << path << '\n';
}

ModelConfig model_config_from(const RunConfig& cfg, int num_classes) {
    ModelConfig mc;
    mc.embed_dim = cfg.get_int("embed_dim");
    mc.lstm_hidden = cfg.get_int("lstm_hidden");
    mc.k_syn = cfg.get_int("k_syn");
    mc.attn_pool_dim = cfg.get_int("attn_pool_dim");
    mc.attn_feat_dim = cfg.get_int("attn_feat_dim");
    mc.fc_dim = cfg.get_int("fc_dim");
    mc.num_at_layers = static_cast<int>(cfg.get_int("num_at_layers"));
    mc.num_classes = num_classes;
    mc.keep_prob = cfg.get_double("keep_prob");
    mc.validate();
    return mc;
}

void dump_splits_if_requested(const RunConfig& cfg, const DatasetSplit& split, std::ostream& out) {
    if (!cfg.get_bool("dump_splits")) return;
    std::vector<std::string> lines;
    for (const auto& d : split.train) lines.push_back("split train " + d.id);
    for (const auto& d : split.validation) lines.push_back("split validation " + d.id);
    for (const auto& d : split.test) lines.push_back("split test " + d.id);
    emit_lines(lines, cfg.get("splits_out"), out);
}

Model load_model_for(const std::string& path, const EmbeddingTable& table, const DatasetSplit* split) {
    require_input_file(path, "checkpoint");
    LoadedCheckpoint lc = load_checkpoint(path);
    if (lc.model.config.embed_dim != table.dim())
        throw DimensionError("checkpoint " + path + " expects embedding width " +
                             std::to_string(lc.model.config.embed_dim) + " but the table provides " +
                             std::to_string(table.dim()));
    if (split != nullptr && lc.model.config.num_classes != split->num_classes())
        throw DimensionError("checkpoint " + path + " has " + std::to_string(lc.model.config.num_classes) +
                             " classes but the corpus split has " + std::to_string(split->num_classes()));
    return std::move(lc.model);
}

// Evaluation-mode distribution of one head over each document.
std::vector<YearDist> distributions_for(Model& model, const EmbeddingTable& table,
                                        const std::vector<Document>& docs, Head head) {
    std::vector<YearDist> dists;
    dists.reserve(docs.size());
    std::mt19937_64 unused(0);
    for (const auto& doc : docs) {
        Tape t;
        BoundModel bound = model.bind(t, false);
        Node d = head_distribution(t, bound, doc, table, model.config, head, unused, false);
        dists.push_back(t.val(d).values());
    }
    return dists;
}

std::vector<int> years_of(const std::vector<Document>& docs) {
    std::vector<int> years;
    years.reserve(docs.size());
    for (const auto& d : docs) years.push_back(d.year);
    return years;
}

std::vector<int> predicted_years(const std::vector<YearDist>& dists, int start_year) {
    std::vector<int> years;
    years.reserve(dists.size());
    for (const auto& d : dists) years.push_back(start_year + argmax_class(d));
    return years;
}

std::vector<std::int64_t> parse_bucket_edges(const std::string& text) {
    std::vector<std::int64_t> edges;
    std::string token;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == ',') {
            token = trim(token);
            if (token.empty()) throw ConfigError("bucket_edges: empty entry in '" + text + "'");
            char* end = nullptr;
            const long long v = std::strtoll(token.c_str(), &end, 10);
            if (end == token.c_str() || *end != '\0')
                throw ConfigError("bucket_edges: '" + token + "' is not an integer");
            edges.push_back(v);
            token.clear();
        } else {
            token += text[i];
        }
    }
    return edges;
}

// Built-in fixture for grad-check: small widths and one hand-made document
// so the check runs in milliseconds.
ModelConfig grad_check_config() {
    ModelConfig mc;
    mc.embed_dim = 4;
    mc.lstm_hidden = 2;
    mc.k_syn = 3;
    mc.attn_pool_dim = 2;
    mc.attn_feat_dim = 2;
    mc.fc_dim = 3;
    mc.num_at_layers = 2;
    mc.num_classes = 3;
    mc.keep_prob = 1.0;
    return mc;
}

Document grad_check_document() {
    Document d;
    d.id = "gradcheck0";
    d.year = 1996;
    d.tokens = {"alpha", "beta", "gamma"};
    d.dep_edges = {{0, 1, "det"}, {1, 2, "nsubj"}};
    d.temporal_nodes = {{0, NodeKind::Time}, {2, NodeKind::Event}};
    d.temporal_edges = {{NodeRef::node(0), NodeRef::dct(), TemporalLabel::Before},
                        {NodeRef::node(1), NodeRef::node(0), TemporalLabel::Includes}};
    return d;
}

EmbeddingTable grad_check_table(std::uint64_t seed) {
    const std::vector<std::string> words = {"alpha", "beta", "gamma"};
    EmbeddingTable t;
    std::mt19937_64 g(seed);
    t.matrix = Tensor::zeros({static_cast<std::int64_t>(words.size()), 4});
    for (std::size_t i = 0; i < words.size(); ++i) {
        t.vocab.emplace(words[i], static_cast<std::int64_t>(i));
        for (std::int64_t c = 0; c < 4; ++c)
            t.matrix.at(static_cast<std::int64_t>(i), c) = uniform_range(g, -0.5, 0.5);
    }
    t.unk = Tensor::zeros({1, 4});
    t.pad = Tensor::zeros({1, 4});
    return t;
}

std::string bool_word(bool v) { return v ? "true" : "false"; }

}  // namespace

RunConfig::RunConfig() {
    for (const auto& [k, v] : default_items()) values_.emplace(k, v);
}

bool RunConfig::known(const std::string& key) const { return values_.count(key) > 0; }

void RunConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
    it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
    return it->second;
}

long long RunConfig::get_int(const std::string& key) const {
    const std::string& v = get(key);
    char* end = nullptr;
    const long long r = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || end == v.c_str() || *end != '\0')
        throw ConfigError("key '" + key + "' expects an integer, got '" + v + "'");
    return r;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
    const long long r = get_int(key);
    if (r < 0) throw ConfigError("key '" + key + "' expects a non-negative integer, got '" + get(key) + "'");
    return static_cast<std::uint64_t>(r);
}

double RunConfig::get_double(const std::string& key) const {
    const std::string& v = get(key);
    char* end = nullptr;
    const double r = std::strtod(v.c_str(), &end);
    if (v.empty() || end == v.c_str() || *end != '\0')
        throw ConfigError("key '" + key + "' expects a number, got '" + v + "'");
    return r;
}

bool RunConfig::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("key '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<std::pair<std::string, std::string>> RunConfig::items() const {
    std::vector<std::pair<std::string, std::string>> r;
    r.reserve(default_items().size());
    for (const auto& item : default_items()) r.emplace_back(item.first, values_.at(item.first));
    return r;
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value, got '" + line +
                              "'");
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

ParsedCli parse_cli(const std::vector<std::string>& args) {
    if (args.empty()) throw ConfigError("missing subcommand");
    ParsedCli r;
    r.subcommand = args[0];

    std::vector<std::pair<std::string, std::string>> overrides;
    std::string config_path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        const std::string& tok = args[i];
        if (tok.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + tok + "'");
        std::string body = tok.substr(2);
        if (body.empty()) throw ConfigError("empty flag name");
        std::string key, value;
        bool has_value = false;
        const std::size_t eq = body.find('=');
        if (eq != std::string::npos) {
            key = body.substr(0, eq);
            value = body.substr(eq + 1);
            has_value = true;
        } else {
            key = body;
        }
        std::replace(key.begin(), key.end(), '-', '_');
        if (!has_value) {
            if (i + 1 < args.size() && args[i + 1].rfind("--", 0) != 0) {
                value = args[++i];
            } else if (key == "dump_splits") {
                value = "true";  // the one flag that may stand alone
            } else {
                throw ConfigError("flag '" + tok + "' requires a value");
            }
        }
        if (key == "config")
            config_path = value;
        else
            overrides.emplace_back(key, value);
    }

    if (!config_path.empty()) r.config.load_file(config_path);
    for (const auto& [k, v] : overrides) r.config.set(k, v);
    return r;
}

void cmd_gen(const RunConfig& cfg, std::ostream& out) {
    const std::string corpus_path = cfg.get("corpus");
    const std::string embed_path = cfg.get("embeddings");
    require_output_path(corpus_path, "corpus", true);
    require_output_path(embed_path, "embeddings", true);

    SyntheticConfig sc;
    sc.num_docs = static_cast<int>(cfg.get_int("num_docs"));
    sc.start_year = static_cast<int>(cfg.get_int("start_year"));
    sc.end_year = static_cast<int>(cfg.get_int("end_year"));
    sc.doc_len_lo = static_cast<int>(cfg.get_int("doc_len_lo"));
    sc.doc_len_hi = static_cast<int>(cfg.get_int("doc_len_hi"));
    sc.signal_strength = cfg.get_double("signal_strength");
    sc.seed = cfg.get_u64("seed");

    // gen_synthetic validates the whole config before anything is written;
    // its values came straight from the run configuration, so a rejection
    // here is a config error, not a runtime failure.
    std::vector<Document> docs;
    try {
        docs = gen_synthetic(sc);
    } catch (const ValueError& e) {
        throw ConfigError(e.what());
    }
    write_corpus(corpus_path, docs);
    write_embedding_file(embed_path, corpus_vocabulary(docs), cfg.get_int("embed_dim"), sc.seed);

    out << "documents " << docs.size() << '\n';
    out << "classes " << sc.end_year - sc.start_year + 1 << '\n';
    out << "signal_strength " << fmt_g(sc.signal_strength) << '\n';
    out << "wrote " << corpus_path << '\n';
    out << "wrote " << embed_path << '\n';
}

void cmd_train(const RunConfig& cfg, std::ostream& out) {
    require_input_file(cfg.get("corpus"), "corpus file");
    require_input_file(cfg.get("embeddings"), "embeddings file");
    require_output_path(cfg.get("checkpoint_out"), "checkpoint_out", true);
    require_output_path(cfg.get("metrics_out"), "metrics_out");
    require_output_path(cfg.get("splits_out"), "splits_out");

    const std::vector<Document> docs = load_corpus(cfg.get("corpus"));
    const DatasetSplit split = split_dataset(docs, cfg.get_u64("seed"));
    dump_splits_if_requested(cfg, split, out);
    const EmbeddingTable table = load_embeddings(cfg.get("embeddings"), cfg.get_int("embed_dim"));

    TrainConfig tc;
    tc.head = head_from_name(cfg.get("head"));
    tc.model = model_config_from(cfg, split.num_classes());
    tc.lr = cfg.get_double("lr");
    tc.epochs = static_cast<int>(cfg.get_int("epochs"));
    tc.batch_size = static_cast<int>(cfg.get_int("batch_size"));
    tc.seed = cfg.get_u64("seed");

    const TrainResult result = train(split, table, tc);

    std::vector<std::string> metrics;
    metrics.reserve(result.metrics.size());
    for (const auto& m : result.metrics)
        metrics.push_back("epoch " + std::to_string(m.epoch) + " train_loss " + fmt_g(m.train_loss) +
                          " train_acc " + fmt_g(m.train_accuracy) + " val_loss " + fmt_g(m.val_loss) +
                          " val_acc " + fmt_g(m.val_accuracy));
    emit_lines(metrics, cfg.get("metrics_out"), out);

    save_checkpoint(result.model, result.rng_state, cfg.get("checkpoint_out"));
    out << "checkpoint " << cfg.get("checkpoint_out") << '\n';
    out << "best_epoch " << result.best_epoch << '\n';
    out << "best_val_accuracy " << fmt_g(result.best_val_accuracy) << '\n';
}

void cmd_eval(const RunConfig& cfg, std::ostream& out) {
    const std::string eval_head = cfg.get("eval_head");
    require_input_file(cfg.get("corpus"), "corpus file");
    require_input_file(cfg.get("embeddings"), "embeddings file");
    require_output_path(cfg.get("report_out"), "report_out");
    require_output_path(cfg.get("splits_out"), "splits_out");

    const std::vector<Document> docs = load_corpus(cfg.get("corpus"));
    const DatasetSplit split = split_dataset(docs, cfg.get_u64("seed"));
    dump_splits_if_requested(cfg, split, out);
    const EmbeddingTable table = load_embeddings(cfg.get("embeddings"), cfg.get_int("embed_dim"));

    std::vector<YearDist> dists;
    if (eval_head == "ensemble") {
        const double lambda = cfg.get_double("lambda");
        if (lambda < 0.0 || lambda > 1.0)
            throw ConfigError("lambda must lie in [0, 1], got " + cfg.get("lambda"));
        Model ac = load_model_for(cfg.get("ac_checkpoint"), table, &split);
        Model oe = load_model_for(cfg.get("oe_checkpoint"), table, &split);
        const auto ac_dists = distributions_for(ac, table, split.test, Head::Ac);
        const auto oe_dists = distributions_for(oe, table, split.test, Head::Oe);
        dists.reserve(ac_dists.size());
        for (std::size_t i = 0; i < ac_dists.size(); ++i)
            dists.push_back(ensemble_predict(ac_dists[i], oe_dists[i], lambda));
    } else {
        const Head head = head_from_name(eval_head);
        Model model = load_model_for(cfg.get("checkpoint"), table, &split);
        dists = distributions_for(model, table, split.test, head);
    }

    const std::vector<int> gold = years_of(split.test);
    const std::vector<int> pred = predicted_years(dists, split.start_year);
    const EvalReport report = evaluate(pred, gold);

    std::vector<std::string> lines = report.to_lines();
    for (std::size_t i = 0; i < split.test.size(); ++i)
        lines.push_back("pred " + split.test[i].id + " " + std::to_string(pred[i]) + " " +
                        std::to_string(gold[i]));

    if (cfg.get("bucket_key") != "none") {
        const BucketKey key = bucket_key_from_name(cfg.get("bucket_key"));
        if (cfg.get("bucket_edges").empty())
            throw ConfigError("bucket_edges is required when bucket_key is set");
        const std::vector<std::int64_t> edges = parse_bucket_edges(cfg.get("bucket_edges"));
        for (const auto& b : evaluate_bucketed(split.test, pred, gold, key, edges))
            lines.push_back("bucket " + std::to_string(b.lo) + " " + std::to_string(b.hi) + " total " +
                            std::to_string(b.total) + " correct " + std::to_string(b.correct) +
                            " accuracy " + fmt_g(b.accuracy));
    }
    emit_lines(lines, cfg.get("report_out"), out);
}

void cmd_tune(const RunConfig& cfg, std::ostream& out) {
    const std::string tune_split = cfg.get("tune_split");
    if (tune_split == "test")
        throw ConfigError("refusing to tune lambda on the test split; tuning uses validation data");
    if (tune_split != "validation")
        throw ConfigError("unknown tune_split '" + tune_split + "' (expected validation)");
    const double step = cfg.get_double("grid_step");
    if (!(step > 0.0) || step > 1.0)
        throw ConfigError("grid_step must lie in (0, 1], got " + cfg.get("grid_step"));

    require_input_file(cfg.get("corpus"), "corpus file");
    require_input_file(cfg.get("embeddings"), "embeddings file");
    require_output_path(cfg.get("tune_out"), "tune_out");
    require_output_path(cfg.get("splits_out"), "splits_out");

    const std::vector<Document> docs = load_corpus(cfg.get("corpus"));
    const DatasetSplit split = split_dataset(docs, cfg.get_u64("seed"));
    dump_splits_if_requested(cfg, split, out);
    const EmbeddingTable table = load_embeddings(cfg.get("embeddings"), cfg.get_int("embed_dim"));

    Model ac = load_model_for(cfg.get("ac_checkpoint"), table, &split);
    Model oe = load_model_for(cfg.get("oe_checkpoint"), table, &split);
    const auto ac_dists = distributions_for(ac, table, split.validation, Head::Ac);
    const auto oe_dists = distributions_for(oe, table, split.validation, Head::Oe);

    std::vector<int> gold_classes;
    gold_classes.reserve(split.validation.size());
    for (const auto& d : split.validation) gold_classes.push_back(d.year - split.start_year);

    const TuneResult tr = tune_lambda(ac_dists, oe_dists, gold_classes, step);

    std::vector<std::string> lines;
    lines.push_back("lambda_star " + fmt_g(tr.lambda_star));
    lines.push_back("accuracy " + fmt_g(tr.accuracy));
    for (const auto& p : tr.curve) lines.push_back("curve " + fmt_g(p.lambda) + " " + fmt_g(p.accuracy));
    emit_lines(lines, cfg.get("tune_out"), out);
}

void cmd_mcnemar(const RunConfig& cfg, std::ostream& out) {
    require_input_file(cfg.get("corpus"), "corpus file");
    require_input_file(cfg.get("embeddings"), "embeddings file");
    require_output_path(cfg.get("report_out"), "report_out");
    require_output_path(cfg.get("splits_out"), "splits_out");

    const std::vector<Document> docs = load_corpus(cfg.get("corpus"));
    const DatasetSplit split = split_dataset(docs, cfg.get_u64("seed"));
    dump_splits_if_requested(cfg, split, out);
    const EmbeddingTable table = load_embeddings(cfg.get("embeddings"), cfg.get_int("embed_dim"));

    Model ac = load_model_for(cfg.get("ac_checkpoint"), table, &split);
    Model oe = load_model_for(cfg.get("oe_checkpoint"), table, &split);
    const std::vector<int> ac_pred =
        predicted_years(distributions_for(ac, table, split.test, Head::Ac), split.start_year);
    const std::vector<int> oe_pred =
        predicted_years(distributions_for(oe, table, split.test, Head::Oe), split.start_year);
    const std::vector<int> gold = years_of(split.test);

    const McNemarResult r = mcnemar_test(ac_pred, oe_pred, gold);
    std::vector<std::string> lines = {
        "b " + std::to_string(r.b),
        "c " + std::to_string(r.c),
        "statistic " + fmt_g(r.statistic),
        "p_value " + fmt_g(r.p_value),
        "p_chisq " + fmt_g(r.p_chisq),
        "p_exact " + fmt_g(r.p_exact),
        "used_exact " + bool_word(r.used_exact),
        "degenerate " + bool_word(r.degenerate),
    };
    emit_lines(lines, cfg.get("report_out"), out);
}

void cmd_export_attention(const RunConfig& cfg, std::ostream& out) {
    const std::string doc_id = cfg.get("doc_id");
    if (doc_id.empty()) throw ConfigError("doc_id is required for export-attention");
    const std::string eval_head = cfg.get("eval_head");
    if (eval_head == "ensemble")
        throw ConfigError("export-attention needs a single head (ac, oe, or joint)");
    const Head head = head_from_name(eval_head);

    require_input_file(cfg.get("corpus"), "corpus file");
    require_input_file(cfg.get("embeddings"), "embeddings file");
    require_output_path(cfg.get("attention_out"), "attention_out");

    const std::vector<Document> docs = load_corpus(cfg.get("corpus"));
    const Document* doc = nullptr;
    for (const auto& d : docs)
        if (d.id == doc_id) {
            doc = &d;
            break;
        }
    if (doc == nullptr) throw ValueError("unknown document id '" + doc_id + "'");

    const EmbeddingTable table = load_embeddings(cfg.get("embeddings"), cfg.get_int("embed_dim"));
    Model model = load_model_for(cfg.get("checkpoint"), table, nullptr);

    Tape t;
    BoundModel bound = model.bind(t, false);
    std::mt19937_64 unused(0);
    Node h_syn = encode_document(t, *doc, table, bound, model.config.keep_prob, unused, false);

    std::vector<std::string> lines;
    auto push_token_weights = [&](Node weights) {
        const Tensor& w = t.val(weights);
        for (std::int64_t i = 0; i < w.cols(); ++i)
            lines.push_back("ac " + std::to_string(i) + " " + doc->tokens[static_cast<std::size_t>(i)] +
                            " " + fmt_g(w[i]));
    };
    auto push_edge_records = [&](const std::vector<EdgeAttentionRecord>& records) {
        for (const auto& r : records)
            lines.push_back("oe layer " + std::to_string(r.layer) + " " + std::to_string(r.src) + " " +
                            std::to_string(r.dst) + " " + fine_label_name(r.label) + " " + fmt_g(r.weight));
        // Cross-layer average per (src, dst, label) edge, in index order.
        std::map<std::tuple<int, int, int>, std::pair<double, int>> sums;
        for (const auto& r : records) {
            auto& slot = sums[{r.src, r.dst, static_cast<int>(r.label)}];
            slot.first += r.weight;
            slot.second += 1;
        }
        for (const auto& [key, slot] : sums)
            lines.push_back("oe avg " + std::to_string(std::get<0>(key)) + " " +
                            std::to_string(std::get<1>(key)) + " " +
                            fine_label_name(static_cast<FineLabel>(std::get<2>(key))) + " " +
                            fmt_g(slot.first / slot.second));
    };

    switch (head) {
        case Head::Ac: {
            AcResult r = ac_forward(t, h_syn, bound.pool, bound.ac_cls);
            push_token_weights(r.weights);
            break;
        }
        case Head::Oe: {
            OeResult r = forward_oe(t, *doc, h_syn, bound);
            push_edge_records(r.attention);
            break;
        }
        case Head::Joint: {
            JointResult r = forward_joint(t, *doc, h_syn, bound);
            push_token_weights(r.ac_weights);
            push_edge_records(r.attention);
            break;
        }
    }
    emit_lines(lines, cfg.get("attention_out"), out);
}

void cmd_grad_check(const RunConfig& cfg, std::ostream& out) {
    const double tol = cfg.get_double("gc_tol");
    if (!(tol > 0.0)) throw ConfigError("gc_tol must be positive, got " + cfg.get("gc_tol"));
    const std::uint64_t seed = cfg.get_u64("seed");

    const ModelConfig mc = grad_check_config();
    const Document doc = grad_check_document();
    const EmbeddingTable table = grad_check_table(seed + 1);

    bool all_pass = true;
    double worst = 0.0;
    for (Head head : {Head::Ac, Head::Oe, Head::Joint}) {
        Model m = Model::init(mc, seed);
        auto views = m.params.views();
        // Probe at a generic point: jittering every entry (biases included)
        // keeps relu pre-activations off their kinks, where the one-sided
        // derivative and the central difference legitimately disagree.
        std::mt19937_64 jitter(seed + 0x9e3779b9u);
        for (auto& view : views)
            for (std::int64_t i = 0; i < view.tensor->size(); ++i)
                (*view.tensor)[i] += uniform_range(jitter, -0.05, 0.05);
        auto fwd = [&](std::vector<Tensor>* grads) {
            Tape t;
            BoundModel b = m.bind(t, true);
            std::mt19937_64 unused(0);
            Node dist = head_distribution(t, b, doc, table, mc, head, unused, false);
            Node loss = cross_entropy(dist, 1);
            const double v = t.val(loss)[0];
            if (grads) {
                t.backward(loss);
                for (std::size_t i = 0; i < b.leaves.size(); ++i) (*grads)[i] = t.grad(b.leaves[i]);
            }
            return v;
        };
        const GradCheckReport report = grad_check(views, fwd);
        const double err = report.max_rel_err();
        const bool ok = report.pass(tol);
        all_pass = all_pass && ok;
        worst = std::max(worst, err);
        out << "head " << head_name(head) << " max_rel_err " << fmt_g(err) << ' ' << (ok ? "pass" : "fail")
            << '\n';
    }
    if (!all_pass)
        throw ValueError("gradient check failed: max rel err " + fmt_g(worst) + " exceeds tolerance " +
                         fmt_g(tol));
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    static const char* kUsage =
        "usage: docdate <subcommand> [--key value | --key=value]...\n"
        "subcommands: gen train eval tune mcnemar export-attention grad-check help\n"
        "a config file with key = value lines loads via --config <path>;\n"
        "flags override file values, file values override defaults\n";
    try {
        if (args.empty()) {
            err << kUsage;
            return 1;
        }
        if (args[0] == "help" || args[0] == "--help" || args[0] == "-h") {
            out << kUsage << "\nkeys and defaults:\n";
            for (const auto& [k, v] : RunConfig().items()) out << "  " << k << " = " << v << '\n';
            return 0;
        }
        const ParsedCli parsed = parse_cli(args);
        if (parsed.subcommand == "gen")
            cmd_gen(parsed.config, out);
        else if (parsed.subcommand == "train")
            cmd_train(parsed.config, out);
        else if (parsed.subcommand == "eval")
            cmd_eval(parsed.config, out);
        else if (parsed.subcommand == "tune")
            cmd_tune(parsed.config, out);
        else if (parsed.subcommand == "mcnemar")
            cmd_mcnemar(parsed.config, out);
        else if (parsed.subcommand == "export-attention")
            cmd_export_attention(parsed.config, out);
        else if (parsed.subcommand == "grad-check")
            cmd_grad_check(parsed.config, out);
        else
            throw ConfigError("unknown subcommand '" + parsed.subcommand + "'");
        return 0;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace docdate
