#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "docdate/cli.hpp"
#include "docdate/corpus.hpp"

using namespace docdate;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int exit_code = 0;
    std::string out;
    std::string err;
};

CliRun run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

// One small trained setup shared by the read-only cases: a generated corpus
// plus an AC and an OE checkpoint over it.
struct Fixture {
    fs::path dir;
    std::string corpus;
    std::string embeds;
    std::string ac_ckpt;
    std::string oe_ckpt;

    std::vector<std::string> data_flags() const {
        return {"--corpus", corpus, "--embeddings", embeds, "--embed-dim", "8", "--seed", "3"};
    }
    std::vector<std::string> model_flags() const {
        return {"--lstm-hidden", "3", "--k-syn",  "4", "--attn-pool-dim", "3",
                "--attn-feat-dim", "3", "--fc-dim", "4"};
    }
};

std::vector<std::string> operator+(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

const Fixture& fixture() {
    static const Fixture f = [] {
        Fixture f;
        f.dir = fs::temp_directory_path() / "docdate_cli_fixture";
        fs::remove_all(f.dir);
        fs::create_directories(f.dir);
        f.corpus = (f.dir / "c.jsonl").string();
        f.embeds = (f.dir / "e.txt").string();
        f.ac_ckpt = (f.dir / "ac.ckpt").string();
        f.oe_ckpt = (f.dir / "oe.ckpt").string();

        auto must = [](const CliRun& r, const std::string& what) {
            if (r.exit_code != 0)
                throw std::runtime_error("fixture " + what + " failed: " + r.err);
        };
        must(run(std::vector<std::string>{"gen"} + f.data_flags() +
                 std::vector<std::string>{"--num-docs", "40", "--doc-len-lo", "8", "--doc-len-hi", "12"}),
             "gen");
        const auto train_flags = f.data_flags() + f.model_flags() +
                                 std::vector<std::string>{"--epochs", "2", "--batch-size", "8"};
        must(run(std::vector<std::string>{"train"} + train_flags +
                 std::vector<std::string>{"--head", "ac", "--checkpoint-out", f.ac_ckpt}),
             "train ac");
        must(run(std::vector<std::string>{"train"} + train_flags +
                 std::vector<std::string>{"--head", "oe", "--checkpoint-out", f.oe_ckpt}),
             "train oe");
        return f;
    }();
    return f;
}

fs::path fresh_dir(const std::string& name) {
    fs::path d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("config precedence is flag over file over default") {
    const fs::path dir = fresh_dir("docdate_cli_prec");
    const std::string file = (dir / "run.cfg").string();
    write_text(file, "# comment\nlr = 0.5\nepochs = 7\n\nhead = oe  # trailing comment\n");

    ParsedCli p = parse_cli({"train", "--config", file, "--lr", "0.25"});
    CHECK(p.subcommand == "train");
    CHECK(p.config.get_double("lr") == 0.25);     // flag wins
    CHECK(p.config.get_int("epochs") == 7);       // file wins over default
    CHECK(p.config.get("head") == "oe");          // file
    CHECK(p.config.get_int("batch_size") == 32);  // default
}

TEST_CASE("flag forms: --key=value, dash normalization, bare --dump-splits") {
    ParsedCli p = parse_cli({"gen", "--doc-len-lo=5", "--num-docs", "9", "--dump-splits"});
    CHECK(p.config.get_int("doc_len_lo") == 5);
    CHECK(p.config.get_int("num_docs") == 9);
    CHECK(p.config.get_bool("dump_splits"));
    ParsedCli q = parse_cli({"eval", "--dump-splits", "false"});
    CHECK_FALSE(q.config.get_bool("dump_splits"));
}

TEST_CASE("unknown or malformed configuration is rejected") {
    CHECK_THROWS_AS(parse_cli({"train", "--no-such-key", "1"}), ConfigError);
    CHECK_THROWS_AS(parse_cli({"train", "stray"}), ConfigError);
    CHECK_THROWS_AS(parse_cli({"train", "--lr"}), ConfigError);  // missing value
    CHECK_THROWS_AS(parse_cli({"train", "--config", "/no/such/file.cfg"}), ConfigError);
    CHECK_THROWS_AS(parse_cli({}), ConfigError);

    const fs::path dir = fresh_dir("docdate_cli_badcfg");
    const std::string bad_key = (dir / "bad_key.cfg").string();
    write_text(bad_key, "momentum = 0.9\n");
    CHECK_THROWS_WITH_AS(parse_cli({"train", "--config", bad_key}),
                         doctest::Contains("momentum"), ConfigError);
    const std::string bad_line = (dir / "bad_line.cfg").string();
    write_text(bad_line, "epochs 7\n");
    CHECK_THROWS_AS(parse_cli({"train", "--config", bad_line}), ConfigError);
}

TEST_CASE("typed getters validate their values") {
    RunConfig cfg;
    cfg.set("epochs", "abc");
    CHECK_THROWS_AS(cfg.get_int("epochs"), ConfigError);
    cfg.set("lr", "fast");
    CHECK_THROWS_AS(cfg.get_double("lr"), ConfigError);
    cfg.set("dump_splits", "maybe");
    CHECK_THROWS_AS(cfg.get_bool("dump_splits"), ConfigError);
    cfg.set("seed", "-4");
    CHECK_THROWS_AS(cfg.get_u64("seed"), ConfigError);
    CHECK_THROWS_AS(cfg.set("bogus", "1"), ConfigError);
    CHECK_THROWS_AS(cfg.get("bogus"), ConfigError);
}

TEST_CASE("gen writes one corpus line per document, deterministically") {
    const fs::path dir = fresh_dir("docdate_cli_gen");
    auto flags = [&](const std::string& stem) {
        return std::vector<std::string>{"gen",        "--corpus",    (dir / (stem + ".jsonl")).string(),
                                        "--embeddings", (dir / (stem + ".txt")).string(),
                                        "--num-docs", "17",          "--embed-dim", "6",
                                        "--seed",     "5"};
    };
    CliRun a = run(flags("a"));
    REQUIRE(a.exit_code == 0);
    CHECK(read_lines((dir / "a.jsonl").string()).size() == 17);
    CHECK(a.out.find("documents 17") != std::string::npos);

    CliRun b = run(flags("b"));
    REQUIRE(b.exit_code == 0);
    CHECK(read_bytes((dir / "a.jsonl").string()) == read_bytes((dir / "b.jsonl").string()));
    CHECK(read_bytes((dir / "a.txt").string()) == read_bytes((dir / "b.txt").string()));
}

TEST_CASE("gen rejects a backwards year range before writing anything") {
    const fs::path dir = fresh_dir("docdate_cli_genbad");
    const std::string corpus = (dir / "never.jsonl").string();
    CliRun r = run({"gen", "--corpus", corpus, "--embeddings", (dir / "never.txt").string(),
                    "--start-year", "1995", "--end-year", "1990"});
    CHECK(r.exit_code == 1);
    CHECK_FALSE(fs::exists(corpus));
}

TEST_CASE("train writes a checkpoint and one metrics row per epoch") {
    const Fixture& f = fixture();
    CHECK(fs::exists(f.ac_ckpt));
    CHECK(fs::exists(f.oe_ckpt));

    const fs::path dir = fresh_dir("docdate_cli_train");
    const std::string metrics = (dir / "metrics.txt").string();
    CliRun r = run(std::vector<std::string>{"train"} + f.data_flags() + f.model_flags() +
                   std::vector<std::string>{"--epochs", "3", "--batch-size", "8", "--checkpoint-out",
                                            (dir / "m.ckpt").string(), "--metrics-out", metrics});
    REQUIRE(r.exit_code == 0);
    const auto rows = read_lines(metrics);
    REQUIRE(rows.size() == 3);
    for (const auto& row : rows) CHECK(row.rfind("epoch ", 0) == 0);
    CHECK(r.out.find("best_epoch ") != std::string::npos);
}

TEST_CASE("train names a missing embeddings path") {
    const Fixture& f = fixture();
    CliRun r = run({"train", "--corpus", f.corpus, "--embeddings", "/no/such/embeds.txt"});
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("/no/such/embeds.txt") != std::string::npos);
}

TEST_CASE("eval is deterministic and reports on the test split") {
    const Fixture& f = fixture();
    const fs::path dir = fresh_dir("docdate_cli_eval");
    auto eval_args = [&](const std::string& report) {
        return std::vector<std::string>{"eval", "--eval-head", "ac", "--checkpoint", f.ac_ckpt,
                                        "--report-out", report} +
               f.data_flags();
    };
    CliRun a = run(eval_args((dir / "r1.txt").string()));
    REQUIRE(a.exit_code == 0);
    CliRun b = run(eval_args((dir / "r2.txt").string()));
    REQUIRE(b.exit_code == 0);
    CHECK(read_bytes((dir / "r1.txt").string()) == read_bytes((dir / "r2.txt").string()));

    const auto lines = read_lines((dir / "r1.txt").string());
    REQUIRE(!lines.empty());
    CHECK(lines[0] == "documents 4");  // 40 docs -> floor(40/10) test documents
    int preds = 0;
    for (const auto& l : lines) preds += l.rfind("pred ", 0) == 0 ? 1 : 0;
    CHECK(preds == 4);
}

TEST_CASE("ensemble eval at lambda 1 equals the AC head's report") {
    const Fixture& f = fixture();
    const fs::path dir = fresh_dir("docdate_cli_ens");
    CliRun ac = run(std::vector<std::string>{"eval", "--eval-head", "ac", "--checkpoint", f.ac_ckpt,
                                             "--report-out", (dir / "ac.txt").string()} +
                    f.data_flags());
    REQUIRE(ac.exit_code == 0);
    CliRun ens = run(std::vector<std::string>{"eval", "--eval-head", "ensemble", "--ac-checkpoint",
                                              f.ac_ckpt, "--oe-checkpoint", f.oe_ckpt, "--lambda", "1",
                                              "--report-out", (dir / "ens.txt").string()} +
                     f.data_flags());
    REQUIRE(ens.exit_code == 0);
    CHECK(read_bytes((dir / "ac.txt").string()) == read_bytes((dir / "ens.txt").string()));

    CliRun bad = run(std::vector<std::string>{"eval", "--eval-head", "ensemble", "--ac-checkpoint",
                                              f.ac_ckpt, "--oe-checkpoint", f.oe_ckpt, "--lambda", "1.5"} +
                     f.data_flags());
    CHECK(bad.exit_code == 1);
}

TEST_CASE("bucketed eval emits bucket rows") {
    const Fixture& f = fixture();
    CliRun r = run(std::vector<std::string>{"eval", "--eval-head", "ac", "--checkpoint", f.ac_ckpt,
                                            "--bucket-key", "token_count", "--bucket-edges", "0,10,32"} +
                   f.data_flags());
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("bucket ") != std::string::npos);

    CliRun bad = run(std::vector<std::string>{"eval", "--eval-head", "ac", "--checkpoint", f.ac_ckpt,
                                              "--bucket-key", "token_count"} +
                     f.data_flags());
    CHECK(bad.exit_code == 1);  // bucket_edges required
}

TEST_CASE("tune refuses the test split and ties break toward lambda 0") {
    const Fixture& f = fixture();
    CliRun refused = run(std::vector<std::string>{"tune", "--ac-checkpoint", f.ac_ckpt, "--oe-checkpoint",
                                                  f.oe_ckpt, "--tune-split", "test"} +
                         f.data_flags());
    CHECK(refused.exit_code == 1);
    CHECK(refused.err.find("test split") != std::string::npos);

    CliRun unknown = run(std::vector<std::string>{"tune", "--ac-checkpoint", f.ac_ckpt, "--oe-checkpoint",
                                                  f.oe_ckpt, "--tune-split", "holdout"} +
                         f.data_flags());
    CHECK(unknown.exit_code == 1);

    // Identical checkpoints on both sides: the curve is flat, so the tie
    // rule selects lambda 0.
    CliRun tied = run(std::vector<std::string>{"tune", "--ac-checkpoint", f.ac_ckpt, "--oe-checkpoint",
                                               f.ac_ckpt, "--grid-step", "0.5"} +
                      f.data_flags());
    REQUIRE(tied.exit_code == 0);
    CHECK(tied.out.rfind("lambda_star 0\n", 0) == 0);
}

TEST_CASE("mcnemar reports discordant counts; identical heads are degenerate") {
    const Fixture& f = fixture();
    CliRun r = run(std::vector<std::string>{"mcnemar", "--ac-checkpoint", f.ac_ckpt, "--oe-checkpoint",
                                            f.oe_ckpt} +
                   f.data_flags());
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("b ") != std::string::npos);
    CHECK(r.out.find("p_value ") != std::string::npos);

    CliRun deg = run(std::vector<std::string>{"mcnemar", "--ac-checkpoint", f.ac_ckpt, "--oe-checkpoint",
                                              f.ac_ckpt} +
                     f.data_flags());
    REQUIRE(deg.exit_code == 0);
    CHECK(deg.out.find("degenerate true") != std::string::npos);
    CHECK(deg.out.find("p_value 1") != std::string::npos);
}

TEST_CASE("exported AC attention sums to 1 over the document's tokens") {
    const Fixture& f = fixture();
    const std::vector<Document> docs = load_corpus(f.corpus);
    const std::string id = docs.front().id;
    CliRun r = run(std::vector<std::string>{"export-attention", "--eval-head", "ac", "--checkpoint",
                                            f.ac_ckpt, "--doc-id", id} +
                   f.data_flags());
    REQUIRE(r.exit_code == 0);

    std::istringstream in(r.out);
    std::string line;
    double sum = 0.0;
    std::size_t pairs = 0;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag, idx, token;
        double w = 0.0;
        REQUIRE((ls >> tag >> idx >> token >> w));
        CHECK(tag == "ac");
        sum += w;
        ++pairs;
    }
    CHECK(pairs == docs.front().tokens.size());
    CHECK(std::fabs(sum - 1.0) <= 1e-9);
}

TEST_CASE("exported OE attention normalizes per layer, node, and label") {
    const Fixture& f = fixture();
    const std::vector<Document> docs = load_corpus(f.corpus);
    const std::string id = docs.front().id;
    CliRun r = run(std::vector<std::string>{"export-attention", "--eval-head", "oe", "--checkpoint",
                                            f.oe_ckpt, "--doc-id", id} +
                   f.data_flags());
    REQUIRE(r.exit_code == 0);

    std::map<std::string, double> group_sums;
    int avg_rows = 0;
    std::istringstream in(r.out);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag, kind;
        REQUIRE((ls >> tag >> kind));
        REQUIRE(tag == "oe");
        if (kind == "avg") {
            ++avg_rows;
            continue;
        }
        REQUIRE(kind == "layer");
        std::string layer, src, dst, label;
        double w = 0.0;
        REQUIRE((ls >> layer >> src >> dst >> label >> w));
        group_sums[layer + " " + src + " " + label] += w;
    }
    REQUIRE(!group_sums.empty());
    for (const auto& [group, sum] : group_sums) {
        CAPTURE(group);
        CHECK(std::fabs(sum - 1.0) <= 1e-9);
    }
    CHECK(avg_rows > 0);
}

TEST_CASE("a single-token document exports one attention pair of weight 1") {
    const Fixture& f = fixture();
    const fs::path dir = fresh_dir("docdate_cli_solo");
    Document solo;
    solo.id = "solo0001";
    solo.year = 1995;
    solo.tokens = {"word"};
    const std::string corpus = (dir / "solo.jsonl").string();
    const std::string embeds = (dir / "solo.txt").string();
    write_corpus(corpus, {solo});
    write_embedding_file(embeds, {"word"}, 8, 1);

    CliRun r = run({"export-attention", "--eval-head", "ac", "--checkpoint", f.ac_ckpt, "--doc-id",
                    "solo0001", "--corpus", corpus, "--embeddings", embeds, "--embed-dim", "8"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out == "ac 0 word 1\n");
}

TEST_CASE("export-attention rejects an unknown document id at runtime") {
    const Fixture& f = fixture();
    CliRun r = run(std::vector<std::string>{"export-attention", "--eval-head", "ac", "--checkpoint",
                                            f.ac_ckpt, "--doc-id", "nope"} +
                   f.data_flags());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("nope") != std::string::npos);
}

TEST_CASE("dump-splits materializes the 80/10/10 membership") {
    const Fixture& f = fixture();
    CliRun r = run(std::vector<std::string>{"eval", "--eval-head", "ac", "--checkpoint", f.ac_ckpt,
                                            "--dump-splits", "--report-out", "/dev/null"} +
                   f.data_flags());
    REQUIRE(r.exit_code == 0);
    int train_n = 0, val_n = 0, test_n = 0;
    std::istringstream in(r.out);
    std::string line;
    while (std::getline(in, line)) {
        train_n += line.rfind("split train ", 0) == 0 ? 1 : 0;
        val_n += line.rfind("split validation ", 0) == 0 ? 1 : 0;
        test_n += line.rfind("split test ", 0) == 0 ? 1 : 0;
    }
    CHECK(train_n == 32);
    CHECK(val_n == 4);
    CHECK(test_n == 4);
}

TEST_CASE("grad-check passes for all heads from the command line") {
    CliRun r = run({"grad-check", "--seed", "11"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("head ac ") != std::string::npos);
    CHECK(r.out.find("head oe ") != std::string::npos);
    CHECK(r.out.find("head joint ") != std::string::npos);
    CHECK(r.out.find("fail") == std::string::npos);
}

TEST_CASE("usage and exit statuses") {
    CHECK(run({}).exit_code == 1);
    CHECK(run({"bogus"}).exit_code == 1);
    CliRun help = run({"help"});
    CHECK(help.exit_code == 0);
    CHECK(help.out.find("subcommands") != std::string::npos);
    CHECK(help.out.find("grid_step") != std::string::npos);
}
