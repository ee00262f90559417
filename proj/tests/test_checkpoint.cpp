#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "docdate/checkpoint.hpp"
#include "docdate/rng.hpp"

using namespace docdate;

namespace {

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

ModelConfig tiny_config() {
    ModelConfig c;
    c.embed_dim = 3;
    c.lstm_hidden = 2;
    c.k_syn = 2;
    c.attn_pool_dim = 2;
    c.attn_feat_dim = 2;
    c.fc_dim = 2;
    c.num_at_layers = 1;
    c.num_classes = 2;
    c.keep_prob = 0.8;
    return c;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    return a.same_shape(b) &&
           std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path);
    for (const auto& l : lines) out << l << '\n';
}

std::string current_rng_state() {
    std::mt19937_64 g(42);
    g.discard(17);
    std::ostringstream os;
    os << g;
    return os.str();
}

}  // namespace

TEST_CASE("checkpoint round-trip is bit-exact") {
    Model m = Model::init(tiny_config(), 12);
    // Adversarial values: negative zero, a denormal, a huge magnitude, and
    // non-terminating binary fractions.
    m.params.get("ac.cls.b")[0] = -0.0;
    m.params.get("ac.cls.b")[1] = 5e-324;
    m.params.get("oe.h_dct0")[0] = -1.0 / 3.0;
    m.params.get("oe.h_dct0")[1] = 1.7976931348623157e308;

    const std::string path = tmp_path("docdate_ckpt_roundtrip.txt");
    const std::string rng_state = current_rng_state();
    save_checkpoint(m, rng_state, path);
    LoadedCheckpoint back = load_checkpoint(path);

    CHECK(back.model.config == m.config);
    CHECK(back.rng_state == rng_state);
    REQUIRE(back.model.params.names() == m.params.names());
    for (const auto& name : m.params.names())
        CHECK(bitwise_equal(back.model.params.get(name), m.params.get(name)));
    std::filesystem::remove(path);
}

TEST_CASE("save-load preserves a second generation too") {
    // Values that went through one text round-trip survive another
    // unchanged, i.e. serialization is idempotent on its own output.
    Model m = Model::init(tiny_config(), 3);
    const std::string p1 = tmp_path("docdate_ckpt_gen1.txt");
    const std::string p2 = tmp_path("docdate_ckpt_gen2.txt");
    save_checkpoint(m, "0 1 2", p1);
    LoadedCheckpoint g1 = load_checkpoint(p1);
    save_checkpoint(g1.model, g1.rng_state, p2);
    CHECK(read_lines(p1) == read_lines(p2));
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("missing file is an io error") {
    CHECK_THROWS_AS(load_checkpoint(tmp_path("docdate_ckpt_does_not_exist.txt")), IoError);
}

TEST_CASE("truncated checkpoint is rejected") {
    Model m = Model::init(tiny_config(), 1);
    const std::string path = tmp_path("docdate_ckpt_trunc.txt");
    save_checkpoint(m, "0", path);
    auto lines = read_lines(path);
    // Cut right after the params count: the first param header is missing.
    std::vector<std::string> cut;
    for (const auto& l : lines) {
        cut.push_back(l);
        if (l.rfind("params ", 0) == 0) break;
    }
    write_lines(path, cut);
    try {
        load_checkpoint(path);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }

    // Dropping only the end marker is also truncation.
    lines.pop_back();
    write_lines(path, lines);
    CHECK_THROWS_AS(load_checkpoint(path), ParseError);
    std::filesystem::remove(path);
}

TEST_CASE("version and magic mismatches are rejected") {
    Model m = Model::init(tiny_config(), 1);
    const std::string path = tmp_path("docdate_ckpt_version.txt");
    save_checkpoint(m, "0", path);
    auto lines = read_lines(path);

    auto with_header = [&](const std::string& header) {
        auto copy = lines;
        copy[0] = header;
        write_lines(path, copy);
    };
    with_header("docdate-checkpoint 2");
    try {
        load_checkpoint(path);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("version") != std::string::npos);
    }
    with_header("some-other-format 1");
    CHECK_THROWS_AS(load_checkpoint(path), ParseError);
    std::filesystem::remove(path);
}

TEST_CASE("corrupted records are rejected") {
    Model m = Model::init(tiny_config(), 1);
    const std::string path = tmp_path("docdate_ckpt_corrupt.txt");

    auto corrupt = [&](auto mutate) {
        save_checkpoint(m, "0", path);
        auto lines = read_lines(path);
        mutate(lines);
        write_lines(path, lines);
        CHECK_THROWS_AS(load_checkpoint(path), ParseError);
    };
    // Unknown config key.
    corrupt([](auto& lines) { lines[1] = "config momentum 0.9"; });
    // A value line with a value chopped off.
    corrupt([](auto& lines) {
        for (auto& l : lines)
            if (l.rfind("0x", 0) == 0 || l.rfind("-0x", 0) == 0) {
                l = l.substr(0, l.rfind(' '));
                break;
            }
    });
    // A parameter renamed away from the layout.
    corrupt([](auto& lines) {
        for (auto& l : lines)
            if (l.rfind("param sgcn.w0 ", 0) == 0) {
                l = "param sgcn.wX 2 4 2";
                break;
            }
    });
    // Garbage where a value should be.
    corrupt([](auto& lines) {
        for (auto& l : lines)
            if (l.rfind("0x", 0) == 0 || l.rfind("-0x", 0) == 0) {
                l[l.size() / 2] = 'z';
                break;
            }
    });
    std::filesystem::remove(path);
}
