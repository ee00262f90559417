#include "docdate/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "docdate/errors.hpp"

namespace docdate {

namespace {

const char* kMagic = "docdate-checkpoint";

std::string hexfloat(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

double parse_double(const std::string& s, const std::string& what) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') throw ParseError("checkpoint: bad " + what + " '" + s + "'");
    return v;
}

std::int64_t parse_int(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("checkpoint: bad " + what + " '" + s + "'");
    }
}

// Line reader that treats EOF as truncation.
struct Lines {
    std::istream& in;
    int line_no = 0;

    std::string next(const char* what) {
        std::string line;
        if (!std::getline(in, line)) throw ParseError("truncated checkpoint: missing " + std::string(what));
        ++line_no;
        return line;
    }
};

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream is(line);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& rng_state, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
    const ModelConfig& c = model.config;
    out << kMagic << ' ' << kCheckpointVersion << '\n';
    out << "config embed_dim " << c.embed_dim << '\n';
    out << "config lstm_hidden " << c.lstm_hidden << '\n';
    out << "config k_syn " << c.k_syn << '\n';
    out << "config attn_pool_dim " << c.attn_pool_dim << '\n';
    out << "config attn_feat_dim " << c.attn_feat_dim << '\n';
    out << "config fc_dim " << c.fc_dim << '\n';
    out << "config num_at_layers " << c.num_at_layers << '\n';
    out << "config num_classes " << c.num_classes << '\n';
    out << "config keep_prob " << hexfloat(c.keep_prob) << '\n';
    out << "rng " << rng_state << '\n';
    out << "params " << model.params.size() << '\n';
    for (const auto& name : model.params.names()) {
        const Tensor& p = model.params.get(name);
        out << "param " << name << ' ' << p.rank();
        for (int d = 0; d < p.rank(); ++d) out << ' ' << p.dim(d);
        out << '\n';
        for (std::int64_t i = 0; i < p.size(); ++i) out << (i ? " " : "") << hexfloat(p[i]);
        out << '\n';
    }
    out << "end\n";
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read checkpoint '" + path + "'");
    Lines lines{in};

    const auto header = split_ws(lines.next("header"));
    if (header.size() != 2 || header[0] != kMagic)
        throw ParseError("'" + path + "' is not a checkpoint file");
    if (const std::int64_t version = parse_int(header[1], "version"); version != kCheckpointVersion)
        throw ParseError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                         std::to_string(kCheckpointVersion) + ")");

    ModelConfig config;
    int config_keys = 0;
    std::string line;
    for (;;) {
        line = lines.next("config");
        const auto f = split_ws(line);
        if (f.empty()) throw ParseError("checkpoint: blank line in config section");
        if (f[0] != "config") break;
        if (f.size() != 3) throw ParseError("checkpoint: malformed config line '" + line + "'");
        const std::string& key = f[1];
        const std::string& value = f[2];
        if (key == "embed_dim") config.embed_dim = parse_int(value, key);
        else if (key == "lstm_hidden") config.lstm_hidden = parse_int(value, key);
        else if (key == "k_syn") config.k_syn = parse_int(value, key);
        else if (key == "attn_pool_dim") config.attn_pool_dim = parse_int(value, key);
        else if (key == "attn_feat_dim") config.attn_feat_dim = parse_int(value, key);
        else if (key == "fc_dim") config.fc_dim = parse_int(value, key);
        else if (key == "num_at_layers") config.num_at_layers = static_cast<int>(parse_int(value, key));
        else if (key == "num_classes") config.num_classes = static_cast<int>(parse_int(value, key));
        else if (key == "keep_prob") config.keep_prob = parse_double(value, key);
        else throw ParseError("checkpoint: unknown config key '" + key + "'");
        ++config_keys;
    }
    if (config_keys != 9) throw ParseError("checkpoint: incomplete config section");
    config.validate();

    // `line` now holds the rng record (keep the state verbatim, it may
    // contain any number of fields).
    if (line.rfind("rng ", 0) != 0) throw ParseError("checkpoint: expected rng record, got '" + line + "'");
    std::string rng_state = line.substr(4);

    const auto pc = split_ws(lines.next("params count"));
    if (pc.size() != 2 || pc[0] != "params") throw ParseError("checkpoint: expected params count");
    const std::int64_t count = parse_int(pc[1], "params count");

    Model model;
    model.config = config;
    for (std::int64_t i = 0; i < count; ++i) {
        const auto head = split_ws(lines.next("param header"));
        if (head.size() < 3 || head[0] != "param")
            throw ParseError("checkpoint: malformed param header at line " + std::to_string(lines.line_no));
        const std::string& name = head[1];
        const std::int64_t rank = parse_int(head[2], "rank");
        if (rank < 1 || head.size() != 3 + static_cast<std::size_t>(rank))
            throw ParseError("checkpoint: malformed shape for parameter '" + name + "'");
        Shape shape;
        for (std::int64_t d = 0; d < rank; ++d)
            shape.push_back(parse_int(head[3 + static_cast<std::size_t>(d)], "extent"));
        Tensor value = Tensor::zeros(shape);
        const auto vals = split_ws(lines.next("parameter values"));
        if (static_cast<std::int64_t>(vals.size()) != value.size())
            throw ParseError("checkpoint: parameter '" + name + "' has " + std::to_string(vals.size()) +
                             " values, expected " + std::to_string(value.size()));
        for (std::int64_t j = 0; j < value.size(); ++j)
            value[j] = parse_double(vals[static_cast<std::size_t>(j)], "value of " + name);
        model.params.add(name, std::move(value));
    }
    if (lines.next("end marker") != "end") throw ParseError("truncated checkpoint: missing end marker");

    // The stored layout must be exactly the one this config describes.
    std::size_t index = 0;
    const auto& names = model.params.names();
    for_each_param_spec(config, [&](const std::string& name, std::int64_t rows, std::int64_t cols, bool) {
        if (index >= names.size() || names[index] != name)
            throw ParseError("checkpoint does not match its config: expected parameter '" + name + "'");
        const Tensor& p = model.params.get(name);
        if (p.rank() != 2 || p.rows() != rows || p.cols() != cols)
            throw ParseError("checkpoint: parameter '" + name + "' has shape " + shape_str(p.shape()) +
                             ", config requires [" + std::to_string(rows) + " x " + std::to_string(cols) +
                             "]");
        ++index;
    });
    if (index != names.size())
        throw ParseError("checkpoint does not match its config: unexpected parameter '" + names[index] +
                         "'");

    return {std::move(model), std::move(rng_state)};
}

}  // namespace docdate
