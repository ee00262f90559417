#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "docdate/errors.hpp"
#include "docdate/tensor.hpp"

namespace docdate {

// The five temporal relation labels a corpus may carry. Inverse labels exist
// only inside the temporal graph, never in files.
enum class TemporalLabel { After, Before, Simultaneous, Includes, IsIncluded };

inline constexpr int kNumTemporalLabels = 5;

const std::string& temporal_label_name(TemporalLabel l);
TemporalLabel temporal_label_from(const std::string& name);  // throws ParseError

struct DepEdge {
    int head = 0;
    int dependent = 0;
    std::string relation;
    bool operator==(const DepEdge&) const = default;
};

enum class NodeKind { Event, Time };

struct TemporalNode {
    int token_idx = 0;
    NodeKind kind = NodeKind::Event;
    bool operator==(const TemporalNode&) const = default;
};

// Reference to a temporal node or the document creation time sentinel.
struct NodeRef {
    int idx = -1;
    bool is_dct = false;
    static NodeRef dct() { return NodeRef{-1, true}; }
    static NodeRef node(int i) { return NodeRef{i, false}; }
    bool operator==(const NodeRef&) const = default;
};

struct TemporalEdge {
    NodeRef src;
    NodeRef dst;
    TemporalLabel label = TemporalLabel::After;
    bool operator==(const TemporalEdge&) const = default;
};

struct Document {
    std::string id;
    std::vector<std::string> tokens;  // length n >= 1
    std::vector<DepEdge> dep_edges;
    std::vector<TemporalNode> temporal_nodes;
    std::vector<TemporalEdge> temporal_edges;
    int year = 0;

    int n_tokens() const { return static_cast<int>(tokens.size()); }
    bool operator==(const Document&) const = default;
};

// Structural validation of every Document invariant that does not need the
// dataset's year range. Throws ParseError naming the offending field;
// `where` prefixes messages (e.g. "line 7").
void validate_document(const Document& d, const std::string& where = "");

// One JSON object per line; see serialize_document for the canonical form.
Document parse_document(const std::string& line, int line_no = 0);
std::string serialize_document(const Document& d);  // single line, no newline

std::vector<Document> load_corpus(const std::string& path);
void write_corpus(const std::string& path, const std::vector<Document>& docs);

// ---- embeddings ----

struct EmbeddingTable {
    std::unordered_map<std::string, std::int64_t> vocab;  // word -> row
    Tensor matrix;  // V x k
    Tensor unk;     // 1 x k, returned for out-of-vocabulary words
    Tensor pad;     // 1 x k, reserved (no padding is used anywhere)

    std::int64_t size() const { return matrix.rows(); }
    std::int64_t dim() const { return matrix.cols(); }
    // Row index for a word, or -1 when absent.
    std::int64_t index_of(const std::string& word) const;
};

// Text format: header "V k", then V lines of "word v1 ... vk".
EmbeddingTable load_embeddings(const std::string& path);
// Same, enforcing the configured width.
EmbeddingTable load_embeddings(const std::string& path, std::int64_t expected_k);

// Deterministic random table over a word list (frozen, file round-trippable).
void write_embedding_file(const std::string& path, const std::vector<std::string>& words, std::int64_t k,
                          std::uint64_t seed);

// Sorted distinct tokens across a corpus.
std::vector<std::string> corpus_vocabulary(const std::vector<Document>& docs);

// ---- splits ----

struct DatasetSplit {
    std::vector<Document> train;
    std::vector<Document> validation;
    std::vector<Document> test;
    int start_year = 0;
    int end_year = 0;
    int num_classes() const { return end_year - start_year + 1; }
};

// Deterministic shuffle by seed, then 80/10/10 partition (validation and test
// take floor(n/10) each). Year range is derived from the documents.
DatasetSplit split_dataset(const std::vector<Document>& docs, std::uint64_t seed);

}  // namespace docdate
