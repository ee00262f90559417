#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "docdate/corpus.hpp"

namespace docdate {

struct SyntheticConfig {
    int num_docs = 100;
    int start_year = 1995;
    int end_year = 2002;
    int doc_len_lo = 12;
    int doc_len_hi = 24;
    double signal_strength = 1.0;  // in [0, 1]
    std::uint64_t seed = 1;
};

// Corpus with two independently planted dating signals:
//  - lexical: topic words tied to a year bucket (context-head signal);
//  - temporal: a time node whose token is the year before the gold year,
//    linked BEFORE the DCT (event-head signal).
// Each signal is independently corrupted with probability 1 - signal_strength
// by resampling its year uniformly, so signal_strength = 0 is chance level.
std::vector<Document> gen_synthetic(const SyntheticConfig& cfg);

// Conventions the planted signals use, exposed so oracles can invert them.
std::string topic_word(int year, int j);  // j in [0, topic_words_per_doc)
inline constexpr int topic_words_per_doc = 3;
std::string time_token(int time_year);  // the surface form of a time mention

}  // namespace docdate
