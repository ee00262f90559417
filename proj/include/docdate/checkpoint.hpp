#pragma once

#include <string>

#include "docdate/model.hpp"

namespace docdate {

inline constexpr int kCheckpointVersion = 1;

// Versioned text container: config snapshot, generator state, then every
// named parameter with its shape and row-major values in C99 hexfloat, so a
// round-trip is bit-exact.
void save_checkpoint(const Model& model, const std::string& rng_state, const std::string& path);

struct LoadedCheckpoint {
    Model model;
    std::string rng_state;
};

// Errors: IoError when the file cannot be read; ParseError for a wrong
// magic/version, truncation, or any layout mismatch against the embedded
// config.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace docdate
