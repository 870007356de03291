#pragma once

#include <cstdint>
#include <string>

#include "nnsolve/fnn.hpp"

namespace nnsolve {

/// Loaded parameter snapshot plus the seed the run was started with.
struct Checkpoint {
    NetworkParams params;
    std::uint64_t seed = 0;
};

/// Binary layout (little-endian): magic "FNNCKPT1", u32 L, u32 M, u32 d,
/// u64 seed, then param_count f64 values in the NetworkParams flat order.
void save_checkpoint(const std::string& path, const NetworkParams& params, std::uint64_t seed);

Checkpoint load_checkpoint(const std::string& path);

} // namespace nnsolve
