#pragma once

#include <cstdint>
#include <string>

#include "mmn/network.hpp"

namespace mmn {

// Checkpoint file layout (bit-exact):
//   magic line        "MMN-CKPT\n"
//   header line       one compact JSON object + '\n', carrying the network
//                     spec and a tensor table {name, shape, offset} where
//                     offsets are byte positions relative to the start of the
//                     data section
//   data section      raw little-endian float32, row-major, in header order
std::string serialize_network(const Network<float>& net);
Network<float> deserialize_network(const std::string& bytes);

void save_checkpoint(const Network<float>& net, const std::string& path);
Network<float> load_checkpoint(const std::string& path);

// FNV-1a over the serialized bytes; the freeze-invariance checks compare this.
std::uint64_t checkpoint_hash(const Network<float>& net);

}  // namespace mmn
