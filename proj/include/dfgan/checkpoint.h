#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dfgan/param_store.h"
#include "dfgan/train.h"

namespace dfgan {

inline constexpr char kCheckpointMagic[8] = {'D', 'F', 'G', 'C', 'K', 'P', 'T', '1'};
inline constexpr int kCheckpointVersion = 1;

/// Named parameter stores plus free-form metadata.
struct Checkpoint {
  std::vector<std::pair<std::string, ParamStore>> stores;
  nlohmann::json meta = nlohmann::json::object();
};

/// Layout: 8-byte magic, uint64 little-endian header length, JSON header
/// (array names, shapes, byte offsets, endianness tag, metadata), then raw
/// little-endian float64 values. Written to a temporary file and renamed.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Reads a file written by save_checkpoint. Any inconsistency throws IoError
/// with the byte offset; nothing is returned on failure.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

/// Networks, optimizer moments, RNG streams and the iteration counter.
Checkpoint checkpoint_from_state(const TrainState& state);

/// Copies a checkpoint into a freshly initialized state of the same
/// configuration; names and shapes must match exactly.
void restore_state(TrainState& state, const Checkpoint& ckpt);

}  // namespace dfgan
