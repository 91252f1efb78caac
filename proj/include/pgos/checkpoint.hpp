#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pgos/types.hpp"

namespace pgos {

/// Shared container format for embedder / policy / detector checkpoints:
/// JSON with shape-tagged tensors, a kind tag, the config hash and seed,
/// plus a small scalar metadata map.
struct Checkpoint {
  std::string kind;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::map<std::string, double> meta;
  std::map<std::string, Matrix> tensors;
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Copies every named tensor into the destination slots, validating names
/// and shapes.
void restore_tensors(const Checkpoint& ckpt,
                     const std::vector<std::pair<std::string, Matrix*>>& slots);
void store_tensors(Checkpoint& ckpt,
                   const std::vector<std::pair<std::string, Matrix*>>& slots);

}  // namespace pgos
