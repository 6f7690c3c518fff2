#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "eventaware/model.hpp"
#include "eventaware/tokenizer.hpp"

namespace eventaware {

// Binary layout, all little-endian:
//   8 bytes  magic "EVAWMDL\0"
//   u32      format version
//   u64 x 8  vocab_size d_model n_heads n_layers d_ff max_len n_classes n_segments
//   f64 x 2  dropout_rate ln_epsilon
//   f64 ...  parameters in Parameters::tensors() order, each tensor row-major
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_model(std::ostream& out, const Model& model);
Model read_model(std::istream& in);

/// Sidecar metadata stored next to the binary as JSON.
struct CheckpointMeta {
  ModelConfig config;
  Encoding encoding = Encoding::event_aware;
  std::string vocab_hash;
  std::vector<std::string> labels;
  std::vector<std::string> events;
};

std::string meta_to_json(const CheckpointMeta& meta);
CheckpointMeta meta_from_json(const std::string& text);

/// Writes <path> and <path>.json.
void save_checkpoint(const std::filesystem::path& path, const Model& model, const CheckpointMeta& meta);

struct LoadedCheckpoint {
  Model model;
  CheckpointMeta meta;
};

/// Throws Error(compatibility) when the sidecar disagrees with the binary.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace eventaware
