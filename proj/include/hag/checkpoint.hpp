#pragma once

// Binary checkpoint: 8-byte magic "HAGCKPT\0", u32 version, u64 header
// length, JSON header, little-endian float64 payload, CRC-32 of all
// preceding bytes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "hag/autodiff.hpp"
#include "hag/config.hpp"
#include "hag/model.hpp"

namespace hag {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TensorBlob {
  std::string name;
  Shape shape;
  std::vector<double> data;
};

struct Checkpoint {
  RunConfig config;
  ModelDims dims;
  nlohmann::json vocab;    // vocabularies and id maps
  nlohmann::json trainer;  // optimizer counters, RNG state, history; null when absent
  std::vector<TensorBlob> tensors;

  const TensorBlob* find(const std::string& name) const;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws CheckpointError on bad magic, version mismatch, truncation or CRC mismatch.
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Model parameters under their registered names.
void add_model_tensors(Checkpoint& ckpt, const HagModel& model, const std::string& prefix = "");
// Copies tensors named prefix + parameter name into the model. Throws
// CheckpointError on a missing tensor, a shape mismatch or, when `strict`,
// on an unknown tensor under the prefix.
void load_model_tensors(const Checkpoint& ckpt, HagModel& model, const std::string& prefix = "", bool strict = true);

}  // namespace hag
