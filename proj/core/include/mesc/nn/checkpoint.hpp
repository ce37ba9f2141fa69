#pragma once

#include <string>
#include <vector>

#include "mesc/nn/tensor.hpp"

namespace mesc::nn {

// Checkpoint file layout: magic "MESC", version u32, tensor count u64, then
// per-tensor records (name as u32 length + UTF-8 bytes; rank u64; dims u64 each;
// row-major little-endian float32 data).
void save_checkpoint(const std::string& path, const std::vector<NamedParam>& params);

// Loads all records into fresh tensors (requires_grad = false).
std::vector<NamedParam> load_checkpoint(const std::string& path);

// Fills existing parameters by name; throws if a parameter is missing from the
// file or a shape disagrees. Extra records in the file are an error too, so a
// checkpoint always matches the model that reads it.
void load_checkpoint_into(const std::string& path, const std::vector<NamedParam>& params);

}  // namespace mesc::nn
