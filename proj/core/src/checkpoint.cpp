#include "mesc/nn/checkpoint.hpp"

#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "mesc/io_util.hpp"

namespace mesc::nn {

namespace {
constexpr uint32_t kVersion = 1;
}

void save_checkpoint(const std::string& path, const std::vector<NamedParam>& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path);
  write_magic(os, "MESC");
  write_u32(os, kVersion);
  write_u64(os, params.size());
  for (const auto& p : params) {
    write_string(os, p.name);
    write_u64(os, p.tensor->rank());
    for (size_t d : p.tensor->shape) write_u64(os, d);
    write_f32s(os, p.tensor->values.data(), p.tensor->numel());
  }
  if (!os) throw std::runtime_error("write failure on checkpoint " + path);
}

std::vector<NamedParam> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);
  expect_magic(is, "MESC", path);
  const uint32_t version = read_u32(is);
  if (version != kVersion)
    throw std::runtime_error(path + ": unsupported checkpoint version " +
                             std::to_string(version));
  const uint64_t count = read_u64(is);
  std::vector<NamedParam> out;
  out.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    NamedParam p;
    p.name = read_string(is);
    const uint64_t rank = read_u64(is);
    std::vector<size_t> shape(rank);
    for (auto& d : shape) d = read_u64(is);
    p.tensor = Tensor::make(shape);
    read_f32s(is, p.tensor->values.data(), p.tensor->numel());
    out.push_back(std::move(p));
  }
  return out;
}

void load_checkpoint_into(const std::string& path,
                          const std::vector<NamedParam>& params) {
  auto loaded = load_checkpoint(path);
  std::unordered_map<std::string, Tensor*> by_name;
  for (const auto& rec : loaded) by_name[rec.name] = rec.tensor.get();
  if (loaded.size() != params.size())
    throw std::runtime_error(path + ": checkpoint has " +
                             std::to_string(loaded.size()) + " tensors, model expects " +
                             std::to_string(params.size()));
  for (const auto& p : params) {
    auto it = by_name.find(p.name);
    if (it == by_name.end())
      throw std::runtime_error(path + ": missing tensor '" + p.name + "'");
    if (it->second->shape != p.tensor->shape)
      throw std::runtime_error(path + ": shape mismatch for '" + p.name + "': file " +
                               shape_str(it->second->shape) + " vs model " +
                               shape_str(p.tensor->shape));
    p.tensor->values = it->second->values;
  }
}

}  // namespace mesc::nn
