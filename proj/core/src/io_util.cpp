#include "mesc/io_util.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "mesc/rng.hpp"

namespace mesc {

namespace {
void write_raw(std::ostream& os, const void* p, size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_raw(std::istream& is, void* p, size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(is.gcount()) != n)
    throw std::runtime_error("truncated binary file");
}
}  // namespace

void write_u32(std::ostream& os, uint32_t v) { write_raw(os, &v, 4); }
void write_u64(std::ostream& os, uint64_t v) { write_raw(os, &v, 8); }
void write_i32(std::ostream& os, int32_t v) { write_raw(os, &v, 4); }
void write_f32(std::ostream& os, float v) { write_raw(os, &v, 4); }
void write_f64(std::ostream& os, double v) { write_raw(os, &v, 8); }
void write_f32s(std::ostream& os, const float* data, size_t n) {
  write_raw(os, data, n * 4);
}

void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<uint32_t>(s.size()));
  write_raw(os, s.data(), s.size());
}

uint32_t read_u32(std::istream& is) {
  uint32_t v;
  read_raw(is, &v, 4);
  return v;
}

uint64_t read_u64(std::istream& is) {
  uint64_t v;
  read_raw(is, &v, 8);
  return v;
}

int32_t read_i32(std::istream& is) {
  int32_t v;
  read_raw(is, &v, 4);
  return v;
}

float read_f32(std::istream& is) {
  float v;
  read_raw(is, &v, 4);
  return v;
}

double read_f64(std::istream& is) {
  double v;
  read_raw(is, &v, 8);
  return v;
}

void read_f32s(std::istream& is, float* data, size_t n) { read_raw(is, data, n * 4); }

std::string read_string(std::istream& is) {
  const uint32_t n = read_u32(is);
  std::string s(n, '\0');
  if (n) read_raw(is, s.data(), n);
  return s;
}

void write_magic(std::ostream& os, const char* magic) {
  write_raw(os, magic, std::strlen(magic));
}

void expect_magic(std::istream& is, const char* magic, const std::string& path) {
  const size_t n = std::strlen(magic);
  std::string got(n, '\0');
  is.read(got.data(), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(is.gcount()) != n || got != magic)
    throw std::runtime_error(path + ": bad magic, expected \"" + magic + "\"");
}

uint64_t hash_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  uint64_t h = 1469598103934665603ull;  // FNV offset basis
  char buf[65536];
  while (is) {
    is.read(buf, sizeof(buf));
    const auto got = is.gcount();
    h = fnv1a64(buf, static_cast<size_t>(got), h);
  }
  return h;
}

}  // namespace mesc
