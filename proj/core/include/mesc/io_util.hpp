#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace mesc {

// Little-endian primitive IO for the binary artifact formats. The host is
// assumed little-endian (x86-64 / aarch64 targets).
void write_u32(std::ostream& os, uint32_t v);
void write_u64(std::ostream& os, uint64_t v);
void write_i32(std::ostream& os, int32_t v);
void write_f32(std::ostream& os, float v);
void write_f64(std::ostream& os, double v);
void write_f32s(std::ostream& os, const float* data, size_t n);
void write_string(std::ostream& os, const std::string& s);  // u32 length + bytes

uint32_t read_u32(std::istream& is);
uint64_t read_u64(std::istream& is);
int32_t read_i32(std::istream& is);
float read_f32(std::istream& is);
double read_f64(std::istream& is);
void read_f32s(std::istream& is, float* data, size_t n);
std::string read_string(std::istream& is);

void write_magic(std::ostream& os, const char* magic);
void expect_magic(std::istream& is, const char* magic, const std::string& path);

// FNV-1a hash of a file's bytes; throws if unreadable.
uint64_t hash_file(const std::string& path);

}  // namespace mesc
