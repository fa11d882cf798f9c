#ifndef COPR_BINIO_HPP_
#define COPR_BINIO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace copr {

/*! Little-endian binary writer for catalogs and checkpoints. */
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path)
      : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!out_) throw std::runtime_error("cannot write file: " + path);
  }

  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) {
    std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                         static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
    raw(b, 4);
  }
  void u64(std::uint64_t v) {
    u32(static_cast<std::uint32_t>(v));
    u32(static_cast<std::uint32_t>(v >> 32));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void magic(const char tag[8]) { raw(tag, 8); }

  void u32_vec(std::span<const std::uint32_t> v) {
    u64(v.size());
    for (auto x : v) u32(x);
  }
  void f64_vec(std::span<const double> v) {
    u64(v.size());
    for (auto x : v) f64(x);
  }

  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("write failed: " + path_);
  }

 private:
  void raw(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  std::ofstream out_;
  std::string path_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw std::runtime_error("cannot open file: " + path);
  }

  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint8_t b[4];
    raw(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::uint64_t u64() {
    const std::uint64_t lo = u32();
    const std::uint64_t hi = u32();
    return lo | (hi << 32);
  }
  double f64() { return std::bit_cast<double>(u64()); }

  void expect_magic(const char tag[8]) {
    char buf[8];
    raw(buf, 8);
    if (std::memcmp(buf, tag, 8) != 0) {
      throw std::runtime_error("bad file magic in " + path_ + " (expected " +
                               std::string(tag, 8) + ")");
    }
  }

  std::vector<std::uint32_t> u32_vec() {
    const auto n = u64();
    std::vector<std::uint32_t> v(n);
    for (auto& x : v) x = u32();
    return v;
  }
  std::vector<double> f64_vec() {
    const auto n = u64();
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }

 private:
  void raw(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw std::runtime_error("truncated file: " + path_);
    }
  }
  std::ifstream in_;
  std::string path_;
};

}  // namespace copr

#endif  // COPR_BINIO_HPP_
