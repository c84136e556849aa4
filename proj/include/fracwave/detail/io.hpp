#ifndef FRACWAVE_DETAIL_IO_HPP
#define FRACWAVE_DETAIL_IO_HPP

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "../core.hpp"

namespace fracwave::detail {

// Writes `bytes` to a sibling temp file and renames it over `path`, so the
// final path never holds a partial file.
inline void write_atomic(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), std::streamsize(bytes.size()));
    out.flush();
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Little-endian binary writer/reader independent of host byte order.
class LeWriter {
public:
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(char((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(char((v >> (8 * i)) & 0xff));
  }
  void i32(std::int32_t v) { u32(std::uint32_t(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(std::uint32_t(s.size()));
    bytes(s.data(), s.size());
  }
  const std::string& data() const { return buf_; }

private:
  std::string buf_;
};

class LeReader {
public:
  explicit LeReader(const std::string& d) : d_(d) {}
  void need(std::size_t n) const {
    if (pos_ + n > d_.size()) throw Error("truncated binary snapshot");
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = d_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(d_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(d_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::int32_t i32() { return std::int32_t(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() { return raw(u32()); }
  bool done() const { return pos_ == d_.size(); }

private:
  const std::string& d_;
  std::size_t pos_ = 0;
};

// 17 significant digits: round-trips every double.
inline std::string fmt17(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

// Minimal CSV builder with a fixed header.
class Csv {
public:
  explicit Csv(std::vector<std::string> header) : ncol_(header.size()) { row_strings(header); }
  template <class... Ts>
  void row(const Ts&... cells) {
    static_assert(sizeof...(Ts) > 0);
    std::vector<std::string> v{cell(cells)...};
    row_strings(v);
  }
  const std::string& text() const { return text_; }

private:
  static std::string cell(double v) { return fmt17(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(unsigned long v) { return std::to_string(v); }
  static std::string cell(unsigned long long v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }
  void row_strings(const std::vector<std::string>& v) {
    if (v.size() != ncol_) throw Error("CSV row width mismatch");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) text_ += ',';
      text_ += v[i];
    }
    text_ += '\n';
  }
  std::size_t ncol_;
  std::string text_;
};

// FNV-1a 64-bit.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char b[20];
  std::snprintf(b, sizeof b, "%016llx", static_cast<unsigned long long>(v));
  return b;
}

} // namespace fracwave::detail

#endif
