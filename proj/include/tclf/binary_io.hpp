#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace tclf::binary {

// Little-endian primitives shared by the archive, dataset and checkpoint
// containers. Readers throw FormatError on truncation.

void write_magic(std::ostream& out, const char (&magic)[5]);
void write_u8(std::ostream& out, std::uint8_t v);
void write_u32(std::ostream& out, std::uint32_t v);
void write_i64(std::ostream& out, std::int64_t v);
void write_f64(std::ostream& out, double v);
void write_string(std::ostream& out, const std::string& s);
void write_f32_array(std::ostream& out, std::span<const float> values);
void write_f64_array(std::ostream& out, std::span<const double> values);

class Reader {
 public:
  Reader(std::istream& in, std::string context) : in_(in), context_(std::move(context)) {}

  /// Throws FormatError unless the next four bytes equal `magic`.
  void expect_magic(const char (&magic)[5]);
  std::uint8_t u8();
  std::uint32_t u32();
  std::int64_t i64();
  double f64();
  std::string string(std::size_t max_length = 1 << 20);
  void f32_array(std::span<float> out);
  void f64_array(std::span<double> out);

  bool at_eof();
  [[noreturn]] void fail(const std::string& what) const;

 private:
  void read_bytes(void* dst, std::size_t n);

  std::istream& in_;
  std::string context_;
};

}  // namespace tclf::binary
