#include "tclf/binary_io.hpp"

#include <bit>
#include <cstring>

#include "tclf/error.hpp"

namespace tclf::binary {

static_assert(std::endian::native == std::endian::little,
              "container encoding assumes a little-endian host");

namespace {

template <typename T>
void write_raw(std::ostream& out, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  out.write(bytes, sizeof(T));
}

}  // namespace

void write_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }
void write_u8(std::ostream& out, std::uint8_t v) { write_raw(out, v); }
void write_u32(std::ostream& out, std::uint32_t v) { write_raw(out, v); }
void write_i64(std::ostream& out, std::int64_t v) { write_raw(out, v); }
void write_f64(std::ostream& out, double v) { write_raw(out, v); }

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_f32_array(std::ostream& out, std::span<const float> values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
}

void write_f64_array(std::ostream& out, std::span<const double> values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
}

void Reader::fail(const std::string& what) const { throw FormatError(context_ + ": " + what); }

void Reader::read_bytes(void* dst, std::size_t n) {
  in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) fail("unexpected end of data");
}

void Reader::expect_magic(const char (&magic)[5]) {
  char got[4];
  read_bytes(got, 4);
  if (std::memcmp(got, magic, 4) != 0) fail(std::string("bad magic, expected ") + magic);
}

std::uint8_t Reader::u8() {
  std::uint8_t v;
  read_bytes(&v, sizeof v);
  return v;
}

std::uint32_t Reader::u32() {
  std::uint32_t v;
  read_bytes(&v, sizeof v);
  return v;
}

std::int64_t Reader::i64() {
  std::int64_t v;
  read_bytes(&v, sizeof v);
  return v;
}

double Reader::f64() {
  double v;
  read_bytes(&v, sizeof v);
  return v;
}

std::string Reader::string(std::size_t max_length) {
  const std::uint32_t n = u32();
  if (n > max_length) fail("string length " + std::to_string(n) + " exceeds limit");
  std::string s(n, '\0');
  read_bytes(s.data(), n);
  return s;
}

void Reader::f32_array(std::span<float> out) { read_bytes(out.data(), out.size_bytes()); }
void Reader::f64_array(std::span<double> out) { read_bytes(out.data(), out.size_bytes()); }

bool Reader::at_eof() { return in_.peek() == std::char_traits<char>::eof(); }

}  // namespace tclf::binary
