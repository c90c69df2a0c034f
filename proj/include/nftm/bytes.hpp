#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <string>
#include <string_view>
#include <type_traits>

namespace nftm {

// Little-endian append helpers.
template <typename T>
  requires std::is_integral_v<T>
void put_le(std::string& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto v = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename T>
  requires std::is_integral_v<T>
T get_le(const unsigned char* p) {
  using U = std::make_unsigned_t<T>;
  U v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<U>(U{p[i]} << (8 * i));
  return static_cast<T>(v);
}

// Counts consumed bytes so decoders can report offsets. read() returns false
// on a short read.
class CountingReader {
public:
  explicit CountingReader(std::istream& in) : in_(in) {}

  bool read(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in_.gcount());
    offset_ += got;
    return got == n;
  }

  // True when no further byte is available.
  bool at_eof() {
    return in_.peek() == std::char_traits<char>::eof();
  }

  std::uint64_t offset() const noexcept { return offset_; }

private:
  std::istream& in_;
  std::uint64_t offset_ = 0;
};

}  // namespace nftm
