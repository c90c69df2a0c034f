#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace nftm {

// Base of every data error raised by the library. The CLI maps these to
// exit code 1; anything else escaping is a bug.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class CountOverflow : public DataError {
public:
  CountOverflow() : DataError("packet count overflows 64-bit accumulator") {}
};

class ParseError : public DataError {
public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

// Structured decode error carrying the entry index and the byte offset at
// which the problem was detected.
class FormatError : public DataError {
public:
  FormatError(const std::string& format, std::uint64_t entry, std::uint64_t offset,
              const std::string& what)
      : DataError(format + " entry " + std::to_string(entry) + " at byte " +
                  std::to_string(offset) + ": " + what),
        entry_(entry), offset_(offset), reason_(what) {}

  std::uint64_t entry() const noexcept { return entry_; }
  std::uint64_t offset() const noexcept { return offset_; }
  const std::string& reason() const noexcept { return reason_; }

private:
  std::uint64_t entry_;
  std::uint64_t offset_;
  std::string reason_;
};

}  // namespace nftm
