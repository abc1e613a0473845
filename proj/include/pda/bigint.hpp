#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <iterator>
#include <random>
#include <span>
#include <vector>

#include "pda/errors.hpp"

namespace pda {

using BigInt = boost::multiprecision::cpp_int;
using Bytes = std::vector<std::uint8_t>;

// Deterministic randomness source. Every randomized operation in the
// library draws from one of these, so sessions are reproducible from a seed.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  int next_bit() { return static_cast<int>(engine_() & 1u); }

  std::mt19937_64& engine() { return engine_; }

  // Uniform in [0, 2^bits).
  BigInt random_bits(std::size_t bits) {
    BigInt v = 0;
    std::size_t produced = 0;
    while (produced < bits) {
      v <<= 64;
      v |= BigInt(engine_());
      produced += 64;
    }
    if (produced > bits) {
      v >>= (produced - bits);
    }
    return v;
  }

  // Uniform in [0, bound) by rejection sampling.
  BigInt uniform_below(const BigInt& bound) {
    if (bound <= 0) {
      throw Error("uniform_below: bound must be positive");
    }
    const std::size_t bits = boost::multiprecision::msb(bound) + 1;
    for (;;) {
      BigInt v = random_bits(bits);
      if (v < bound) {
        return v;
      }
    }
  }

  // Uniform in [lo, hi], inclusive.
  BigInt uniform_in(const BigInt& lo, const BigInt& hi) {
    return lo + uniform_below(hi - lo + 1);
  }

  // Uniform index in [0, bound), rejection-sampled to avoid modulo bias.
  std::size_t index_below(std::size_t bound) {
    if (bound == 0) {
      throw Error("index_below: bound must be positive");
    }
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    for (;;) {
      const std::uint64_t v = engine_();
      if (v < limit) {
        return static_cast<std::size_t>(v % bound);
      }
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Jacobi symbol (a/n) for odd positive n. Returns -1, 0 or +1.
inline int jacobi(BigInt a, BigInt n) {
  if (n <= 0 || (n & 1) == 0) {
    throw Error("jacobi: modulus must be odd and positive");
  }
  a %= n;
  if (a < 0) {
    a += n;
  }
  int result = 1;
  while (a != 0) {
    while ((a & 1) == 0) {
      a >>= 1;
      const unsigned r = static_cast<unsigned>(n & 7);
      if (r == 3 || r == 5) {
        result = -result;
      }
    }
    a.swap(n);
    if ((a & 3) == 3 && (n & 3) == 3) {
      result = -result;
    }
    a %= n;
  }
  return n == 1 ? result : 0;
}

// Legendre symbol (a/p) for odd prime p, via the Jacobi algorithm.
inline int legendre(const BigInt& a, const BigInt& p) { return jacobi(a, p); }

inline std::size_t bit_length(const BigInt& v) {
  return v == 0 ? 0 : boost::multiprecision::msb(v) + 1;
}

// --- byte-level serialization -------------------------------------------
//
// Big integers travel as a 4-byte big-endian length prefix followed by the
// magnitude bytes, big-endian, no sign. Zero serializes as length 0.

inline void append_u8(Bytes& out, std::uint8_t v) { out.push_back(v); }

inline void append_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void append_u32(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void append_bigint(Bytes& out, const BigInt& v) {
  if (v < 0) {
    throw Error("append_bigint: negative value");
  }
  Bytes magnitude;
  if (v != 0) {
    boost::multiprecision::export_bits(v, std::back_inserter(magnitude), 8);
  }
  append_u32(out, static_cast<std::uint32_t>(magnitude.size()));
  out.insert(out.end(), magnitude.begin(), magnitude.end());
}

// Sequential reader over a byte span; throws DecodeError on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }

  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] << 8 | data_[pos_ + 1]);
    pos_ += 2;
    return v;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = (static_cast<std::uint32_t>(data_[pos_]) << 24) |
                      (static_cast<std::uint32_t>(data_[pos_ + 1]) << 16) |
                      (static_cast<std::uint32_t>(data_[pos_ + 2]) << 8) |
                      static_cast<std::uint32_t>(data_[pos_ + 3]);
    pos_ += 4;
    return v;
  }

  BigInt bigint() {
    const std::uint32_t len = u32();
    need(len);
    BigInt v = 0;
    if (len > 0) {
      boost::multiprecision::import_bits(v, data_.begin() + pos_, data_.begin() + pos_ + len);
    }
    pos_ += len;
    return v;
  }

  bool done() const { return pos_ == data_.size(); }

  std::size_t remaining() const { return data_.size() - pos_; }

  // Call at the end of parsing a payload: trailing bytes are an error.
  void expect_done() const {
    if (!done()) {
      throw DecodeError("trailing bytes in payload");
    }
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) {
      throw DecodeError("truncated payload");
    }
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace pda
