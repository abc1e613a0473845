#pragma once

#include <boost/multiprecision/miller_rabin.hpp>

#include <cstdint>
#include <utility>
#include <vector>

#include "pda/bigint.hpp"
#include "pda/errors.hpp"

// Goldwasser-Micali cryptosystem: probabilistic single-bit encryption whose
// security rests on quadratic residuosity. Ciphertexts multiply to the XOR
// of their plaintexts, which is the homomorphism the whole auction runs on.
namespace pda::gm {

struct PublicKey {
  BigInt n;  // product of two distinct odd primes
  BigInt x;  // pseudo-residue: Jacobi (x/n) = +1, non-residue mod both primes
};

struct SecretKey {
  BigInt p;
  BigInt q;
};

struct Ciphertext {
  BigInt value;  // element of Z*_n

  bool operator==(const Ciphertext&) const = default;
};

// Ordered ciphertext sequence encoding an L-bit integer, most significant
// bit first.
using EncryptedBitVector = std::vector<Ciphertext>;

struct KeyPair {
  PublicKey pk;
  SecretKey sk;
};

inline constexpr unsigned kMillerRabinRounds = 40;  // error <= 2^-80
inline constexpr unsigned kDefaultKeyBits = 1024;

inline bool is_probable_prime(const BigInt& n, RandomSource& rng) {
  if (n < 2) {
    return false;
  }
  return boost::multiprecision::miller_rabin_test(n, kMillerRabinRounds, rng.engine());
}

namespace detail {

inline BigInt random_prime(std::size_t bits, RandomSource& rng) {
  if (bits < 2) {
    throw KeygenError("prime size too small");
  }
  // Density of primes near 2^bits is ~1/(bits ln 2); this bound makes a
  // failure to find one astronomically unlikely rather than a hang.
  const std::size_t max_attempts = 400 * bits;
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    BigInt candidate = rng.random_bits(bits);
    boost::multiprecision::bit_set(candidate, static_cast<unsigned>(bits - 1));
    candidate |= 1;
    if (is_probable_prime(candidate, rng)) {
      return candidate;
    }
  }
  throw KeygenError("prime search exceeded iteration bound");
}

// x must be a quadratic non-residue modulo both primes; then (x/n) = +1
// while x is not a square, which is exactly what encryption needs.
inline bool is_pseudo_residue(const BigInt& x, const BigInt& p, const BigInt& q) {
  return legendre(x, p) == -1 && legendre(x, q) == -1;
}

}  // namespace detail

// Samples two distinct primes of about key_bits/2 bits each and a
// pseudo-residue x. key_bits >= 16; production default is kDefaultKeyBits.
inline KeyPair keygen(std::size_t key_bits, RandomSource& rng) {
  if (key_bits < 16) {
    throw KeygenError("key_bits must be at least 16");
  }
  const std::size_t p_bits = key_bits - key_bits / 2;
  const std::size_t q_bits = key_bits / 2;
  BigInt p = detail::random_prime(p_bits, rng);
  BigInt q = detail::random_prime(q_bits, rng);
  for (std::size_t attempt = 0; q == p; ++attempt) {
    if (attempt > 64) {
      throw KeygenError("could not find distinct primes");
    }
    q = detail::random_prime(q_bits, rng);
  }
  const BigInt n = p * q;
  for (std::size_t attempt = 0; attempt < 4096; ++attempt) {
    const BigInt x = rng.uniform_in(2, n - 1);
    if (boost::multiprecision::gcd(x, n) != 1) {
      continue;
    }
    if (detail::is_pseudo_residue(x, p, q)) {
      return KeyPair{PublicKey{n, x}, SecretKey{p, q}};
    }
  }
  throw KeygenError("pseudo-residue search exceeded iteration bound");
}

// Deterministic key construction from known primes: x is the smallest valid
// pseudo-residue. Used for fixed test keys.
inline KeyPair keypair_from_primes(const BigInt& p, const BigInt& q, RandomSource& rng) {
  if (p == q) {
    throw KeygenError("primes must be distinct");
  }
  if ((p & 1) == 0 || (q & 1) == 0 || !is_probable_prime(p, rng) || !is_probable_prime(q, rng)) {
    throw KeygenError("both factors must be odd primes");
  }
  const BigInt n = p * q;
  for (BigInt x = 2; x < n; ++x) {
    if (boost::multiprecision::gcd(x, n) != 1) {
      continue;
    }
    if (detail::is_pseudo_residue(x, p, q)) {
      return KeyPair{PublicKey{n, x}, SecretKey{p, q}};
    }
  }
  throw KeygenError("no pseudo-residue exists");  // unreachable for valid p, q
}

// c = y^2 x^m mod n for a caller-chosen nonce y in Z*_n.
inline Ciphertext encrypt_with_nonce(const PublicKey& pk, int bit, const BigInt& y) {
  if (bit != 0 && bit != 1) {
    throw Error("plaintext must be a single bit");
  }
  if (y <= 0 || y >= pk.n || boost::multiprecision::gcd(y, pk.n) != 1) {
    throw Error("nonce must be a unit modulo n");
  }
  BigInt c = (y * y) % pk.n;
  if (bit == 1) {
    c = (c * pk.x) % pk.n;
  }
  return Ciphertext{c};
}

inline Ciphertext encrypt_bit(const PublicKey& pk, int bit, RandomSource& rng) {
  for (;;) {
    const BigInt y = rng.uniform_in(1, pk.n - 1);
    if (boost::multiprecision::gcd(y, pk.n) == 1) {
      return encrypt_with_nonce(pk, bit, y);
    }
  }
}

// m = 0 iff c is a quadratic residue modulo both primes.
inline int decrypt_bit(const SecretKey& sk, const Ciphertext& c) {
  const BigInt n = sk.p * sk.q;
  if (c.value <= 0 || c.value >= n || boost::multiprecision::gcd(c.value, n) != 1) {
    throw MalformedCiphertext("ciphertext is not a unit modulo n");
  }
  return (legendre(c.value, sk.p) == 1 && legendre(c.value, sk.q) == 1) ? 0 : 1;
}

// Homomorphic XOR: the product of two ciphertexts decrypts to the XOR of
// their plaintexts.
inline Ciphertext xor_cipher(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
  return Ciphertext{(a.value * b.value) % pk.n};
}

// Fresh randomization of the same plaintext: c' = c * E(0).
inline Ciphertext rerandomize(const PublicKey& pk, const Ciphertext& c, RandomSource& rng) {
  return xor_cipher(pk, c, encrypt_bit(pk, 0, rng));
}

inline EncryptedBitVector encode_ebv(const PublicKey& pk, std::uint64_t value, std::size_t width,
                                     RandomSource& rng) {
  if (width == 0 || width > 64) {
    throw Error("bit width must be in [1, 64]");
  }
  if (width < 64 && (value >> width) != 0) {
    throw OverflowError("value does not fit the declared bit width");
  }
  EncryptedBitVector out;
  out.reserve(width);
  for (std::size_t i = width; i-- > 0;) {
    out.push_back(encrypt_bit(pk, static_cast<int>((value >> i) & 1u), rng));
  }
  return out;
}

inline std::uint64_t decode_ebv(const SecretKey& sk, const EncryptedBitVector& ebv) {
  if (ebv.empty() || ebv.size() > 64) {
    throw DimensionError("bit vector width must be in [1, 64]");
  }
  std::uint64_t value = 0;
  for (const Ciphertext& c : ebv) {
    value = (value << 1) | static_cast<std::uint64_t>(decrypt_bit(sk, c));
  }
  return value;
}

}  // namespace pda::gm
