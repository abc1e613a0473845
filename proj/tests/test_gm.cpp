#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <set>

#include "pda/gm.hpp"
#include "test_util.hpp"

using pda::BigInt;
using pda::RandomSource;
namespace gm = pda::gm;

TEST_CASE("jacobi symbol agrees with Euler's criterion on small primes") {
  for (const std::uint64_t p : {3ull, 5ull, 7ull, 11ull, 13ull, 101ull, 257ull}) {
    for (std::uint64_t a = 1; a < p; ++a) {
      // Euler: a^((p-1)/2) mod p is 1 for residues, p-1 for non-residues.
      std::uint64_t e = 1;
      for (std::uint64_t i = 0; i < (p - 1) / 2; ++i) {
        e = e * a % p;
      }
      const int expected = e == 1 ? 1 : -1;
      REQUIRE(pda::jacobi(BigInt(a), BigInt(p)) == expected);
    }
  }
  REQUIRE(pda::jacobi(BigInt(0), BigInt(7)) == 0);
  REQUIRE_THROWS_AS(pda::jacobi(BigInt(3), BigInt(8)), pda::Error);
}

TEST_CASE("keypair from p=7, q=11 picks the smallest pseudo-residue") {
  // Brute-force oracle: non-residues modulo each prime from the square sets.
  auto non_residues = [](std::uint64_t p) {
    std::set<std::uint64_t> nr;
    const auto qr = pda_test::squares_mod(p);
    for (std::uint64_t a = 1; a < p; ++a) {
      if (!qr.contains(a)) {
        nr.insert(a);
      }
    }
    return nr;
  };
  const auto nr7 = non_residues(7);
  const auto nr11 = non_residues(11);
  REQUIRE(nr7 == std::set<std::uint64_t>{3, 5, 6});
  REQUIRE(nr11 == std::set<std::uint64_t>{2, 6, 7, 8, 10});
  std::uint64_t smallest = 0;
  for (std::uint64_t x = 2; x < 77; ++x) {
    if (std::gcd(x, 77ull) == 1 && nr7.contains(x % 7) && nr11.contains(x % 11)) {
      smallest = x;
      break;
    }
  }
  REQUIRE(smallest == 6);

  RandomSource rng(1);
  const gm::KeyPair kp = gm::keypair_from_primes(7, 11, rng);
  REQUIRE(kp.pk.n == 77);
  REQUIRE(kp.pk.x == smallest);
}

TEST_CASE("equal or composite factors are rejected") {
  RandomSource rng(2);
  REQUIRE_THROWS_AS(gm::keypair_from_primes(7, 7, rng), pda::KeygenError);
  REQUIRE_THROWS_AS(gm::keypair_from_primes(9, 11, rng), pda::KeygenError);
}

TEST_CASE("keygen output satisfies the key invariants") {
  RandomSource rng(3);
  for (const std::size_t bits : {16, 32, 64, 128}) {
    const gm::KeyPair kp = gm::keygen(bits, rng);
    REQUIRE(kp.sk.p != kp.sk.q);
    REQUIRE(kp.sk.p * kp.sk.q == kp.pk.n);
    REQUIRE(gm::is_probable_prime(kp.sk.p, rng));
    REQUIRE(gm::is_probable_prime(kp.sk.q, rng));
    REQUIRE(boost::multiprecision::gcd(kp.pk.x, kp.pk.n) == 1);
    REQUIRE(pda::jacobi(kp.pk.x, kp.pk.n) == 1);
    REQUIRE(pda::legendre(kp.pk.x, kp.sk.p) == -1);
    REQUIRE(pda::legendre(kp.pk.x, kp.sk.q) == -1);
    // And the pair actually works.
    for (const int m : {0, 1}) {
      REQUIRE(gm::decrypt_bit(kp.sk, gm::encrypt_bit(kp.pk, m, rng)) == m);
    }
  }
  REQUIRE_THROWS_AS(gm::keygen(8, rng), pda::KeygenError);
}

TEST_CASE("pinned toy encryptions under n=77") {
  RandomSource rng(4);
  const gm::KeyPair kp = gm::keypair_from_primes(7, 11, rng);

  // y=2: c = 4 * 6^m mod 77.
  const gm::Ciphertext c0 = gm::encrypt_with_nonce(kp.pk, 0, 2);
  REQUIRE(c0.value == 4);
  REQUIRE(pda_test::squares_mod(77).contains(4));
  REQUIRE(gm::decrypt_bit(kp.sk, c0) == 0);

  const gm::Ciphertext c1 = gm::encrypt_with_nonce(kp.pk, 1, 2);
  REQUIRE(c1.value == 24);
  REQUIRE(24 % 7 == 3);  // 3 is a non-residue mod 7
  REQUIRE(gm::decrypt_bit(kp.sk, c1) == 1);

  // Fresh randomness gives distinct ciphertexts.
  const gm::Ciphertext a = gm::encrypt_bit(kp.pk, 0, rng);
  const gm::Ciphertext b = gm::encrypt_bit(kp.pk, 0, rng);
  REQUIRE(a != b);

  REQUIRE_THROWS_AS(gm::encrypt_with_nonce(kp.pk, 2, 2), pda::Error);
  REQUIRE_THROWS_AS(gm::encrypt_with_nonce(kp.pk, 0, 7), pda::Error);  // not a unit
}

TEST_CASE("decrypt rejects values outside the unit group") {
  RandomSource rng(5);
  const gm::KeyPair kp = gm::keypair_from_primes(7, 11, rng);
  REQUIRE_THROWS_AS(gm::decrypt_bit(kp.sk, gm::Ciphertext{7}), pda::MalformedCiphertext);
  REQUIRE_THROWS_AS(gm::decrypt_bit(kp.sk, gm::Ciphertext{0}), pda::MalformedCiphertext);
  REQUIRE_THROWS_AS(gm::decrypt_bit(kp.sk, gm::Ciphertext{77}), pda::MalformedCiphertext);
}

TEST_CASE("residuosity classification matches brute force over all units of 77") {
  RandomSource rng(6);
  const gm::KeyPair kp = gm::keypair_from_primes(7, 11, rng);
  const auto qr = pda_test::squares_mod(77);
  for (std::uint64_t u = 1; u < 77; ++u) {
    if (std::gcd(u, 77ull) != 1) {
      continue;
    }
    const int bit = gm::decrypt_bit(kp.sk, gm::Ciphertext{BigInt(u)});
    REQUIRE(bit == (qr.contains(u) ? 0 : 1));
  }
}

TEST_CASE("XOR homomorphism") {
  RandomSource rng(7);
  const gm::KeyPair kp = gm::keygen(64, rng);

  // E(1)*E(1) decrypts to 0; E(0)*E(m) decrypts to m.
  auto enc = [&](int m) { return gm::encrypt_bit(kp.pk, m, rng); };
  REQUIRE(gm::decrypt_bit(kp.sk, gm::xor_cipher(kp.pk, enc(1), enc(1))) == 0);
  for (const int m : {0, 1}) {
    REQUIRE(gm::decrypt_bit(kp.sk, gm::xor_cipher(kp.pk, enc(0), enc(m))) == m);
  }
  for (int i = 0; i < 1000; ++i) {
    const int m1 = rng.next_bit();
    const int m2 = rng.next_bit();
    REQUIRE(gm::decrypt_bit(kp.sk, gm::xor_cipher(kp.pk, enc(m1), enc(m2))) == (m1 ^ m2));
  }
}

TEST_CASE("re-randomization preserves the plaintext and refreshes the value") {
  RandomSource rng(8);
  const gm::KeyPair kp = gm::keygen(64, rng);
  int changed = 0;
  for (int i = 0; i < 1000; ++i) {
    const int m = rng.next_bit();
    const gm::Ciphertext c = gm::encrypt_bit(kp.pk, m, rng);
    const gm::Ciphertext c2 = gm::rerandomize(kp.pk, c, rng);
    REQUIRE(gm::decrypt_bit(kp.sk, c2) == m);
    changed += c2 != c ? 1 : 0;
  }
  REQUIRE(changed >= 999);

  // The residuosity class is preserved: re-randomized E(1) is never a square.
  const gm::KeyPair toy = gm::keypair_from_primes(7, 11, rng);
  const auto qr = pda_test::squares_mod(77);
  for (int i = 0; i < 200; ++i) {
    const gm::Ciphertext c = gm::rerandomize(toy.pk, gm::encrypt_bit(toy.pk, 1, rng), rng);
    REQUIRE_FALSE(qr.contains(c.value.convert_to<std::uint64_t>()));
  }
}

TEST_CASE("encrypted bit vectors encode MSB first and round-trip") {
  RandomSource rng(9);
  const gm::KeyPair kp = gm::keygen(64, rng);

  SECTION("zero encodes as all zero bits") {
    const gm::EncryptedBitVector v = gm::encode_ebv(kp.pk, 0, 8, rng);
    REQUIRE(v.size() == 8);
    for (const gm::Ciphertext& c : v) {
      REQUIRE(gm::decrypt_bit(kp.sk, c) == 0);
    }
    REQUIRE(gm::decode_ebv(kp.sk, v) == 0);
  }

  SECTION("5 at width 4 is the bit pattern 0101") {
    const gm::EncryptedBitVector v = gm::encode_ebv(kp.pk, 5, 4, rng);
    const int expected[] = {0, 1, 0, 1};
    for (int i = 0; i < 4; ++i) {
      REQUIRE(gm::decrypt_bit(kp.sk, v[i]) == expected[i]);
    }
  }

  SECTION("the worked example's bid 200 round-trips at width 8") {
    REQUIRE(gm::decode_ebv(kp.sk, gm::encode_ebv(kp.pk, 200, 8, rng)) == 200);
  }

  SECTION("all ones at width 4 decodes to 15") {
    gm::EncryptedBitVector ones;
    for (int i = 0; i < 4; ++i) {
      ones.push_back(gm::encrypt_bit(kp.pk, 1, rng));
    }
    REQUIRE(gm::decode_ebv(kp.sk, ones) == 15);
  }

  SECTION("random round-trips across widths") {
    for (int i = 0; i < 1000; ++i) {
      const std::size_t width = 1 + rng.index_below(16);
      const std::uint64_t value =
          rng.uniform_below(BigInt(1) << width).convert_to<std::uint64_t>();
      REQUIRE(gm::decode_ebv(kp.sk, gm::encode_ebv(kp.pk, value, width, rng)) == value);
    }
  }

  SECTION("overflow is rejected") {
    REQUIRE_THROWS_AS(gm::encode_ebv(kp.pk, 256, 8, rng), pda::OverflowError);
    REQUIRE_THROWS_AS(gm::encode_ebv(kp.pk, 16, 4, rng), pda::OverflowError);
    REQUIRE_NOTHROW(gm::encode_ebv(kp.pk, 255, 8, rng));
  }
}

TEST_CASE("big integer serialization round-trips") {
  RandomSource rng(10);
  for (int i = 0; i < 500; ++i) {
    const BigInt v = rng.random_bits(rng.index_below(300));
    pda::Bytes buf;
    pda::append_bigint(buf, v);
    pda::ByteReader r(buf);
    REQUIRE(r.bigint() == v);
    REQUIRE(r.done());
  }

  // Canonical zero: length prefix 0, no magnitude bytes.
  pda::Bytes buf;
  pda::append_bigint(buf, BigInt(0));
  REQUIRE(buf == pda::Bytes{0, 0, 0, 0});

  // Truncation is detected.
  pda::append_bigint(buf, BigInt(1) << 64);
  buf.pop_back();
  pda::ByteReader r(buf);
  REQUIRE(r.bigint() == 0);
  REQUIRE_THROWS_AS(r.bigint(), pda::DecodeError);
}
