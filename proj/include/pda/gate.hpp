#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pda/gm.hpp"
#include "pda/wire.hpp"

// Gate evaluation over encrypted bits. XOR gates are local ciphertext
// products; AND gates take one interactive round with the agent, who holds
// the secret key. Independent AND gates batch into a single round.
namespace pda {

struct AndRequest {
  // Masked operand pairs (E(a2), E(b2)), one per AND gate.
  std::vector<std::pair<gm::Ciphertext, gm::Ciphertext>> pairs;
};

struct AndResponse {
  // E(a2 AND b2), same length and order as the request.
  std::vector<gm::Ciphertext> products;
};

inline Bytes encode_and_request(const AndRequest& req) {
  Bytes out;
  append_u32(out, static_cast<std::uint32_t>(req.pairs.size()));
  for (const auto& [a, b] : req.pairs) {
    append_bigint(out, a.value);
    append_bigint(out, b.value);
  }
  return out;
}

inline AndRequest parse_and_request(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  const std::uint32_t count = r.u32();
  AndRequest req;
  req.pairs.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    gm::Ciphertext a{r.bigint()};
    gm::Ciphertext b{r.bigint()};
    req.pairs.emplace_back(std::move(a), std::move(b));
  }
  r.expect_done();
  return req;
}

inline Bytes encode_and_response(const AndResponse& resp) {
  Bytes out;
  append_u32(out, static_cast<std::uint32_t>(resp.products.size()));
  for (const auto& c : resp.products) {
    append_bigint(out, c.value);
  }
  return out;
}

inline AndResponse parse_and_response(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  const std::uint32_t count = r.u32();
  AndResponse resp;
  resp.products.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    resp.products.push_back(gm::Ciphertext{r.bigint()});
  }
  r.expect_done();
  return resp;
}

// Auctioneer-side evaluation context for one session. Counters are monotone
// and feed the benchmark columns.
struct GateContext {
  gm::PublicKey pk;
  Channel* channel = nullptr;
  RandomSource* rng = nullptr;
  std::uint64_t and_gate_counter = 0;
  std::uint64_t round_counter = 0;
};

// Local: no message exchange, counters untouched.
inline gm::Ciphertext xor_gate(GateContext& ctx, const gm::Ciphertext& a, const gm::Ciphertext& b) {
  return gm::xor_cipher(ctx.pk, a, b);
}

// One interactive round evaluating all pairs. For each gate the auctioneer
// masks both inputs with fresh random bits, hands the masked pair to the
// agent, keeps the three locally computable terms, and multiplies the four
// partial products into E(a AND b).
inline std::vector<gm::Ciphertext> and_gate_batch(
    GateContext& ctx, std::span<const std::pair<gm::Ciphertext, gm::Ciphertext>> pairs) {
  if (pairs.empty()) {
    throw Error("and_gate_batch: empty batch");
  }
  if (ctx.channel == nullptr) {
    throw ChannelError("AND gate requires a live agent channel");
  }
  if (ctx.rng == nullptr) {
    throw Error("AND gate requires a randomness source");
  }
  const gm::PublicKey& pk = ctx.pk;
  RandomSource& rng = *ctx.rng;

  AndRequest request;
  request.pairs.reserve(pairs.size());
  std::vector<gm::Ciphertext> local;  // E(a1&b1) * E(a1&b2) * E(a2&b1), per gate
  local.reserve(pairs.size());

  for (const auto& [ca, cb] : pairs) {
    const int mask_a = rng.next_bit();
    const int mask_b = rng.next_bit();
    const gm::Ciphertext e_a2 = gm::xor_cipher(pk, gm::encrypt_bit(pk, mask_a, rng), ca);
    const gm::Ciphertext e_b2 = gm::xor_cipher(pk, gm::encrypt_bit(pk, mask_b, rng), cb);
    // a1 & b1 is a plaintext product of the two masks.
    gm::Ciphertext acc = gm::encrypt_bit(pk, mask_a & mask_b, rng);
    // a1 & b2 = b2 when a1 = 1, else 0; likewise a2 & b1.
    const gm::Ciphertext a1_b2 = mask_a ? e_b2 : gm::encrypt_bit(pk, 0, rng);
    const gm::Ciphertext a2_b1 = mask_b ? e_a2 : gm::encrypt_bit(pk, 0, rng);
    acc = gm::xor_cipher(pk, acc, a1_b2);
    acc = gm::xor_cipher(pk, acc, a2_b1);
    local.push_back(acc);
    request.pairs.emplace_back(e_a2, e_b2);
  }

  ctx.channel->send(WireMessage{MsgType::and_request, encode_and_request(request)});
  const WireMessage reply = expect_message(*ctx.channel, MsgType::and_response);
  const AndResponse response = parse_and_response(reply.payload);
  if (response.products.size() != pairs.size()) {
    throw ProtocolViolation("AND response length mismatch");
  }

  std::vector<gm::Ciphertext> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.push_back(gm::xor_cipher(pk, local[i], response.products[i]));
  }
  ctx.and_gate_counter += pairs.size();
  ctx.round_counter += 1;
  return out;
}

inline gm::Ciphertext and_gate(GateContext& ctx, const gm::Ciphertext& a, const gm::Ciphertext& b) {
  const std::pair<gm::Ciphertext, gm::Ciphertext> one[] = {{a, b}};
  return and_gate_batch(ctx, one)[0];
}

// Agent side: decrypt both masked bits and return a fresh encryption of
// their product. Stateless per request.
inline AndResponse agent_answer_and(const gm::SecretKey& sk, const gm::PublicKey& pk,
                                    const AndRequest& request, RandomSource& rng) {
  AndResponse response;
  response.products.reserve(request.pairs.size());
  for (const auto& [ea, eb] : request.pairs) {
    int a2 = 0;
    int b2 = 0;
    try {
      a2 = gm::decrypt_bit(sk, ea);
      b2 = gm::decrypt_bit(sk, eb);
    } catch (const MalformedCiphertext& e) {
      throw ProtocolViolation(std::string("malformed ciphertext in AND request: ") + e.what());
    }
    response.products.push_back(gm::encrypt_bit(pk, a2 & b2, rng));
  }
  return response;
}

}  // namespace pda
