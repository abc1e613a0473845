#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pda/channel.hpp"
#include "pda/sorting.hpp"

// The double-auction mechanism: a plaintext reference implementation used
// as the oracle, and the private protocol run between the auctioneer (holds
// ciphertexts) and the agent (holds the secret key).
namespace pda {

enum class Side : std::uint8_t { seller = 0, buyer = 1 };

struct PlainBid {
  std::uint64_t value;
  std::uint64_t owner_id;
};

struct AuctionOutcome {
  std::size_t k = 0;  // index of the last profitable transaction; 0 = no trade
  std::set<std::uint64_t> winning_seller_ids;
  std::set<std::uint64_t> winning_buyer_ids;
  std::optional<std::uint64_t> seller_price;  // V_k^s, present when k >= 2
  std::optional<std::uint64_t> buyer_price;   // V_k^b, present when k >= 2

  bool operator==(const AuctionOutcome&) const = default;
};

struct SessionConfig {
  std::size_t bid_bits = 8;  // L
  std::size_t id_bits = 16;  // L'
  std::size_t key_bits = 64;
  SortAlgorithm sort_algorithm = SortAlgorithm::oesort;
  std::uint64_t seed = 0;
};

// --- plaintext reference mechanism ---------------------------------------

// Sorts seller bids ascending and buyer bids descending (ties keep
// submission order), finds the last index k where the i-th cheapest seller
// asks no more than the i-th highest buyer offers, and declares the first
// k-1 of each side winners at the k-th pair's prices. k <= 1 means no trade
// and no prices.
inline AuctionOutcome mcafee_reference(std::span<const PlainBid> sellers,
                                       std::span<const PlainBid> buyers) {
  if (sellers.empty() || buyers.empty()) {
    throw std::invalid_argument("auction requires at least one seller and one buyer");
  }
  for (const auto side : {sellers, buyers}) {
    std::set<std::uint64_t> seen;
    for (const PlainBid& b : side) {
      if (!seen.insert(b.owner_id).second) {
        throw std::invalid_argument("owner ids must be unique within a side");
      }
    }
  }

  std::vector<PlainBid> s(sellers.begin(), sellers.end());
  std::vector<PlainBid> b(buyers.begin(), buyers.end());
  std::stable_sort(s.begin(), s.end(),
                   [](const PlainBid& l, const PlainBid& r) { return l.value < r.value; });
  std::stable_sort(b.begin(), b.end(),
                   [](const PlainBid& l, const PlainBid& r) { return l.value > r.value; });

  const std::size_t m = std::min(s.size(), b.size());
  std::size_t k = 0;
  while (k < m && s[k].value <= b[k].value) {
    ++k;
  }

  AuctionOutcome outcome;
  outcome.k = k;
  if (k >= 2) {
    for (std::size_t i = 0; i + 1 < k; ++i) {
      outcome.winning_seller_ids.insert(s[i].owner_id);
      outcome.winning_buyer_ids.insert(b[i].owner_id);
    }
    outcome.seller_price = s[k - 1].value;
    outcome.buyer_price = b[k - 1].value;
  }
  return outcome;
}

// --- payload codecs --------------------------------------------------------

inline void append_ebv(Bytes& out, const gm::EncryptedBitVector& ebv) {
  append_u16(out, static_cast<std::uint16_t>(ebv.size()));
  for (const gm::Ciphertext& c : ebv) {
    append_bigint(out, c.value);
  }
}

inline gm::EncryptedBitVector read_ebv(ByteReader& r) {
  const std::uint16_t width = r.u16();
  gm::EncryptedBitVector ebv;
  ebv.reserve(width);
  for (std::uint16_t i = 0; i < width; ++i) {
    ebv.push_back(gm::Ciphertext{r.bigint()});
  }
  return ebv;
}

inline Bytes encode_session_start(const SessionConfig& cfg) {
  Bytes out;
  append_u16(out, static_cast<std::uint16_t>(cfg.bid_bits));
  append_u16(out, static_cast<std::uint16_t>(cfg.id_bits));
  append_u8(out, static_cast<std::uint8_t>(cfg.sort_algorithm));
  return out;
}

inline Bytes encode_pubkey(const gm::PublicKey& pk) {
  Bytes out;
  append_bigint(out, pk.n);
  append_bigint(out, pk.x);
  return out;
}

inline gm::PublicKey parse_pubkey(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  gm::PublicKey pk;
  pk.n = r.bigint();
  pk.x = r.bigint();
  r.expect_done();
  if (pk.n < 15 || pk.x <= 1 || pk.x >= pk.n || boost::multiprecision::gcd(pk.x, pk.n) != 1 ||
      jacobi(pk.x, pk.n) != 1) {
    throw ProtocolViolation("public key fails validation");
  }
  return pk;
}

inline Bytes encode_bid_submit(Side side, const BidRecord& record) {
  Bytes out;
  append_u8(out, static_cast<std::uint8_t>(side));
  append_ebv(out, record.bid);
  append_ebv(out, record.id);
  return out;
}

inline std::pair<Side, BidRecord> parse_bid_submit(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  const std::uint8_t side = r.u8();
  if (side > 1) {
    throw DecodeError("bad side byte in bid submission");
  }
  BidRecord record;
  record.bid = read_ebv(r);
  record.id = read_ebv(r);
  r.expect_done();
  return {static_cast<Side>(side), std::move(record)};
}

inline Bytes encode_cmp_bits(std::span<const gm::Ciphertext> bits) {
  Bytes out;
  append_u32(out, static_cast<std::uint32_t>(bits.size()));
  for (const gm::Ciphertext& c : bits) {
    append_bigint(out, c.value);
  }
  return out;
}

inline std::vector<gm::Ciphertext> parse_cmp_bits(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  const std::uint32_t count = r.u32();
  std::vector<gm::Ciphertext> bits;
  bits.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    bits.push_back(gm::Ciphertext{r.bigint()});
  }
  r.expect_done();
  return bits;
}

struct OutcomeRequest {
  std::vector<gm::EncryptedBitVector> seller_ids;  // permuted, re-randomized
  std::vector<gm::EncryptedBitVector> buyer_ids;
  gm::EncryptedBitVector seller_price;
  gm::EncryptedBitVector buyer_price;
};

inline Bytes encode_outcome_request(const OutcomeRequest& req) {
  Bytes out;
  append_u32(out, static_cast<std::uint32_t>(req.seller_ids.size()));
  for (const auto& ebv : req.seller_ids) {
    append_ebv(out, ebv);
  }
  append_u32(out, static_cast<std::uint32_t>(req.buyer_ids.size()));
  for (const auto& ebv : req.buyer_ids) {
    append_ebv(out, ebv);
  }
  append_ebv(out, req.seller_price);
  append_ebv(out, req.buyer_price);
  return out;
}

inline OutcomeRequest parse_outcome_request(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  OutcomeRequest req;
  const std::uint32_t ns = r.u32();
  for (std::uint32_t i = 0; i < ns; ++i) {
    req.seller_ids.push_back(read_ebv(r));
  }
  const std::uint32_t nb = r.u32();
  for (std::uint32_t i = 0; i < nb; ++i) {
    req.buyer_ids.push_back(read_ebv(r));
  }
  req.seller_price = read_ebv(r);
  req.buyer_price = read_ebv(r);
  r.expect_done();
  return req;
}

struct OutcomeResult {
  std::vector<std::uint64_t> seller_ids;  // ascending
  std::vector<std::uint64_t> buyer_ids;   // ascending
  std::uint64_t seller_price = 0;
  std::uint64_t buyer_price = 0;
};

inline Bytes encode_outcome_result(const OutcomeResult& res) {
  Bytes out;
  append_u32(out, static_cast<std::uint32_t>(res.seller_ids.size()));
  for (const std::uint64_t id : res.seller_ids) {
    append_bigint(out, BigInt(id));
  }
  append_u32(out, static_cast<std::uint32_t>(res.buyer_ids.size()));
  for (const std::uint64_t id : res.buyer_ids) {
    append_bigint(out, BigInt(id));
  }
  append_bigint(out, BigInt(res.seller_price));
  append_bigint(out, BigInt(res.buyer_price));
  return out;
}

inline OutcomeResult parse_outcome_result(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  OutcomeResult res;
  const std::uint32_t ns = r.u32();
  for (std::uint32_t i = 0; i < ns; ++i) {
    res.seller_ids.push_back(r.bigint().convert_to<std::uint64_t>());
  }
  const std::uint32_t nb = r.u32();
  for (std::uint32_t i = 0; i < nb; ++i) {
    res.buyer_ids.push_back(r.bigint().convert_to<std::uint64_t>());
  }
  res.seller_price = r.bigint().convert_to<std::uint64_t>();
  res.buyer_price = r.bigint().convert_to<std::uint64_t>();
  r.expect_done();
  return res;
}

inline Bytes encode_k_result(std::size_t k) {
  Bytes out;
  append_u32(out, static_cast<std::uint32_t>(k));
  return out;
}

inline std::size_t parse_k_result(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  const std::uint32_t k = r.u32();
  r.expect_done();
  return k;
}

// --- agent role -------------------------------------------------------------

struct AgentConfig {
  std::size_t key_bits = 64;
  std::uint64_t seed = 1;
};

struct AgentSession {
  gm::KeyPair keys;
  RandomSource rng;
  std::size_t bid_bits = 0;
  std::size_t id_bits = 0;
  bool started = false;
  bool done = false;
  std::size_t k = 0;
  std::uint64_t and_rounds_served = 0;
  std::uint64_t and_gates_served = 0;
  std::vector<std::string> log;

  explicit AgentSession(const AgentConfig& cfg)
      : keys(), rng(cfg.seed), bid_bits(0), id_bits(0) {
    keys = gm::keygen(cfg.key_bits, rng);
  }
};

namespace detail {

inline void agent_log(AgentSession& s, const std::string& step) {
  s.log.push_back("[agent] step=" + step + " and_rounds=" + std::to_string(s.and_rounds_served) +
                  " and_gates=" + std::to_string(s.and_gates_served));
}

}  // namespace detail

// Processes one auctioneer message and produces the reply, if any. The
// same handler backs the in-process agent and the networked agent loop.
inline std::optional<WireMessage> agent_handle(AgentSession& s, const WireMessage& msg) {
  switch (msg.type) {
    case MsgType::session_start: {
      ByteReader r(msg.payload);
      s.bid_bits = r.u16();
      s.id_bits = r.u16();
      r.u8();  // sort algorithm, informational
      r.expect_done();
      if (s.bid_bits == 0 || s.bid_bits > 64 || s.id_bits == 0 || s.id_bits > 64) {
        throw ProtocolViolation("unsupported bit widths in session start");
      }
      s.started = true;
      detail::agent_log(s, "setup");
      return WireMessage{MsgType::pubkey, encode_pubkey(s.keys.pk)};
    }
    case MsgType::and_request: {
      if (!s.started) {
        throw ProtocolViolation("AND request before session start");
      }
      const AndRequest request = parse_and_request(msg.payload);
      const AndResponse response = agent_answer_and(s.keys.sk, s.keys.pk, request, s.rng);
      s.and_rounds_served += 1;
      s.and_gates_served += request.pairs.size();
      return WireMessage{MsgType::and_response, encode_and_response(response)};
    }
    case MsgType::cmp_bits: {
      if (!s.started) {
        throw ProtocolViolation("comparison bits before session start");
      }
      const std::vector<gm::Ciphertext> bits = parse_cmp_bits(msg.payload);
      std::vector<int> plain;
      plain.reserve(bits.size());
      try {
        for (const gm::Ciphertext& c : bits) {
          plain.push_back(gm::decrypt_bit(s.keys.sk, c));
        }
      } catch (const MalformedCiphertext& e) {
        throw ProtocolViolation(std::string("malformed comparison bit: ") + e.what());
      }
      // With both sides correctly sorted the array must be 1^k 0^*;
      // anything else means the sort was corrupted.
      std::size_t k = 0;
      while (k < plain.size() && plain[k] == 1) {
        ++k;
      }
      for (std::size_t i = k; i < plain.size(); ++i) {
        if (plain[i] != 0) {
          throw ProtocolViolation("comparison bit array is not monotone");
        }
      }
      s.k = k;
      if (k <= 1) {
        s.done = true;  // no winners, no price release round
      }
      detail::agent_log(s, "winner_determination k=" + std::to_string(k));
      return WireMessage{MsgType::k_result, encode_k_result(k)};
    }
    case MsgType::outcome_request: {
      if (!s.started || s.k < 2) {
        throw ProtocolViolation("outcome request without a profitable trade");
      }
      const OutcomeRequest req = parse_outcome_request(msg.payload);
      if (req.seller_ids.size() != s.k - 1 || req.buyer_ids.size() != s.k - 1) {
        throw ProtocolViolation("winner count does not match k");
      }
      OutcomeResult res;
      for (const auto& ebv : req.seller_ids) {
        res.seller_ids.push_back(gm::decode_ebv(s.keys.sk, ebv));
      }
      for (const auto& ebv : req.buyer_ids) {
        res.buyer_ids.push_back(gm::decode_ebv(s.keys.sk, ebv));
      }
      for (const auto side : {&res.seller_ids, &res.buyer_ids}) {
        std::set<std::uint64_t> seen;
        for (const std::uint64_t id : *side) {
          if (id == kPadOwnerId) {
            throw ProtocolViolation("padding id among winners");
          }
          if (!seen.insert(id).second) {
            throw ProtocolViolation("duplicate winner id");
          }
        }
        std::sort(side->begin(), side->end());
      }
      res.seller_price = gm::decode_ebv(s.keys.sk, req.seller_price);
      res.buyer_price = gm::decode_ebv(s.keys.sk, req.buyer_price);
      s.done = true;
      detail::agent_log(s, "outcome_release");
      return WireMessage{MsgType::outcome_result, encode_outcome_result(res)};
    }
    case MsgType::session_abort:
      throw ProtocolViolation("auctioneer aborted: " +
                              std::string(msg.payload.begin(), msg.payload.end()));
    default:
      throw ProtocolViolation(std::string("unexpected message: ") + msg_type_name(msg.type));
  }
}

// Serves one session over an established channel until completion or EOF.
inline void run_agent_session(AgentSession& session, Channel& channel) {
  for (;;) {
    WireMessage msg{MsgType::session_abort, {}};
    try {
      msg = channel.recv();
    } catch (const ChannelError&) {
      if (session.done) {
        return;  // auctioneer closed after a finished session
      }
      throw;
    }
    const std::optional<WireMessage> reply = agent_handle(session, msg);
    if (reply) {
      channel.send(*reply);
    }
  }
}

// Synchronous in-process agent exposed through the Channel interface. The
// auctioneer's frames still round-trip through the byte codecs, so tests
// over this channel exercise the full wire path minus the socket.
class InProcessAgent final : public Channel {
 public:
  explicit InProcessAgent(const AgentConfig& cfg) : session_(cfg) {}

  void send(const WireMessage& msg) override {
    const Bytes frame = encode_message(msg);
    count_sent(frame.size());
    if (capture_) {
      to_agent_.push_back(msg);
    }
    std::optional<WireMessage> reply = agent_handle(session_, decode_message(frame));
    if (reply) {
      if (capture_) {
        from_agent_.push_back(*reply);
      }
      outbox_.push_back(std::move(*reply));
    }
  }

  WireMessage recv() override {
    if (outbox_.empty()) {
      throw ChannelError("no pending agent reply");
    }
    WireMessage msg = std::move(outbox_.front());
    outbox_.pop_front();
    count_received(encode_message(msg).size());
    return msg;
  }

  AgentSession& session() { return session_; }
  const gm::PublicKey& public_key() const { return session_.keys.pk; }
  const gm::SecretKey& secret_key() const { return session_.keys.sk; }

  void capture_transcript(bool on) { capture_ = on; }
  const std::vector<WireMessage>& sent_to_agent() const { return to_agent_; }
  const std::vector<WireMessage>& received_from_agent() const { return from_agent_; }

 private:
  AgentSession session_;
  std::deque<WireMessage> outbox_;
  bool capture_ = false;
  std::vector<WireMessage> to_agent_;
  std::vector<WireMessage> from_agent_;
};

// --- bidder role ------------------------------------------------------------

// Encodes the bid-ID pair as EBVs under the agent's public key and submits
// it. Overflow and the reserved padding id are rejected before anything is
// transmitted.
inline void submit_bid(Channel& auctioneer, const gm::PublicKey& pk, Side side,
                       const PlainBid& bid, std::size_t bid_bits, std::size_t id_bits,
                       RandomSource& rng) {
  if (bid_bits < 64 && (bid.value >> bid_bits) != 0) {
    throw OverflowError("bid value does not fit the configured bit width");
  }
  if (id_bits < 64 && (bid.owner_id >> id_bits) != 0) {
    throw OverflowError("owner id does not fit the configured bit width");
  }
  if (bid.owner_id == kPadOwnerId) {
    throw Error("owner id 0 is reserved for padding records");
  }
  BidRecord record{gm::encode_ebv(pk, bid.value, bid_bits, rng),
                   gm::encode_ebv(pk, bid.owner_id, id_bits, rng)};
  auctioneer.send(WireMessage{MsgType::bid_submit, encode_bid_submit(side, record)});
  const WireMessage ack = expect_message(auctioneer, MsgType::bid_submit);
  if (!ack.payload.empty()) {
    throw ProtocolViolation("malformed bid acknowledgment");
  }
}

// Full bidder flow over a fresh connection: receive the published key,
// then submit.
inline void run_bidder(Channel& auctioneer, Side side, const PlainBid& bid, std::size_t bid_bits,
                       std::size_t id_bits, RandomSource& rng) {
  const gm::PublicKey pk = parse_pubkey(expect_message(auctioneer, MsgType::pubkey).payload);
  submit_bid(auctioneer, pk, side, bid, bid_bits, id_bits, rng);
}

// --- auctioneer role ---------------------------------------------------------

struct SessionStats {
  std::uint64_t and_gates = 0;
  std::uint64_t gate_rounds = 0;
  std::uint64_t fixed_rounds = 0;  // bid collection, CMP/K exchange, outcome pair
  std::uint64_t bytes_transferred = 0;
  std::int64_t wall_time_ms = 0;

  std::uint64_t rounds() const { return gate_rounds + fixed_rounds; }
};

namespace detail {

inline void auctioneer_log(std::ostream* log, const std::string& step, const GateContext& ctx) {
  if (log != nullptr) {
    *log << "[auctioneer] step=" << step << " rounds=" << ctx.round_counter
         << " and_gates=" << ctx.and_gate_counter << '\n';
  }
}

// Fisher-Yates with rejection-sampled indices; permutations are uniform.
template <typename T>
void shuffle(std::vector<T>& v, RandomSource& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng.index_below(i);
    std::swap(v[i - 1], v[j]);
  }
}

// Sorts one side. When padding is required the sort key gains a one-bit
// flag as its least significant bit (real records on the winning side of
// pads), which keeps pads strictly at the losing end even when a real bid
// equals the pad sentinel; positional stripping is then exact.
inline std::vector<BidRecord> sort_side(GateContext& ctx, const SessionConfig& cfg,
                                        std::vector<BidRecord> records, SortDirection dir,
                                        RandomSource& rng) {
  const std::size_t real_count = records.size();
  std::size_t pads = 0;
  const bool needs_pow2 = cfg.sort_algorithm != SortAlgorithm::sesort;
  if (needs_pow2 && !is_power_of_two(real_count)) {
    PaddedRecords padded = pad_to_pow2(std::move(records), dir, ctx.pk, rng);
    pads = padded.pad_count;
    records = std::move(padded.records);
    for (std::size_t i = 0; i < records.size(); ++i) {
      const bool is_pad = i >= real_count;
      const int pad_flag_high = dir == SortDirection::ascending ? 1 : 0;
      const int flag = is_pad ? pad_flag_high : 1 - pad_flag_high;
      records[i].bid.push_back(gm::encrypt_bit(ctx.pk, flag, rng));
    }
  }
  records = run_sort(ctx, cfg.sort_algorithm, std::move(records), dir);
  if (pads > 0) {
    records.resize(records.size() - pads);
    for (BidRecord& r : records) {
      r.bid.pop_back();
    }
  }
  return records;
}

}  // namespace detail

// Protocol steps 3-5 over an established agent channel: private sorting,
// private winner determination, and outcome release. Bid records arrive in
// submission order, already encrypted under the agent's public key.
inline AuctionOutcome auction_session(Channel& agent, const gm::PublicKey& pk,
                                      const SessionConfig& cfg, RandomSource& rng,
                                      std::vector<BidRecord> sellers,
                                      std::vector<BidRecord> buyers,
                                      SessionStats* stats = nullptr, std::ostream* log = nullptr) {
  if (sellers.empty() || buyers.empty()) {
    throw std::invalid_argument("auction requires at least one seller and one buyer");
  }
  for (const auto* side : {&sellers, &buyers}) {
    for (const BidRecord& r : *side) {
      if (r.bid.size() != cfg.bid_bits || r.id.size() != cfg.id_bits) {
        throw DimensionError("bid record widths do not match the session config");
      }
    }
  }

  GateContext ctx{pk, &agent, &rng};
  const std::size_t seller_count = sellers.size();
  const std::size_t buyer_count = buyers.size();

  sellers = detail::sort_side(ctx, cfg, std::move(sellers), SortDirection::ascending, rng);
  detail::auctioneer_log(log, "sort_sellers", ctx);
  buyers = detail::sort_side(ctx, cfg, std::move(buyers), SortDirection::descending, rng);
  detail::auctioneer_log(log, "sort_buyers", ctx);

  // Compare the i-th cheapest ask against the i-th highest offer, all in
  // one message: E([V_i^b >= V_i^s]) for i = 1..min(M, N).
  const std::size_t m = std::min(seller_count, buyer_count);
  std::vector<CmpJob> jobs;
  jobs.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    jobs.push_back({&buyers[i].bid, &sellers[i].bid});
  }
  const std::vector<gm::Ciphertext> cmp_bits = cmp_many(ctx, jobs, ComparisonMode::greater_equal);
  agent.send(WireMessage{MsgType::cmp_bits, encode_cmp_bits(cmp_bits)});
  const std::size_t k = parse_k_result(expect_message(agent, MsgType::k_result).payload);
  if (k > m) {
    throw ProtocolViolation("agent returned k beyond the comparison count");
  }
  std::uint64_t fixed_rounds = 1;
  detail::auctioneer_log(log, "winner_determination", ctx);

  AuctionOutcome outcome;
  outcome.k = k;
  if (k >= 2) {
    // Fresh randomization defeats ciphertext matching against earlier
    // transcript entries; the uniform permutation hides bid ranks.
    OutcomeRequest req;
    for (std::size_t i = 0; i + 1 < k; ++i) {
      gm::EncryptedBitVector sid;
      gm::EncryptedBitVector bid;
      for (const gm::Ciphertext& c : sellers[i].id) {
        sid.push_back(gm::rerandomize(pk, c, rng));
      }
      for (const gm::Ciphertext& c : buyers[i].id) {
        bid.push_back(gm::rerandomize(pk, c, rng));
      }
      req.seller_ids.push_back(std::move(sid));
      req.buyer_ids.push_back(std::move(bid));
    }
    detail::shuffle(req.seller_ids, rng);
    detail::shuffle(req.buyer_ids, rng);
    for (const gm::Ciphertext& c : sellers[k - 1].bid) {
      req.seller_price.push_back(gm::rerandomize(pk, c, rng));
    }
    for (const gm::Ciphertext& c : buyers[k - 1].bid) {
      req.buyer_price.push_back(gm::rerandomize(pk, c, rng));
    }
    agent.send(WireMessage{MsgType::outcome_request, encode_outcome_request(req)});
    const OutcomeResult res =
        parse_outcome_result(expect_message(agent, MsgType::outcome_result).payload);
    if (res.seller_ids.size() != k - 1 || res.buyer_ids.size() != k - 1) {
      throw ProtocolViolation("outcome winner counts do not match k");
    }
    outcome.winning_seller_ids.insert(res.seller_ids.begin(), res.seller_ids.end());
    outcome.winning_buyer_ids.insert(res.buyer_ids.begin(), res.buyer_ids.end());
    outcome.seller_price = res.seller_price;
    outcome.buyer_price = res.buyer_price;
    fixed_rounds += 1;
    detail::auctioneer_log(log, "outcome_release", ctx);
  } else {
    detail::auctioneer_log(log, "no_trade", ctx);
  }

  if (stats != nullptr) {
    stats->and_gates = ctx.and_gate_counter;
    stats->gate_rounds = ctx.round_counter;
    stats->fixed_rounds += fixed_rounds;
    stats->bytes_transferred += agent.bytes_total();
  }
  return outcome;
}

// Handshake: announce the session, receive and validate the agent's key.
inline gm::PublicKey agent_handshake(Channel& agent, const SessionConfig& cfg) {
  agent.send(WireMessage{MsgType::session_start, encode_session_start(cfg)});
  return parse_pubkey(expect_message(agent, MsgType::pubkey).payload);
}

// Serves one bidder connection: key hand-out, submission, acknowledgment.
inline std::pair<Side, BidRecord> serve_bidder(Channel& bidder, const gm::PublicKey& pk,
                                               const SessionConfig& cfg) {
  bidder.send(WireMessage{MsgType::pubkey, encode_pubkey(pk)});
  auto [side, record] = parse_bid_submit(expect_message(bidder, MsgType::bid_submit).payload);
  if (record.bid.size() != cfg.bid_bits || record.id.size() != cfg.id_bits) {
    throw ProtocolViolation("submitted widths do not match the session config");
  }
  bidder.send(WireMessage{MsgType::bid_submit, {}});
  return {side, std::move(record)};
}

// Stable text form of the final outcome, one field per line.
inline std::string format_outcome(const AuctionOutcome& o) {
  auto join = [](const std::set<std::uint64_t>& ids) {
    std::string s;
    for (const std::uint64_t id : ids) {
      if (!s.empty()) {
        s += ',';
      }
      s += std::to_string(id);
    }
    return s;
  };
  std::string out = "k=" + std::to_string(o.k) + '\n';
  if (o.seller_price) {
    out += "seller_price=" + std::to_string(*o.seller_price) + '\n';
  }
  if (o.buyer_price) {
    out += "buyer_price=" + std::to_string(*o.buyer_price) + '\n';
  }
  out += "winning_sellers=" + join(o.winning_seller_ids) + '\n';
  out += "winning_buyers=" + join(o.winning_buyer_ids) + '\n';
  return out;
}

struct CollectedBids {
  std::vector<BidRecord> sellers;
  std::vector<BidRecord> buyers;
  std::uint64_t bytes = 0;
};

// Accepts bidder connections until both sides are full. A submission for a
// side whose slots are exhausted aborts the session.
inline CollectedBids collect_bids(TcpListener& listener, const gm::PublicKey& pk,
                                  const SessionConfig& cfg, std::size_t seller_slots,
                                  std::size_t buyer_slots) {
  CollectedBids out;
  while (out.sellers.size() < seller_slots || out.buyers.size() < buyer_slots) {
    TcpChannel bidder = listener.accept();
    auto [side, record] = serve_bidder(bidder, pk, cfg);
    auto& bucket = side == Side::seller ? out.sellers : out.buyers;
    const std::size_t slots = side == Side::seller ? seller_slots : buyer_slots;
    if (bucket.size() >= slots) {
      bidder.send(WireMessage{MsgType::session_abort,
                              Bytes{'n', 'o', ' ', 's', 'l', 'o', 't'}});
      throw ProtocolViolation("bid submission for a full side");
    }
    bucket.push_back(std::move(record));
    out.bytes += bidder.bytes_total();
  }
  return out;
}

}  // namespace pda
