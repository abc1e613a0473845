#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pda/bigint.hpp"
#include "pda/errors.hpp"

namespace pda {

// One-byte message type, 4-byte big-endian payload length, payload.
enum class MsgType : std::uint8_t {
  pubkey = 0x01,
  bid_submit = 0x02,
  and_request = 0x03,
  and_response = 0x04,
  cmp_bits = 0x05,
  k_result = 0x06,
  outcome_request = 0x07,
  outcome_result = 0x08,
  session_start = 0x09,
  session_abort = 0x0A,
};

inline bool is_known_msg_type(std::uint8_t t) {
  return t >= 0x01 && t <= 0x0A;
}

inline const char* msg_type_name(MsgType t) {
  switch (t) {
    case MsgType::pubkey: return "PUBKEY";
    case MsgType::bid_submit: return "BID_SUBMIT";
    case MsgType::and_request: return "AND_REQUEST";
    case MsgType::and_response: return "AND_RESPONSE";
    case MsgType::cmp_bits: return "CMP_BITS";
    case MsgType::k_result: return "K_RESULT";
    case MsgType::outcome_request: return "OUTCOME_REQUEST";
    case MsgType::outcome_result: return "OUTCOME_RESULT";
    case MsgType::session_start: return "SESSION_START";
    case MsgType::session_abort: return "SESSION_ABORT";
  }
  return "UNKNOWN";
}

struct WireMessage {
  MsgType type;
  Bytes payload;

  bool operator==(const WireMessage&) const = default;
};

inline constexpr std::size_t kFrameHeaderSize = 5;

inline Bytes encode_message(const WireMessage& msg) {
  Bytes out;
  out.reserve(kFrameHeaderSize + msg.payload.size());
  append_u8(out, static_cast<std::uint8_t>(msg.type));
  append_u32(out, static_cast<std::uint32_t>(msg.payload.size()));
  out.insert(out.end(), msg.payload.begin(), msg.payload.end());
  return out;
}

// Decodes exactly one frame occupying the whole buffer.
inline WireMessage decode_message(std::span<const std::uint8_t> raw) {
  if (raw.size() < kFrameHeaderSize) {
    throw DecodeError("frame shorter than header");
  }
  const std::uint8_t type = raw[0];
  if (!is_known_msg_type(type)) {
    throw DecodeError("unknown message type");
  }
  const std::uint32_t len = (static_cast<std::uint32_t>(raw[1]) << 24) |
                            (static_cast<std::uint32_t>(raw[2]) << 16) |
                            (static_cast<std::uint32_t>(raw[3]) << 8) |
                            static_cast<std::uint32_t>(raw[4]);
  if (raw.size() - kFrameHeaderSize < len) {
    throw DecodeError("declared payload length exceeds frame");
  }
  if (raw.size() - kFrameHeaderSize > len) {
    throw DecodeError("trailing bytes after frame");
  }
  return WireMessage{static_cast<MsgType>(type),
                     Bytes(raw.begin() + kFrameHeaderSize, raw.end())};
}

// Bidirectional ordered message endpoint. Implementations count traffic so
// sessions can report bytes transferred.
class Channel {
 public:
  virtual ~Channel() = default;

  virtual void send(const WireMessage& msg) = 0;

  // Blocks for the next message; throws ChannelError on EOF or failure.
  virtual WireMessage recv() = 0;

  std::uint64_t bytes_sent() const { return bytes_sent_; }
  std::uint64_t bytes_received() const { return bytes_received_; }
  std::uint64_t bytes_total() const { return bytes_sent_ + bytes_received_; }

 protected:
  void count_sent(std::size_t n) { bytes_sent_ += n; }
  void count_received(std::size_t n) { bytes_received_ += n; }

 private:
  std::uint64_t bytes_sent_ = 0;
  std::uint64_t bytes_received_ = 0;
};

// Receive with a required type; anything else is a protocol violation,
// except an explicit abort from the peer.
inline WireMessage expect_message(Channel& ch, MsgType want) {
  WireMessage msg = ch.recv();
  if (msg.type == MsgType::session_abort) {
    throw ProtocolViolation("peer aborted the session");
  }
  if (msg.type != want) {
    throw ProtocolViolation(std::string("expected ") + msg_type_name(want) + ", got " +
                            msg_type_name(msg.type));
  }
  return msg;
}

}  // namespace pda
