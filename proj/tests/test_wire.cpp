#include <catch2/catch_amalgamated.hpp>

#include <thread>

#include "pda/channel.hpp"
#include "pda/wire.hpp"

using namespace pda;

TEST_CASE("frame round-trip over random valid messages") {
  RandomSource rng(11);
  for (int i = 0; i < 1000; ++i) {
    WireMessage msg;
    msg.type = static_cast<MsgType>(1 + rng.index_below(10));
    msg.payload.resize(rng.index_below(200));
    for (auto& b : msg.payload) {
      b = static_cast<std::uint8_t>(rng.next_u64());
    }
    REQUIRE(decode_message(encode_message(msg)) == msg);
  }
}

TEST_CASE("zero-length payload frames round-trip") {
  const WireMessage msg{MsgType::session_start, {}};
  const Bytes raw = encode_message(msg);
  REQUIRE(raw.size() == kFrameHeaderSize);
  REQUIRE(decode_message(raw) == msg);
}

TEST_CASE("malformed frames are rejected") {
  WireMessage msg{MsgType::cmp_bits, {1, 2, 3}};
  Bytes raw = encode_message(msg);

  SECTION("declared length exceeding actual bytes") {
    raw.pop_back();
    REQUIRE_THROWS_AS(decode_message(raw), DecodeError);
  }
  SECTION("trailing bytes") {
    raw.push_back(0);
    REQUIRE_THROWS_AS(decode_message(raw), DecodeError);
  }
  SECTION("unknown message type") {
    raw[0] = 0x7F;
    REQUIRE_THROWS_AS(decode_message(raw), DecodeError);
  }
  SECTION("short header") {
    REQUIRE_THROWS_AS(decode_message(Bytes{0x01, 0x00}), DecodeError);
  }
}

TEST_CASE("in-memory channel delivers ordered frames and counts bytes") {
  auto [a, b] = InMemoryChannel::make_pair();
  const WireMessage m1{MsgType::pubkey, {1, 2}};
  const WireMessage m2{MsgType::bid_submit, {}};
  a->send(m1);
  a->send(m2);
  REQUIRE(b->recv() == m1);
  REQUIRE(b->recv() == m2);
  REQUIRE(a->bytes_sent() == 2 * kFrameHeaderSize + 2);
  REQUIRE(b->bytes_received() == a->bytes_sent());

  a->close();
  REQUIRE_THROWS_AS(b->recv(), ChannelError);
  REQUIRE_THROWS_AS(b->send(m1), ChannelError);
}

TEST_CASE("in-memory channel works across threads") {
  auto [a, b] = InMemoryChannel::make_pair();
  std::thread echo([&b = *b] {
    for (;;) {
      WireMessage msg{MsgType::session_abort, {}};
      try {
        msg = b.recv();
      } catch (const ChannelError&) {
        return;
      }
      b.send(msg);
    }
  });
  for (int i = 0; i < 50; ++i) {
    const WireMessage msg{MsgType::and_request, Bytes{static_cast<std::uint8_t>(i)}};
    a->send(msg);
    REQUIRE(a->recv() == msg);
  }
  a->close();
  echo.join();
}

TEST_CASE("tcp loopback channel carries frames") {
  TcpListener listener(Endpoint{"127.0.0.1", 0});
  const std::uint16_t port = listener.bound_port();
  REQUIRE(port != 0);

  std::thread server([&] {
    TcpChannel ch = listener.accept();
    const WireMessage msg = ch.recv();
    ch.send(msg);
  });

  TcpChannel client = TcpChannel::connect(Endpoint{"127.0.0.1", port});
  const WireMessage msg{MsgType::and_response, Bytes(300, 0xAB)};
  client.send(msg);
  REQUIRE(client.recv() == msg);
  REQUIRE(client.bytes_sent() == kFrameHeaderSize + 300);
  REQUIRE(client.bytes_received() == client.bytes_sent());
  server.join();
}

TEST_CASE("connecting to a dead port fails with a channel error") {
  // Bind then immediately drop a listener to find a port that is closed.
  std::uint16_t port;
  {
    TcpListener listener(Endpoint{"127.0.0.1", 0});
    port = listener.bound_port();
  }
  REQUIRE_THROWS_AS(TcpChannel::connect(Endpoint{"127.0.0.1", port}), ChannelError);
}

TEST_CASE("endpoint parsing") {
  const Endpoint ep = Endpoint::parse("10.0.0.1:8080");
  REQUIRE(ep.host == "10.0.0.1");
  REQUIRE(ep.port == 8080);
  REQUIRE(Endpoint::parse(":9").host == "127.0.0.1");
  REQUIRE_THROWS_AS(Endpoint::parse("nocolon"), ChannelError);
  REQUIRE_THROWS_AS(Endpoint::parse("1.2.3.4:70000"), ChannelError);
}
