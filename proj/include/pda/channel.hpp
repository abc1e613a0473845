#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <condition_variable>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <utility>

#include "pda/wire.hpp"

namespace pda {

// --- in-memory transport --------------------------------------------------

namespace detail {

struct MessageQueue {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Bytes> frames;
  bool closed = false;

  void push(Bytes frame) {
    {
      std::lock_guard lock(mu);
      if (closed) {
        throw ChannelError("send on closed channel");
      }
      frames.push_back(std::move(frame));
    }
    cv.notify_one();
  }

  Bytes pop() {
    std::unique_lock lock(mu);
    cv.wait(lock, [this] { return !frames.empty() || closed; });
    if (frames.empty()) {
      throw ChannelError("channel closed");
    }
    Bytes frame = std::move(frames.front());
    frames.pop_front();
    return frame;
  }

  void close() {
    {
      std::lock_guard lock(mu);
      closed = true;
    }
    cv.notify_all();
  }
};

}  // namespace detail

// One endpoint of an in-process duplex pipe carrying encoded frames.
// Messages still round-trip through encode/decode, so the byte-level wire
// format is exercised exactly as over a socket.
class InMemoryChannel final : public Channel {
 public:
  static std::pair<std::unique_ptr<InMemoryChannel>, std::unique_ptr<InMemoryChannel>> make_pair() {
    auto a_to_b = std::make_shared<detail::MessageQueue>();
    auto b_to_a = std::make_shared<detail::MessageQueue>();
    auto a = std::unique_ptr<InMemoryChannel>(new InMemoryChannel(a_to_b, b_to_a));
    auto b = std::unique_ptr<InMemoryChannel>(new InMemoryChannel(b_to_a, a_to_b));
    return {std::move(a), std::move(b)};
  }

  ~InMemoryChannel() override { close(); }

  void send(const WireMessage& msg) override {
    Bytes frame = encode_message(msg);
    count_sent(frame.size());
    out_->push(std::move(frame));
  }

  WireMessage recv() override {
    Bytes frame = in_->pop();
    count_received(frame.size());
    return decode_message(frame);
  }

  void close() {
    out_->close();
    in_->close();
  }

 private:
  InMemoryChannel(std::shared_ptr<detail::MessageQueue> out, std::shared_ptr<detail::MessageQueue> in)
      : out_(std::move(out)), in_(std::move(in)) {}

  std::shared_ptr<detail::MessageQueue> out_;
  std::shared_ptr<detail::MessageQueue> in_;
};

// --- TCP transport ----------------------------------------------------------

namespace detail {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  Fd& operator=(Fd&& other) noexcept {
    if (this != &other) {
      reset();
      fd_ = other.fd_;
      other.fd_ = -1;
    }
    return *this;
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }

  void reset() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_ = -1;
};

inline sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw ChannelError("invalid IPv4 address: " + host);
  }
  return addr;
}

}  // namespace detail

// Splits "host:port"; host defaults to loopback when omitted.
struct Endpoint {
  std::string host;
  std::uint16_t port;

  static Endpoint parse(const std::string& s) {
    const auto colon = s.rfind(':');
    if (colon == std::string::npos) {
      throw ChannelError("endpoint must be host:port, got: " + s);
    }
    std::string host = s.substr(0, colon);
    if (host.empty()) {
      host = "127.0.0.1";
    }
    const int port = std::stoi(s.substr(colon + 1));
    if (port < 0 || port > 65535) {
      throw ChannelError("port out of range in: " + s);
    }
    return Endpoint{host, static_cast<std::uint16_t>(port)};
  }
};

class TcpChannel final : public Channel {
 public:
  explicit TcpChannel(detail::Fd fd) : fd_(std::move(fd)) {
    int one = 1;
    ::setsockopt(fd_.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }

  static TcpChannel connect(const Endpoint& ep) {
    detail::Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (!fd.valid()) {
      throw ChannelError("socket() failed");
    }
    sockaddr_in addr = detail::make_addr(ep.host, ep.port);
    if (::connect(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      throw ChannelError("connect to " + ep.host + ":" + std::to_string(ep.port) + " failed: " +
                         std::strerror(errno));
    }
    return TcpChannel(std::move(fd));
  }

  void send(const WireMessage& msg) override {
    const Bytes frame = encode_message(msg);
    std::size_t off = 0;
    while (off < frame.size()) {
      const ssize_t n = ::send(fd_.get(), frame.data() + off, frame.size() - off, MSG_NOSIGNAL);
      if (n <= 0) {
        throw ChannelError("send failed");
      }
      off += static_cast<std::size_t>(n);
    }
    count_sent(frame.size());
  }

  WireMessage recv() override {
    std::uint8_t header[kFrameHeaderSize];
    read_exact(header, kFrameHeaderSize);
    if (!is_known_msg_type(header[0])) {
      throw DecodeError("unknown message type");
    }
    const std::uint32_t len = (static_cast<std::uint32_t>(header[1]) << 24) |
                              (static_cast<std::uint32_t>(header[2]) << 16) |
                              (static_cast<std::uint32_t>(header[3]) << 8) |
                              static_cast<std::uint32_t>(header[4]);
    if (len > kMaxPayload) {
      throw DecodeError("payload length implausibly large");
    }
    WireMessage msg{static_cast<MsgType>(header[0]), Bytes(len)};
    if (len > 0) {
      read_exact(msg.payload.data(), len);
    }
    count_received(kFrameHeaderSize + len);
    return msg;
  }

 private:
  static constexpr std::uint32_t kMaxPayload = 1u << 28;

  void read_exact(std::uint8_t* buf, std::size_t n) {
    std::size_t off = 0;
    while (off < n) {
      const ssize_t got = ::recv(fd_.get(), buf + off, n - off, 0);
      if (got == 0) {
        throw ChannelError("peer closed the connection");
      }
      if (got < 0) {
        throw ChannelError("recv failed");
      }
      off += static_cast<std::size_t>(got);
    }
  }

  detail::Fd fd_;
};

class TcpListener {
 public:
  // Binds host:port; port 0 picks an ephemeral port (see bound_port()).
  explicit TcpListener(const Endpoint& ep) {
    fd_ = detail::Fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (!fd_.valid()) {
      throw ChannelError("socket() failed");
    }
    int one = 1;
    ::setsockopt(fd_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr = detail::make_addr(ep.host, ep.port);
    if (::bind(fd_.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      throw ChannelError("bind to " + ep.host + ":" + std::to_string(ep.port) + " failed: " +
                         std::strerror(errno));
    }
    if (::listen(fd_.get(), 64) != 0) {
      throw ChannelError("listen failed");
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(fd_.get(), reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
  }

  TcpChannel accept() {
    const int fd = ::accept(fd_.get(), nullptr, nullptr);
    if (fd < 0) {
      throw ChannelError("accept failed");
    }
    return TcpChannel(detail::Fd(fd));
  }

  std::uint16_t bound_port() const { return port_; }

 private:
  detail::Fd fd_;
  std::uint16_t port_ = 0;
};

}  // namespace pda
