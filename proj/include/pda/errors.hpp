#pragma once

#include <stdexcept>

namespace pda {

// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Prime or pseudo-residue search exhausted its iteration bound.
class KeygenError : public Error {
 public:
  using Error::Error;
};

// Ciphertext value outside the unit group modulo n.
class MalformedCiphertext : public Error {
 public:
  using Error::Error;
};

// Plaintext value does not fit the declared bit width.
class OverflowError : public Error {
 public:
  using Error::Error;
};

// Bit-vector widths disagree where the circuit requires equal widths.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// The peer sent something the protocol state machine does not allow.
class ProtocolViolation : public Error {
 public:
  using Error::Error;
};

// Transport-level failure: connect/bind/EOF mid-session.
class ChannelError : public Error {
 public:
  using Error::Error;
};

// Malformed wire frame or payload.
class DecodeError : public Error {
 public:
  using Error::Error;
};

}  // namespace pda
