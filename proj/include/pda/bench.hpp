#pragma once

#include <chrono>
#include <cstdint>
#include <exception>
#include <optional>
#include <ostream>
#include <span>
#include <thread>
#include <vector>

#include "pda/auction.hpp"

// Timing harness: full auction sessions over TCP loopback, one row per
// (algorithm, n, bitlen) cell averaged over seeded random repetitions,
// written as CSV.
namespace pda {

struct BenchmarkRow {
  SortAlgorithm algorithm;
  std::size_t n = 0;       // sellers = buyers
  std::size_t bitlen = 0;  // bid width L
  std::size_t key_bits = 0;
  std::int64_t wall_time_ms = 0;
  std::uint64_t and_gates = 0;
  std::uint64_t rounds = 0;
  std::uint64_t bytes_transferred = 0;
};

struct BenchmarkGrid {
  std::vector<SortAlgorithm> algorithms{SortAlgorithm::sesort, SortAlgorithm::bisort,
                                        SortAlgorithm::oesort};
  std::vector<std::size_t> sizes{8, 16, 32, 64};
  std::vector<std::size_t> bitlens{8, 16};
  std::size_t id_bits = 16;
  std::size_t key_bits = 64;
  std::size_t reps = 10;
  std::uint64_t seed = 42;
};

inline constexpr char kBenchmarkCsvHeader[] =
    "algorithm,n,bitlen,key_bits,wall_time_ms,and_gates,rounds,bytes_transferred";

inline void write_benchmark_csv(std::ostream& os, std::span<const BenchmarkRow> rows) {
  os << kBenchmarkCsvHeader << '\n';
  for (const BenchmarkRow& r : rows) {
    os << sort_algorithm_name(r.algorithm) << ',' << r.n << ',' << r.bitlen << ',' << r.key_bits
       << ',' << r.wall_time_ms << ',' << r.and_gates << ',' << r.rounds << ','
       << r.bytes_transferred << '\n';
  }
}

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

struct LoopbackSessionResult {
  AuctionOutcome outcome;
  SessionStats stats;
  std::int64_t wall_time_us = 0;
  std::vector<std::string> agent_log;
};

// One full session on 127.0.0.1: agent thread, bidder thread, auctioneer in
// the calling thread. Wall time covers the auction proper (sorting, winner
// determination, outcome release), not key generation or bid collection.
inline LoopbackSessionResult run_loopback_session(const SessionConfig& cfg,
                                                  std::span<const PlainBid> seller_bids,
                                                  std::span<const PlainBid> buyer_bids) {
  LoopbackSessionResult result;

  AgentConfig agent_cfg{cfg.key_bits, detail::mix_seed(cfg.seed, 0xa6e47)};
  AgentSession agent_session(agent_cfg);

  TcpListener agent_listener(Endpoint{"127.0.0.1", 0});
  std::exception_ptr agent_error;
  std::thread agent_thread([&] {
    try {
      TcpChannel ch = agent_listener.accept();
      run_agent_session(agent_session, ch);
    } catch (...) {
      agent_error = std::current_exception();
    }
  });

  std::exception_ptr bidder_error;
  std::optional<std::thread> bidder_thread;
  try {
    std::optional<TcpChannel> agent_ch;
    agent_ch.emplace(TcpChannel::connect(Endpoint{"127.0.0.1", agent_listener.bound_port()}));
    const gm::PublicKey pk = agent_handshake(*agent_ch, cfg);

    TcpListener bidder_listener(Endpoint{"127.0.0.1", 0});
    const std::uint16_t bidder_port = bidder_listener.bound_port();
    bidder_thread.emplace([&, bidder_port] {
      try {
        RandomSource bidder_rng(detail::mix_seed(cfg.seed, 0xb1dde5));
        for (const PlainBid& bid : seller_bids) {
          TcpChannel ch = TcpChannel::connect(Endpoint{"127.0.0.1", bidder_port});
          run_bidder(ch, Side::seller, bid, cfg.bid_bits, cfg.id_bits, bidder_rng);
        }
        for (const PlainBid& bid : buyer_bids) {
          TcpChannel ch = TcpChannel::connect(Endpoint{"127.0.0.1", bidder_port});
          run_bidder(ch, Side::buyer, bid, cfg.bid_bits, cfg.id_bits, bidder_rng);
        }
      } catch (...) {
        bidder_error = std::current_exception();
      }
    });

    CollectedBids collected =
        collect_bids(bidder_listener, pk, cfg, seller_bids.size(), buyer_bids.size());
    bidder_thread->join();
    bidder_thread.reset();
    if (bidder_error) {
      std::rethrow_exception(bidder_error);
    }

    result.stats.fixed_rounds = 1;  // bid collection
    result.stats.bytes_transferred = collected.bytes;
    RandomSource rng(detail::mix_seed(cfg.seed, 0xacc7));
    const auto t0 = std::chrono::steady_clock::now();
    result.outcome =
        auction_session(*agent_ch, pk, cfg, rng, std::move(collected.sellers),
                        std::move(collected.buyers), &result.stats);
    const auto t1 = std::chrono::steady_clock::now();
    result.wall_time_us = std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count();
    result.stats.wall_time_ms = result.wall_time_us / 1000;
    agent_ch.reset();  // EOF lets the agent loop finish
  } catch (...) {
    if (bidder_thread && bidder_thread->joinable()) {
      bidder_thread->join();
    }
    agent_thread.join();
    throw;
  }

  agent_thread.join();
  if (agent_error) {
    std::rethrow_exception(agent_error);
  }
  result.agent_log = agent_session.log;
  return result;
}

// Runs the whole grid sequentially (uncontended timings) and averages each
// cell over grid.reps sessions with fresh seeded random bids.
inline std::vector<BenchmarkRow> run_benchmark(const BenchmarkGrid& grid,
                                               std::ostream* progress = nullptr) {
  std::vector<BenchmarkRow> rows;
  for (const SortAlgorithm alg : grid.algorithms) {
    for (const std::size_t n : grid.sizes) {
      for (const std::size_t bitlen : grid.bitlens) {
        std::int64_t total_us = 0;
        std::uint64_t total_bytes = 0;
        std::uint64_t total_gates = 0;
        std::uint64_t total_rounds = 0;
        for (std::size_t rep = 0; rep < grid.reps; ++rep) {
          SessionConfig cfg;
          cfg.bid_bits = bitlen;
          cfg.id_bits = grid.id_bits;
          cfg.key_bits = grid.key_bits;
          cfg.sort_algorithm = alg;
          cfg.seed = detail::mix_seed(grid.seed,
                                      detail::mix_seed(static_cast<std::uint64_t>(alg) * 1000 + n,
                                                       bitlen * 100 + rep));
          RandomSource bid_rng(detail::mix_seed(cfg.seed, 0xb1d5));
          std::vector<PlainBid> sellers;
          std::vector<PlainBid> buyers;
          const std::uint64_t max_value =
              bitlen >= 64 ? UINT64_MAX : ((std::uint64_t{1} << bitlen) - 1);
          for (std::size_t i = 0; i < n; ++i) {
            sellers.push_back({bid_rng.uniform_below(BigInt(max_value) + 1).convert_to<std::uint64_t>(),
                               static_cast<std::uint64_t>(i + 1)});
            buyers.push_back({bid_rng.uniform_below(BigInt(max_value) + 1).convert_to<std::uint64_t>(),
                              static_cast<std::uint64_t>(i + 1)});
          }
          LoopbackSessionResult res = run_loopback_session(cfg, sellers, buyers);
          total_us += res.wall_time_us;
          total_bytes += res.stats.bytes_transferred;
          total_gates += res.stats.and_gates;
          total_rounds += res.stats.rounds();
          if (progress != nullptr) {
            *progress << "bench " << sort_algorithm_name(alg) << " n=" << n << " bitlen=" << bitlen
                      << " rep=" << (rep + 1) << '/' << grid.reps << " wall_us=" << res.wall_time_us
                      << '\n';
          }
        }
        BenchmarkRow row;
        row.algorithm = alg;
        row.n = n;
        row.bitlen = bitlen;
        row.key_bits = grid.key_bits;
        row.wall_time_ms = total_us / static_cast<std::int64_t>(grid.reps) / 1000;
        row.and_gates = total_gates / grid.reps;
        row.rounds = total_rounds / grid.reps;
        row.bytes_transferred = total_bytes / grid.reps;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

}  // namespace pda
