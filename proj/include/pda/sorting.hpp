#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "pda/circuits.hpp"

// Oblivious sorting of encrypted bid-ID records via fixed comparator
// networks: selection (all pairs), bitonic, and Batcher's odd-even merge.
// The comparator sequence depends only on the algorithm and n, never on
// data, which is what keeps the sorts private.
namespace pda {

enum class SortAlgorithm { sesort, bisort, oesort };

inline const char* sort_algorithm_name(SortAlgorithm alg) {
  switch (alg) {
    case SortAlgorithm::sesort: return "sesort";
    case SortAlgorithm::bisort: return "bisort";
    case SortAlgorithm::oesort: return "oesort";
  }
  return "?";
}

enum class SortDirection { ascending, descending };

// Comparator oriented for an ascending sort: after execution the record at
// `lo` holds the smaller bid. A descending sort runs the same network with
// every comparator flipped.
struct Comparator {
  std::size_t lo;
  std::size_t hi;

  bool operator==(const Comparator&) const = default;
};

// Index pairs actually touched, in execution order; the obliviousness
// witness checked by tests.
using ComparatorTrace = std::vector<Comparator>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// All pairs (i, j), i < j, in row-major order: n(n-1)/2 comparators.
inline std::vector<Comparator> selection_network(std::size_t n) {
  std::vector<Comparator> out;
  out.reserve(n < 2 ? 0 : n * (n - 1) / 2);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      out.push_back({i, j});
    }
  }
  return out;
}

namespace detail {

inline void bitonic_merge(std::vector<Comparator>& out, bool up, std::size_t lo, std::size_t n) {
  if (n <= 1) {
    return;
  }
  const std::size_t m = n / 2;
  for (std::size_t i = 0; i < m; ++i) {
    if (up) {
      out.push_back({lo + i, lo + i + m});
    } else {
      out.push_back({lo + i + m, lo + i});
    }
  }
  bitonic_merge(out, up, lo, m);
  bitonic_merge(out, up, lo + m, m);
}

inline void bitonic_sort(std::vector<Comparator>& out, bool up, std::size_t lo, std::size_t n) {
  if (n <= 1) {
    return;
  }
  const std::size_t m = n / 2;
  bitonic_sort(out, true, lo, m);
  bitonic_sort(out, false, lo + m, m);
  bitonic_merge(out, up, lo, n);
}

// Batcher's odd-even merge over the elements lo, lo+r, ..., lo+(count-1)r.
inline void odd_even_merge(std::vector<Comparator>& out, std::size_t lo, std::size_t count,
                           std::size_t r) {
  if (count <= 2) {
    out.push_back({lo, lo + r});
    return;
  }
  odd_even_merge(out, lo, count / 2, 2 * r);
  odd_even_merge(out, lo + r, count / 2, 2 * r);
  for (std::size_t i = 1; i + 2 <= count; i += 2) {
    out.push_back({lo + i * r, lo + (i + 1) * r});
  }
}

inline void odd_even_sort(std::vector<Comparator>& out, std::size_t lo, std::size_t n) {
  if (n <= 1) {
    return;
  }
  odd_even_sort(out, lo, n / 2);
  odd_even_sort(out, lo + n / 2, n / 2);
  odd_even_merge(out, lo, n, 1);
}

}  // namespace detail

inline std::vector<Comparator> bitonic_network(std::size_t n) {
  if (!is_power_of_two(n)) {
    throw DimensionError("bitonic network requires a power-of-two length");
  }
  std::vector<Comparator> out;
  detail::bitonic_sort(out, true, 0, n);
  return out;
}

inline std::vector<Comparator> odd_even_merge_network(std::size_t n) {
  if (!is_power_of_two(n)) {
    throw DimensionError("odd-even merge network requires a power-of-two length");
  }
  std::vector<Comparator> out;
  detail::odd_even_sort(out, 0, n);
  return out;
}

inline std::vector<Comparator> comparator_network(SortAlgorithm alg, std::size_t n) {
  switch (alg) {
    case SortAlgorithm::sesort: return selection_network(n);
    case SortAlgorithm::bisort: return bitonic_network(n);
    case SortAlgorithm::oesort: return odd_even_merge_network(n);
  }
  throw Error("unknown sort algorithm");
}

inline std::size_t comparator_count(SortAlgorithm alg, std::size_t n) {
  return comparator_network(alg, n).size();
}

// Greedy as-soon-as-possible schedule: a comparator lands one layer after
// the last earlier comparator touching either of its indices. Comparators
// within a layer are disjoint, so their AND gates share one round.
inline std::vector<std::vector<Comparator>> layer_network(const std::vector<Comparator>& network,
                                                          std::size_t n) {
  std::vector<std::size_t> last(n, 0);
  std::vector<std::vector<Comparator>> layers;
  for (const Comparator& c : network) {
    const std::size_t layer = std::max(last[c.lo], last[c.hi]) + 1;
    if (layer > layers.size()) {
      layers.emplace_back();
    }
    layers[layer - 1].push_back(c);
    last[c.lo] = layer;
    last[c.hi] = layer;
  }
  return layers;
}

namespace detail {

inline std::vector<BidRecord> run_network(GateContext& ctx, std::vector<BidRecord> records,
                                          const std::vector<Comparator>& network,
                                          SortDirection dir, ComparatorTrace* trace) {
  if (records.empty()) {
    return records;
  }
  const std::size_t bid_width = records.front().bid.size();
  const std::size_t id_width = records.front().id.size();
  for (const BidRecord& r : records) {
    if (r.bid.size() != bid_width || r.id.size() != id_width) {
      throw DimensionError("records must share bid and id widths");
    }
  }

  const bool ascending = dir == SortDirection::ascending;
  for (const auto& layer : layer_network(network, records.size())) {
    std::vector<CmpJob> cmp_jobs;
    cmp_jobs.reserve(layer.size());
    for (const Comparator& c : layer) {
      const std::size_t lo = ascending ? c.lo : c.hi;
      const std::size_t hi = ascending ? c.hi : c.lo;
      cmp_jobs.push_back({&records[lo].bid, &records[hi].bid});
      if (trace != nullptr) {
        trace->push_back({std::min(c.lo, c.hi), std::max(c.lo, c.hi)});
      }
    }
    // Swap exactly when the low-side bid strictly exceeds the high-side
    // bid, so equal bids never move.
    const std::vector<gm::Ciphertext> swap_bits = cmp_many(ctx, cmp_jobs, ComparisonMode::greater);
    std::vector<SwapJob> swap_jobs;
    swap_jobs.reserve(layer.size());
    for (std::size_t i = 0; i < layer.size(); ++i) {
      const Comparator& c = layer[i];
      const std::size_t lo = ascending ? c.lo : c.hi;
      const std::size_t hi = ascending ? c.hi : c.lo;
      swap_jobs.push_back({swap_bits[i], lo, hi});
    }
    cond_swap_many(ctx, records, swap_jobs);
  }
  return records;
}

}  // namespace detail

// Selection network sort; accepts any n >= 1.
inline std::vector<BidRecord> se_sort(GateContext& ctx, std::vector<BidRecord> records,
                                      SortDirection dir, ComparatorTrace* trace = nullptr) {
  const std::vector<Comparator> network = selection_network(records.size());
  return detail::run_network(ctx, std::move(records), network, dir, trace);
}

// Bitonic network sort; n must be a power of two (pad first).
inline std::vector<BidRecord> bi_sort(GateContext& ctx, std::vector<BidRecord> records,
                                      SortDirection dir, ComparatorTrace* trace = nullptr) {
  const std::vector<Comparator> network = bitonic_network(records.size());
  return detail::run_network(ctx, std::move(records), network, dir, trace);
}

// Odd-even merge network sort; n must be a power of two (pad first).
inline std::vector<BidRecord> oe_sort(GateContext& ctx, std::vector<BidRecord> records,
                                      SortDirection dir, ComparatorTrace* trace = nullptr) {
  const std::vector<Comparator> network = odd_even_merge_network(records.size());
  return detail::run_network(ctx, std::move(records), network, dir, trace);
}

inline std::vector<BidRecord> run_sort(GateContext& ctx, SortAlgorithm alg,
                                       std::vector<BidRecord> records, SortDirection dir,
                                       ComparatorTrace* trace = nullptr) {
  const std::vector<Comparator> network = comparator_network(alg, records.size());
  return detail::run_network(ctx, std::move(records), network, dir, trace);
}

struct PaddedRecords {
  std::vector<BidRecord> records;
  std::size_t pad_count = 0;
};

inline constexpr std::uint64_t kPadOwnerId = 0;  // reserved: never a real bidder

// Pads a sequence up to the next power of two with records that sort to the
// never-winning end: bid 2^L - 1 for ascending (sellers), bid 0 for
// descending (buyers), owner id 0.
inline PaddedRecords pad_to_pow2(std::vector<BidRecord> records, SortDirection dir,
                                 const gm::PublicKey& pk, RandomSource& rng) {
  PaddedRecords out{std::move(records), 0};
  const std::size_t n = out.records.size();
  if (n == 0 || is_power_of_two(n)) {
    return out;
  }
  std::size_t target = 1;
  while (target < n) {
    target <<= 1;
  }
  const std::size_t bid_width = out.records.front().bid.size();
  const std::size_t id_width = out.records.front().id.size();
  const std::uint64_t pad_bid =
      dir == SortDirection::ascending ? ((bid_width >= 64 ? 0 : (std::uint64_t{1} << bid_width)) - 1)
                                      : 0;
  while (out.records.size() < target) {
    out.records.push_back(BidRecord{gm::encode_ebv(pk, pad_bid, bid_width, rng),
                                    gm::encode_ebv(pk, kPadOwnerId, id_width, rng)});
    ++out.pad_count;
  }
  return out;
}

}  // namespace pda
