#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "pda/gate.hpp"

// Comparison and conditional-swap circuits over encrypted bit vectors,
// built from XOR and AND gates only. Control flow depends on widths alone,
// never on plaintext values.
namespace pda {

// Initial carry selects the predicate: strict greater-than or
// greater-or-equal.
enum class ComparisonMode : int {
  greater = 0,        // c1 = 0: result is [x > y]
  greater_equal = 1,  // c1 = 1: result is [x >= y]
};

// An encrypted bid paired with its encrypted owner id; the pair travels
// through sorting as one unit.
struct BidRecord {
  gm::EncryptedBitVector bid;
  gm::EncryptedBitVector id;
};

struct CmpJob {
  const gm::EncryptedBitVector* x;
  const gm::EncryptedBitVector* y;
};

// Evaluates many equal-width comparisons in lockstep: one AND round per bit
// position, from least to most significant. Each comparison consumes
// exactly L AND gates via the carry recurrence
//   c_{i+1} = x_i XOR ((x_i XOR c_i) AND (y_i XOR c_i)).
inline std::vector<gm::Ciphertext> cmp_many(GateContext& ctx, std::span<const CmpJob> jobs,
                                            ComparisonMode mode) {
  if (jobs.empty()) {
    return {};
  }
  const std::size_t width = jobs.front().x->size();
  for (const CmpJob& job : jobs) {
    if (job.x->size() != width || job.y->size() != width) {
      throw DimensionError("comparison operands must share one bit width");
    }
  }
  if (width == 0) {
    throw DimensionError("comparison width must be positive");
  }

  std::vector<gm::Ciphertext> carries;
  carries.reserve(jobs.size());
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    carries.push_back(gm::encrypt_bit(ctx.pk, static_cast<int>(mode), *ctx.rng));
  }

  std::vector<std::pair<gm::Ciphertext, gm::Ciphertext>> layer(jobs.size());
  for (std::size_t bit = 0; bit < width; ++bit) {
    const std::size_t pos = width - 1 - bit;  // LSB first; vectors store MSB first
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      layer[j].first = xor_gate(ctx, (*jobs[j].x)[pos], carries[j]);
      layer[j].second = xor_gate(ctx, (*jobs[j].y)[pos], carries[j]);
    }
    const std::vector<gm::Ciphertext> products = and_gate_batch(ctx, layer);
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      carries[j] = xor_gate(ctx, (*jobs[j].x)[pos], products[j]);
    }
  }
  return carries;
}

inline gm::Ciphertext cmp(GateContext& ctx, const gm::EncryptedBitVector& x,
                          const gm::EncryptedBitVector& y, ComparisonMode mode) {
  const CmpJob job[] = {{&x, &y}};
  return cmp_many(ctx, job, mode)[0];
}

struct SwapJob {
  gm::Ciphertext z;  // swap when z decrypts to 1
  std::size_t lo;
  std::size_t hi;
};

// Oblivious conditional exchange of whole records: for every bit position j
// across bid and id, m_j = z AND (a_j XOR b_j), then a_j ^= m_j, b_j ^= m_j.
// All AND gates of a layer of swaps go out in a single round.
inline void cond_swap_many(GateContext& ctx, std::vector<BidRecord>& records,
                           std::span<const SwapJob> jobs) {
  if (jobs.empty()) {
    return;
  }
  const std::size_t bid_width = records.at(jobs.front().lo).bid.size();
  const std::size_t id_width = records.at(jobs.front().lo).id.size();
  for (const SwapJob& job : jobs) {
    const BidRecord& a = records.at(job.lo);
    const BidRecord& b = records.at(job.hi);
    if (a.bid.size() != bid_width || b.bid.size() != bid_width || a.id.size() != id_width ||
        b.id.size() != id_width) {
      throw DimensionError("conditional swap requires uniform record widths");
    }
  }

  const std::size_t bits_per_swap = bid_width + id_width;
  std::vector<std::pair<gm::Ciphertext, gm::Ciphertext>> layer;
  layer.reserve(jobs.size() * bits_per_swap);
  for (const SwapJob& job : jobs) {
    const BidRecord& a = records[job.lo];
    const BidRecord& b = records[job.hi];
    for (std::size_t i = 0; i < bid_width; ++i) {
      layer.emplace_back(job.z, xor_gate(ctx, a.bid[i], b.bid[i]));
    }
    for (std::size_t i = 0; i < id_width; ++i) {
      layer.emplace_back(job.z, xor_gate(ctx, a.id[i], b.id[i]));
    }
  }

  const std::vector<gm::Ciphertext> masks = and_gate_batch(ctx, layer);
  std::size_t offset = 0;
  for (const SwapJob& job : jobs) {
    BidRecord& a = records[job.lo];
    BidRecord& b = records[job.hi];
    for (std::size_t i = 0; i < bid_width; ++i) {
      const gm::Ciphertext& m = masks[offset + i];
      a.bid[i] = xor_gate(ctx, a.bid[i], m);
      b.bid[i] = xor_gate(ctx, b.bid[i], m);
    }
    for (std::size_t i = 0; i < id_width; ++i) {
      const gm::Ciphertext& m = masks[offset + bid_width + i];
      a.id[i] = xor_gate(ctx, a.id[i], m);
      b.id[i] = xor_gate(ctx, b.id[i], m);
    }
    offset += bits_per_swap;
  }
}

// Single conditional swap; consumes L + L' AND gates.
inline std::pair<BidRecord, BidRecord> cond_swap(GateContext& ctx, const gm::Ciphertext& z,
                                                 const BidRecord& a, const BidRecord& b) {
  std::vector<BidRecord> pair = {a, b};
  const SwapJob job[] = {{z, 0, 1}};
  cond_swap_many(ctx, pair, job);
  return {std::move(pair[0]), std::move(pair[1])};
}

}  // namespace pda
