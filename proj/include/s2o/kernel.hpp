// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "s2o/attention.hpp"
#include "s2o/plan.hpp"
#include "s2o/tensor.hpp"

namespace s2o {

/// Sparse-kernel knobs. local_window is accepted and bounds-checked but the
/// dense intra-segment pass already covers the local region, so no separate
/// window step runs; -1 means "equal to seg_len".
struct KernelConfig {
    std::int64_t seg_len = 128;
    double tau = 0.005;
    TileSpec tiles{128, 128};
    bool q_reorder = true;
    bool fused = false;
    std::int64_t local_window = -1;

    void validate(std::int64_t l) const;
};

/// Pass-1 output: per-row (acc, ell, m) kept in original token order.
struct PassBuffers {
    std::int64_t z = 0, h = 0, l = 0, d = 0;
    std::vector<double> acc;  // [z][h][l][d]
    std::vector<double> ell;  // [z][h][l]
    std::vector<double> m;    // [z][h][l]

    PassBuffers() = default;
    PassBuffers(std::int64_t z_, std::int64_t h_, std::int64_t l_, std::int64_t d_)
        : z(z_), h(h_), l(l_), d(d_),
          acc(static_cast<std::size_t>(z_ * h_ * l_ * d_), 0.0),
          ell(static_cast<std::size_t>(z_ * h_ * l_), 0.0),
          m(static_cast<std::size_t>(z_ * h_ * l_), 0.0) {}

    std::size_t row_slot(std::int64_t zi, std::int64_t hi, std::int64_t li) const {
        return static_cast<std::size_t>((zi * h + hi) * l + li);
    }
};

/// What the kernel actually touched: committed prefix tiles per
/// (z, h, segment, query tile) and pair counters per head. A tile that
/// triggers the stop is discarded, so it appears in neither.
struct KernelTrace {
    std::int64_t z = 0, h = 0, l = 0;
    std::int64_t seg_len = 0;
    TileSpec tiles;
    std::vector<std::vector<std::vector<std::int64_t>>> processed_tiles;  // [z*h][segment][qtile]
    std::vector<std::int64_t> pass1_pairs;  // per z*h: exact causal triangle per segment
    std::vector<std::int64_t> pass2_pairs;  // per z*h: committed prefix pairs, clipped extents

    bool operator==(const KernelTrace& o) const {
        return z == o.z && h == o.h && l == o.l && seg_len == o.seg_len &&
               tiles.b_m == o.tiles.b_m && tiles.b_n == o.tiles.b_n &&
               processed_tiles == o.processed_tiles &&
               pass1_pairs == o.pass1_pairs && pass2_pairs == o.pass2_pairs;
    }
};

/// Pass-1: dense causal attention restricted to each segment's own rows,
/// persisting unfinalized online-softmax states per row.
PassBuffers pass1_dense_init(const Tensor4& q, const Tensor4& k, const Tensor4& v,
                             const KernelConfig& cfg);

/// Stop rule for one query tile after a candidate prefix-tile update. Both
/// normalizer vectors must share the candidate's max shift; returns true iff
/// max over rows of (new - prev) / prev falls below tau. Throws
/// "uninitialized state" on a non-positive prev entry.
bool early_stop_check(std::span<const double> prev_ell, std::span<const double> new_ell,
                      double tau);

/// Pass-2: resume Pass-1 states, gather queries per q_perm (identity when
/// q_reorder is off), traverse each segment's kv_perm in B_N tiles with the
/// monotone-gain stop, finalize acc/ell and scatter outputs back.
std::pair<Tensor4, KernelTrace> pass2_sparse(const Tensor4& q, const Tensor4& k,
                                             const Tensor4& v, const PassBuffers& bufs,
                                             const PermutationPlan& plan,
                                             const KernelConfig& cfg);

/// Single-pass variant, no query reordering: per query tile, inline the
/// intra-segment causal init then the kv_perm traversal, never materializing
/// PassBuffers. Visits the exact tile schedule of the two-pass path, so
/// outputs and traces coincide. Only plan.kv_perm is consulted.
std::pair<Tensor4, KernelTrace> fused_single_pass(const Tensor4& q, const Tensor4& k,
                                                  const Tensor4& v,
                                                  const PermutationPlan& plan,
                                                  const KernelConfig& cfg);

struct S2oResult {
    Tensor4 out;
    KernelTrace trace;
    PermutationPlan plan;
    RankingCost cost;
};

/// Plan + kernel in one call: build_plan, then either pass1+pass2 or the
/// fused variant depending on cfg.fused.
S2oResult s2o_attention(const Tensor4& q, const Tensor4& k, const Tensor4& v,
                        const KernelConfig& cfg);

}  // namespace s2o
