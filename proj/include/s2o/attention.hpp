// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "s2o/tensor.hpp"

namespace s2o {

/// Query/key tile shape for the streaming engine.
struct TileSpec {
    std::int64_t b_m = 128;
    std::int64_t b_n = 128;
};

/// Per-query-row online-softmax state. Starts at (-inf, 0, 0); after at
/// least one visible key the max is finite and the normalizer is positive.
struct OnlineSoftmaxState {
    double m = -std::numeric_limits<double>::infinity();
    double ell = 0.0;
    std::vector<double> acc;

    OnlineSoftmaxState() = default;
    explicit OnlineSoftmaxState(std::int64_t d) : acc(static_cast<std::size_t>(d), 0.0) {}
};

/// Online-softmax tile merge for a block of query rows against one key tile.
/// Scores are q.k / sqrt(D); mask is row-major [rows x keys] with nonzero =
/// visible, empty = fully visible. Masked keys are skipped outright so a
/// poisoned K/V row can never leak through an exp(-inf)*NaN product. Rows
/// with no visible key in the tile keep their state unchanged.
void os_update(std::span<OnlineSoftmaxState> states,
               const RowMatrix& q_tile, const RowMatrix& k_tile, const RowMatrix& v_tile,
               std::span<const std::uint8_t> mask = {});

/// Exact causal attention via explicit per-row softmax in fp64. This is the
/// error reference every sparse variant is scored against.
Tensor4 dense_causal_attention(const Tensor4& q, const Tensor4& k, const Tensor4& v);

/// Tiled causal attention: canonical tile order, per-row online softmax,
/// final output acc/ell. Throws "uncovered query row" if a row ends with a
/// zero normalizer (unreachable under a causal mask).
Tensor4 flash_causal_attention(const Tensor4& q, const Tensor4& k, const Tensor4& v,
                               const TileSpec& tiles);

/// Full causal softmax weight matrix for one (z, h) slice, row-major L x L
/// with strictly-future entries zero and each row summing to 1.
std::vector<float> dense_attention_weights(const Tensor4& q, const Tensor4& k,
                                           std::int64_t zi, std::int64_t hi);

}  // namespace s2o
