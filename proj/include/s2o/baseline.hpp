// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "s2o/tensor.hpp"

namespace s2o {

/// Fixed-granularity budget: block shape in tokens plus the number of causal
/// prefix blocks retained per query-block row (the diagonal block is always
/// kept).
struct BlockBudget {
    std::int64_t block_rows = 16;
    std::int64_t block_cols = 16;
    std::int64_t k = 0;
};

struct BlockTopkResult {
    Tensor4 out;
    std::vector<std::int64_t> pair_count;  // computed causal pairs per (z, h)
};

/// Block-sparse baseline with oracle-grade selection: per query-block row,
/// blocks are ranked by their exact causal attention mass (from the dense
/// softmax), the self block plus the k best prefix blocks are kept, and a
/// masked softmax runs over the kept region. Ties break on ascending block
/// index. Selection quality upper-bounds any heuristic fixed-block picker.
BlockTopkResult block_topk_attention(const Tensor4& q, const Tensor4& k, const Tensor4& v,
                                     const BlockBudget& budget);

/// Computed-pair totals (summed over z, h) for every k in [0, k_max] under
/// the same ranking, without running the attention. Used to tune budgets to
/// a sparsity target: counts are nested and increase with k.
std::vector<std::int64_t> block_topk_pair_counts(const Tensor4& q, const Tensor4& k,
                                                 const BlockBudget& shape,
                                                 std::int64_t k_max);

}  // namespace s2o
