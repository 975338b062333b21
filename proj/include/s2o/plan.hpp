// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "s2o/tensor.hpp"

namespace s2o {

/// Segment partition of a length-L sequence: seg_count = ceil(L / seg_len),
/// the last segment may be short (no padding tokens are fabricated).
struct SegmentConfig {
    std::int64_t seg_len = 0;
    std::int64_t seg_count = 0;
    std::int64_t last_len = 0;

    static SegmentConfig for_sequence(std::int64_t l, std::int64_t seg_len);

    std::int64_t begin(std::int64_t n) const { return n * seg_len; }
    std::int64_t len(std::int64_t n) const {
        return (n + 1 == seg_count) ? last_len : seg_len;
    }
    /// Token count of the causal prefix visible to all of segment n's rows.
    std::int64_t prefix_len(std::int64_t n) const { return n * seg_len; }
};

/// One D-vector per (z, h, segment): the mean-pooled representatives.
struct SegmentVectors {
    std::int64_t z = 0, h = 0, n = 0, d = 0;
    std::vector<float> data;

    SegmentVectors() = default;
    SegmentVectors(std::int64_t z_, std::int64_t h_, std::int64_t n_, std::int64_t d_)
        : z(z_), h(h_), n(n_), d(d_),
          data(static_cast<std::size_t>(z_ * h_ * n_ * d_), 0.0f) {}

    float* at(std::int64_t zi, std::int64_t hi, std::int64_t ni) {
        return data.data() + static_cast<std::size_t>(((zi * h + hi) * n + ni) * d);
    }
    const float* at(std::int64_t zi, std::int64_t hi, std::int64_t ni) const {
        return data.data() + static_cast<std::size_t>(((zi * h + hi) * n + ni) * d);
    }
};

/// One D-vector per (z, h): the shared ranking guide.
struct HeadVectors {
    std::int64_t z = 0, h = 0, d = 0;
    std::vector<float> data;

    HeadVectors() = default;
    HeadVectors(std::int64_t z_, std::int64_t h_, std::int64_t d_)
        : z(z_), h(h_), d(d_), data(static_cast<std::size_t>(z_ * h_ * d_), 0.0f) {}

    float* at(std::int64_t zi, std::int64_t hi) {
        return data.data() + static_cast<std::size_t>((zi * h + hi) * d);
    }
    const float* at(std::int64_t zi, std::int64_t hi) const {
        return data.data() + static_cast<std::size_t>((zi * h + hi) * d);
    }
};

struct Representatives {
    SegmentVectors q_mean;
    SegmentVectors k_mean;
};

/// Preprocessing cost for one (z, h) slice: every slice performs the same
/// counts, so the plan keeps a single measured copy.
struct RankingCost {
    std::int64_t dot_products = 0;
    std::int64_t sort_items = 0;
};

/// Index metadata driving the permuted traversal; no tensor rows move.
/// q_perm entries are segment-local offsets; kv_perm entries are absolute
/// token indices over the causal prefix [0, n * seg_len), best-first.
struct PermutationPlan {
    std::int64_t z = 0, h = 0;
    SegmentConfig seg;
    std::vector<IndexVec> q_perm;   // [(zi * h + hi) * seg_count + n]
    std::vector<IndexVec> kv_perm;
    std::string guide_source;

    std::size_t slot(std::int64_t zi, std::int64_t hi, std::int64_t n) const {
        return static_cast<std::size_t>((zi * h + hi) * seg.seg_count + n);
    }
    const IndexVec& q_perm_at(std::int64_t zi, std::int64_t hi, std::int64_t n) const {
        return q_perm[slot(zi, hi, n)];
    }
    const IndexVec& kv_perm_at(std::int64_t zi, std::int64_t hi, std::int64_t n) const {
        return kv_perm[slot(zi, hi, n)];
    }
};

/// Mean-pooled q/k representative per segment.
Representatives segment_representatives(const Tensor4& q, const Tensor4& k,
                                        const SegmentConfig& seg);

/// Scores every query against the guide vector and argsorts each segment
/// descending; returned IndexVecs hold segment-local offsets.
std::vector<IndexVec> rank_queries(const Tensor4& q, const HeadVectors& k_guide,
                                   const SegmentConfig& seg, RankingCost* cost = nullptr);

/// Scores the causal prefix of each segment with its q representative and
/// argsorts descending. Segment 0 gets an empty list.
std::vector<IndexVec> rank_prefix_keys(const SegmentVectors& q_mean, const Tensor4& k,
                                       const SegmentConfig& seg, RankingCost* cost = nullptr);

/// Full intra-segment lightweight ranking: representatives, guide = segment
/// 0's k_mean, query permutation, prefix key permutation, cost counters.
std::pair<PermutationPlan, RankingCost> build_plan(const Tensor4& q, const Tensor4& k,
                                                   std::int64_t seg_len);

}  // namespace s2o
