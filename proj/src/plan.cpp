// SPDX-License-Identifier: Apache-2.0

#include "s2o/plan.hpp"

#include <cstring>
#include <stdexcept>

#include "s2o/parallel.hpp"

namespace s2o {

namespace {

double dot_f(const float* a, const float* b, std::int64_t d) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < d; ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

// Per-slice counters folded left-to-right; every slice must agree.
RankingCost reduce_costs(const std::vector<RankingCost>& per_slice) {
    RankingCost out = per_slice.front();
    for (const RankingCost& c : per_slice) {
        if (c.dot_products != out.dot_products || c.sort_items != out.sort_items) {
            throw std::logic_error("ranking cost differs across (z, h) slices");
        }
    }
    return out;
}

}  // namespace

SegmentConfig SegmentConfig::for_sequence(std::int64_t l, std::int64_t seg_len) {
    if (seg_len < 1 || seg_len > l) {
        throw std::invalid_argument("segment length must satisfy 1 <= S <= L");
    }
    SegmentConfig cfg;
    cfg.seg_len = seg_len;
    cfg.seg_count = (l + seg_len - 1) / seg_len;
    cfg.last_len = l - (cfg.seg_count - 1) * seg_len;
    return cfg;
}

Representatives segment_representatives(const Tensor4& q, const Tensor4& k,
                                        const SegmentConfig& seg) {
    if (!q.same_dims(k)) {
        throw std::invalid_argument("Q/K dims must match");
    }
    Representatives reps;
    reps.q_mean = SegmentVectors(q.z, q.h, seg.seg_count, q.d);
    reps.k_mean = SegmentVectors(q.z, q.h, seg.seg_count, q.d);
    parallel_for(q.z * q.h, [&](std::int64_t slice) {
        const std::int64_t zi = slice / q.h;
        const std::int64_t hi = slice % q.h;
        for (std::int64_t n = 0; n < seg.seg_count; ++n) {
            const std::int64_t lo = seg.begin(n);
            const std::int64_t hi_row = lo + seg.len(n);
            const std::vector<float> qm = mean_pool_rows(q, zi, hi, lo, hi_row);
            const std::vector<float> km = mean_pool_rows(k, zi, hi, lo, hi_row);
            std::memcpy(reps.q_mean.at(zi, hi, n), qm.data(), qm.size() * sizeof(float));
            std::memcpy(reps.k_mean.at(zi, hi, n), km.data(), km.size() * sizeof(float));
        }
    });
    return reps;
}

std::vector<IndexVec> rank_queries(const Tensor4& q, const HeadVectors& k_guide,
                                   const SegmentConfig& seg, RankingCost* cost) {
    if (k_guide.d != q.d || k_guide.z != q.z || k_guide.h != q.h) {
        throw std::invalid_argument("guide vector dims must match Q");
    }
    std::vector<IndexVec> out(static_cast<std::size_t>(q.z * q.h * seg.seg_count));
    std::vector<RankingCost> slice_cost(static_cast<std::size_t>(q.z * q.h));
    parallel_for(q.z * q.h, [&](std::int64_t slice) {
        const std::int64_t zi = slice / q.h;
        const std::int64_t hi = slice % q.h;
        const float* guide = k_guide.at(zi, hi);
        RankingCost& c = slice_cost[static_cast<std::size_t>(slice)];
        std::vector<double> scores;
        for (std::int64_t n = 0; n < seg.seg_count; ++n) {
            const std::int64_t len = seg.len(n);
            scores.resize(static_cast<std::size_t>(len));
            for (std::int64_t s = 0; s < len; ++s) {
                scores[static_cast<std::size_t>(s)] =
                    dot_f(q.row(zi, hi, seg.begin(n) + s), guide, q.d);
            }
            c.dot_products += len;
            c.sort_items += len;
            out[static_cast<std::size_t>(slice * seg.seg_count + n)] =
                argsort_desc_stable(scores);
        }
    });
    if (cost) {
        const RankingCost folded = reduce_costs(slice_cost);
        cost->dot_products += folded.dot_products;
        cost->sort_items += folded.sort_items;
    }
    return out;
}

std::vector<IndexVec> rank_prefix_keys(const SegmentVectors& q_mean, const Tensor4& k,
                                       const SegmentConfig& seg, RankingCost* cost) {
    if (q_mean.d != k.d || q_mean.z != k.z || q_mean.h != k.h || q_mean.n != seg.seg_count) {
        throw std::invalid_argument("q_mean dims must match K and segment config");
    }
    std::vector<IndexVec> out(static_cast<std::size_t>(k.z * k.h * seg.seg_count));
    std::vector<RankingCost> slice_cost(static_cast<std::size_t>(k.z * k.h));
    parallel_for(k.z * k.h, [&](std::int64_t slice) {
        const std::int64_t zi = slice / k.h;
        const std::int64_t hi = slice % k.h;
        RankingCost& c = slice_cost[static_cast<std::size_t>(slice)];
        std::vector<double> scores;
        for (std::int64_t n = 0; n < seg.seg_count; ++n) {
            const std::int64_t prefix = seg.prefix_len(n);
            if (prefix == 0) {
                out[static_cast<std::size_t>(slice * seg.seg_count + n)] = IndexVec({}, 0);
                continue;
            }
            const float* qm = q_mean.at(zi, hi, n);
            scores.resize(static_cast<std::size_t>(prefix));
            for (std::int64_t t = 0; t < prefix; ++t) {
                scores[static_cast<std::size_t>(t)] = dot_f(qm, k.row(zi, hi, t), k.d);
            }
            c.dot_products += prefix;
            c.sort_items += prefix;
            out[static_cast<std::size_t>(slice * seg.seg_count + n)] =
                argsort_desc_stable(scores);
        }
    });
    if (cost) {
        const RankingCost folded = reduce_costs(slice_cost);
        cost->dot_products += folded.dot_products;
        cost->sort_items += folded.sort_items;
    }
    return out;
}

std::pair<PermutationPlan, RankingCost> build_plan(const Tensor4& q, const Tensor4& k,
                                                   std::int64_t seg_len) {
    const SegmentConfig seg = SegmentConfig::for_sequence(q.l, seg_len);
    const Representatives reps = segment_representatives(q, k, seg);

    HeadVectors guide(q.z, q.h, q.d);
    for (std::int64_t zi = 0; zi < q.z; ++zi) {
        for (std::int64_t hi = 0; hi < q.h; ++hi) {
            std::memcpy(guide.at(zi, hi), reps.k_mean.at(zi, hi, 0),
                        static_cast<std::size_t>(q.d) * sizeof(float));
        }
    }

    RankingCost cost;
    PermutationPlan plan;
    plan.z = q.z;
    plan.h = q.h;
    plan.seg = seg;
    plan.guide_source = "k_mean[segment 0]";
    plan.q_perm = rank_queries(q, guide, seg, &cost);
    plan.kv_perm = rank_prefix_keys(reps.q_mean, k, seg, &cost);
    return {std::move(plan), cost};
}

}  // namespace s2o
