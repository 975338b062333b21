// SPDX-License-Identifier: Apache-2.0

#include "s2o/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "s2o/parallel.hpp"

namespace s2o {

namespace {

struct TileScratch {
    RowMatrix q_tile, k_tile, v_tile;
    std::vector<std::int64_t> idx;
    std::vector<std::uint8_t> mask;
    std::vector<OnlineSoftmaxState> states;
    std::vector<OnlineSoftmaxState> candidate;
    std::vector<double> prev_ell;
    std::vector<double> new_ell;
};

void check_plan_matches(const PermutationPlan& plan, const Tensor4& q,
                        const KernelConfig& cfg) {
    const SegmentConfig expect = SegmentConfig::for_sequence(q.l, cfg.seg_len);
    if (plan.z != q.z || plan.h != q.h || plan.seg.seg_len != expect.seg_len ||
        plan.seg.seg_count != expect.seg_count || plan.seg.last_len != expect.last_len) {
        throw std::invalid_argument("plan/config mismatch: segment layout differs");
    }
}

// Intra-segment causal scan for one query tile: key tiles of b_n tokens
// within the same segment, masked by global position.
void segment_causal_tile(std::span<OnlineSoftmaxState> states,
                         const Tensor4& q, const Tensor4& k, const Tensor4& v,
                         std::int64_t zi, std::int64_t hi,
                         std::int64_t seg_begin, std::int64_t seg_rows,
                         std::int64_t tile_begin, std::int64_t tile_rows,
                         std::int64_t b_n, TileScratch& ts) {
    ts.idx.resize(static_cast<std::size_t>(tile_rows));
    for (std::int64_t r = 0; r < tile_rows; ++r) {
        ts.idx[static_cast<std::size_t>(r)] = seg_begin + tile_begin + r;
    }
    gather_rows_into(q, zi, hi, ts.idx, ts.q_tile);

    const std::int64_t last_row = tile_begin + tile_rows - 1;  // segment-local
    for (std::int64_t k0 = 0; k0 <= last_row && k0 < seg_rows; k0 += b_n) {
        const std::int64_t kn = std::min(b_n, seg_rows - k0);
        ts.idx.resize(static_cast<std::size_t>(kn));
        for (std::int64_t j = 0; j < kn; ++j) {
            ts.idx[static_cast<std::size_t>(j)] = seg_begin + k0 + j;
        }
        gather_rows_into(k, zi, hi, ts.idx, ts.k_tile);
        gather_rows_into(v, zi, hi, ts.idx, ts.v_tile);

        if (k0 + kn - 1 <= tile_begin) {
            os_update(states, ts.q_tile, ts.k_tile, ts.v_tile);
        } else {
            ts.mask.assign(static_cast<std::size_t>(tile_rows * kn), 0);
            for (std::int64_t r = 0; r < tile_rows; ++r) {
                for (std::int64_t j = 0; j < kn; ++j) {
                    ts.mask[static_cast<std::size_t>(r * kn + j)] =
                        (k0 + j <= tile_begin + r) ? 1 : 0;
                }
            }
            os_update(states, ts.q_tile, ts.k_tile, ts.v_tile, ts.mask);
        }
    }
}

void copy_states(const std::vector<OnlineSoftmaxState>& from,
                 std::vector<OnlineSoftmaxState>& to) {
    for (std::size_t r = 0; r < from.size(); ++r) {
        to[r].m = from[r].m;
        to[r].ell = from[r].ell;
        std::copy(from[r].acc.begin(), from[r].acc.end(), to[r].acc.begin());
    }
}

// Ranked prefix traversal with the monotone-gain stop, advancing ts.states.
// The tile that trips the rule is dropped before commit, matching the
// break-before-assign order. Returns the committed tile count and
// accumulates committed pair counts.
std::int64_t traverse_prefix(const RowMatrix& q_tile,
                             const Tensor4& k, const Tensor4& v,
                             std::int64_t zi, std::int64_t hi,
                             std::span<const std::int64_t> kv_order,
                             std::int64_t b_n, double tau,
                             std::int64_t& pair_accum, TileScratch& ts) {
    const std::int64_t rows = q_tile.rows;
    std::int64_t committed = 0;
    ts.prev_ell.resize(static_cast<std::size_t>(rows));
    ts.new_ell.resize(static_cast<std::size_t>(rows));
    for (std::int64_t c0 = 0; c0 < static_cast<std::int64_t>(kv_order.size()); c0 += b_n) {
        const std::int64_t cn =
            std::min(b_n, static_cast<std::int64_t>(kv_order.size()) - c0);
        gather_rows_into(k, zi, hi, kv_order.subspan(static_cast<std::size_t>(c0),
                                                     static_cast<std::size_t>(cn)),
                         ts.k_tile);
        gather_rows_into(v, zi, hi, kv_order.subspan(static_cast<std::size_t>(c0),
                                                     static_cast<std::size_t>(cn)),
                         ts.v_tile);

        copy_states(ts.states, ts.candidate);
        os_update(std::span<OnlineSoftmaxState>(ts.candidate), q_tile, ts.k_tile, ts.v_tile);
        for (std::int64_t r = 0; r < rows; ++r) {
            const OnlineSoftmaxState& prev = ts.states[static_cast<std::size_t>(r)];
            const OnlineSoftmaxState& cand = ts.candidate[static_cast<std::size_t>(r)];
            ts.prev_ell[static_cast<std::size_t>(r)] = prev.ell * std::exp(prev.m - cand.m);
            ts.new_ell[static_cast<std::size_t>(r)] = cand.ell;
        }
        if (early_stop_check(ts.prev_ell, ts.new_ell, tau)) {
            break;
        }
        copy_states(ts.candidate, ts.states);
        ++committed;
        pair_accum += rows * cn;
    }
    return committed;
}

std::int64_t pass1_pair_count(const SegmentConfig& seg) {
    std::int64_t total = 0;
    for (std::int64_t n = 0; n < seg.seg_count; ++n) {
        const std::int64_t len = seg.len(n);
        total += len * (len + 1) / 2;
    }
    return total;
}

KernelTrace make_trace(const Tensor4& q, const KernelConfig& cfg, const SegmentConfig& seg) {
    KernelTrace trace;
    trace.z = q.z;
    trace.h = q.h;
    trace.l = q.l;
    trace.seg_len = cfg.seg_len;
    trace.tiles = cfg.tiles;
    trace.processed_tiles.assign(static_cast<std::size_t>(q.z * q.h), {});
    for (auto& per_seg : trace.processed_tiles) {
        per_seg.resize(static_cast<std::size_t>(seg.seg_count));
    }
    trace.pass1_pairs.assign(static_cast<std::size_t>(q.z * q.h), pass1_pair_count(seg));
    trace.pass2_pairs.assign(static_cast<std::size_t>(q.z * q.h), 0);
    return trace;
}

void finalize_rows(const std::vector<OnlineSoftmaxState>& states,
                   std::span<const std::int64_t> global_rows,
                   std::int64_t zi, std::int64_t hi, Tensor4& out) {
    for (std::size_t r = 0; r < states.size(); ++r) {
        const OnlineSoftmaxState& st = states[r];
        if (st.ell == 0.0) {
            throw std::runtime_error("uncovered query row");
        }
        float* orow = out.row(zi, hi, global_rows[r]);
        for (std::int64_t di = 0; di < out.d; ++di) {
            orow[di] = static_cast<float>(st.acc[static_cast<std::size_t>(di)] / st.ell);
        }
    }
}

}  // namespace

void KernelConfig::validate(std::int64_t l) const {
    if (seg_len < 1 || seg_len > l) {
        throw std::invalid_argument("segment length must satisfy 1 <= S <= L");
    }
    if (!(tau >= 0.0)) {
        throw std::invalid_argument("tau must be >= 0");
    }
    if (tiles.b_m < 1 || tiles.b_n < 1) {
        throw std::invalid_argument("tile sizes must be >= 1");
    }
    if (local_window > seg_len) {
        throw std::invalid_argument("local window must satisfy W <= S");
    }
    if (fused && q_reorder) {
        throw std::invalid_argument("fused variant requires q_reorder = false");
    }
}

PassBuffers pass1_dense_init(const Tensor4& q, const Tensor4& k, const Tensor4& v,
                             const KernelConfig& cfg) {
    if (!q.same_dims(k) || !q.same_dims(v)) {
        throw std::invalid_argument("Q/K/V dims must match");
    }
    cfg.validate(q.l);
    const SegmentConfig seg = SegmentConfig::for_sequence(q.l, cfg.seg_len);
    PassBuffers bufs(q.z, q.h, q.l, q.d);

    parallel_for(q.z * q.h, [&](std::int64_t slice) {
        const std::int64_t zi = slice / q.h;
        const std::int64_t hi = slice % q.h;
        TileScratch ts;
        for (std::int64_t n = 0; n < seg.seg_count; ++n) {
            const std::int64_t seg_begin = seg.begin(n);
            const std::int64_t seg_rows = seg.len(n);
            for (std::int64_t t0 = 0; t0 < seg_rows; t0 += cfg.tiles.b_m) {
                const std::int64_t tn = std::min(cfg.tiles.b_m, seg_rows - t0);
                std::vector<OnlineSoftmaxState> states(
                    static_cast<std::size_t>(tn), OnlineSoftmaxState(q.d));
                segment_causal_tile(states, q, k, v, zi, hi, seg_begin, seg_rows,
                                    t0, tn, cfg.tiles.b_n, ts);
                for (std::int64_t r = 0; r < tn; ++r) {
                    const std::size_t slot = bufs.row_slot(zi, hi, seg_begin + t0 + r);
                    const OnlineSoftmaxState& st = states[static_cast<std::size_t>(r)];
                    bufs.ell[slot] = st.ell;
                    bufs.m[slot] = st.m;
                    std::copy(st.acc.begin(), st.acc.end(),
                              bufs.acc.begin() + static_cast<std::ptrdiff_t>(slot * q.d));
                }
            }
        }
    });
    return bufs;
}

bool early_stop_check(std::span<const double> prev_ell, std::span<const double> new_ell,
                      double tau) {
    if (prev_ell.size() != new_ell.size() || prev_ell.empty()) {
        throw std::invalid_argument("normalizer vectors must align");
    }
    double max_gain = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < prev_ell.size(); ++r) {
        if (prev_ell[r] <= 0.0) {
            throw std::invalid_argument("uninitialized state");
        }
        // NaN gains (deliberately poisoned rows) drop out of the max
        max_gain = std::max(max_gain, (new_ell[r] - prev_ell[r]) / prev_ell[r]);
    }
    return max_gain < tau;
}

std::pair<Tensor4, KernelTrace> pass2_sparse(const Tensor4& q, const Tensor4& k,
                                             const Tensor4& v, const PassBuffers& bufs,
                                             const PermutationPlan& plan,
                                             const KernelConfig& cfg) {
    if (!q.same_dims(k) || !q.same_dims(v)) {
        throw std::invalid_argument("Q/K/V dims must match");
    }
    cfg.validate(q.l);
    check_plan_matches(plan, q, cfg);
    if (bufs.z != q.z || bufs.h != q.h || bufs.l != q.l || bufs.d != q.d) {
        throw std::invalid_argument("pass buffers do not match tensor dims");
    }
    const SegmentConfig& seg = plan.seg;
    Tensor4 out(q.z, q.h, q.l, q.d);
    KernelTrace trace = make_trace(q, cfg, seg);

    parallel_for(q.z * q.h, [&](std::int64_t slice) {
        const std::int64_t zi = slice / q.h;
        const std::int64_t hi = slice % q.h;
        TileScratch ts;
        std::vector<std::int64_t> global_rows;
        for (std::int64_t n = 0; n < seg.seg_count; ++n) {
            const std::int64_t seg_begin = seg.begin(n);
            const std::int64_t seg_rows = seg.len(n);
            const IndexVec identity = cfg.q_reorder
                                          ? IndexVec{}
                                          : IndexVec::identity(seg_rows);
            const IndexVec& qp = cfg.q_reorder ? plan.q_perm_at(zi, hi, n) : identity;
            const std::vector<std::int64_t>& kv = plan.kv_perm_at(zi, hi, n).idx;

            for (std::int64_t t0 = 0; t0 < seg_rows; t0 += cfg.tiles.b_m) {
                const std::int64_t tn = std::min(cfg.tiles.b_m, seg_rows - t0);
                global_rows.resize(static_cast<std::size_t>(tn));
                for (std::int64_t r = 0; r < tn; ++r) {
                    global_rows[static_cast<std::size_t>(r)] =
                        seg_begin + qp.idx[static_cast<std::size_t>(t0 + r)];
                }
                gather_rows_into(q, zi, hi, global_rows, ts.q_tile);

                ts.states.assign(static_cast<std::size_t>(tn), OnlineSoftmaxState(q.d));
                ts.candidate.assign(static_cast<std::size_t>(tn), OnlineSoftmaxState(q.d));
                for (std::int64_t r = 0; r < tn; ++r) {
                    const std::size_t slot =
                        bufs.row_slot(zi, hi, global_rows[static_cast<std::size_t>(r)]);
                    OnlineSoftmaxState& st = ts.states[static_cast<std::size_t>(r)];
                    st.m = bufs.m[slot];
                    st.ell = bufs.ell[slot];
                    std::copy(bufs.acc.begin() + static_cast<std::ptrdiff_t>(slot * q.d),
                              bufs.acc.begin() + static_cast<std::ptrdiff_t>((slot + 1) * q.d),
                              st.acc.begin());
                }

                const std::int64_t committed = traverse_prefix(
                    ts.q_tile, k, v, zi, hi, kv, cfg.tiles.b_n, cfg.tau,
                    trace.pass2_pairs[static_cast<std::size_t>(slice)], ts);
                trace.processed_tiles[static_cast<std::size_t>(slice)]
                    [static_cast<std::size_t>(n)].push_back(committed);
                finalize_rows(ts.states, global_rows, zi, hi, out);
            }
        }
    });
    return {std::move(out), std::move(trace)};
}

std::pair<Tensor4, KernelTrace> fused_single_pass(const Tensor4& q, const Tensor4& k,
                                                  const Tensor4& v,
                                                  const PermutationPlan& plan,
                                                  const KernelConfig& cfg) {
    if (!q.same_dims(k) || !q.same_dims(v)) {
        throw std::invalid_argument("Q/K/V dims must match");
    }
    if (!cfg.fused || cfg.q_reorder) {
        throw std::invalid_argument("fused variant requires fused = true, q_reorder = false");
    }
    cfg.validate(q.l);
    check_plan_matches(plan, q, cfg);
    const SegmentConfig& seg = plan.seg;
    Tensor4 out(q.z, q.h, q.l, q.d);
    KernelTrace trace = make_trace(q, cfg, seg);

    parallel_for(q.z * q.h, [&](std::int64_t slice) {
        const std::int64_t zi = slice / q.h;
        const std::int64_t hi = slice % q.h;
        TileScratch ts;
        std::vector<std::int64_t> global_rows;
        for (std::int64_t n = 0; n < seg.seg_count; ++n) {
            const std::int64_t seg_begin = seg.begin(n);
            const std::int64_t seg_rows = seg.len(n);
            const std::vector<std::int64_t>& kv = plan.kv_perm_at(zi, hi, n).idx;

            for (std::int64_t t0 = 0; t0 < seg_rows; t0 += cfg.tiles.b_m) {
                const std::int64_t tn = std::min(cfg.tiles.b_m, seg_rows - t0);
                ts.states.assign(static_cast<std::size_t>(tn), OnlineSoftmaxState(q.d));
                ts.candidate.assign(static_cast<std::size_t>(tn), OnlineSoftmaxState(q.d));
                segment_causal_tile(ts.states, q, k, v, zi, hi, seg_begin, seg_rows,
                                    t0, tn, cfg.tiles.b_n, ts);

                global_rows.resize(static_cast<std::size_t>(tn));
                for (std::int64_t r = 0; r < tn; ++r) {
                    global_rows[static_cast<std::size_t>(r)] = seg_begin + t0 + r;
                }
                gather_rows_into(q, zi, hi, global_rows, ts.q_tile);

                const std::int64_t committed = traverse_prefix(
                    ts.q_tile, k, v, zi, hi, kv, cfg.tiles.b_n, cfg.tau,
                    trace.pass2_pairs[static_cast<std::size_t>(slice)], ts);
                trace.processed_tiles[static_cast<std::size_t>(slice)]
                    [static_cast<std::size_t>(n)].push_back(committed);
                finalize_rows(ts.states, global_rows, zi, hi, out);
            }
        }
    });
    return {std::move(out), std::move(trace)};
}

S2oResult s2o_attention(const Tensor4& q, const Tensor4& k, const Tensor4& v,
                        const KernelConfig& cfg) {
    cfg.validate(q.l);
    auto [plan, cost] = build_plan(q, k, cfg.seg_len);
    S2oResult result;
    if (cfg.fused) {
        auto [out, trace] = fused_single_pass(q, k, v, plan, cfg);
        result.out = std::move(out);
        result.trace = std::move(trace);
    } else {
        const PassBuffers bufs = pass1_dense_init(q, k, v, cfg);
        auto [out, trace] = pass2_sparse(q, k, v, bufs, plan, cfg);
        result.out = std::move(out);
        result.trace = std::move(trace);
    }
    result.plan = std::move(plan);
    result.cost = cost;
    return result;
}

}  // namespace s2o
