// SPDX-License-Identifier: Apache-2.0

#include "s2o/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "s2o/parallel.hpp"

namespace s2o {

namespace {

struct BlockGrid {
    std::int64_t l = 0;
    std::int64_t rows = 0, cols = 0;   // block shape
    std::int64_t nqb = 0, nkb = 0;

    BlockGrid(std::int64_t l_, const BlockBudget& b)
        : l(l_), rows(b.block_rows), cols(b.block_cols) {
        if (rows < 1 || cols < 1 || b.k < 0) {
            throw std::invalid_argument("block budget must have positive shape and k >= 0");
        }
        nqb = (l + rows - 1) / rows;
        nkb = (l + cols - 1) / cols;
    }

    std::int64_t q_begin(std::int64_t qb) const { return qb * rows; }
    std::int64_t q_end(std::int64_t qb) const { return std::min(l, (qb + 1) * rows); }
    std::int64_t k_begin(std::int64_t kb) const { return kb * cols; }
    std::int64_t k_end(std::int64_t kb) const { return std::min(l, (kb + 1) * cols); }
};

double dot_f(const float* a, const float* b, std::int64_t d) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < d; ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

// Causal softmax mass per (query block, key block) for one (z, h) slice.
std::vector<double> block_mass(const Tensor4& q, const Tensor4& k,
                               std::int64_t zi, std::int64_t hi, const BlockGrid& grid) {
    std::vector<double> mass(static_cast<std::size_t>(grid.nqb * grid.nkb), 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.d));
    std::vector<double> w(static_cast<std::size_t>(q.l));
    for (std::int64_t i = 0; i < q.l; ++i) {
        const float* qr = q.row(zi, hi, i);
        double row_max = -std::numeric_limits<double>::infinity();
        for (std::int64_t j = 0; j <= i; ++j) {
            const double s = dot_f(qr, k.row(zi, hi, j), q.d) * scale;
            w[static_cast<std::size_t>(j)] = s;
            row_max = std::max(row_max, s);
        }
        double denom = 0.0;
        for (std::int64_t j = 0; j <= i; ++j) {
            w[static_cast<std::size_t>(j)] = std::exp(w[static_cast<std::size_t>(j)] - row_max);
            denom += w[static_cast<std::size_t>(j)];
        }
        const std::int64_t qb = i / grid.rows;
        for (std::int64_t j = 0; j <= i; ++j) {
            mass[static_cast<std::size_t>(qb * grid.nkb + j / grid.cols)] +=
                w[static_cast<std::size_t>(j)] / denom;
        }
    }
    return mass;
}

// Prefix candidates (blocks fully before the query rows) ranked by mass,
// ties ascending; NaN mass sinks to the bottom deterministically.
std::vector<std::int64_t> ranked_prefix_blocks(const std::vector<double>& mass,
                                               const BlockGrid& grid, std::int64_t qb) {
    const std::int64_t qs = grid.q_begin(qb);
    std::vector<std::int64_t> cands;
    for (std::int64_t kb = 0; kb < grid.nkb; ++kb) {
        if (grid.k_end(kb) <= qs) {
            cands.push_back(kb);
        }
    }
    std::stable_sort(cands.begin(), cands.end(), [&](std::int64_t a, std::int64_t b) {
        double ma = mass[static_cast<std::size_t>(qb * grid.nkb + a)];
        double mb = mass[static_cast<std::size_t>(qb * grid.nkb + b)];
        if (std::isnan(ma)) ma = -std::numeric_limits<double>::infinity();
        if (std::isnan(mb)) mb = -std::numeric_limits<double>::infinity();
        return ma > mb;
    });
    return cands;
}

// Causal pairs contributed by the always-kept self blocks of one block row.
std::int64_t self_pair_count(const BlockGrid& grid, std::int64_t qb) {
    const std::int64_t qs = grid.q_begin(qb);
    const std::int64_t qe = grid.q_end(qb);
    std::int64_t total = 0;
    for (std::int64_t i = qs; i < qe; ++i) {
        total += i - qs + 1;  // keys in [qs, i]
    }
    return total;
}

}  // namespace

BlockTopkResult block_topk_attention(const Tensor4& q, const Tensor4& k, const Tensor4& v,
                                     const BlockBudget& budget) {
    if (!q.same_dims(k) || !q.same_dims(v)) {
        throw std::invalid_argument("Q/K/V dims must match");
    }
    const BlockGrid grid(q.l, budget);
    BlockTopkResult result;
    result.out = Tensor4(q.z, q.h, q.l, q.d);
    result.pair_count.assign(static_cast<std::size_t>(q.z * q.h), 0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.d));

    parallel_for(q.z * q.h, [&](std::int64_t slice) {
        const std::int64_t zi = slice / q.h;
        const std::int64_t hi = slice % q.h;
        const std::vector<double> mass = block_mass(q, k, zi, hi, grid);

        // kept[qb * nkb + kb]: self blocks plus the k best prefix blocks
        std::vector<std::uint8_t> kept(static_cast<std::size_t>(grid.nqb * grid.nkb), 0);
        for (std::int64_t qb = 0; qb < grid.nqb; ++qb) {
            const std::int64_t qs = grid.q_begin(qb);
            const std::int64_t qe = grid.q_end(qb);
            for (std::int64_t kb = 0; kb < grid.nkb; ++kb) {
                if (grid.k_begin(kb) < qe && grid.k_end(kb) > qs) {
                    kept[static_cast<std::size_t>(qb * grid.nkb + kb)] = 1;
                }
            }
            const std::vector<std::int64_t> cands = ranked_prefix_blocks(mass, grid, qb);
            const std::int64_t take =
                std::min<std::int64_t>(budget.k, static_cast<std::int64_t>(cands.size()));
            for (std::int64_t t = 0; t < take; ++t) {
                kept[static_cast<std::size_t>(qb * grid.nkb +
                                              cands[static_cast<std::size_t>(t)])] = 1;
            }
        }

        std::vector<double> scores(static_cast<std::size_t>(q.l));
        std::vector<std::int64_t> vis;
        std::vector<double> acc(static_cast<std::size_t>(q.d));
        std::int64_t pairs = 0;
        for (std::int64_t i = 0; i < q.l; ++i) {
            const std::int64_t qb = i / grid.rows;
            vis.clear();
            for (std::int64_t j = 0; j <= i; ++j) {
                if (kept[static_cast<std::size_t>(qb * grid.nkb + j / grid.cols)]) {
                    vis.push_back(j);
                }
            }
            pairs += static_cast<std::int64_t>(vis.size());

            const float* qr = q.row(zi, hi, i);
            double row_max = -std::numeric_limits<double>::infinity();
            for (std::size_t t = 0; t < vis.size(); ++t) {
                const double s = dot_f(qr, k.row(zi, hi, vis[t]), q.d) * scale;
                scores[t] = s;
                row_max = std::max(row_max, s);
            }
            double denom = 0.0;
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t t = 0; t < vis.size(); ++t) {
                const double w = std::exp(scores[t] - row_max);
                denom += w;
                const float* vr = v.row(zi, hi, vis[t]);
                for (std::int64_t di = 0; di < q.d; ++di) {
                    acc[static_cast<std::size_t>(di)] += w * static_cast<double>(vr[di]);
                }
            }
            float* orow = result.out.row(zi, hi, i);
            for (std::int64_t di = 0; di < q.d; ++di) {
                orow[di] = static_cast<float>(acc[static_cast<std::size_t>(di)] / denom);
            }
        }
        result.pair_count[static_cast<std::size_t>(slice)] = pairs;
    });
    return result;
}

std::vector<std::int64_t> block_topk_pair_counts(const Tensor4& q, const Tensor4& k,
                                                 const BlockBudget& shape,
                                                 std::int64_t k_max) {
    if (q.l != k.l || q.d != k.d || q.z != k.z || q.h != k.h) {
        throw std::invalid_argument("Q/K dims must match");
    }
    const BlockGrid grid(q.l, shape);
    std::vector<std::vector<std::int64_t>> per_slice(
        static_cast<std::size_t>(q.z * q.h),
        std::vector<std::int64_t>(static_cast<std::size_t>(k_max + 1), 0));

    parallel_for(q.z * q.h, [&](std::int64_t slice) {
        const std::int64_t zi = slice / q.h;
        const std::int64_t hi = slice % q.h;
        const std::vector<double> mass = block_mass(q, k, zi, hi, grid);
        std::vector<std::int64_t>& counts = per_slice[static_cast<std::size_t>(slice)];
        for (std::int64_t qb = 0; qb < grid.nqb; ++qb) {
            const std::int64_t base = self_pair_count(grid, qb);
            const std::int64_t q_rows = grid.q_end(qb) - grid.q_begin(qb);
            const std::vector<std::int64_t> cands = ranked_prefix_blocks(mass, grid, qb);
            std::int64_t extra = 0;
            for (std::int64_t kk = 0; kk <= k_max; ++kk) {
                if (kk > 0 && kk <= static_cast<std::int64_t>(cands.size())) {
                    const std::int64_t kb = cands[static_cast<std::size_t>(kk - 1)];
                    extra += q_rows * (grid.k_end(kb) - grid.k_begin(kb));
                }
                counts[static_cast<std::size_t>(kk)] += base + extra;
            }
        }
    });

    std::vector<std::int64_t> totals(static_cast<std::size_t>(k_max + 1), 0);
    for (const auto& counts : per_slice) {
        for (std::size_t kk = 0; kk < counts.size(); ++kk) {
            totals[kk] += counts[kk];
        }
    }
    return totals;
}

}  // namespace s2o
