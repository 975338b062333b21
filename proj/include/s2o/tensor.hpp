// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace s2o {

/// Dense 4-D activation tensor [Z, H, L, D] in row-major order:
/// Z batches, H heads, L tokens, D channels per head. Values are fp32;
/// reductions over them happen in fp64 at the call sites that need it.
struct Tensor4 {
    std::int64_t z = 0;
    std::int64_t h = 0;
    std::int64_t l = 0;
    std::int64_t d = 0;
    std::vector<float> data;

    Tensor4() = default;
    Tensor4(std::int64_t z_, std::int64_t h_, std::int64_t l_, std::int64_t d_, float fill = 0.0f);

    std::size_t size() const { return data.size(); }

    bool same_dims(const Tensor4& o) const {
        return z == o.z && h == o.h && l == o.l && d == o.d;
    }

    std::size_t row_offset(std::int64_t zi, std::int64_t hi, std::int64_t li) const {
        return static_cast<std::size_t>(((zi * h + hi) * l + li) * d);
    }

    float* row(std::int64_t zi, std::int64_t hi, std::int64_t li) {
        return data.data() + row_offset(zi, hi, li);
    }
    const float* row(std::int64_t zi, std::int64_t hi, std::int64_t li) const {
        return data.data() + row_offset(zi, hi, li);
    }

    float& at(std::int64_t zi, std::int64_t hi, std::int64_t li, std::int64_t di) {
        return data[row_offset(zi, hi, li) + static_cast<std::size_t>(di)];
    }
    float at(std::int64_t zi, std::int64_t hi, std::int64_t li, std::int64_t di) const {
        return data[row_offset(zi, hi, li) + static_cast<std::size_t>(di)];
    }
};

/// Token-index list with its exclusive domain bound. Argsort results are
/// permutations of {0, ..., domain_len-1}; gather inputs may be any subset.
struct IndexVec {
    std::vector<std::int64_t> idx;
    std::int64_t domain_len = 0;

    IndexVec() = default;
    IndexVec(std::vector<std::int64_t> idx_, std::int64_t domain_len_)
        : idx(std::move(idx_)), domain_len(domain_len_) {}

    std::size_t size() const { return idx.size(); }
    bool empty() const { return idx.empty(); }

    /// True iff idx contains every value in [0, domain_len) exactly once.
    bool is_permutation_of_domain() const;

    static IndexVec identity(std::int64_t n);
};

/// Contiguous row block, the result of a gather and the payload of a scatter.
struct RowMatrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<float> data;

    RowMatrix() = default;
    RowMatrix(std::int64_t rows_, std::int64_t cols_, float fill = 0.0f)
        : rows(rows_), cols(cols_),
          data(static_cast<std::size_t>(rows_ * cols_), fill) {}

    float* row(std::int64_t r) { return data.data() + static_cast<std::size_t>(r * cols); }
    const float* row(std::int64_t r) const { return data.data() + static_cast<std::size_t>(r * cols); }
};

/// Score-buffer stand-in for -inf: the most negative finite fp32 value.
/// Sorts last without poisoning comparisons the way a NaN would.
inline constexpr double kNegInfSentinel =
    static_cast<double>(std::numeric_limits<float>::lowest());

/// Stable descending argsort. Ties keep ascending original-index order;
/// -inf / NaN entries are mapped to the sentinel and sort last.
IndexVec argsort_desc_stable(std::span<const double> scores);

/// Element-wise mean over token rows [row_begin, row_end), fp64 accumulation.
std::vector<float> mean_pool_rows(const Tensor4& t, std::int64_t zi, std::int64_t hi,
                                  std::int64_t row_begin, std::int64_t row_end);

/// Copies token rows idx[0..n) of slice (zi, hi) into a fresh matrix.
RowMatrix gather_rows(const Tensor4& t, std::int64_t zi, std::int64_t hi, const IndexVec& idx);

/// Gather into a caller-owned buffer (resized as needed). Hot-loop variant.
void gather_rows_into(const Tensor4& t, std::int64_t zi, std::int64_t hi,
                      std::span<const std::int64_t> idx, RowMatrix& out);

/// Writes src row i to token row idx[i] of dst slice (zi, hi). idx must not
/// repeat an index; rows outside idx are left untouched.
void scatter_rows(const RowMatrix& src, std::int64_t zi, std::int64_t hi,
                  const IndexVec& idx, Tensor4& dst);

}  // namespace s2o
