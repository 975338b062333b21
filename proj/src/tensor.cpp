// SPDX-License-Identifier: Apache-2.0

#include "s2o/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

namespace s2o {

Tensor4::Tensor4(std::int64_t z_, std::int64_t h_, std::int64_t l_, std::int64_t d_, float fill)
    : z(z_), h(h_), l(l_), d(d_) {
    if (z < 1 || h < 1 || l < 1 || d < 1) {
        throw std::invalid_argument("tensor dims must all be >= 1");
    }
    data.assign(static_cast<std::size_t>(z * h * l * d), fill);
}

bool IndexVec::is_permutation_of_domain() const {
    if (static_cast<std::int64_t>(idx.size()) != domain_len) {
        return false;
    }
    std::vector<bool> seen(static_cast<std::size_t>(domain_len), false);
    for (std::int64_t v : idx) {
        if (v < 0 || v >= domain_len || seen[static_cast<std::size_t>(v)]) {
            return false;
        }
        seen[static_cast<std::size_t>(v)] = true;
    }
    return true;
}

IndexVec IndexVec::identity(std::int64_t n) {
    IndexVec out;
    out.domain_len = n;
    out.idx.resize(static_cast<std::size_t>(n));
    std::iota(out.idx.begin(), out.idx.end(), std::int64_t{0});
    return out;
}

IndexVec argsort_desc_stable(std::span<const double> scores) {
    if (scores.empty()) {
        throw std::invalid_argument("empty score vector");
    }
    const std::size_t n = scores.size();
    std::vector<double> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = scores[i];
        keys[i] = (std::isnan(s) || s < kNegInfSentinel) ? kNegInfSentinel : s;
    }
    IndexVec out;
    out.domain_len = static_cast<std::int64_t>(n);
    out.idx.resize(n);
    std::iota(out.idx.begin(), out.idx.end(), std::int64_t{0});
    std::stable_sort(out.idx.begin(), out.idx.end(), [&](std::int64_t a, std::int64_t b) {
        return keys[static_cast<std::size_t>(a)] > keys[static_cast<std::size_t>(b)];
    });
    return out;
}

std::vector<float> mean_pool_rows(const Tensor4& t, std::int64_t zi, std::int64_t hi,
                                  std::int64_t row_begin, std::int64_t row_end) {
    if (row_begin >= row_end) {
        throw std::invalid_argument("empty pooling range");
    }
    if (row_begin < 0 || row_end > t.l) {
        throw std::out_of_range("pooling range outside [0, L)");
    }
    std::vector<double> acc(static_cast<std::size_t>(t.d), 0.0);
    for (std::int64_t r = row_begin; r < row_end; ++r) {
        const float* src = t.row(zi, hi, r);
        for (std::int64_t di = 0; di < t.d; ++di) {
            acc[static_cast<std::size_t>(di)] += static_cast<double>(src[di]);
        }
    }
    const double inv = 1.0 / static_cast<double>(row_end - row_begin);
    std::vector<float> out(static_cast<std::size_t>(t.d));
    for (std::int64_t di = 0; di < t.d; ++di) {
        out[static_cast<std::size_t>(di)] = static_cast<float>(acc[static_cast<std::size_t>(di)] * inv);
    }
    return out;
}

void gather_rows_into(const Tensor4& t, std::int64_t zi, std::int64_t hi,
                      std::span<const std::int64_t> idx, RowMatrix& out) {
    out.rows = static_cast<std::int64_t>(idx.size());
    out.cols = t.d;
    out.data.resize(idx.size() * static_cast<std::size_t>(t.d));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const std::int64_t src = idx[i];
        if (src < 0 || src >= t.l) {
            throw std::out_of_range("gather index out of bounds");
        }
        std::memcpy(out.row(static_cast<std::int64_t>(i)), t.row(zi, hi, src),
                    static_cast<std::size_t>(t.d) * sizeof(float));
    }
}

RowMatrix gather_rows(const Tensor4& t, std::int64_t zi, std::int64_t hi, const IndexVec& idx) {
    RowMatrix out;
    gather_rows_into(t, zi, hi, idx.idx, out);
    return out;
}

void scatter_rows(const RowMatrix& src, std::int64_t zi, std::int64_t hi,
                  const IndexVec& idx, Tensor4& dst) {
    if (src.rows != static_cast<std::int64_t>(idx.size())) {
        throw std::invalid_argument("scatter row count and index count differ");
    }
    if (src.cols != dst.d) {
        throw std::invalid_argument("scatter column count and tensor depth differ");
    }
    std::vector<bool> seen(static_cast<std::size_t>(dst.l), false);
    for (std::size_t i = 0; i < idx.idx.size(); ++i) {
        const std::int64_t to = idx.idx[i];
        if (to < 0 || to >= dst.l) {
            throw std::out_of_range("scatter index out of bounds");
        }
        if (seen[static_cast<std::size_t>(to)]) {
            throw std::invalid_argument("scatter collision");
        }
        seen[static_cast<std::size_t>(to)] = true;
        std::memcpy(dst.row(zi, hi, to), src.row(static_cast<std::int64_t>(i)),
                    static_cast<std::size_t>(dst.d) * sizeof(float));
    }
}

}  // namespace s2o
