// SPDX-License-Identifier: Apache-2.0

#include "s2o/attention.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "s2o/parallel.hpp"

namespace s2o {

namespace {

double dot_qk(const float* a, const float* b, std::int64_t d) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < d; ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

void check_qkv(const Tensor4& q, const Tensor4& k, const Tensor4& v) {
    if (!q.same_dims(k) || !q.same_dims(v)) {
        throw std::invalid_argument("Q/K/V dims must match");
    }
}

}  // namespace

void os_update(std::span<OnlineSoftmaxState> states,
               const RowMatrix& q_tile, const RowMatrix& k_tile, const RowMatrix& v_tile,
               std::span<const std::uint8_t> mask) {
    const std::int64_t rows = q_tile.rows;
    const std::int64_t keys = k_tile.rows;
    const std::int64_t d = q_tile.cols;
    if (k_tile.cols != d || v_tile.cols != d || v_tile.rows != keys) {
        throw std::invalid_argument("os_update tile shapes inconsistent");
    }
    if (static_cast<std::int64_t>(states.size()) != rows) {
        throw std::invalid_argument("os_update state count != query rows");
    }
    if (!mask.empty() && static_cast<std::int64_t>(mask.size()) != rows * keys) {
        throw std::invalid_argument("os_update mask shape inconsistent");
    }

    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<double> scores(static_cast<std::size_t>(keys));
    for (std::int64_t r = 0; r < rows; ++r) {
        const float* qr = q_tile.row(r);
        const std::uint8_t* mrow = mask.empty() ? nullptr : mask.data() + r * keys;
        double tile_max = -std::numeric_limits<double>::infinity();
        bool any_visible = false;
        for (std::int64_t j = 0; j < keys; ++j) {
            if (mrow && mrow[j] == 0) {
                continue;
            }
            const double s = dot_qk(qr, k_tile.row(j), d) * scale;
            scores[static_cast<std::size_t>(j)] = s;
            tile_max = std::max(tile_max, s);
            any_visible = true;
        }
        if (!any_visible) {
            continue;  // fully masked tile leaves the state as-is
        }

        OnlineSoftmaxState& st = states[static_cast<std::size_t>(r)];
        const double m_new = std::max(st.m, tile_max);
        const double rescale = std::exp(st.m - m_new);  // exp(-inf) == 0 on first touch
        double ell_new = st.ell * rescale;
        for (double& a : st.acc) {
            a *= rescale;
        }
        for (std::int64_t j = 0; j < keys; ++j) {
            if (mrow && mrow[j] == 0) {
                continue;
            }
            const double w = std::exp(scores[static_cast<std::size_t>(j)] - m_new);
            ell_new += w;
            const float* vr = v_tile.row(j);
            for (std::int64_t di = 0; di < d; ++di) {
                st.acc[static_cast<std::size_t>(di)] += w * static_cast<double>(vr[di]);
            }
        }
        st.m = m_new;
        st.ell = ell_new;
    }
}

Tensor4 dense_causal_attention(const Tensor4& q, const Tensor4& k, const Tensor4& v) {
    check_qkv(q, k, v);
    Tensor4 out(q.z, q.h, q.l, q.d);
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.d));

    parallel_for(q.z * q.h, [&](std::int64_t slice) {
        const std::int64_t zi = slice / q.h;
        const std::int64_t hi = slice % q.h;
        std::vector<double> scores(static_cast<std::size_t>(q.l));
        std::vector<double> acc(static_cast<std::size_t>(q.d));
        for (std::int64_t i = 0; i < q.l; ++i) {
            const float* qr = q.row(zi, hi, i);
            double row_max = -std::numeric_limits<double>::infinity();
            for (std::int64_t j = 0; j <= i; ++j) {
                const double s = dot_qk(qr, k.row(zi, hi, j), q.d) * scale;
                scores[static_cast<std::size_t>(j)] = s;
                row_max = std::max(row_max, s);
            }
            double denom = 0.0;
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::int64_t j = 0; j <= i; ++j) {
                const double w = std::exp(scores[static_cast<std::size_t>(j)] - row_max);
                denom += w;
                const float* vr = v.row(zi, hi, j);
                for (std::int64_t di = 0; di < q.d; ++di) {
                    acc[static_cast<std::size_t>(di)] += w * static_cast<double>(vr[di]);
                }
            }
            float* orow = out.row(zi, hi, i);
            for (std::int64_t di = 0; di < q.d; ++di) {
                orow[di] = static_cast<float>(acc[static_cast<std::size_t>(di)] / denom);
            }
        }
    });
    return out;
}

Tensor4 flash_causal_attention(const Tensor4& q, const Tensor4& k, const Tensor4& v,
                               const TileSpec& tiles) {
    check_qkv(q, k, v);
    if (tiles.b_m < 1 || tiles.b_n < 1) {
        throw std::invalid_argument("tile sizes must be >= 1");
    }
    Tensor4 out(q.z, q.h, q.l, q.d);

    parallel_for(q.z * q.h, [&](std::int64_t slice) {
        const std::int64_t zi = slice / q.h;
        const std::int64_t hi = slice % q.h;
        RowMatrix q_tile, k_tile, v_tile;
        std::vector<std::int64_t> row_idx, key_idx;
        std::vector<std::uint8_t> mask;

        for (std::int64_t q0 = 0; q0 < q.l; q0 += tiles.b_m) {
            const std::int64_t qn = std::min(tiles.b_m, q.l - q0);
            row_idx.resize(static_cast<std::size_t>(qn));
            for (std::int64_t r = 0; r < qn; ++r) {
                row_idx[static_cast<std::size_t>(r)] = q0 + r;
            }
            gather_rows_into(q, zi, hi, row_idx, q_tile);
            std::vector<OnlineSoftmaxState> states(
                static_cast<std::size_t>(qn), OnlineSoftmaxState(q.d));

            const std::int64_t last_row = q0 + qn - 1;
            for (std::int64_t k0 = 0; k0 <= last_row; k0 += tiles.b_n) {
                const std::int64_t kn = std::min(tiles.b_n, q.l - k0);
                key_idx.resize(static_cast<std::size_t>(kn));
                for (std::int64_t j = 0; j < kn; ++j) {
                    key_idx[static_cast<std::size_t>(j)] = k0 + j;
                }
                gather_rows_into(k, zi, hi, key_idx, k_tile);
                gather_rows_into(v, zi, hi, key_idx, v_tile);

                if (k0 + kn - 1 <= q0) {
                    os_update(states, q_tile, k_tile, v_tile);  // tile fully past-visible
                } else {
                    mask.assign(static_cast<std::size_t>(qn * kn), 0);
                    for (std::int64_t r = 0; r < qn; ++r) {
                        for (std::int64_t j = 0; j < kn; ++j) {
                            mask[static_cast<std::size_t>(r * kn + j)] =
                                (k0 + j <= q0 + r) ? 1 : 0;
                        }
                    }
                    os_update(states, q_tile, k_tile, v_tile, mask);
                }
            }

            for (std::int64_t r = 0; r < qn; ++r) {
                const OnlineSoftmaxState& st = states[static_cast<std::size_t>(r)];
                if (st.ell == 0.0) {
                    throw std::runtime_error("uncovered query row");
                }
                float* orow = out.row(zi, hi, q0 + r);
                for (std::int64_t di = 0; di < q.d; ++di) {
                    orow[di] = static_cast<float>(st.acc[static_cast<std::size_t>(di)] / st.ell);
                }
            }
        }
    });
    return out;
}

std::vector<float> dense_attention_weights(const Tensor4& q, const Tensor4& k,
                                           std::int64_t zi, std::int64_t hi) {
    if (q.l != k.l || q.d != k.d) {
        throw std::invalid_argument("Q/K dims must match");
    }
    const std::int64_t n = q.l;
    std::vector<float> w(static_cast<std::size_t>(n * n), 0.0f);
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.d));
    std::vector<double> scores(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const float* qr = q.row(zi, hi, i);
        double row_max = -std::numeric_limits<double>::infinity();
        for (std::int64_t j = 0; j <= i; ++j) {
            const double s = dot_qk(qr, k.row(zi, hi, j), q.d) * scale;
            scores[static_cast<std::size_t>(j)] = s;
            row_max = std::max(row_max, s);
        }
        double denom = 0.0;
        for (std::int64_t j = 0; j <= i; ++j) {
            scores[static_cast<std::size_t>(j)] = std::exp(scores[static_cast<std::size_t>(j)] - row_max);
            denom += scores[static_cast<std::size_t>(j)];
        }
        for (std::int64_t j = 0; j <= i; ++j) {
            w[static_cast<std::size_t>(i * n + j)] =
                static_cast<float>(scores[static_cast<std::size_t>(j)] / denom);
        }
    }
    return w;
}

}  // namespace s2o
