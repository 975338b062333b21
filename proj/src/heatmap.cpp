// SPDX-License-Identifier: Apache-2.0

#include "s2o/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "s2o/attention.hpp"

namespace s2o {

HeatmapMode parse_heatmap_mode(const std::string& name) {
    if (name == "original") return HeatmapMode::original;
    if (name == "kv") return HeatmapMode::kv_perm;
    if (name == "qkv") return HeatmapMode::q_kv_perm;
    throw std::invalid_argument("unknown heatmap mode: " + name);
}

std::string pgm_header(std::int64_t width, std::int64_t height) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "P5\n%lld %lld\n255\n",
                  static_cast<long long>(width), static_cast<long long>(height));
    return buf;
}

std::vector<double> heatmap_mass(const Tensor4& q, const Tensor4& k,
                                 const PermutationPlan* plan, const HeatmapOptions& opt) {
    if (q.l > 4096) {
        throw std::invalid_argument("heatmap supports L <= 4096");
    }
    if (opt.pool < 1) {
        throw std::invalid_argument("pool factor must be >= 1");
    }
    const std::int64_t px = (q.l + opt.pool - 1) / opt.pool;
    if (px > 1024) {
        throw std::invalid_argument(
            "heatmap too large without pooling: pass an explicit pool factor");
    }
    if (opt.mode != HeatmapMode::original && plan == nullptr) {
        throw std::invalid_argument("permuted heatmap modes need a plan");
    }

    const std::vector<float> weights = dense_attention_weights(q, k, opt.z, opt.h);
    std::vector<double> grid(static_cast<std::size_t>(px * px), 0.0);

    // Display-column for source key j, for a row living in segment n:
    // prefix keys appear at their kv_perm rank, own-segment keys keep their
    // original order after the prefix.
    std::vector<std::int64_t> col_of(static_cast<std::size_t>(q.l));
    std::int64_t cached_seg = -1;
    for (std::int64_t i = 0; i < q.l; ++i) {
        std::int64_t disp_row = i;
        if (opt.mode == HeatmapMode::q_kv_perm) {
            const std::int64_t n = i / plan->seg.seg_len;
            const IndexVec& qp = plan->q_perm_at(opt.z, opt.h, n);
            // rank position of this row inside its segment
            const std::int64_t local = i - plan->seg.begin(n);
            for (std::size_t p = 0; p < qp.idx.size(); ++p) {
                if (qp.idx[p] == local) {
                    disp_row = plan->seg.begin(n) + static_cast<std::int64_t>(p);
                    break;
                }
            }
        }

        const float* wrow = weights.data() + i * q.l;
        if (opt.mode == HeatmapMode::original) {
            for (std::int64_t j = 0; j <= i; ++j) {
                grid[static_cast<std::size_t>((disp_row / opt.pool) * px + j / opt.pool)] +=
                    static_cast<double>(wrow[j]);
            }
            continue;
        }

        const std::int64_t n = i / plan->seg.seg_len;
        if (n != cached_seg) {
            const std::int64_t prefix = plan->seg.prefix_len(n);
            const IndexVec& kv = plan->kv_perm_at(opt.z, opt.h, n);
            for (std::int64_t c = 0; c < prefix; ++c) {
                col_of[static_cast<std::size_t>(kv.idx[static_cast<std::size_t>(c)])] = c;
            }
            for (std::int64_t j = prefix; j < q.l; ++j) {
                col_of[static_cast<std::size_t>(j)] = j;
            }
            cached_seg = n;
        }
        for (std::int64_t j = 0; j <= i; ++j) {
            const std::int64_t disp_col = col_of[static_cast<std::size_t>(j)];
            grid[static_cast<std::size_t>((disp_row / opt.pool) * px + disp_col / opt.pool)] +=
                static_cast<double>(wrow[j]);
        }
    }
    return grid;
}

void export_heatmap(const Tensor4& q, const Tensor4& k, const PermutationPlan* plan,
                    const HeatmapOptions& opt, const std::filesystem::path& path) {
    const std::vector<double> grid = heatmap_mass(q, k, plan, opt);
    const std::int64_t px = (q.l + opt.pool - 1) / opt.pool;

    if (path.extension() == ".pgm") {
        double max_mass = 0.0;
        for (double v : grid) {
            max_mass = std::max(max_mass, v);
        }
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open for writing: " + path.string());
        }
        const std::string header = pgm_header(px, px);
        out.write(header.data(), static_cast<std::streamsize>(header.size()));
        std::vector<unsigned char> bytes(grid.size(), 0);
        if (max_mass > 0.0) {
            const double log_span = std::log(1000.0);  // three decades
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const double norm = grid[i] / max_mass;
                const double v = std::log1p(999.0 * norm) / log_span;
                bytes[i] = static_cast<unsigned char>(std::lround(255.0 * v));
            }
        }
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw std::runtime_error("write failed: " + path.string());
        }
        return;
    }

    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    char buf[64];
    for (std::int64_t r = 0; r < px; ++r) {
        for (std::int64_t c = 0; c < px; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", grid[static_cast<std::size_t>(r * px + c)]);
            out << buf << (c + 1 < px ? "," : "");
        }
        out << '\n';
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

}  // namespace s2o
