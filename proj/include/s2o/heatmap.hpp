// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "s2o/plan.hpp"
#include "s2o/tensor.hpp"

namespace s2o {

/// Which index remapping to apply before rasterizing the mass map.
/// - original: raw (query, key) order
/// - kv_perm: per segment row block, prefix columns in kv_perm order
/// - q_kv_perm: additionally rows within each segment in q_perm order
enum class HeatmapMode {
    original,
    kv_perm,
    q_kv_perm,
};

HeatmapMode parse_heatmap_mode(const std::string& name);

struct HeatmapOptions {
    HeatmapMode mode = HeatmapMode::original;
    std::int64_t pool = 1;  // pool x pool token cells per pixel
    std::int64_t z = 0;
    std::int64_t h = 0;
};

/// Pooled (ceil(L/pool))^2 attention-mass grid for one head under the chosen
/// remapping. Row-major, entries are summed softmax mass.
std::vector<double> heatmap_mass(const Tensor4& q, const Tensor4& k,
                                 const PermutationPlan* plan, const HeatmapOptions& opt);

/// Writes the mass grid as binary PGM (P5, maxval 255, log-scaled) when the
/// path ends in .pgm, or as raw CSV values otherwise. L above 4096 is
/// rejected; maps over 1024 pixels a side demand an explicit pool factor.
void export_heatmap(const Tensor4& q, const Tensor4& k, const PermutationPlan* plan,
                    const HeatmapOptions& opt, const std::filesystem::path& path);

/// P5 header string for a width x height map: "P5\n<w> <h>\n255\n".
std::string pgm_header(std::int64_t width, std::int64_t height);

}  // namespace s2o
