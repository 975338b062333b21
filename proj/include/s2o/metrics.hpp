// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "s2o/kernel.hpp"
#include "s2o/plan.hpp"
#include "s2o/tensor.hpp"

namespace s2o {

struct HeadError {
    std::int64_t z = 0, h = 0;
    double mse = 0.0;
    double mae = 0.0;
};

/// Per-head mean squared / absolute error over the L x D output slice,
/// fp64 accumulation.
std::vector<HeadError> error_metrics(const Tensor4& approx, const Tensor4& ref);

struct HeadSparsity {
    std::int64_t z = 0, h = 0;
    std::int64_t computed_pairs = 0;
    std::int64_t total_causal_pairs = 0;
    double sparsity = 0.0;
};

/// Sparsity per head from the kernel trace. Computed pairs are
/// pass1 + pass2 counters: the intra-segment causal triangles plus the
/// committed prefix tiles at their clipped extents. Total is L(L+1)/2.
std::vector<HeadSparsity> sparsity_from_trace(const KernelTrace& trace, std::int64_t l);

/// One row of the emitted report plus its aggregate block.
struct SparsityReportEntry {
    std::int64_t z = 0, h = 0;
    double mse = 0.0, mae = 0.0;
    std::int64_t computed_pairs = 0, total_causal_pairs = 0;
    double sparsity = 0.0;
};

struct SparsityReport {
    std::vector<SparsityReportEntry> per_head;
    double mean_mse = 0.0;
    double mean_mae = 0.0;
    double mean_sparsity = 0.0;
    RankingCost ranking_cost;  // per (z, h) slice; excluded from sparsity
};

SparsityReport make_sparsity_report(const std::vector<HeadError>& errors,
                                    const std::vector<HeadSparsity>& sparsity,
                                    const RankingCost& cost);

struct ConcentrationStat {
    double budget = 0.0;  // p
    double frac = 0.0;    // mass captured by the first ceil(p * n) keys
};

/// Fraction of attention mass inside the leading ceil(p * n) keys of the
/// given ordering, averaged over rows. mass is row-major [rows x keys] with
/// rows already normalized; the ordering must cover all keys.
std::vector<ConcentrationStat> concentration_curve(std::span<const double> mass,
                                                   std::int64_t rows, std::int64_t keys,
                                                   const IndexVec& ordering,
                                                   std::span<const double> budgets);

}  // namespace s2o
