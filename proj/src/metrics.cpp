// SPDX-License-Identifier: Apache-2.0

#include "s2o/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace s2o {

std::vector<HeadError> error_metrics(const Tensor4& approx, const Tensor4& ref) {
    if (!approx.same_dims(ref)) {
        throw std::invalid_argument("error_metrics shape mismatch");
    }
    std::vector<HeadError> out;
    out.reserve(static_cast<std::size_t>(approx.z * approx.h));
    const double inv = 1.0 / static_cast<double>(approx.l * approx.d);
    for (std::int64_t zi = 0; zi < approx.z; ++zi) {
        for (std::int64_t hi = 0; hi < approx.h; ++hi) {
            double sq = 0.0;
            double ab = 0.0;
            const float* a = approx.row(zi, hi, 0);
            const float* r = ref.row(zi, hi, 0);
            const std::int64_t count = approx.l * approx.d;
            for (std::int64_t i = 0; i < count; ++i) {
                const double diff = static_cast<double>(a[i]) - static_cast<double>(r[i]);
                sq += diff * diff;
                ab += std::fabs(diff);
            }
            out.push_back({zi, hi, sq * inv, ab * inv});
        }
    }
    return out;
}

std::vector<HeadSparsity> sparsity_from_trace(const KernelTrace& trace, std::int64_t l) {
    if (trace.l != l || trace.pass1_pairs.size() != trace.pass2_pairs.size() ||
        trace.pass1_pairs.size() != static_cast<std::size_t>(trace.z * trace.h)) {
        throw std::invalid_argument("trace dims inconsistent");
    }
    const std::int64_t total = l * (l + 1) / 2;
    std::vector<HeadSparsity> out;
    out.reserve(trace.pass1_pairs.size());
    for (std::int64_t zi = 0; zi < trace.z; ++zi) {
        for (std::int64_t hi = 0; hi < trace.h; ++hi) {
            const std::size_t slice = static_cast<std::size_t>(zi * trace.h + hi);
            const std::int64_t computed = trace.pass1_pairs[slice] + trace.pass2_pairs[slice];
            HeadSparsity hs;
            hs.z = zi;
            hs.h = hi;
            hs.computed_pairs = computed;
            hs.total_causal_pairs = total;
            hs.sparsity = 1.0 - static_cast<double>(computed) / static_cast<double>(total);
            out.push_back(hs);
        }
    }
    return out;
}

SparsityReport make_sparsity_report(const std::vector<HeadError>& errors,
                                    const std::vector<HeadSparsity>& sparsity,
                                    const RankingCost& cost) {
    if (errors.size() != sparsity.size() || errors.empty()) {
        throw std::invalid_argument("error and sparsity head lists must align");
    }
    SparsityReport report;
    report.ranking_cost = cost;
    report.per_head.reserve(errors.size());
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (errors[i].z != sparsity[i].z || errors[i].h != sparsity[i].h) {
            throw std::invalid_argument("error and sparsity head order must align");
        }
        SparsityReportEntry e;
        e.z = errors[i].z;
        e.h = errors[i].h;
        e.mse = errors[i].mse;
        e.mae = errors[i].mae;
        e.computed_pairs = sparsity[i].computed_pairs;
        e.total_causal_pairs = sparsity[i].total_causal_pairs;
        e.sparsity = sparsity[i].sparsity;
        report.per_head.push_back(e);
        report.mean_mse += e.mse;
        report.mean_mae += e.mae;
        report.mean_sparsity += e.sparsity;
    }
    const double inv = 1.0 / static_cast<double>(report.per_head.size());
    report.mean_mse *= inv;
    report.mean_mae *= inv;
    report.mean_sparsity *= inv;
    return report;
}

std::vector<ConcentrationStat> concentration_curve(std::span<const double> mass,
                                                   std::int64_t rows, std::int64_t keys,
                                                   const IndexVec& ordering,
                                                   std::span<const double> budgets) {
    if (ordering.empty()) {
        throw std::invalid_argument("empty ordering");
    }
    if (static_cast<std::int64_t>(ordering.size()) != keys ||
        static_cast<std::int64_t>(mass.size()) != rows * keys) {
        throw std::invalid_argument("concentration inputs inconsistent");
    }
    std::vector<ConcentrationStat> out;
    out.reserve(budgets.size());
    for (double p : budgets) {
        if (!(p > 0.0) || p > 1.0) {
            throw std::invalid_argument("budget p must lie in (0, 1]");
        }
        const std::int64_t take = static_cast<std::int64_t>(
            std::ceil(p * static_cast<double>(keys)));
        double total = 0.0;
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* row = mass.data() + r * keys;
            double frac = 0.0;
            for (std::int64_t t = 0; t < take; ++t) {
                frac += row[ordering.idx[static_cast<std::size_t>(t)]];
            }
            total += frac;
        }
        out.push_back({p, total / static_cast<double>(rows)});
    }
    return out;
}

}  // namespace s2o
