// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "s2o/attention.hpp"
#include "s2o/baseline.hpp"
#include "s2o/metrics.hpp"
#include "s2o/synthetic.hpp"
#include "s2o/tensor.hpp"

namespace s2o {

enum class Variant {
    two_pass,
    fused,
    no_q_reorder,
    baseline_topk,
};

Variant parse_variant(const std::string& name);
std::string to_string(Variant v);

/// One benchmark invocation: exactly one input source, a grid of points.
struct RunConfig {
    std::optional<std::string> input_base;   // loads <base>.{q,k,v}.s2ot
    std::optional<SyntheticSpec> synthetic;  // generated at the dims below
    std::int64_t z = 1, h = 1, l = 256, d = 32;

    std::vector<Variant> variants{Variant::two_pass};
    std::vector<std::int64_t> seg_lens{128};
    std::vector<double> taus{0.005};
    TileSpec tiles{16, 16};
    std::vector<std::int64_t> topk{};  // k grid for baseline-topk
    BlockBudget block_shape{16, 16, 0};

    bool dump_plan = false;
    std::string out_base = "s2o_report";
};

struct SweepPoint {
    Variant variant = Variant::two_pass;
    std::int64_t seg_len = 0;   // -1 for baseline points
    double tau = 0.0;           // NaN for baseline points
    std::int64_t k = -1;        // -1 for kernel points
    SparsityReport report;
    double seconds = 0.0;       // median of 3 post-warmup runs
};

struct SweepResult {
    std::vector<SweepPoint> points;
    bool partial = false;
    std::string error;
    std::string json_path;
    std::string csv_path;
};

/// Runs the dense reference once, then every grid point; writes
/// <out_base>.json and <out_base>.csv. A point failure stops the sweep,
/// marks the report partial and records the error (callers exit nonzero).
SweepResult run_sweep(const RunConfig& cfg);

}  // namespace s2o
