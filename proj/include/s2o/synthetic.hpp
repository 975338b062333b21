// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "s2o/tensor.hpp"

namespace s2o {

enum class StripePattern {
    gaussian,
    vertical,
    horizontal,
    slash,
    mixed,
};

StripePattern parse_stripe_pattern(const std::string& name);
std::string to_string(StripePattern p);

/// Stripe-planting recipe. stripe_gain is the target score boost (after the
/// 1/sqrt(D) scale) a planted alignment adds on top of the unit-variance
/// gaussian background.
struct SyntheticSpec {
    StripePattern pattern = StripePattern::gaussian;
    std::int64_t stripe_count = 0;
    double stripe_gain = 0.0;
    std::uint64_t seed = 0;
};

/// Generated tensors plus the planted structure, so harnesses can verify
/// where the mass was put. Pattern geometry (indices, directions) is shared
/// across (z, h); the gaussian background is drawn per head.
struct SyntheticData {
    Tensor4 q, k, v;
    std::vector<std::int64_t> planted_keys;     // vertical / horizontal hot columns
    std::vector<std::int64_t> planted_queries;  // horizontal hot rows
    std::vector<std::int64_t> slash_offsets;    // per-stripe diagonal offsets
};

/// Deterministic under (spec, dims): same call gives bit-identical tensors.
SyntheticData generate_synthetic(const SyntheticSpec& spec, std::int64_t z, std::int64_t h,
                                 std::int64_t l, std::int64_t d);

/// xoshiro256** stream with hand-rolled uniform / Box-Muller normal draws,
/// so outputs do not depend on libstdc++ distribution details.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_bits();
    double uniform();                          // [0, 1)
    double normal();                           // standard normal
    std::int64_t uniform_int(std::int64_t n);  // [0, n)

    /// count distinct values from [0, n), draw order preserved.
    std::vector<std::int64_t> sample_distinct(std::int64_t count, std::int64_t n);

    /// Unit-norm direction of dim d.
    std::vector<double> unit_direction(std::int64_t d);

private:
    std::uint64_t s_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Stream-splitting helper: stable across platforms.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0);

}  // namespace s2o
