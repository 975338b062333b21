// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "s2o/baseline.hpp"
#include "s2o/kernel.hpp"
#include "s2o/metrics.hpp"
#include "s2o/synthetic.hpp"

using namespace s2o;

TEST_CASE("keeping every prefix block reproduces the dense oracle") {
    Rng rng(201);
    const Tensor4 q = oracle::random_tensor(rng, 1, 2, 24, 4);
    const Tensor4 k = oracle::random_tensor(rng, 1, 2, 24, 4);
    const Tensor4 v = oracle::random_tensor(rng, 1, 2, 24, 4);
    const BlockBudget budget{4, 4, 6};  // 6 prefix blocks = everything
    const BlockTopkResult res = block_topk_attention(q, k, v, budget);
    CHECK(oracle::max_abs_diff(res.out, dense_causal_attention(q, k, v)) <= 1e-6);
    for (const std::int64_t pairs : res.pair_count) {
        CHECK(pairs == 24 * 25 / 2);
    }
}

TEST_CASE("k = 0 equals pass-1-only finalization at matching granularity") {
    Rng rng(203);
    const Tensor4 q = oracle::random_tensor(rng, 1, 1, 8, 3);
    const Tensor4 k = oracle::random_tensor(rng, 1, 1, 8, 3);
    const Tensor4 v = oracle::random_tensor(rng, 1, 1, 8, 3);

    const BlockTopkResult res = block_topk_attention(q, k, v, BlockBudget{4, 4, 0});

    KernelConfig cfg;
    cfg.seg_len = 4;
    cfg.tiles = TileSpec{4, 4};
    const PassBuffers bufs = pass1_dense_init(q, k, v, cfg);
    Tensor4 pass1_only(1, 1, 8, 3);
    for (std::int64_t i = 0; i < 8; ++i) {
        const std::size_t slot = bufs.row_slot(0, 0, i);
        for (std::int64_t di = 0; di < 3; ++di) {
            pass1_only.at(0, 0, i, di) = static_cast<float>(
                bufs.acc[slot * 3 + static_cast<std::size_t>(di)] / bufs.ell[slot]);
        }
    }
    CHECK(oracle::max_abs_diff(res.out, pass1_only) <= 1e-6);
    CHECK(res.pair_count[0] == 2 * (4 * 5 / 2));  // two causal triangles
}

TEST_CASE("MSE is non-increasing as the block budget grows") {
    SyntheticSpec spec;
    spec.pattern = StripePattern::mixed;
    spec.stripe_count = 4;
    spec.stripe_gain = 3.0;
    for (const std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        spec.seed = seed;
        const SyntheticData data = generate_synthetic(spec, 1, 1, 64, 8);
        const Tensor4 ref = dense_causal_attention(data.q, data.k, data.v);
        double prev = std::numeric_limits<double>::infinity();
        for (std::int64_t k = 0; k <= 8; ++k) {
            const BlockTopkResult res =
                block_topk_attention(data.q, data.k, data.v, BlockBudget{8, 8, k});
            const double mse = error_metrics(res.out, ref)[0].mse;
            CHECK(mse <= prev + 1e-12);
            prev = mse;
        }
        CHECK(prev <= 1e-10);  // full budget reaches the oracle
    }
}

TEST_CASE("kept blocks never include future keys") {
    // outputs of row i must ignore any key > i: poison the strict future
    Rng rng(207);
    const Tensor4 q = oracle::random_tensor(rng, 1, 1, 16, 3);
    Tensor4 k = oracle::random_tensor(rng, 1, 1, 16, 3);
    Tensor4 v = oracle::random_tensor(rng, 1, 1, 16, 3);
    const std::int64_t cut = 7;  // block boundary for 4-col blocks
    const float nan = std::numeric_limits<float>::quiet_NaN();
    const BlockTopkResult clean = block_topk_attention(q, k, v, BlockBudget{4, 4, 1});
    for (std::int64_t j = cut + 1; j < 16; ++j) {
        for (std::int64_t di = 0; di < 3; ++di) {
            k.at(0, 0, j, di) = nan;
            v.at(0, 0, j, di) = nan;
        }
    }
    const BlockTopkResult poisoned = block_topk_attention(q, k, v, BlockBudget{4, 4, 1});
    for (std::int64_t i = 0; i <= cut; ++i) {
        for (std::int64_t di = 0; di < 3; ++di) {
            CHECK(std::isfinite(poisoned.out.at(0, 0, i, di)));
            CHECK(poisoned.out.at(0, 0, i, di) == clean.out.at(0, 0, i, di));
        }
    }
}

TEST_CASE("pair-count table is nested and matches actual runs") {
    Rng rng(211);
    const Tensor4 q = oracle::random_tensor(rng, 1, 2, 32, 4);
    const Tensor4 k = oracle::random_tensor(rng, 1, 2, 32, 4);
    const Tensor4 v = oracle::random_tensor(rng, 1, 2, 32, 4);
    const BlockBudget shape{8, 8, 0};
    const std::vector<std::int64_t> table = block_topk_pair_counts(q, k, shape, 4);
    CHECK(table.size() == 5);
    for (std::size_t i = 1; i < table.size(); ++i) {
        CHECK(table[i] >= table[i - 1]);
    }
    for (std::int64_t kk = 0; kk <= 4; ++kk) {
        BlockBudget budget = shape;
        budget.k = kk;
        const BlockTopkResult res = block_topk_attention(q, k, v, budget);
        std::int64_t total = 0;
        for (const std::int64_t p : res.pair_count) {
            total += p;
        }
        CHECK(total == table[static_cast<std::size_t>(kk)]);
    }
}

TEST_CASE("non-square blocks honor causality and self coverage") {
    Rng rng(213);
    const Tensor4 q = oracle::random_tensor(rng, 1, 1, 20, 3);
    const Tensor4 k = oracle::random_tensor(rng, 1, 1, 20, 3);
    const Tensor4 v = oracle::random_tensor(rng, 1, 1, 20, 3);
    const BlockTopkResult res = block_topk_attention(q, k, v, BlockBudget{4, 8, 0});
    // with zero prefix budget, every row still covers its own key
    for (std::int64_t i = 0; i < 20; ++i) {
        for (std::int64_t di = 0; di < 3; ++di) {
            CHECK(std::isfinite(res.out.at(0, 0, i, di)));
        }
    }
    CHECK(res.pair_count[0] > 0);
    CHECK(res.pair_count[0] < 20 * 21 / 2);
}
