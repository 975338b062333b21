// SPDX-License-Identifier: Apache-2.0

#include "s2o/sweep.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "s2o/kernel.hpp"
#include "s2o/tensor_io.hpp"

namespace s2o {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

Variant variant_from(const std::string& name) {
    if (name == "two-pass") return Variant::two_pass;
    if (name == "fused") return Variant::fused;
    if (name == "no-q-reorder") return Variant::no_q_reorder;
    if (name == "baseline-topk") return Variant::baseline_topk;
    throw std::invalid_argument("unknown variant: " + name);
}

struct LoadedInput {
    Tensor4 q, k, v;
};

LoadedInput resolve_input(const RunConfig& cfg) {
    if (cfg.input_base.has_value() == cfg.synthetic.has_value()) {
        throw std::invalid_argument("exactly one input source required (file or synthetic)");
    }
    LoadedInput in;
    if (cfg.input_base) {
        in.q = load_tensor_file(*cfg.input_base + ".q.s2ot");
        in.k = load_tensor_file(*cfg.input_base + ".k.s2ot");
        in.v = load_tensor_file(*cfg.input_base + ".v.s2ot");
        if (!in.q.same_dims(in.k) || !in.q.same_dims(in.v)) {
            throw std::runtime_error("input tensor trio has mismatched dims");
        }
    } else {
        SyntheticData data = generate_synthetic(*cfg.synthetic, cfg.z, cfg.h, cfg.l, cfg.d);
        in.q = std::move(data.q);
        in.k = std::move(data.k);
        in.v = std::move(data.v);
    }
    return in;
}

double median3(double a, double b, double c) {
    return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json report_json(const SparsityReport& r) {
    json heads = json::array();
    for (const auto& e : r.per_head) {
        heads.push_back({{"z", e.z},
                         {"h", e.h},
                         {"mse", e.mse},
                         {"mae", e.mae},
                         {"computed_pairs", e.computed_pairs},
                         {"total_causal_pairs", e.total_causal_pairs},
                         {"sparsity", e.sparsity}});
    }
    return {{"per_head", heads},
            {"aggregate",
             {{"mean_mse", r.mean_mse},
              {"mean_mae", r.mean_mae},
              {"mean_sparsity", r.mean_sparsity}}},
            {"ranking_cost",
             {{"dot_products", r.ranking_cost.dot_products},
              {"sort_items", r.ranking_cost.sort_items}}}};
}

json plan_json(const PermutationPlan& plan) {
    json segs = json::array();
    for (std::int64_t zi = 0; zi < plan.z; ++zi) {
        for (std::int64_t hi = 0; hi < plan.h; ++hi) {
            for (std::int64_t n = 0; n < plan.seg.seg_count; ++n) {
                segs.push_back({{"z", zi},
                                {"h", hi},
                                {"segment", n},
                                {"q_perm", plan.q_perm_at(zi, hi, n).idx},
                                {"kv_perm", plan.kv_perm_at(zi, hi, n).idx}});
            }
        }
    }
    return {{"guide_source", plan.guide_source}, {"segments", segs}};
}

json config_json(const RunConfig& cfg) {
    json j;
    if (cfg.input_base) {
        j["input"] = *cfg.input_base;
    } else {
        j["synthetic"] = {{"pattern", to_string(cfg.synthetic->pattern)},
                          {"stripe_count", cfg.synthetic->stripe_count},
                          {"stripe_gain", cfg.synthetic->stripe_gain},
                          {"seed", cfg.synthetic->seed},
                          {"dims", {cfg.z, cfg.h, cfg.l, cfg.d}}};
    }
    std::vector<std::string> names;
    for (Variant v : cfg.variants) {
        names.push_back(to_string(v));
    }
    j["variants"] = names;
    j["segment_lens"] = cfg.seg_lens;
    j["taus"] = cfg.taus;
    j["tiles"] = {cfg.tiles.b_m, cfg.tiles.b_n};
    if (!cfg.topk.empty()) {
        j["topk"] = cfg.topk;
        j["block"] = {cfg.block_shape.block_rows, cfg.block_shape.block_cols};
    }
    return j;
}

}  // namespace

Variant parse_variant(const std::string& name) { return variant_from(name); }

std::string to_string(Variant v) {
    switch (v) {
        case Variant::two_pass: return "two-pass";
        case Variant::fused: return "fused";
        case Variant::no_q_reorder: return "no-q-reorder";
        case Variant::baseline_topk: return "baseline-topk";
    }
    return "?";
}

SweepResult run_sweep(const RunConfig& cfg) {
    if (cfg.variants.empty() || cfg.seg_lens.empty() || cfg.taus.empty()) {
        throw std::invalid_argument("sweep grids must be non-empty");
    }
    SweepResult result;
    result.json_path = cfg.out_base + ".json";
    result.csv_path = cfg.out_base + ".csv";

    json root;
    root["config"] = config_json(cfg);
    root["points"] = json::array();
    root["partial"] = false;

    std::ofstream csv(result.csv_path, std::ios::trunc);
    if (!csv) {
        throw std::runtime_error("cannot open for writing: " + result.csv_path);
    }
    csv << "variant,S,tau,k,sparsity,mse,mae,pairs,dot_products,seconds\n";

    const auto flush_json = [&](const std::string& err) {
        if (!err.empty()) {
            root["partial"] = true;
            root["error"] = err;
        }
        std::ofstream jout(result.json_path, std::ios::trunc);
        jout << root.dump(2) << '\n';
    };

    try {
        const LoadedInput in = resolve_input(cfg);
        const Tensor4 ref = dense_causal_attention(in.q, in.k, in.v);

        const auto emit = [&](const SweepPoint& point) {
            result.points.push_back(point);
            const SparsityReport& r = point.report;
            std::int64_t pairs = 0;
            for (const auto& e : r.per_head) {
                pairs += e.computed_pairs;
            }
            json pj;
            pj["variant"] = to_string(point.variant);
            if (point.variant != Variant::baseline_topk) {
                pj["S"] = point.seg_len;
                pj["tau"] = point.tau;
            } else {
                pj["k"] = point.k;
            }
            pj["tiles"] = {cfg.tiles.b_m, cfg.tiles.b_n};
            pj["report"] = report_json(r);
            pj["seconds"] = point.seconds;
            root["points"].push_back(std::move(pj));

            csv << to_string(point.variant) << ',';
            if (point.variant != Variant::baseline_topk) {
                csv << point.seg_len << ',' << fmt_double(point.tau) << ",,";
            } else {
                csv << ",," << point.k << ',';
            }
            csv << fmt_double(r.mean_sparsity) << ',' << fmt_double(r.mean_mse) << ','
                << fmt_double(r.mean_mae) << ',' << pairs << ',';
            if (point.variant != Variant::baseline_topk) {
                csv << r.ranking_cost.dot_products;
            }
            csv << ',' << fmt_double(point.seconds) << '\n';
        };

        for (Variant variant : cfg.variants) {
            if (variant == Variant::baseline_topk) {
                if (cfg.topk.empty()) {
                    throw std::invalid_argument("baseline-topk variant needs a k grid");
                }
                for (std::int64_t k : cfg.topk) {
                    BlockBudget budget = cfg.block_shape;
                    budget.k = k;
                    BlockTopkResult last;
                    double t0 = 0, t1 = 0, t2 = 0;
                    last = block_topk_attention(in.q, in.k, in.v, budget);  // warmup
                    for (double* slot : {&t0, &t1, &t2}) {
                        const auto start = Clock::now();
                        last = block_topk_attention(in.q, in.k, in.v, budget);
                        *slot = std::chrono::duration<double>(Clock::now() - start).count();
                    }
                    const std::vector<HeadError> errors = error_metrics(last.out, ref);
                    std::vector<HeadSparsity> sparsity;
                    const std::int64_t total = in.q.l * (in.q.l + 1) / 2;
                    for (std::int64_t zi = 0; zi < in.q.z; ++zi) {
                        for (std::int64_t hi = 0; hi < in.q.h; ++hi) {
                            const std::int64_t pairs =
                                last.pair_count[static_cast<std::size_t>(zi * in.q.h + hi)];
                            sparsity.push_back(
                                {zi, hi, pairs, total,
                                 1.0 - static_cast<double>(pairs) / static_cast<double>(total)});
                        }
                    }
                    SweepPoint point;
                    point.variant = variant;
                    point.seg_len = -1;
                    point.tau = std::nan("");
                    point.k = k;
                    point.report = make_sparsity_report(errors, sparsity, RankingCost{});
                    point.seconds = median3(t0, t1, t2);
                    emit(point);
                }
                continue;
            }

            for (std::int64_t seg : cfg.seg_lens) {
                for (double tau : cfg.taus) {
                    KernelConfig kc;
                    kc.seg_len = seg;
                    kc.tau = tau;
                    kc.tiles = cfg.tiles;
                    kc.q_reorder = variant == Variant::two_pass;
                    kc.fused = variant == Variant::fused;
                    kc.validate(in.q.l);

                    S2oResult run = s2o_attention(in.q, in.k, in.v, kc);  // warmup
                    double t0 = 0, t1 = 0, t2 = 0;
                    for (double* slot : {&t0, &t1, &t2}) {
                        const auto start = Clock::now();
                        run = s2o_attention(in.q, in.k, in.v, kc);
                        *slot = std::chrono::duration<double>(Clock::now() - start).count();
                    }

                    SweepPoint point;
                    point.variant = variant;
                    point.seg_len = seg;
                    point.tau = tau;
                    point.k = -1;
                    point.report = make_sparsity_report(
                        error_metrics(run.out, ref),
                        sparsity_from_trace(run.trace, in.q.l), run.cost);
                    point.seconds = median3(t0, t1, t2);
                    emit(point);
                    if (cfg.dump_plan && root.find("plan") == root.end()) {
                        root["plan"] = plan_json(run.plan);
                    }
                }
            }
        }
    } catch (const std::exception& e) {
        result.partial = true;
        result.error = e.what();
        flush_json(e.what());
        return result;
    }

    flush_json("");
    return result;
}

}  // namespace s2o
