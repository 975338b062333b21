// SPDX-License-Identifier: Apache-2.0

#include "s2o/cli_app.hpp"

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "s2o/heatmap.hpp"
#include "s2o/kernel.hpp"
#include "s2o/sweep.hpp"
#include "s2o/synthetic.hpp"
#include "s2o/tensor_io.hpp"

namespace s2o {

namespace {

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

TileSpec parse_tile(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos) {
        throw CLI::ValidationError("--tile", "expected BMxBN, e.g. 16x16");
    }
    TileSpec t;
    t.b_m = std::stoll(s.substr(0, x));
    t.b_n = std::stoll(s.substr(x + 1));
    return t;
}

struct DimFlags {
    std::int64_t z = 1, h = 1, l = 256, d = 32;
    void attach(CLI::App* app) {
        app->add_option("--batch", z, "batch count Z");
        app->add_option("--heads", h, "head count H");
        app->add_option("--seq-len", l, "sequence length L");
        app->add_option("--head-dim", d, "head dimension D");
    }
};

struct SynthFlags {
    std::string pattern;
    std::int64_t stripes = 8;
    double gain = 4.0;
    std::uint64_t seed = 0;
    void attach(CLI::App* app) {
        app->add_option("--pattern", pattern,
                        "gaussian | vertical | horizontal | slash | mixed");
        app->add_option("--stripes", stripes, "planted stripe count");
        app->add_option("--gain", gain, "planted score boost");
        app->add_option("--seed", seed, "generator seed");
    }
    SyntheticSpec spec() const {
        SyntheticSpec s;
        s.pattern = parse_stripe_pattern(pattern);
        s.stripe_count = stripes;
        s.stripe_gain = gain;
        s.seed = seed;
        return s;
    }
};

int cmd_gen(const DimFlags& dims, const SynthFlags& synth, const std::string& out) {
    const SyntheticData data =
        generate_synthetic(synth.spec(), dims.z, dims.h, dims.l, dims.d);
    save_tensor_file(data.q, out + ".q.s2ot");
    save_tensor_file(data.k, out + ".k.s2ot");
    save_tensor_file(data.v, out + ".v.s2ot");
    std::cout << "wrote " << out << ".{q,k,v}.s2ot [" << dims.z << "," << dims.h << ","
              << dims.l << "," << dims.d << "]\n";
    return 0;
}

int run_points(const RunConfig& cfg) {
    const SweepResult result = run_sweep(cfg);
    if (result.partial) {
        std::cerr << "sweep aborted: " << result.error << "\n";
        std::cerr << "partial report at " << result.json_path << "\n";
        return 1;
    }
    std::cout << "wrote " << result.json_path << " and " << result.csv_path << " ("
              << result.points.size() << " points)\n";
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"S2O sparse attention benchmark harness"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic Q/K/V tensor trio");
    DimFlags gen_dims;
    SynthFlags gen_synth;
    std::string gen_out;
    gen_dims.attach(gen);
    gen_synth.attach(gen);
    gen->get_option("--pattern")->required();
    gen->add_option("--out", gen_out, "output base path")->required();

    // shared run/sweep flags
    struct PointFlags {
        DimFlags dims;
        SynthFlags synth;
        std::string input;
        std::string segment_len = "128";
        std::string tau = "0.005";
        std::string tile = "16x16";
        std::string variant = "two-pass";
        std::string topk;
        std::string block = "16x16";
        std::string out;
        bool dump_plan = false;
    };
    const auto attach_point_flags = [](CLI::App* cmd, PointFlags& f) {
        f.dims.attach(cmd);
        f.synth.attach(cmd);
        cmd->add_option("--input", f.input, "tensor trio base path (from gen)");
        cmd->add_option("--segment-len", f.segment_len, "segment length S (comma list)");
        cmd->add_option("--tau", f.tau, "early-stop threshold (comma list)");
        cmd->add_option("--tile", f.tile, "attention tile BMxBN");
        cmd->add_option("--variant", f.variant,
                        "two-pass | fused | no-q-reorder | baseline-topk (comma list)");
        cmd->add_option("--k", f.topk, "baseline-topk kept-block grid (comma list)");
        cmd->add_option("--block", f.block, "baseline block shape RxC");
        cmd->add_option("--out", f.out, "report base path")->required();
        cmd->add_flag("--dump-plan", f.dump_plan, "embed permutation indices in the JSON");
    };

    auto* run = app.add_subcommand("run", "run a single configuration point");
    PointFlags run_flags;
    attach_point_flags(run, run_flags);

    auto* sweep = app.add_subcommand("sweep", "run a grid of configuration points");
    PointFlags sweep_flags;
    attach_point_flags(sweep, sweep_flags);

    // heatmap
    auto* heat = app.add_subcommand("heatmap", "export an attention-mass map");
    DimFlags heat_dims;
    SynthFlags heat_synth;
    std::string heat_input, heat_mode = "original", heat_out;
    std::int64_t heat_seg = 128, heat_pool = 1, heat_z = 0, heat_h = 0;
    heat_dims.attach(heat);
    heat_synth.attach(heat);
    heat->add_option("--input", heat_input, "tensor trio base path");
    heat->add_option("--segment-len", heat_seg, "segment length for permuted modes");
    heat->add_option("--mode", heat_mode, "original | kv | qkv");
    heat->add_option("--pool", heat_pool, "tokens per pixel");
    heat->add_option("--batch-index", heat_z, "batch index");
    heat->add_option("--head-index", heat_h, "head index");
    heat->add_option("--out", heat_out, "output path (.pgm or .csv)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) {
            return cmd_gen(gen_dims, gen_synth, gen_out);
        }
        if (run->parsed() || sweep->parsed()) {
            const PointFlags& f = run->parsed() ? run_flags : sweep_flags;
            if (f.input.empty() == f.synth.pattern.empty()) {
                std::cerr << "pass exactly one input source: --input or --pattern\n";
                return 2;
            }
            RunConfig cfg;
            if (!f.input.empty()) {
                cfg.input_base = f.input;
            } else {
                cfg.synthetic = f.synth.spec();
                cfg.z = f.dims.z;
                cfg.h = f.dims.h;
                cfg.l = f.dims.l;
                cfg.d = f.dims.d;
            }
            cfg.variants.clear();
            for (const std::string& name : split_csv(f.variant)) {
                cfg.variants.push_back(parse_variant(name));
            }
            cfg.seg_lens.clear();
            for (const std::string& s : split_csv(f.segment_len)) {
                cfg.seg_lens.push_back(std::stoll(s));
            }
            cfg.taus.clear();
            for (const std::string& s : split_csv(f.tau)) {
                cfg.taus.push_back(std::stod(s));
            }
            if (cfg.variants.empty() || cfg.seg_lens.empty() || cfg.taus.empty()) {
                std::cerr << "--variant, --segment-len and --tau need at least one value\n";
                return 2;
            }
            cfg.tiles = parse_tile(f.tile);
            for (const std::string& s : split_csv(f.topk)) {
                cfg.topk.push_back(std::stoll(s));
            }
            const bool wants_baseline =
                std::find(cfg.variants.begin(), cfg.variants.end(),
                          Variant::baseline_topk) != cfg.variants.end();
            if (wants_baseline && cfg.topk.empty()) {
                std::cerr << "baseline-topk needs a --k grid\n";
                return 2;
            }
            const TileSpec block = parse_tile(f.block);
            cfg.block_shape.block_rows = block.b_m;
            cfg.block_shape.block_cols = block.b_n;
            cfg.dump_plan = f.dump_plan;
            cfg.out_base = f.out;
            if (run->parsed()) {
                std::size_t points = 0;
                for (const Variant v : cfg.variants) {
                    points += v == Variant::baseline_topk
                                  ? cfg.topk.size()
                                  : cfg.seg_lens.size() * cfg.taus.size();
                }
                if (points > 1) {
                    std::cerr << "run takes a single point; use sweep for grids\n";
                    return 2;
                }
            }
            return run_points(cfg);
        }
        if (heat->parsed()) {
            Tensor4 q, k;
            if (!heat_input.empty()) {
                q = load_tensor_file(heat_input + ".q.s2ot");
                k = load_tensor_file(heat_input + ".k.s2ot");
            } else if (!heat_synth.pattern.empty()) {
                SyntheticData data = generate_synthetic(heat_synth.spec(), heat_dims.z,
                                                        heat_dims.h, heat_dims.l, heat_dims.d);
                q = std::move(data.q);
                k = std::move(data.k);
            } else {
                std::cerr << "heatmap needs --input or --pattern\n";
                return 2;
            }
            HeatmapOptions opt;
            opt.mode = parse_heatmap_mode(heat_mode);
            opt.pool = heat_pool;
            opt.z = heat_z;
            opt.h = heat_h;
            if (opt.mode == HeatmapMode::original) {
                export_heatmap(q, k, nullptr, opt, heat_out);
            } else {
                auto [plan, cost] = build_plan(q, k, heat_seg);
                (void)cost;
                export_heatmap(q, k, &plan, opt, heat_out);
            }
            std::cout << "wrote " << heat_out << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace s2o
