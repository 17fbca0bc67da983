// Copyright (c) 2026, The WSSL Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. stdout carries machine-readable results, progress
// goes to stderr. Exit codes: 0 success, 1 config or I/O error, 2 usage error
// (including an unknown subcommand).

#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wssl/checkpoint.hpp"
#include "wssl/config.hpp"
#include "wssl/format.hpp"
#include "wssl/sweep.hpp"
#include "wssl/train.hpp"

namespace wssl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

namespace seed_stream {
inline constexpr std::uint64_t make_masks = 21;
}

/// Raised for configuration problems; carries every issue found.
struct ConfigFailure : Error {
    std::vector<ConfigIssue> issues;
    explicit ConfigFailure(std::vector<ConfigIssue> list) : Error("invalid configuration"), issues(std::move(list)) {}
};

namespace detail {

namespace fs = std::filesystem;

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

inline RunConfig load_config(const std::string& path) {
    auto result = validate_config_text(read_text(path));
    if (!result.ok()) throw ConfigFailure(result.issues);
    return *result.config;
}

inline fs::path ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    return dir;
}

inline Network load_network(const fs::path& path, NetworkKind want) {
    auto ck = load_checkpoint(path);
    if (ck.network.kind != want)
        throw ArgumentError(path.string() + " holds a " + (ck.network.kind == NetworkKind::unet ? "UNet" : "pretext") +
                            " network, expected " + (want == NetworkKind::unet ? "UNet" : "pretext"));
    return std::move(ck.network);
}

inline void require_fits(const Network& net, const Image& img, const SsimParams& ssim) {
    const auto div = std::size_t{1} << net.config.depth;
    if (img.height % div != 0 || img.width % div != 0)
        throw ArgumentError("image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                            " is not divisible by 2^depth = " + std::to_string(div));
    if (img.height < static_cast<std::size_t>(ssim.window_size) || img.width < static_cast<std::size_t>(ssim.window_size))
        throw ArgumentError("image smaller than the SSIM window");
}

inline std::string with_suffix(const fs::path& image, const std::string& suffix) {
    auto p = image;
    p.replace_extension();
    return p.string() + suffix;
}

// ---------------------------------------------------------------------------

inline int cmd_make_masks(const RunConfig& cfg, std::size_t count, std::size_t size, const std::string& out_dir,
                          std::ostream& out) {
    const fs::path dir = ensure_dir(out_dir.empty() ? fs::path(cfg.output_dir) / "masks" : fs::path(out_dir));
    if (size == 0) size = static_cast<std::size_t>(cfg.model.input_size);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(derive_seed(cfg.seed, seed_stream::make_masks, i));
        const Mask m = generate_mask(size, size, cfg.masks, rng);
        char name[32];
        std::snprintf(name, sizeof(name), "mask_%04zu.pgm", i);
        write_pgm(dir / name, m);
        out << (dir / name).string() << '\t' << format_number(missing_fraction(m)) << '\n';
    }
    return kExitOk;
}

inline int cmd_pretext(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto data = load_datasets(cfg);
    const fs::path dir = ensure_dir(cfg.output_dir);
    auto result = train_pretext(data.train, cfg.weights, cfg.model, cfg.hyper(), cfg.data_options(),
                                [&](const EpochRecord& r) {
                                    err << "pretext epoch " << r.epoch << " loss " << format_fixed(r.mean_loss, 5);
                                    for (const auto& [t, a] : r.accuracy) err << ' ' << task_name(t) << ' ' << format_fixed(a, 3);
                                    err << '\n';
                                });
    save_checkpoint(result.network, result.adam, dir / "pretext.ckpt");
    write_text(dir / "pretext_log.csv", result.log.to_csv());
    out << (dir / "pretext.ckpt").string() << '\n' << (dir / "pretext_log.csv").string() << '\n';
    return kExitOk;
}

inline int cmd_finetune(const RunConfig& cfg, const std::string& pretext_path, std::ostream& out, std::ostream& err) {
    const fs::path dir = ensure_dir(cfg.output_dir);
    const fs::path src = pretext_path.empty() ? dir / "pretext.ckpt" : fs::path(pretext_path);
    const Network pretext = load_network(src, NetworkKind::pretext);
    const auto data = load_datasets(cfg);
    const auto opts = cfg.data_options();
    const auto holdout = make_holdout(data.holdout, cfg.masks, opts, cfg.seed);
    auto result = train_downstream(pretext, data.train, holdout, cfg.masks, cfg.model, cfg.hyper(), cfg.loss, opts,
                                   cfg.mask_fill, [&](const EpochRecord& r) {
                                       err << "finetune epoch " << r.epoch << " loss " << format_fixed(r.mean_loss, 5)
                                           << " holdout ssim " << format_fixed(r.holdout_ssim, 4) << " psnr "
                                           << format_fixed(r.holdout_psnr, 2) << '\n';
                                   });
    save_checkpoint(result.network, result.adam, dir / "inpaint.ckpt");
    write_text(dir / "finetune_log.csv", result.log.to_csv());
    out << (dir / "inpaint.ckpt").string() << '\n' << (dir / "finetune_log.csv").string() << '\n';
    return kExitOk;
}

inline int cmd_inpaint(const std::string& ckpt, const std::string& image_path, const std::string& mask_path,
                       const std::string& prefix, const SsimParams& ssim, float fill, std::ostream& out) {
    const Network net = load_network(ckpt, NetworkKind::unet);
    const Image original = read_ppm(fs::path(image_path));
    const Mask mask = read_pgm(fs::path(mask_path));
    require_fits(net, original, ssim);
    const Image masked = apply_mask(original, mask, fill);
    const Image recon = inpaint_composite(net, masked, mask);
    const std::string base = prefix.empty() ? with_suffix(image_path, "") : prefix;
    write_ppm(fs::path(base + ".masked.ppm"), masked);
    write_ppm(fs::path(base + ".recon.ppm"), recon);
    out << format_number(ssim_value(recon, original, ssim)) << '\t' << format_number(psnr(recon, original)) << '\n';
    return kExitOk;
}

inline int cmd_eval(const std::string& dir, const std::string& ckpt, const std::string& label, const SsimParams& ssim,
                    float fill, std::ostream& out) {
    const auto images = list_images(dir);
    if (images.empty()) throw IoError("no .ppm images in " + dir);
    std::optional<Network> net;
    if (!ckpt.empty()) net = load_network(ckpt, NetworkKind::unet);
    double ssim_sum = 0.0, psnr_sum = 0.0;
    for (const auto& path : images) {
        const Image original = read_ppm(path);
        Image recon;
        if (net) {
            const auto mask_path = with_suffix(path, ".pgm");
            if (!fs::exists(mask_path)) throw IoError("missing mask " + mask_path);
            const Mask mask = read_pgm(fs::path(mask_path));
            require_fits(*net, original, ssim);
            recon = inpaint_composite(*net, apply_mask(original, mask, fill), mask);
        } else {
            const auto recon_path = with_suffix(path, ".recon.ppm");
            if (!fs::exists(recon_path)) throw IoError("missing reconstruction " + recon_path);
            recon = read_ppm(fs::path(recon_path));
        }
        ssim_sum += ssim_value(recon, original, ssim);
        psnr_sum += psnr(recon, original);
    }
    const double n = static_cast<double>(images.size());
    out << "method\tssim\tpsnr\n" << label << '\t' << format_fixed(ssim_sum / n, 4) << '\t' << format_fixed(psnr_sum / n, 2)
        << '\n';
    return kExitOk;
}

inline int cmd_sweep(const RunConfig& cfg, const std::vector<std::size_t>& arities, std::ostream& out,
                     std::ostream& err) {
    const fs::path dir = ensure_dir(cfg.output_dir);
    const auto data = load_datasets(cfg);
    std::vector<SweepCell> cells;
    for (const auto& c : sweep_grid())
        if (arities.empty() || std::find(arities.begin(), arities.end(), c.arity()) != arities.end()) cells.push_back(c);
    const auto threads = sweep_threads();
    err << "sweep: " << cells.size() << " cells on " << threads << " thread(s)\n";
    const auto report = run_sweep(cfg, data, cells, threads, [&](const SweepRow& r) {
        err << "sweep cell " << r.cell.id() << " ssim " << format_fixed(r.ssim, 4) << " psnr " << format_fixed(r.psnr, 2)
            << '\n';
    });
    write_text(dir / "sweep.csv", report.to_csv());
    write_text(dir / "sweep_summary.csv", report.summary_csv());
    out << report.summary_csv();
    return kExitOk;
}

} // namespace detail

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Weighted self-supervised pretraining and inpainting", "wssl"};
    app.require_subcommand(1, 1);

    std::string config_path;
    auto add_config = [&](CLI::App* sub, bool required) {
        auto* opt = sub->add_option("--config,-c", config_path, "run configuration (JSON)");
        if (required) opt->required();
    };

    std::size_t mask_count = 16, mask_size = 0;
    std::string mask_out;
    auto* make_masks = app.add_subcommand("make-masks", "write seeded irregular masks as PGM files");
    add_config(make_masks, true);
    make_masks->add_option("--count,-n", mask_count, "number of masks")->capture_default_str();
    make_masks->add_option("--size", mask_size, "mask side in pixels (default: model.input_size)");
    make_masks->add_option("--out,-o", mask_out, "output directory (default: <output_dir>/masks)");

    auto* pretext = app.add_subcommand("pretext", "train the encoder on the weighted pretext tasks");
    add_config(pretext, true);

    std::string pretext_ckpt;
    auto* finetune = app.add_subcommand("finetune", "transplant the encoder and train the inpainting network");
    add_config(finetune, true);
    finetune->add_option("--pretext", pretext_ckpt, "pretext checkpoint (default: <output_dir>/pretext.ckpt)");

    std::string ckpt, image, mask, prefix;
    auto* inpaint = app.add_subcommand("inpaint", "inpaint one image and print SSIM and PSNR");
    inpaint->add_option("checkpoint", ckpt, "inpainting checkpoint")->required();
    inpaint->add_option("image", image, "input image (PPM)")->required();
    inpaint->add_option("mask", mask, "mask (PGM, 255 = missing)")->required();
    inpaint->add_option("--out-prefix", prefix, "prefix for <prefix>.masked.ppm / <prefix>.recon.ppm");
    add_config(inpaint, false);

    std::string eval_dir, eval_ckpt, label = "WSSL";
    auto* eval = app.add_subcommand("eval", "mean SSIM and PSNR over a directory of images");
    eval->add_option("dir", eval_dir, "directory of <name>.ppm with <name>.pgm or <name>.recon.ppm")->required();
    eval->add_option("--checkpoint", eval_ckpt, "inpaint <name>.ppm with <name>.pgm using this checkpoint");
    eval->add_option("--label", label, "row label")->capture_default_str();
    add_config(eval, false);

    std::vector<std::size_t> arities;
    auto* sweep = app.add_subcommand("sweep", "train every cell of the loss-weight grid");
    add_config(sweep, true);
    sweep->add_option("--arity", arities, "restrict to these task counts (1, 2, 3)")->check(CLI::Range(1, 3));

    if (argc > 1 && argv[1][0] != '-') {
        const std::string name = argv[1];
        const auto subs = app.get_subcommands([](const CLI::App*) { return true; });
        if (std::none_of(subs.begin(), subs.end(), [&](const CLI::App* s) { return s->get_name() == name; })) {
            err << "unknown subcommand '" << name << "'\n" << app.help();
            return kExitUsage;
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        auto config_or_default = [&] { return config_path.empty() ? RunConfig{} : detail::load_config(config_path); };
        if (make_masks->parsed())
            return detail::cmd_make_masks(detail::load_config(config_path), mask_count, mask_size, mask_out, out);
        if (pretext->parsed()) return detail::cmd_pretext(detail::load_config(config_path), out, err);
        if (finetune->parsed()) return detail::cmd_finetune(detail::load_config(config_path), pretext_ckpt, out, err);
        if (inpaint->parsed()) {
            const auto cfg = config_or_default();
            return detail::cmd_inpaint(ckpt, image, mask, prefix, cfg.loss.ssim, cfg.mask_fill, out);
        }
        if (eval->parsed()) {
            const auto cfg = config_or_default();
            return detail::cmd_eval(eval_dir, eval_ckpt, label, cfg.loss.ssim, cfg.mask_fill, out);
        }
        if (sweep->parsed()) return detail::cmd_sweep(detail::load_config(config_path), arities, out, err);
    } catch (const ConfigFailure& e) {
        for (const auto& issue : e.issues)
            err << "config error at " << (issue.path.empty() ? "<root>" : issue.path) << ": " << issue.message << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitUsage;
}

} // namespace wssl::cli
