// Copyright (c) 2026, The WSSL Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <set>
#include <sstream>

#include "support.hpp"
#include "wssl/cli.hpp"

using namespace wssl;
using wssl::testing::slurp;
using wssl::testing::temp_dir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "wssl");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

bool has_issue(const ConfigResult& r, const std::string& path) {
    for (const auto& i : r.issues)
        if (i.path == path) return true;
    return false;
}

// Tiny but complete pipeline settings.
std::string tiny_config(const fs::path& out_dir, int seed = 3) {
    return R"({"model": {"depth": 2, "base_channels": 2},
               "train": {"batch_size": 4, "epochs_pretext": 1, "epochs_downstream": 1, "learning_rate": 0.001},
               "data": {"synthetic_count": 4, "holdout_count": 1},
               "seed": )" +
           std::to_string(seed) + R"(, "output_dir": ")" + out_dir.string() + "\"}";
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const auto p = dir / "config.json";
    std::ofstream(p) << text;
    return p;
}

} // namespace

TEST_CASE("empty config gives the defaults") {
    const auto r = validate_config_text("{}");
    REQUIRE(r.ok());
    const auto& c = *r.config;
    CHECK(c.loss.wssl.alpha == 0.84);
    CHECK(c.train.learning_rate == 1e-4);
    CHECK(c.masks.fraction_low == 0.30);
    CHECK(c.masks.fraction_high == 0.50);
    CHECK(c.model.depth == 3);
    CHECK(c.model.input_size == 32);
    CHECK(c.weights.weights.size() == 1);
}

TEST_CASE("config violations are all reported with their paths") {
    const auto r = validate_config_text(
        R"({"tasks": {"weights": {"rotation": 0.5, "sharpness": 0.6}}, "model": {"input_size": 36},
            "data": {"crop_to": 36, "resize_to": 40}, "train": {"batch_size": 0}, "colour": 1})");
    CHECK_FALSE(r.ok());
    CHECK(has_issue(r, "tasks.weights"));
    CHECK(has_issue(r, "model.input_size"));
    CHECK(has_issue(r, "train"));
    CHECK(has_issue(r, "colour"));
    bool mentions_8 = false;
    for (const auto& i : r.issues)
        if (i.path == "model.input_size" && i.message.find('8') != std::string::npos) mentions_8 = true;
    CHECK(mentions_8);

    CHECK(has_issue(validate_config_text(R"({"model": {"input_size": 30, "depth": 3}})"), "model.input_size"));
    CHECK(has_issue(validate_config_text(R"({"data": {"image_dir": "/no/such/dir"}})"), "data.image_dir"));
    CHECK(has_issue(validate_config_text(R"({"tasks": {"list": ["rotation", "colour"]}})"), "tasks.list"));
    CHECK(has_issue(validate_config_text(R"({"loss": {"alpha": 1.2}})"), "loss.alpha"));
    CHECK(has_issue(validate_config_text(R"({"masks": {"fraction_bounds": [0.5, 0.3]}})"), "masks"));
    CHECK(has_issue(validate_config_text(R"({"seed": -1})"), "seed"));
    CHECK_FALSE(validate_config_text("{not json").ok());
}

TEST_CASE("task list without weights gets equal weights") {
    const auto r = validate_config_text(R"({"tasks": {"list": ["rotation", "saturation", "sharpness"]}})");
    REQUIRE(r.ok());
    for (const auto& [t, w] : r.config->weights.weights) CHECK(w == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("sweep grid layout") {
    const auto grid = sweep_grid();
    REQUIRE(grid.size() == 22);
    std::map<std::size_t, int> by_arity;
    for (const auto& c : grid) by_arity[c.arity()]++;
    CHECK(by_arity[1] == 3);
    CHECK(by_arity[2] == 15);
    CHECK(by_arity[3] == 4);

    const std::vector<std::vector<double>> pair_rows = {{0.9, 0.1}, {0.7, 0.3}, {0.5, 0.5}, {0.3, 0.7}, {0.1, 0.9}};
    for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t r = 0; r < 5; ++r) CHECK(grid[3 + p * 5 + r].weights == pair_rows[r]);
    CHECK(grid[3].combination() == "rotation-sharpness");
    CHECK(grid[8].combination() == "rotation-saturation");
    CHECK(grid[13].combination() == "saturation-sharpness");
    const std::vector<std::vector<double>> triple_rows = {
        {0.6, 0.2, 0.2}, {0.2, 0.2, 0.6}, {0.2, 0.6, 0.2}, {0.3, 0.4, 0.3}};
    for (std::size_t r = 0; r < 4; ++r) {
        CHECK(grid[18 + r].weights == triple_rows[r]);
        CHECK(grid[18 + r].combination() == "saturation-sharpness-rotation");
    }
    std::set<std::string> ids;
    std::set<std::uint64_t> seeds;
    for (const auto& c : grid) {
        ids.insert(c.id());
        seeds.insert(cell_seed(0, c));
        CHECK_NOTHROW(c.task_weights().validate());
    }
    CHECK(ids.size() == 22);
    CHECK(seeds.size() == 22);
}

TEST_CASE("sweep summary statistics") {
    SweepReport rep;
    const auto grid = sweep_grid();
    rep.rows.push_back({grid[0], 0.5, 10});
    rep.rows.push_back({grid[1], 0.7, 12});
    rep.rows.push_back({grid[3], 0.9, 14});
    const auto s = rep.summary();
    REQUIRE(s.size() == 2 + 3);
    CHECK(s[0].scope == "arity");
    CHECK(s[0].key == "1");
    CHECK(s[0].mean_ssim == Catch::Approx(0.6));
    // Sample standard deviation of {0.5, 0.7}.
    CHECK(s[0].std_ssim == Catch::Approx(std::sqrt(0.02)));
    CHECK(s[1].key == "2");
    CHECK(s[1].std_ssim == 0.0);
    const auto csv = rep.to_csv();
    CHECK(csv.rfind("arity,combination,w1,w2,w3,ssim,psnr\n", 0) == 0);
    CHECK(csv.find("1,sharpness,1,,,0.5,10\n") != std::string::npos);
    CHECK(rep.summary_csv().find("arity,1,2,0.6,") != std::string::npos);
}

TEST_CASE("sweep cells are independent of worker count") {
    auto cfg = *validate_config_text(tiny_config(temp_dir("sweep_threads"))).config;
    const auto data = load_datasets(cfg);
    const std::vector<SweepCell> cells = {sweep_grid()[2], sweep_grid()[7], sweep_grid()[21]};
    const auto one = run_sweep(cfg, data, cells, 1);
    const auto two = run_sweep(cfg, data, cells, 2);
    CHECK(one.to_csv() == two.to_csv());
    // A cell run alone reproduces its row.
    const auto alone = run_sweep(cfg, data, {cells[1]}, 1);
    CHECK(alone.rows[0].ssim == one.rows[1].ssim);
}

TEST_CASE("unknown subcommand is a usage error") {
    const auto r = run_cli({"frobnicate"});
    CHECK(r.code == 2);
    CHECK(r.err.find("unknown subcommand") != std::string::npos);
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"pretext"}).code == 2);
    CHECK(run_cli({"--help"}).code == 0);
#ifdef WSSL_CLI_PATH
    const std::string cmd = std::string(WSSL_CLI_PATH) + " frobnicate 2>/dev/null";
    const int status = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(status) == 2);
#endif
}

TEST_CASE("config and I/O failures exit with 1") {
    const auto dir = temp_dir("cli_errors");
    const auto bad = write_config(dir, R"({"tasks": {"weights": {"rotation": 0.5, "sharpness": 0.6}}})");
    auto r = run_cli({"pretext", "--config", bad.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("tasks.weights") != std::string::npos);
    r = run_cli({"pretext", "--config", (dir / "missing.json").string()});
    CHECK(r.code == 1);
    r = run_cli({"inpaint", (dir / "none.ckpt").string(), (dir / "none.ppm").string(), (dir / "none.pgm").string()});
    CHECK(r.code == 1);
    r = run_cli({"eval", (dir / "nothing_here").string()});
    CHECK(r.code == 1);
}

TEST_CASE("pipeline subcommands produce byte-identical outputs") {
    const auto base = temp_dir("pipeline");
    std::map<std::string, std::string> first;
    for (int round = 0; round < 2; ++round) {
        const auto dir = base / ("run" + std::to_string(round));
        fs::create_directories(dir);
        const auto cfg = write_config(dir, tiny_config(dir / "out"));
        REQUIRE(run_cli({"make-masks", "--config", cfg.string(), "--count", "3"}).code == 0);
        REQUIRE(run_cli({"pretext", "--config", cfg.string()}).code == 0);
        const auto ft = run_cli({"finetune", "--config", cfg.string()});
        REQUIRE(ft.code == 0);

        // One image with a stroke mask, inpainted from the CLI.
        Rng rng(4);
        const Image img = wssl::testing::random_image(32, 32, rng);
        write_ppm(dir / "face.ppm", img);
        fs::copy_file(dir / "out" / "masks" / "mask_0000.pgm", dir / "face.pgm");
        const auto ip = run_cli({"inpaint", (dir / "out" / "inpaint.ckpt").string(), (dir / "face.ppm").string(),
                                 (dir / "face.pgm").string()});
        REQUIRE(ip.code == 0);
        CHECK(std::count(ip.out.begin(), ip.out.end(), '\t') == 1);

        std::map<std::string, std::string> files;
        for (const auto& name : {"out/pretext.ckpt", "out/pretext_log.csv", "out/inpaint.ckpt", "out/finetune_log.csv",
                                 "out/masks/mask_0002.pgm", "face.masked.ppm", "face.recon.ppm"}) {
            REQUIRE(fs::exists(dir / name));
            files[name] = slurp(dir / name);
        }
        files["stdout.inpaint"] = ip.out;
        if (round == 0) first = files;
        else CHECK(files == first);
    }
}

TEST_CASE("inpaint with an empty mask scores at least as well as a masked variant") {
    const auto dir = temp_dir("inpaint_empty");
    const auto cfg = write_config(dir, tiny_config(dir / "out"));
    REQUIRE(run_cli({"pretext", "--config", cfg.string()}).code == 0);
    REQUIRE(run_cli({"finetune", "--config", cfg.string()}).code == 0);
    Rng rng(6);
    write_ppm(dir / "img.ppm", wssl::testing::random_image(32, 32, rng));
    write_pgm(dir / "none.pgm", Mask(32, 32, false));
    write_pgm(dir / "some.pgm", generate_mask(32, 32, MaskSpec{}, rng));
    const auto ckpt = (dir / "out" / "inpaint.ckpt").string();
    const auto clean = run_cli({"inpaint", ckpt, (dir / "img.ppm").string(), (dir / "none.pgm").string(), "--out-prefix",
                                (dir / "clean").string()});
    const auto masked = run_cli({"inpaint", ckpt, (dir / "img.ppm").string(), (dir / "some.pgm").string(),
                                 "--out-prefix", (dir / "masked").string()});
    REQUIRE(clean.code == 0);
    REQUIRE(masked.code == 0);
    const double s_clean = std::stod(clean.out.substr(0, clean.out.find('\t')));
    const double s_masked = std::stod(masked.out.substr(0, masked.out.find('\t')));
    CHECK(s_clean >= s_masked);
    CHECK(clean.out.find("inf") != std::string::npos);
}

TEST_CASE("eval with the image as its own reconstruction") {
    const auto dir = temp_dir("eval_self");
    Rng rng(7);
    const Image img = wssl::testing::random_image(32, 32, rng);
    write_ppm(dir / "a.ppm", img);
    write_ppm(dir / "a.recon.ppm", img);
    const auto r = run_cli({"eval", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out == "method\tssim\tpsnr\nWSSL\t1.0000\tinf\n");
}

TEST_CASE("sweep subcommand writes both CSV files") {
    const auto dir = temp_dir("sweep_cli");
    const auto cfg = write_config(dir, tiny_config(dir / "out"));
    const auto r = run_cli({"sweep", "--config", cfg.string(), "--arity", "1"});
    REQUIRE(r.code == 0);
    const auto csv = slurp(dir / "out" / "sweep.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3);
    CHECK(r.out == slurp(dir / "out" / "sweep_summary.csv"));
    CHECK(r.out.find("arity,1,3,") != std::string::npos);
}
