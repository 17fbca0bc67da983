// Copyright (c) 2026, The WSSL Authors
// SPDX-License-Identifier: Apache-2.0
//
// Loss-weight sweep over single, paired and triple pretext task combinations.
// Each cell trains from scratch with a seed derived from the base seed and the
// cell id, so cells can run in any order or in parallel.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "wssl/config.hpp"
#include "wssl/format.hpp"
#include "wssl/train.hpp"

namespace wssl {

struct SweepCell {
    std::vector<PretextTask> tasks;
    std::vector<double> weights;

    std::size_t arity() const { return tasks.size(); }

    /// "rotation-sharpness" style name of the task combination.
    std::string combination() const {
        std::string s;
        for (auto t : tasks) {
            if (!s.empty()) s += '-';
            s += task_name(t);
        }
        return s;
    }

    std::string id() const {
        std::string s = combination() + "@";
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (i) s += ',';
            s += format_number(weights[i]);
        }
        return s;
    }

    TaskWeights task_weights() const {
        TaskWeights w;
        for (std::size_t i = 0; i < tasks.size(); ++i) w.weights[tasks[i]] = weights[i];
        return w;
    }
};

/// The evaluated grid: three single tasks, three pairs over five weight rows
/// and one triple over four weight rows.
inline std::vector<SweepCell> sweep_grid() {
    using T = PretextTask;
    std::vector<SweepCell> grid;
    for (auto t : {T::sharpness, T::saturation, T::rotation}) grid.push_back({{t}, {1.0}});
    const std::vector<std::vector<double>> pair_rows = {{0.9, 0.1}, {0.7, 0.3}, {0.5, 0.5}, {0.3, 0.7}, {0.1, 0.9}};
    const std::vector<std::vector<T>> pairs = {
        {T::rotation, T::sharpness}, {T::rotation, T::saturation}, {T::saturation, T::sharpness}};
    for (const auto& p : pairs)
        for (const auto& w : pair_rows) grid.push_back({p, w});
    const std::vector<std::vector<double>> triple_rows = {
        {0.6, 0.2, 0.2}, {0.2, 0.2, 0.6}, {0.2, 0.6, 0.2}, {0.3, 0.4, 0.3}};
    for (const auto& w : triple_rows) grid.push_back({{T::saturation, T::sharpness, T::rotation}, w});
    return grid;
}

inline std::uint64_t cell_seed(std::uint64_t base, const SweepCell& cell) {
    return derive_seed(base, hash_string(cell.id()));
}

struct SweepRow {
    SweepCell cell;
    double ssim = 0.0;
    double psnr = 0.0;
};

struct SweepGroup {
    std::string scope;  // "arity" or "combination"
    std::string key;
    std::size_t count = 0;
    double mean_ssim = 0.0;
    double std_ssim = 0.0;
};

struct SweepReport {
    std::vector<SweepRow> rows;

    std::string to_csv() const {
        std::ostringstream os;
        os << "arity,combination,w1,w2,w3,ssim,psnr\n";
        for (const auto& r : rows) {
            os << r.cell.arity() << ',' << r.cell.combination();
            for (std::size_t i = 0; i < 3; ++i) os << ',' << (i < r.cell.weights.size() ? format_number(r.cell.weights[i]) : "");
            os << ',' << format_number(r.ssim) << ',' << format_number(r.psnr) << '\n';
        }
        return os.str();
    }

    /// Mean and sample standard deviation (n - 1) of SSIM per arity and per
    /// task combination, in first-appearance order.
    std::vector<SweepGroup> summary() const {
        std::vector<SweepGroup> out;
        auto collect = [&](const std::string& scope, auto key_of) {
            std::vector<std::string> order;
            std::map<std::string, std::vector<double>> values;
            for (const auto& r : rows) {
                auto k = key_of(r);
                if (!values.count(k)) order.push_back(k);
                values[k].push_back(r.ssim);
            }
            for (const auto& k : order) {
                const auto& v = values[k];
                double mean = 0.0;
                for (double x : v) mean += x;
                mean /= static_cast<double>(v.size());
                double ss = 0.0;
                for (double x : v) ss += (x - mean) * (x - mean);
                const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
                out.push_back({scope, k, v.size(), mean, sd});
            }
        };
        collect("arity", [](const SweepRow& r) { return std::to_string(r.cell.arity()); });
        collect("combination", [](const SweepRow& r) { return r.cell.combination(); });
        return out;
    }

    std::string summary_csv() const {
        std::ostringstream os;
        os << "scope,group,count,mean_ssim,std_ssim\n";
        for (const auto& g : summary())
            os << g.scope << ',' << g.key << ',' << g.count << ',' << format_number(g.mean_ssim) << ','
               << format_number(g.std_ssim) << '\n';
        return os.str();
    }
};

/// Pretext + downstream training for one cell, scored on the held-out set.
inline SweepRow run_sweep_cell(const RunConfig& cfg, const Datasets& data, const SweepCell& cell) {
    RunConfig c = cfg;
    c.seed = cell_seed(cfg.seed, cell);
    c.weights = cell.task_weights();
    const auto h = c.hyper();
    const auto opts = c.data_options();
    auto pre = train_pretext(data.train, c.weights, c.model, h, opts);
    // Held-out masks depend on the base seed only, so every cell is scored on
    // the same pairs.
    const auto holdout = make_holdout(data.holdout, c.masks, opts, cfg.seed);
    auto down = train_downstream(pre.network, data.train, holdout, c.masks, c.model, h, c.loss, opts, c.mask_fill);
    const auto scores = evaluate_inpainting(down.network, holdout, c.loss.ssim, c.mask_fill);
    return {cell, scores.ssim, scores.psnr};
}

/// Worker count: WSSL_THREADS if set to a positive integer, else 1.
inline std::size_t sweep_threads() {
    if (const char* env = std::getenv("WSSL_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return 1;
}

using SweepProgress = std::function<void(const SweepRow&)>;

/// Runs `cells` (default: the full grid) with up to `threads` workers. Rows
/// come back in grid order regardless of the worker count.
inline SweepReport run_sweep(const RunConfig& cfg, const Datasets& data, std::vector<SweepCell> cells = sweep_grid(),
                             std::size_t threads = 1, const SweepProgress& progress = {}) {
    if (data.holdout.empty()) throw ArgumentError("sweep needs a non-empty held-out set");
    SweepReport report;
    report.rows.resize(cells.size());
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                auto row = run_sweep_cell(cfg, data, cells[i]);
                std::lock_guard lock(mu);
                report.rows[i] = row;
                if (progress) progress(row);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                next = cells.size();
            }
        }
    };
    threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(cells.size(), 1));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return report;
}

} // namespace wssl
