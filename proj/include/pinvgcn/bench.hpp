#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "pinvgcn/dataset.hpp"
#include "pinvgcn/errors.hpp"
#include "pinvgcn/filters.hpp"
#include "pinvgcn/model.hpp"
#include "pinvgcn/testing.hpp"
#include "pinvgcn/types.hpp"

namespace pinvgcn {

using json = nlohmann::json;

/// Everything one experiment needs; populated from CLI flags and/or a
/// sectioned key-value config file.
struct ExperimentConfig {
    // [data]
    std::string data_path;
    std::string kind; // "cloud" | "hypergraph" | "graph"
    Real sigma = 10.0;
    std::string schema_path;
    std::vector<std::string> class_subset; // raw label values, empty = all
    std::string delimiter = ",";
    bool has_header = true;

    // [run]
    Index rank = 10;
    SplitSpec split; // per_class, master seed, run_count
    TrainConfig train;
    EigSolveConfig eig; // eig.tol == 0 -> kind default (1e-3 cloud, 1e-8 graph)
    std::string basis_cache;
    std::string out_path;
    std::string checkpoint_dir;
    int threads = 1;
    bool record_timing = true;
    bool force_recompute = false;
    /// Pad rank-deficient hypergraph bases with eigenvalue-1 eigenvectors
    /// (the benchmark semantics); strict mode errors instead.
    bool complete_rank = true;
};

inline Real default_eig_tol(const std::string& kind) {
    return kind == "cloud" ? 1e-3 : 1e-8;
}

inline Dataset load_dataset(const ExperimentConfig& cfg) {
    require(!cfg.data_path.empty(), "config: data path missing");
    if (cfg.kind == "cloud") return load_point_cloud(cfg.data_path, cfg.sigma);
    if (cfg.kind == "hypergraph") {
        require(!cfg.schema_path.empty(), "config: hypergraph datasets need a schema");
        require(cfg.delimiter.size() == 1, "config: delimiter must be one character");
        return load_categorical(cfg.data_path, cfg.schema_path, cfg.class_subset,
                                cfg.delimiter[0], cfg.has_header);
    }
    if (cfg.kind == "graph")
        throw Error("edge-list graphs carry no features or labels; use the `eigs` "
                    "or `oracle-check` commands for them");
    throw Error("config: unknown dataset kind `" + cfg.kind + "`");
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace detail

struct TimedBasis {
    SpectralBasis basis;
    double seconds = 0;
    bool from_cache = false;
};

inline SpectralBasis truncate_basis(SpectralBasis b, Index r) {
    require(r >= 1 && r <= b.r, "truncate_basis: invalid rank");
    b.lambda.conservativeResize(r);
    b.U.conservativeResize(Eigen::NoChange, r);
    b.r = r;
    return b;
}

/// Loads the cached basis when present and wide enough (truncating a wider
/// cache is exact), otherwise computes it: Gram route for hypergraphs,
/// deflated Krylov route for clouds and sparse graphs.
inline TimedBasis acquire_basis(const ExperimentConfig& cfg, const Dataset& ds) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!cfg.basis_cache.empty() && !cfg.force_recompute &&
        std::filesystem::exists(cfg.basis_cache)) {
        SpectralBasis b = load_spectral_basis(cfg.basis_cache);
        if (b.n == ds.n() && b.r >= cfg.rank) {
            TimedBasis out{b.r == cfg.rank ? std::move(b)
                                           : truncate_basis(std::move(b), cfg.rank),
                           detail::seconds_since(t0), true};
            return out;
        }
    }

    TimedBasis out;
    if (ds.is_hypergraph()) {
        out.basis = hypergraph_spectral_basis(ds.hypergraph(), cfg.rank, cfg.complete_rank);
    } else {
        EigSolveConfig ecfg = cfg.eig;
        if (ecfg.tol <= 0) ecfg.tol = default_eig_tol(cfg.kind);
        LaplacianOperator op =
            ds.is_cloud() ? LaplacianOperator(ds.cloud()) : LaplacianOperator(ds.graph());
        out.basis = spectral_basis(op, cfg.rank, ecfg);
    }
    out.seconds = detail::seconds_since(t0);
    if (!cfg.basis_cache.empty()) save_spectral_basis(cfg.basis_cache, out.basis);
    return out;
}

/// Per-run record. Wall times split into setup (split sampling), training
/// and evaluation; basis and first-layer precompute times are shared across
/// runs and reported in the summary.
struct RunResult {
    int run = 0;
    std::uint64_t seed = 0;
    Real accuracy = 0;
    double setup_s = 0;
    double train_s = 0;
    double eval_s = 0;
    std::array<Real, 3> mu{};
};

struct RunOutcome {
    int run = 0;
    bool ok = false;
    RunResult result;
    std::string error;
};

/// One independent run: a fresh generator seeded with (master seed + run)
/// drives split sampling, weight initialization and dropout, in that order.
inline RunOutcome execute_run(const FilterBank& bank, const FirstLayerCache& cache,
                              const Dataset& ds, const ExperimentConfig& cfg, int run) {
    RunOutcome out;
    out.run = run;
    try {
        RunResult r;
        r.run = run;
        r.seed = cfg.split.seed + static_cast<std::uint64_t>(run);
        Rng rng(r.seed);

        auto t0 = std::chrono::steady_clock::now();
        Split split = sample_split(ds.labels, ds.classes, cfg.split.per_class, rng);
        r.setup_s = detail::seconds_since(t0);

        TrainConfig tc = cfg.train;
        tc.seed = r.seed;
        t0 = std::chrono::steady_clock::now();
        TrainResult trained = train(bank, cache, ds.features.cols(), split, tc, rng);
        r.train_s = detail::seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        r.accuracy = evaluate(bank, cache, trained.params, split);
        r.eval_s = detail::seconds_since(t0);

        r.mu = weight_magnitude_analysis(trained.params);
        if (!cfg.record_timing) r.setup_s = r.train_s = r.eval_s = 0;
        if (!cfg.checkpoint_dir.empty())
            save_checkpoint(cfg.checkpoint_dir + "/run" + std::to_string(run) + ".ckpt",
                            trained.params);
        out.ok = true;
        out.result = r;
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

/// All runs of one experiment, optionally spread over worker threads. Each
/// run has isolated RNG state, so results are independent of co-scheduling
/// and ordered by run index.
inline std::vector<RunOutcome> execute_runs(const FilterBank& bank,
                                            const FirstLayerCache& cache, const Dataset& ds,
                                            const ExperimentConfig& cfg) {
    const int runs = static_cast<int>(cfg.split.run_count);
    std::vector<RunOutcome> outcomes(static_cast<std::size_t>(runs));
    const int workers = std::max(1, std::min(cfg.threads, runs));
    if (workers == 1) {
        for (int j = 0; j < runs; ++j) outcomes[static_cast<std::size_t>(j)] =
            execute_run(bank, cache, ds, cfg, j);
        return outcomes;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int j = next.fetch_add(1); j < runs; j = next.fetch_add(1))
                outcomes[static_cast<std::size_t>(j)] = execute_run(bank, cache, ds, cfg, j);
        });
    for (auto& t : pool) t.join();
    return outcomes;
}

/// Arithmetic mean and sample (n-1) standard deviation, accumulated in run
/// order so a recomputation from the records reproduces the summary exactly.
struct Aggregate {
    int runs = 0;
    int failures = 0;
    Real accuracy_mean = 0;
    Real accuracy_sd = 0;
    std::array<Real, 3> mu_mean{};
    double setup_mean_s = 0;
    double train_mean_s = 0;
    double eval_mean_s = 0;
};

inline Aggregate aggregate_outcomes(const std::vector<RunOutcome>& outcomes) {
    Aggregate a;
    std::vector<Real> accs;
    for (const auto& o : outcomes) {
        if (!o.ok) {
            ++a.failures;
            continue;
        }
        ++a.runs;
        accs.push_back(o.result.accuracy);
        a.accuracy_mean += o.result.accuracy;
        for (int k = 0; k < 3; ++k) a.mu_mean[static_cast<std::size_t>(k)] += o.result.mu[static_cast<std::size_t>(k)];
        a.setup_mean_s += o.result.setup_s;
        a.train_mean_s += o.result.train_s;
        a.eval_mean_s += o.result.eval_s;
    }
    if (a.runs == 0) return a;
    const Real n = static_cast<Real>(a.runs);
    a.accuracy_mean /= n;
    for (auto& m : a.mu_mean) m /= n;
    a.setup_mean_s /= n;
    a.train_mean_s /= n;
    a.eval_mean_s /= n;
    if (a.runs > 1) {
        Real ss = 0;
        for (Real x : accs) ss += (x - a.accuracy_mean) * (x - a.accuracy_mean);
        a.accuracy_sd = std::sqrt(ss / (n - 1));
    }
    return a;
}

inline json run_record(const RunResult& r) {
    return json{{"type", "run"},     {"run", r.run},         {"seed", r.seed},
                {"accuracy", r.accuracy}, {"setup_s", r.setup_s}, {"train_s", r.train_s},
                {"eval_s", r.eval_s},     {"mu", r.mu}};
}

inline json summary_record(const Aggregate& a, const ExperimentConfig& cfg, Index n,
                           int classes, double basis_s, double precompute_s,
                           bool basis_from_cache) {
    return json{{"type", "summary"},
                {"runs", a.runs},
                {"failures", a.failures},
                {"partial", a.failures > 0},
                {"accuracy_mean", a.accuracy_mean},
                {"accuracy_sd", a.accuracy_sd},
                {"mu_mean", a.mu_mean},
                {"setup_mean_s", a.setup_mean_s},
                {"train_mean_s", a.train_mean_s},
                {"eval_mean_s", a.eval_mean_s},
                {"basis_s", basis_s},
                {"precompute_s", precompute_s},
                {"basis_from_cache", basis_from_cache},
                {"rank", cfg.rank},
                {"per_class", cfg.split.per_class},
                {"seed", cfg.split.seed},
                {"n", n},
                {"classes", classes}};
}

struct TrainCommandResult {
    std::vector<RunOutcome> outcomes;
    Aggregate aggregate;
    double basis_s = 0;
    double precompute_s = 0;
    bool basis_from_cache = false;
};

/// Shared by `train` and `sweep-rank`: basis, first-layer precompute, then
/// all runs.
inline TrainCommandResult run_training_experiment(const ExperimentConfig& cfg,
                                                  const Dataset& ds) {
    if (ds.is_hypergraph()) {
        const Index max_rank = ds.hypergraph().edge_count() - 1;
        if (cfg.rank > max_rank)
            throw RankTooLargeError("rank " + std::to_string(cfg.rank) +
                                    " exceeds |E| - 1 = " + std::to_string(max_rank));
    }
    TrainCommandResult out;
    TimedBasis tb = acquire_basis(cfg, ds);
    out.basis_s = cfg.record_timing ? tb.seconds : 0;
    out.basis_from_cache = tb.from_cache;

    const auto t0 = std::chrono::steady_clock::now();
    FilterBank bank(std::move(tb.basis));
    FirstLayerCache cache(bank, ds.features);
    out.precompute_s = cfg.record_timing ? detail::seconds_since(t0) : 0;

    out.outcomes = execute_runs(bank, cache, ds, cfg);
    out.aggregate = aggregate_outcomes(out.outcomes);
    return out;
}

inline void write_results_file(const std::string& path, const TrainCommandResult& res,
                               const ExperimentConfig& cfg, const Dataset& ds) {
    std::ofstream out(path);
    require(static_cast<bool>(out), "cannot open results file for writing: " + path);
    for (const auto& o : res.outcomes) {
        if (o.ok)
            out << run_record(o.result).dump() << '\n';
        else
            out << json{{"type", "run_error"}, {"run", o.run}, {"error", o.error}}.dump()
                << '\n';
    }
    out << summary_record(res.aggregate, cfg, ds.n(), ds.classes, res.basis_s,
                          res.precompute_s, res.basis_from_cache)
               .dump()
        << '\n';
}

// ---------------------------------------------------------------------------
// commands (return process exit codes)
// ---------------------------------------------------------------------------

inline int cmd_eigs(const ExperimentConfig& cfg, std::ostream& log) {
    TimedBasis tb;
    if (cfg.kind == "graph") {
        const auto t0 = std::chrono::steady_clock::now();
        if (!cfg.basis_cache.empty() && !cfg.force_recompute &&
            std::filesystem::exists(cfg.basis_cache)) {
            SpectralBasis b = load_spectral_basis(cfg.basis_cache);
            if (b.r >= cfg.rank) {
                tb = TimedBasis{b.r == cfg.rank ? std::move(b)
                                                : truncate_basis(std::move(b), cfg.rank),
                                detail::seconds_since(t0), true};
            }
        }
        if (tb.basis.n == 0) {
            LaplacianOperator op(load_edge_list(cfg.data_path));
            EigSolveConfig ecfg = cfg.eig;
            if (ecfg.tol <= 0) ecfg.tol = default_eig_tol(cfg.kind);
            tb.basis = spectral_basis(op, cfg.rank, ecfg);
            tb.seconds = detail::seconds_since(t0);
            if (!cfg.basis_cache.empty()) save_spectral_basis(cfg.basis_cache, tb.basis);
        }
    } else {
        Dataset ds = load_dataset(cfg);
        tb = acquire_basis(cfg, ds);
    }

    const SpectralBasis& b = tb.basis;
    log << (tb.from_cache ? "loaded cached basis" : "computed basis") << ": n = " << b.n
        << ", r = " << b.r << ", tol = " << b.tol << '\n';
    log << std::setprecision(6) << "eigengap lambda_1 = " << b.eigengap()
        << ", lambda_r = " << b.lambda(b.r - 1) << '\n';
    if (cfg.record_timing) log << "setup: " << tb.seconds << " s\n";
    return 0;
}

inline int cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
    Dataset ds = load_dataset(cfg);
    TrainCommandResult res = run_training_experiment(cfg, ds);
    if (!cfg.out_path.empty()) write_results_file(cfg.out_path, res, cfg, ds);

    const Aggregate& a = res.aggregate;
    log << "runs: " << a.runs << " ok, " << a.failures << " failed\n";
    if (a.runs > 0) {
        log << std::setprecision(6) << "accuracy: " << a.accuracy_mean << " +- "
            << a.accuracy_sd << '\n';
        log << "mu: " << a.mu_mean[0] << ' ' << a.mu_mean[1] << ' ' << a.mu_mean[2] << '\n';
        if (cfg.record_timing)
            log << "timing: basis " << res.basis_s << " s, precompute " << res.precompute_s
                << " s, mean train " << a.train_mean_s << " s/run\n";
    }
    return a.runs == 0 ? 1 : 0;
}

inline int cmd_sweep_rank(const ExperimentConfig& cfg, const std::vector<Index>& ranks,
                          std::ostream& log) {
    require(!ranks.empty(), "sweep: empty rank list");
    std::vector<Index> sorted = ranks;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
            "sweep: duplicate ranks");

    Dataset ds = load_dataset(cfg);
    if (ds.is_hypergraph()) {
        const Index max_rank = ds.hypergraph().edge_count() - 1;
        for (Index r : sorted)
            if (r > max_rank)
                throw RankTooLargeError("sweep: rank " + std::to_string(r) +
                                        " exceeds |E| - 1 = " + std::to_string(max_rank));
    }
    for (Index r : sorted)
        require(r >= 1 && r + 1 <= ds.n(), "sweep: rank out of range for dataset");

    std::ofstream csv;
    std::ostream* out = &log;
    if (!cfg.out_path.empty()) {
        csv.open(cfg.out_path);
        require(static_cast<bool>(csv), "cannot open sweep csv for writing: " + cfg.out_path);
        out = &csv;
    }
    *out << "rank,miscls_mean,miscls_sd,setup_s,train_s\n";
    *out << std::setprecision(std::numeric_limits<Real>::max_digits10);

    for (Index r : sorted) {
        ExperimentConfig rc = cfg;
        rc.rank = r;
        rc.basis_cache.clear(); // per-rank setup cost must be honest
        rc.out_path.clear();
        TrainCommandResult res = run_training_experiment(rc, ds);
        require(res.aggregate.runs > 0,
                "sweep: all runs failed at rank " + std::to_string(r));
        const double setup =
            res.basis_s + res.precompute_s + res.aggregate.setup_mean_s;
        *out << r << ',' << 1.0 - res.aggregate.accuracy_mean << ','
             << res.aggregate.accuracy_sd << ',' << setup << ','
             << res.aggregate.train_mean_s << '\n';
        log << "rank " << r << ": miscls " << 1.0 - res.aggregate.accuracy_mean << '\n';
    }
    return 0;
}

/// Averages the per-part weight magnitudes over result files (JSONL with mu
/// per run) and/or checkpoint files.
inline int cmd_analyze_weights(const std::vector<std::string>& paths, std::ostream& log) {
    require(!paths.empty(), "analyze-weights: no inputs");
    std::array<Real, 3> total{};
    long count = 0;
    for (const auto& path : paths) {
        require(std::filesystem::exists(path), "analyze-weights: missing input: " + path);
        std::array<Real, 3> local{};
        long local_count = 0;
        if (path.size() >= 5 && path.substr(path.size() - 5) == ".ckpt") {
            const auto mu = weight_magnitude_analysis(load_checkpoint(path));
            for (int k = 0; k < 3; ++k) local[static_cast<std::size_t>(k)] = mu[static_cast<std::size_t>(k)];
            local_count = 1;
        } else {
            std::ifstream in(path);
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                const json rec = json::parse(line);
                if (rec.value("type", "") != "run") continue;
                const auto mu = rec.at("mu").get<std::array<Real, 3>>();
                for (int k = 0; k < 3; ++k) local[static_cast<std::size_t>(k)] += mu[static_cast<std::size_t>(k)];
                ++local_count;
            }
            require(local_count > 0, "analyze-weights: no run records in " + path);
            for (auto& v : local) v /= static_cast<Real>(local_count);
        }
        log << std::setprecision(6) << path << ": mu = " << local[0] << ' ' << local[1]
            << ' ' << local[2] << " (" << local_count << " runs)\n";
        for (int k = 0; k < 3; ++k) total[static_cast<std::size_t>(k)] += local[static_cast<std::size_t>(k)];
        ++count;
    }
    log << std::setprecision(6) << "average: mu = " << total[0] / static_cast<Real>(count)
        << ' ' << total[1] / static_cast<Real>(count) << ' '
        << total[2] / static_cast<Real>(count) << '\n';
    return 0;
}

/// Dense-oracle equivalence suites at a given scale. Suites that need more
/// room than `scale` allows are skipped with a notice.
inline int cmd_oracle_check(Index scale, std::uint64_t seed, bool inject_perturbation,
                            std::ostream& log) {
    const Real perturb = inject_perturbation ? 1e-3 : 0.0;
    int failures = 0;
    int ran = 0;
    auto report = [&](const std::string& name, bool pass, const std::string& detail) {
        log << (pass ? "[PASS] " : "[FAIL] ") << name << ": " << detail << '\n';
        if (!pass) ++failures;
        ++ran;
    };

    if (scale >= 30) {
        const auto st = testing::eigensolver_oracle_stats(std::min<Index>(scale, 200), 8,
                                                          seed, perturb);
        std::ostringstream d;
        d << st.instances << " graphs, max |d lambda| = " << st.max_eigenvalue_err
          << ", max angle = " << st.max_subspace_err;
        report("eigensolver-vs-dense",
               st.max_eigenvalue_err <= 1e-8 && st.max_subspace_err <= 1e-6 &&
                   st.max_u0_overlap <= 1e-8,
               d.str());
    } else {
        log << "[SKIP] eigensolver-vs-dense: needs scale >= 30\n";
    }

    if (scale >= 45) {
        const auto st = testing::hypergraph_oracle_stats(std::min<Index>(scale, 300), 12, 8,
                                                         seed + 1, perturb);
        std::ostringstream d;
        d << st.instances << " hypergraphs, wrong unit-eigenvalue counts = "
          << st.wrong_unit_counts << ", max |d lambda| = " << st.max_eigenvalue_err;
        report("hypergraph-spectrum",
               st.wrong_unit_counts == 0 && st.max_eigenvalue_err <= 1e-10 &&
                   st.max_u0_err <= 1e-10,
               d.str());
    } else {
        log << "[SKIP] hypergraph-spectrum: needs scale >= 45\n";
    }

    if (scale >= 30) {
        const auto st = testing::filter_oracle_stats(std::min<Index>(scale, 90), 6, seed + 2,
                                                     perturb);
        std::ostringstream d;
        d << st.instances << " instances, max conv err = " << st.max_conv_err
          << ", max feature-map err = " << st.max_feature_map_err
          << ", max pinv-norm err = " << st.max_pinv_norm_err;
        report("filter-factored-vs-dense",
               st.instances > 0 && st.max_conv_err <= 1e-10 &&
                   st.max_feature_map_err <= 1e-10 && st.max_pinv_norm_err <= 1e-8,
               d.str());
    } else {
        log << "[SKIP] filter-factored-vs-dense: needs scale >= 30\n";
    }

    if (scale >= 25) {
        const auto st =
            testing::gradient_fd_stats(std::min<Index>(scale, 50), 4, seed + 3, perturb);
        std::ostringstream d;
        d << st.instances << " instances, max rel err = " << st.max_rel_err;
        report("gradient-finite-difference", st.max_rel_err <= 1e-4, d.str());
    } else {
        log << "[SKIP] gradient-finite-difference: needs scale >= 25\n";
    }

    if (ran == 0) log << "all suites skipped at scale " << scale << '\n';
    return failures == 0 ? 0 : 1;
}

} // namespace pinvgcn
