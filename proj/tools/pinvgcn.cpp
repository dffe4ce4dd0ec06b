// Command-line experiment runner: eigensolve caching, multi-run training
// with statistics, rank sweeps, weight analysis and oracle checks.

#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pinvgcn/bench.hpp"

namespace {

using pinvgcn::ExperimentConfig;
using pinvgcn::Index;

// Config files are flat `key=value` text with one [section] per module;
// section keys map onto the dotted option names below. Values given on the
// command line override the file (options take the last occurrence).
std::vector<std::string> config_to_args(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::FileError("could not open config file: " + path);
    std::vector<std::string> args;
    std::string line, section;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    };
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw CLI::FileError(path + ":" + std::to_string(line_no) + ": bad section");
            section = trim(line.substr(1, line.size() - 2));
            if (!section.empty()) section += '.';
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw CLI::FileError(path + ":" + std::to_string(line_no) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        args.push_back("--" + section + key + "=" + value);
    }
    return args;
}

/// Expands `--config FILE` in place, inserting the file's options right
/// after it so explicit command-line values still win.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    for (std::size_t i = 0; i < args.size(); ++i) {
        std::string path;
        if (args[i] == "--config" && i + 1 < args.size())
            path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            path = args[i].substr(9);
        if (path.empty()) continue;
        const auto extra = config_to_args(path);
        const auto at = args.begin() + static_cast<std::ptrdiff_t>(i) +
                        (args[i] == "--config" ? 2 : 1);
        args.insert(at, extra.begin(), extra.end());
        break;
    }
    return args;
}

void add_data_options(CLI::App* cmd, ExperimentConfig& cfg, bool& no_header) {
    cmd->add_option("--data,--data.path", cfg.data_path, "dataset file")->required();
    cmd->add_option("--type,--data.type", cfg.kind,
                    "dataset kind: cloud | hypergraph | graph")
        ->check(CLI::IsMember({"cloud", "hypergraph", "graph"}))
        ->required();
    cmd->add_option("--sigma,--data.sigma", cfg.sigma, "Gaussian localization parameter");
    cmd->add_option("--schema,--data.schema", cfg.schema_path,
                    "column schema for categorical tables");
    cmd->add_option("--classes,--data.classes", cfg.class_subset,
                    "restrict to these raw label values")
        ->delimiter(',');
    cmd->add_option("--delimiter,--data.delimiter", cfg.delimiter, "table cell delimiter");
    cmd->add_option("--data.header", cfg.has_header, "table file has a header row");
    cmd->add_flag("--no-header", no_header, "shorthand for --data.header=false");
}

void add_eig_options(CLI::App* cmd, ExperimentConfig& cfg) {
    cmd->add_option("--tol,--eig.tol", cfg.eig.tol,
                    "eigensolver residual tolerance (0 = kind default)");
    cmd->add_option("--eig.max-subspace", cfg.eig.max_subspace,
                    "Krylov subspace dimension (0 = max(2r+10, 40))");
    cmd->add_option("--eig.max-restarts", cfg.eig.max_restarts, "restart limit");
}

struct TrainFlags {
    bool no_timing = false;
    bool no_high_pass = false;
    bool strict_rank = false;
};

void add_train_options(CLI::App* cmd, ExperimentConfig& cfg, TrainFlags& flags) {
    cmd->add_option("--runs", cfg.split.run_count, "independent runs");
    cmd->add_option("--per-class", cfg.split.per_class, "training samples per class");
    cmd->add_option("--threads", cfg.threads, "worker threads across runs");
    cmd->add_option("--basis", cfg.basis_cache, "basis cache file (load or create)");
    cmd->add_option("--checkpoint-dir", cfg.checkpoint_dir,
                    "write one model checkpoint per run into this directory");
    cmd->add_flag("--no-timing", flags.no_timing,
                  "zero all timing fields (bit-reproducible output)");
    cmd->add_flag("--no-high-pass", flags.no_high_pass,
                  "tie the high-pass weights to the pseudoinverse part (gamma = beta)");
    cmd->add_flag("--strict-rank", flags.strict_rank,
                  "error on rank-deficient hypergraph incidence instead of padding "
                  "with eigenvalue-1 eigenvectors");
    cmd->add_option("--model.hidden", cfg.train.hidden, "hidden width");
    cmd->add_option("--model.lr", cfg.train.learning_rate, "Adam learning rate");
    cmd->add_option("--model.epochs", cfg.train.epochs, "training epochs");
    cmd->add_option("--model.dropout", cfg.train.dropout, "dropout rate between layers");
    cmd->add_option("--model.weight-decay", cfg.train.weight_decay,
                    "L2 decay on weight matrices");
    cmd->add_option("--model.beta1", cfg.train.adam_beta1, "Adam beta1");
    cmd->add_option("--model.beta2", cfg.train.adam_beta2, "Adam beta2");
    cmd->add_option("--model.eps", cfg.train.adam_eps, "Adam epsilon");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pseudoinverse spectral filters on graph and hypergraph Laplacians"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    ExperimentConfig cfg;
    TrainFlags flags;
    bool no_header = false;
    std::uint64_t seed = 0;
    std::string out_path, config_path;
    std::vector<Index> ranks;
    std::vector<std::string> analyze_paths;
    Index scale = 200;
    bool inject = false;

    auto add_config_option = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path,
                        "sectioned key=value config file; command-line flags override it");
    };

    auto* eigs = app.add_subcommand("eigs", "compute and cache a spectral basis");
    add_config_option(eigs);
    add_data_options(eigs, cfg, no_header);
    add_eig_options(eigs, cfg);
    eigs->add_option("--rank", cfg.rank, "number of retained eigenpairs")->required();
    eigs->add_option("--seed", seed, "eigensolver start-vector seed");
    eigs->add_option("--out", out_path, "basis cache path")->required();
    eigs->add_flag("--force", cfg.force_recompute, "recompute even if the cache exists");
    eigs->add_flag("--strict-rank", flags.strict_rank,
                   "error on rank-deficient hypergraph incidence instead of padding "
                   "with eigenvalue-1 eigenvectors");
    double alpha = 1.0, beta = 1.0, gamma = 1.0;
    std::string response_csv;
    eigs->add_option("--response-csv", response_csv,
                     "also export the filter response curve to this CSV");
    eigs->add_option("--alpha", alpha, "zero-impulse coefficient for --response-csv");
    eigs->add_option("--beta", beta, "pseudoinverse coefficient for --response-csv");
    eigs->add_option("--gamma", gamma, "high-pass coefficient for --response-csv");

    auto* train = app.add_subcommand("train", "run the benchmark protocol");
    add_config_option(train);
    add_data_options(train, cfg, no_header);
    add_eig_options(train, cfg);
    add_train_options(train, cfg, flags);
    train->add_option("--rank", cfg.rank, "number of retained eigenpairs")->required();
    train->add_option("--seed", seed, "master seed (run j uses seed + j)");
    train->add_option("--out", out_path, "results file (line-delimited records)");

    auto* sweep = app.add_subcommand("sweep-rank", "one training experiment per rank");
    add_config_option(sweep);
    add_data_options(sweep, cfg, no_header);
    add_eig_options(sweep, cfg);
    add_train_options(sweep, cfg, flags);
    sweep->add_option("--ranks", ranks, "ranks to sweep")->required()->delimiter(',');
    sweep->add_option("--seed", seed, "master seed, shared across ranks");
    sweep->add_option("--out", out_path, "sweep CSV path");

    auto* analyze =
        app.add_subcommand("analyze-weights", "average weight magnitudes per filter part");
    analyze->add_option("inputs", analyze_paths, "results files (.jsonl) or checkpoints (.ckpt)")
        ->required();

    auto* oracle = app.add_subcommand("oracle-check", "dense-oracle equivalence suites");
    oracle->add_option("--scale", scale, "largest instance size");
    oracle->add_option("--seed", seed, "suite RNG seed");
    oracle->add_flag("--inject-perturbation", inject,
                     "self-test: perturb one comparison and expect failure");

    try {
        auto args = expand_config(argc, argv);
        std::reverse(args.begin(), args.end()); // CLI11 parses from the back
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (no_header) cfg.has_header = false;
    if (flags.no_timing) cfg.record_timing = false;
    if (flags.no_high_pass) cfg.train.tie_high_pass = true;
    if (flags.strict_rank) cfg.complete_rank = false;

    try {
        if (eigs->parsed()) {
            cfg.eig.seed = seed;
            cfg.basis_cache = out_path;
            const int rc = pinvgcn::cmd_eigs(cfg, std::cout);
            if (rc == 0 && !response_csv.empty()) {
                const auto basis = pinvgcn::load_spectral_basis(cfg.basis_cache);
                pinvgcn::write_filter_response_csv(response_csv, basis, alpha, beta, gamma);
                std::cout << "wrote filter response to " << response_csv << '\n';
            }
            return rc;
        }
        if (train->parsed()) {
            cfg.split.seed = seed;
            cfg.eig.seed = seed;
            cfg.out_path = out_path;
            return pinvgcn::cmd_train(cfg, std::cout);
        }
        if (sweep->parsed()) {
            cfg.split.seed = seed;
            cfg.eig.seed = seed;
            cfg.out_path = out_path;
            return pinvgcn::cmd_sweep_rank(cfg, ranks, std::cout);
        }
        if (analyze->parsed()) return pinvgcn::cmd_analyze_weights(analyze_paths, std::cout);
        if (oracle->parsed()) return pinvgcn::cmd_oracle_check(scale, seed, inject, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
