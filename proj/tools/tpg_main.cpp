// Command line front end for the iterative regularization experiments.
//
//   tpg run <config> [--out DIR] [--seed N] [--method NAME]...
//   tpg assemble-ct <config> [--cache PATH]
//
// Exit codes: 0 success, 2 configuration errors, 3 numerical divergence,
// 1 anything else.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tpg/ct.hpp"
#include "tpg/experiment.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& out_dir,
                const std::vector<std::string>& methods, long long seed) {
    namespace ex = tpg::experiments;
    ex::ExperimentConfig cfg = ex::parse_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);

    const auto runs = ex::run_experiment(cfg, methods);
    ex::write_outputs(runs, cfg);

    for (const auto& r : runs) {
        std::printf("%-24s n_delta=%-6zu error=%-12.4e stop=%s wall=%.2fs\n", r.method.c_str(),
                    r.n_delta, r.final_error, r.stop == tpg::StopReason::Discrepancy ? "discrepancy" : "budget",
                    r.wall_seconds);
        for (const auto& w : r.warnings) std::fprintf(stderr, "warning [%s]: %s\n", r.method.c_str(), w.c_str());
    }
    std::printf("outputs written to %s\n", cfg.output_dir.string().c_str());
    return 0;
}

int assemble_command(const std::string& config_path, std::string cache_path) {
    namespace ex = tpg::experiments;
    ex::ExperimentConfig cfg = ex::parse_config(config_path);
    if (cfg.problem != ex::ProblemKind::Ct)
        throw tpg::ConfigError(config_path, 0, "assemble-ct needs a tomography config");
    if (cache_path.empty()) {
        if (!cfg.matrix_cache)
            throw tpg::ConfigError(config_path, 0, "no --cache given and no matrix_cache in the config");
        cache_path = cfg.matrix_cache->string();
    }

    const auto geom =
        tpg::ct::ParallelBeamGeometry::standard(cfg.image_size, cfg.n_angles, cfg.rays_per_angle);
    const auto matrix = tpg::ct::assemble_matrix(geom);
    tpg::ct::write_csr(matrix, cache_path);
    std::printf("wrote %s: %zu x %zu, %zu nonzeros\n", cache_path.c_str(), matrix.rows, matrix.cols,
                matrix.nnz());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-point gradient regularization experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string cache_path;
    std::vector<std::string> methods;
    long long seed = -1;

    auto* run = app.add_subcommand("run", "Run the methods of a config file and write outputs");
    run->add_option("config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "override the config's output directory");
    run->add_option("--seed", seed, "override the config's noise seed");
    run->add_option("--methods", methods, "run only the named method sections (comma separated)")
        ->delimiter(',');

    auto* assemble = app.add_subcommand("assemble-ct", "Assemble the projection matrix and cache it");
    assemble->add_option("config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
    assemble->add_option("--cache", cache_path, "cache file path (defaults to the config's matrix_cache)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_command(config_path, out_dir, methods, seed);
        return assemble_command(config_path, cache_path);
    } catch (const tpg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const tpg::NumericalDivergence& e) {
        std::cerr << "diverged: " << e.what() << " (last iteration " << e.last_record.n << ")\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
