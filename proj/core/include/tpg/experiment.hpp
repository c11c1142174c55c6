#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tpg/solver.hpp"

namespace tpg::experiments {

enum class ProblemKind { Ct, Elliptic };

// One method entry of a config file: section name plus fully resolved solver
// and penalty settings (globals overridden by section keys).
struct MethodConfig {
    std::string name;
    PenaltyConfig penalty;
    SolverConfig solver;
};

struct ExperimentConfig {
    ProblemKind problem = ProblemKind::Ct;

    // tomography scale
    std::size_t image_size = 64;
    std::size_t n_angles = 30;
    std::size_t rays_per_angle = 95;
    std::optional<std::filesystem::path> matrix_cache;

    // elliptic scale
    std::size_t grid_cells = 128;
    double elliptic_cg_tol = 1e-10;

    // noise: relative to ||data|| (tomography convention) or absolute in the
    // weighted data norm (elliptic convention); exactly one must be set
    std::optional<double> noise_rel;
    std::optional<double> noise_abs;

    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "out";

    std::vector<MethodConfig> methods;
};

/**
 * Parses the flat key = value format with one [section] per method. Keys
 * before the first section are globals; section keys override them. Unknown
 * keys, malformed values, and missing required keys raise ConfigError with
 * file and line context.
 */
ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

/**
 * b + delta * e / ||e|| with standard normal e drawn from the seeded
 * generator, so the perturbation has data-norm exactly delta. delta = 0
 * returns b unchanged without consuming randomness.
 */
DataVector add_noise(const DataVector& b, double delta, std::uint64_t seed);

struct RunSummary {
    std::string method;
    std::size_t n_delta = 0;  // stopping index
    double final_error = 0.0;
    double wall_seconds = 0.0;  // informational; never written to output files
    StopReason stop = StopReason::Budget;
    double noise_delta = 0.0;
    double c1 = 0.0;
    std::vector<IterationRecord> records;
    PrimalVector reconstruction;
    std::vector<std::string> warnings;
};

// Builds the configured problem, adds noise, and runs every selected method.
// An empty filter runs all configured methods; TPG_THREADS caps how many run
// concurrently. Summaries keep the config's method order.
std::vector<RunSummary> run_experiment(const ExperimentConfig& cfg,
                                       const std::vector<std::string>& method_filter = {});

/**
 * Writes per-method iteration traces (trace_<method>.csv with columns
 * n,lambda,mu,residual,error,delta_n,i_n), reconstructions as 16-bit PGM plus
 * a raw little-endian float64 sidecar, and summary.csv. Files are written to
 * a temporary name and renamed, and their bytes depend only on (config, seed).
 */
void write_outputs(const std::vector<RunSummary>& runs, const ExperimentConfig& cfg);

// Serialization helpers shared by write_outputs and the tests.
std::string trace_csv(const std::vector<IterationRecord>& records);
std::string summary_csv(const std::vector<RunSummary>& runs);
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
void write_pgm16(const std::filesystem::path& path, const PrimalVector& image);
void write_f64(const std::filesystem::path& path, const PrimalVector& image);

}  // namespace tpg::experiments
