#include "tpg/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <semaphore>
#include <sstream>
#include <thread>

#include "tpg/ct.hpp"
#include "tpg/elliptic.hpp"
#include "tpg/rng.hpp"

namespace tpg::experiments {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

struct RawEntry {
    std::string value;
    long line = 0;
};

// One config section: ordered key set with consumption tracking, so unknown
// keys are reported with their location.
struct Section {
    std::string name;
    long line = 0;
    std::map<std::string, RawEntry> entries;
    std::string origin;

    std::optional<RawEntry> take(const std::string& key) {
        auto it = entries.find(key);
        if (it == entries.end()) return std::nullopt;
        RawEntry entry = it->second;
        entries.erase(it);
        return entry;
    }

    double take_double(const std::string& key, double fallback) {
        auto e = take(key);
        return e ? parse_double(key, *e) : fallback;
    }

    std::optional<double> take_double_opt(const std::string& key) {
        auto e = take(key);
        if (!e) return std::nullopt;
        return parse_double(key, *e);
    }

    std::size_t take_size(const std::string& key, std::size_t fallback) {
        auto e = take(key);
        if (!e) return fallback;
        char* end = nullptr;
        const unsigned long long parsed = std::strtoull(e->value.c_str(), &end, 10);
        if (end == e->value.c_str() || *end != '\0')
            throw ConfigError(origin, e->line, "value of '" + key + "' is not an integer");
        return static_cast<std::size_t>(parsed);
    }

    double parse_double(const std::string& key, const RawEntry& e) const {
        char* end = nullptr;
        const double parsed = std::strtod(e.value.c_str(), &end);
        if (end == e.value.c_str() || *end != '\0')
            throw ConfigError(origin, e.line, "value of '" + key + "' is not a number");
        return parsed;
    }

    long find_line(const std::string& key) const {
        auto it = entries.find(key);
        return it == entries.end() ? line : it->second.line;
    }

    void reject_leftovers() const {
        if (entries.empty()) return;
        const auto& [key, entry] = *entries.begin();
        throw ConfigError(origin, entry.line, "unknown key '" + key + "'");
    }
};

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    return true;
}

std::vector<Section> split_sections(const std::string& text, const std::string& origin) {
    std::vector<Section> sections(1);
    sections[0].origin = origin;
    std::istringstream stream(text);
    std::string raw;
    long line_no = 0;
    while (std::getline(stream, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string lineval = trim(raw);
        if (lineval.empty()) continue;
        if (lineval.front() == '[') {
            if (lineval.back() != ']')
                throw ConfigError(origin, line_no, "unterminated section header");
            const std::string name = trim(lineval.substr(1, lineval.size() - 2));
            if (!valid_name(name))
                throw ConfigError(origin, line_no,
                                  "section name must use letters, digits, '_' or '-'");
            for (const auto& s : sections)
                if (s.name == name) throw ConfigError(origin, line_no, "duplicate section [" + name + "]");
            Section sec;
            sec.name = name;
            sec.line = line_no;
            sec.origin = origin;
            sections.push_back(std::move(sec));
            continue;
        }
        const auto eq = lineval.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin, line_no, "expected key = value");
        const std::string key = trim(lineval.substr(0, eq));
        const std::string value = trim(lineval.substr(eq + 1));
        if (key.empty()) throw ConfigError(origin, line_no, "empty key");
        if (value.empty()) throw ConfigError(origin, line_no, "empty value for '" + key + "'");
        auto& sec = sections.back();
        if (!sec.entries.emplace(key, RawEntry{value, line_no}).second)
            throw ConfigError(origin, line_no, "duplicate key '" + key + "'");
    }
    return sections;
}

// Solver and penalty keys shared by the global scope and the method sections;
// unset values fall through to the problem-specific defaults.
struct SharedKeys {
    std::optional<double> beta, tv_weight, tau, mu0_bar, mu1_bar, s, eta, nu;
    std::optional<double> dual_norm_weight;
    std::optional<double> pdhg_step_primal, pdhg_step_dual;
    std::optional<std::size_t> pdhg_iters, n_max;

    void absorb(Section& sec) {
        auto lift = [&sec](std::optional<double>& slot, const char* key) {
            if (auto v = sec.take_double_opt(key)) slot = *v;
        };
        lift(beta, "beta");
        lift(tv_weight, "tv_weight");
        lift(tau, "tau");
        lift(mu0_bar, "mu0_bar");
        lift(mu1_bar, "mu1_bar");
        lift(s, "s");
        lift(eta, "eta");
        lift(nu, "nu");
        lift(dual_norm_weight, "dual_norm_weight");
        lift(pdhg_step_primal, "pdhg_step_primal");
        lift(pdhg_step_dual, "pdhg_step_dual");
        if (sec.entries.count("pdhg_iters")) pdhg_iters = sec.take_size("pdhg_iters", 0);
        if (sec.entries.count("n_max")) n_max = sec.take_size("n_max", 0);
    }
};

MethodConfig resolve_method(Section& sec, SharedKeys shared, ProblemKind problem,
                            double default_tv_weight, double default_dual_weight,
                            const std::string& origin) {
    shared.absorb(sec);  // section overrides globals

    MethodConfig m;
    m.name = sec.name;

    PenaltyConfig pen;
    pen.beta = shared.beta.value_or(problem == ProblemKind::Ct ? 1.0 : 10.0);
    // the elliptic default equals the grid spacing, which keeps the pixel-space
    // denoising weight at beta independent of resolution; CT cells are unit
    // sized, so its default is 1
    pen.tv_weight = shared.tv_weight.value_or(default_tv_weight);
    pen.pdhg_iters = static_cast<int>(shared.pdhg_iters.value_or(problem == ProblemKind::Ct ? 100 : 200));
    if (shared.pdhg_step_primal) pen.pdhg_step_primal = *shared.pdhg_step_primal;
    if (shared.pdhg_step_dual) pen.pdhg_step_dual = *shared.pdhg_step_dual;

    SolverConfig sol;
    sol.tau = shared.tau.value_or(1.05);
    // default step factor: scaled distance to the feasibility boundary, 90%
    // for the tomography setting and 50% for the elliptic one
    const double slack = (problem == ProblemKind::Ct ? 1.8 : 1.0) * (1.0 - 1.0 / sol.tau);
    sol.mu0_bar = shared.mu0_bar.value_or(slack / pen.beta);
    sol.mu1_bar = shared.mu1_bar.value_or(20000.0);
    sol.s = shared.s.value_or(2.0);
    sol.eta = shared.eta.value_or(0.0);
    sol.nu = shared.nu.value_or(2.0);
    sol.n_max = shared.n_max.value_or(50000);
    // the default is the L2 cell weight of the reconstruction domain, so the
    // dual step norms the lambda caps consume stay at the same scale when the
    // grid is refined
    sol.dual_norm_weight = shared.dual_norm_weight.value_or(default_dual_weight);

    const auto strategy_entry = sec.take("strategy");
    if (!strategy_entry)
        throw ConfigError(origin, sec.line, "section [" + sec.name + "] is missing 'strategy'");
    const std::string& strategy = strategy_entry->value;
    const double default_gamma1 = problem == ProblemKind::Ct ? 0.4 : 0.3;
    const double default_qexp = problem == ProblemKind::Ct ? 1.1 : 1.2;
    if (strategy == "zero") {
        sol.strategy = ZeroStrategy{};
    } else if (strategy == "nesterov") {
        sol.strategy = NesterovStrategy{sec.take_double("alpha", 5.0)};
    } else if (strategy == "delta-formula") {
        sol.strategy = DeltaFormulaStrategy{sec.take_double("gamma0", 0.1), sec.take_double("alpha", 5.0)};
    } else if (strategy == "delta-formula-root") {
        sol.strategy = DeltaFormulaRootStrategy{sec.take_double("alpha", 5.0)};
    } else if (strategy == "dbts") {
        DbtsConfig d;
        d.j_max = static_cast<long long>(sec.take_size("j_max", 1));
        d.alpha = sec.take_double("alpha", 5.0);
        d.gamma0 = sec.take_double("gamma0", 0.1);
        d.gamma1 = sec.take_double("gamma1", default_gamma1);
        d.q_exponent = sec.take_double("q_exponent", default_qexp);
        d.rho = sec.take_double("rho", std::numeric_limits<double>::infinity());
        sol.strategy = DbtsStrategy{d};
    } else {
        throw ConfigError(origin, sec.line, "unknown strategy '" + strategy + "'");
    }

    sec.reject_leftovers();
    try {
        pen.validate();
        sol.validate();
    } catch (const ParameterError& e) {
        throw ConfigError(origin, sec.line, std::string(e.what()) + " in section [" + sec.name + "]");
    }
    m.penalty = pen;
    m.solver = sol;
    return m;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    auto sections = split_sections(text, origin);
    Section& global = sections.front();

    ExperimentConfig cfg;
    const auto problem = global.take("problem");
    if (!problem) throw ConfigError(origin, 1, "missing required key 'problem'");
    if (problem->value == "ct")
        cfg.problem = ProblemKind::Ct;
    else if (problem->value == "elliptic")
        cfg.problem = ProblemKind::Elliptic;
    else
        throw ConfigError(origin, problem->line, "problem must be 'ct' or 'elliptic'");

    cfg.image_size = global.take_size("image_size", 64);
    cfg.n_angles = global.take_size("n_angles", 30);
    cfg.rays_per_angle = global.take_size("rays_per_angle", 95);
    if (auto v = global.take("matrix_cache")) cfg.matrix_cache = std::filesystem::path(v->value);
    cfg.grid_cells = global.take_size("grid_cells", 128);
    cfg.elliptic_cg_tol = global.take_double("cg_tol", 1e-10);
    cfg.noise_rel = global.take_double_opt("noise_rel");
    cfg.noise_abs = global.take_double_opt("noise_abs");
    cfg.seed = global.take_size("seed", 0);
    if (auto v = global.take("output_dir")) cfg.output_dir = std::filesystem::path(v->value);

    if (cfg.noise_rel.has_value() == cfg.noise_abs.has_value())
        throw ConfigError(origin, global.line ? global.line : 1,
                          "exactly one of noise_rel / noise_abs must be set");
    const double noise = cfg.noise_rel ? *cfg.noise_rel : *cfg.noise_abs;
    if (!(noise >= 0.0))
        throw ConfigError(origin, 1, "noise level must be non-negative");

    SharedKeys shared;
    shared.absorb(global);
    global.reject_leftovers();

    const double default_tv_weight =
        cfg.problem == ProblemKind::Ct ? 1.0 : 1.0 / static_cast<double>(cfg.grid_cells);
    // the tomography image lives on a square of side 2, the diffusion
    // coefficient on the unit square; cell side over that domain
    const double default_dual_weight =
        cfg.problem == ProblemKind::Ct ? 2.0 / static_cast<double>(cfg.image_size)
                                       : 1.0 / static_cast<double>(cfg.grid_cells);
    for (std::size_t k = 1; k < sections.size(); ++k)
        cfg.methods.push_back(resolve_method(sections[k], shared, cfg.problem, default_tv_weight,
                                             default_dual_weight, origin));
    if (cfg.methods.empty())
        throw ConfigError(origin, 1, "config declares no method sections");
    return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path.string());
}

DataVector add_noise(const DataVector& b, double delta, std::uint64_t seed) {
    if (!(delta >= 0.0)) throw ParameterError("add_noise: negative noise level");
    if (delta == 0.0) return b;
    GaussianSampler rng(seed);
    DataVector e(b.shape(), b.cell_weight());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = rng.next();
    const double ne = norm(e);
    if (ne == 0.0) throw Error("add_noise: degenerate noise draw");
    return lin(1.0, b, delta / ne, e);
}

namespace {

unsigned worker_limit(std::size_t jobs) {
    unsigned limit = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("TPG_THREADS")) {
        char* end = nullptr;
        const unsigned long parsed = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && parsed >= 1) limit = static_cast<unsigned>(parsed);
    }
    return static_cast<unsigned>(std::min<std::size_t>(limit, jobs));
}

struct ProblemSetup {
    std::shared_ptr<ForwardOperator> op;
    PrimalVector x_true;
    DataVector y_delta;
    double delta = 0.0;
    double error_scale = 1.0;
};

ProblemSetup build_ct(const ExperimentConfig& cfg) {
    const auto geom =
        ct::ParallelBeamGeometry::standard(cfg.image_size, cfg.n_angles, cfg.rays_per_angle);
    std::shared_ptr<const ct::SparseMatrixCsr> matrix;
    if (cfg.matrix_cache && std::filesystem::exists(*cfg.matrix_cache)) {
        auto loaded = std::make_shared<ct::SparseMatrixCsr>(ct::read_csr(*cfg.matrix_cache));
        if (loaded->rows != geom.data_size() || loaded->cols != cfg.image_size * cfg.image_size)
            throw IoError("matrix cache " + cfg.matrix_cache->string() +
                          " does not match the configured geometry");
        matrix = std::move(loaded);
    } else {
        matrix = std::make_shared<ct::SparseMatrixCsr>(ct::assemble_matrix(geom));
    }

    ProblemSetup setup;
    setup.op = std::make_shared<ct::CtOperator>(
        ct::make_ct_operator(matrix, GridShape{cfg.image_size, cfg.image_size}));
    setup.x_true = ct::shepp_logan(cfg.image_size, cfg.image_size);
    const DataVector b = setup.op->apply(setup.x_true);
    setup.delta = cfg.noise_rel ? *cfg.noise_rel * norm(b) : *cfg.noise_abs;
    setup.y_delta = add_noise(b, setup.delta, cfg.seed);
    setup.error_scale = 1.0 / norm(setup.x_true);
    return setup;
}

ProblemSetup build_elliptic(const ExperimentConfig& cfg) {
    const auto prob = elliptic::make_inclusion_problem(cfg.grid_cells);
    ProblemSetup setup;
    setup.op = std::make_shared<elliptic::EllipticOperator>(
        prob.grid, prob.f_interior, prob.boundary_lift, cfg.elliptic_cg_tol,
        elliptic::probe_norm_bound(prob, cfg.elliptic_cg_tol));
    setup.x_true = prob.c_true;
    setup.delta = cfg.noise_abs ? *cfg.noise_abs : *cfg.noise_rel * norm(prob.exact_data);
    setup.y_delta = add_noise(prob.exact_data, setup.delta, cfg.seed);
    setup.error_scale = 1.0;  // absolute errors in the weighted norm
    return setup;
}

}  // namespace

std::vector<RunSummary> run_experiment(const ExperimentConfig& cfg,
                                       const std::vector<std::string>& method_filter) {
    std::vector<MethodConfig> selected;
    if (method_filter.empty()) {
        selected = cfg.methods;
    } else {
        for (const auto& want : method_filter) {
            const auto it = std::find_if(cfg.methods.begin(), cfg.methods.end(),
                                         [&](const MethodConfig& m) { return m.name == want; });
            if (it == cfg.methods.end()) throw Error("unknown method '" + want + "'");
            selected.push_back(*it);
        }
    }

    ProblemSetup setup = cfg.problem == ProblemKind::Ct ? build_ct(cfg) : build_elliptic(cfg);
    const ReferenceInfo reference{setup.x_true, setup.error_scale};

    std::vector<RunSummary> results(selected.size());
    std::vector<std::exception_ptr> failures(selected.size());
    std::counting_semaphore<64> gate(worker_limit(selected.size()));
    std::vector<std::thread> workers;
    workers.reserve(selected.size());

    for (std::size_t idx = 0; idx < selected.size(); ++idx) {
        workers.emplace_back([&, idx] {
            gate.acquire();
            try {
                const MethodConfig& method = selected[idx];
                SolverConfig solver = method.solver;
                solver.noise_level_delta = setup.delta;

                const DualVector xi0(setup.op->domain_shape(), setup.op->domain_weight());
                SubgradientPair start{grad_theta_star(xi0, method.penalty), xi0};

                const auto t0 = std::chrono::steady_clock::now();
                TpgResult run = tpg_run(*setup.op, setup.y_delta, start, method.penalty, solver, &reference);
                const auto t1 = std::chrono::steady_clock::now();

                RunSummary& out = results[idx];
                out.method = method.name;
                out.stop = run.stop;
                out.n_delta = run.records.empty() ? 0 : run.records.back().n;
                if (run.stop == StopReason::Budget) out.n_delta = run.records.size();
                out.final_error = setup.error_scale * norm(diff(run.solution, setup.x_true));
                out.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
                out.noise_delta = setup.delta;
                out.c1 = run.c1;
                out.records = std::move(run.records);
                out.reconstruction = std::move(run.solution);
                out.warnings = std::move(run.warnings);
            } catch (...) {
                failures[idx] = std::current_exception();
            }
            gate.release();
        });
    }
    for (auto& w : workers) w.join();
    for (auto& failure : failures)
        if (failure) std::rethrow_exception(failure);
    return results;
}

std::string trace_csv(const std::vector<IterationRecord>& records) {
    std::string out = "n,lambda,mu,residual,error,delta_n,i_n\n";
    for (const auto& r : records) {
        out += std::to_string(r.n);
        out += ',';
        out += fmt_double(r.lambda);
        out += ',';
        out += fmt_double(r.mu);
        out += ',';
        out += fmt_double(r.residual_norm);
        out += ',';
        if (r.error_to_reference) out += fmt_double(*r.error_to_reference);
        out += ',';
        if (r.delta_n) out += fmt_double(*r.delta_n);
        out += ',';
        out += std::to_string(r.i_n);
        out += '\n';
    }
    return out;
}

std::string summary_csv(const std::vector<RunSummary>& runs) {
    std::string out = "method,noise,n_delta,final_error,stop\n";
    for (const auto& r : runs) {
        out += r.method;
        out += ',';
        out += fmt_double(r.noise_delta);
        out += ',';
        out += std::to_string(r.n_delta);
        out += ',';
        out += fmt_double(r.final_error);
        out += ',';
        out += (r.stop == StopReason::Discrepancy ? "discrepancy" : "budget");
        out += '\n';
    }
    return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("failed while writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_pgm16(const std::filesystem::path& path, const PrimalVector& image) {
    double lo = image[0], hi = image[0];
    for (std::size_t i = 0; i < image.size(); ++i) {
        lo = std::min(lo, image[i]);
        hi = std::max(hi, image[i]);
    }
    const double span = hi - lo;
    std::string bytes = "P5\n" + std::to_string(image.shape().cols) + " " +
                        std::to_string(image.shape().rows) + "\n65535\n";
    bytes.reserve(bytes.size() + 2 * image.size());
    for (std::size_t i = 0; i < image.size(); ++i) {
        const double unit = span > 0.0 ? (image[i] - lo) / span : 0.0;
        const auto v = static_cast<std::uint16_t>(std::lround(unit * 65535.0));
        bytes.push_back(static_cast<char>(v >> 8));  // most significant byte first
        bytes.push_back(static_cast<char>(v & 0xff));
    }
    write_file_atomic(path, bytes);
}

void write_f64(const std::filesystem::path& path, const PrimalVector& image) {
    std::string bytes(image.size() * sizeof(double), '\0');
    std::memcpy(bytes.data(), image.values().data(), bytes.size());
    write_file_atomic(path, bytes);
}

void write_outputs(const std::vector<RunSummary>& runs, const ExperimentConfig& cfg) {
    const auto& dir = cfg.output_dir;
    std::filesystem::create_directories(dir);
    for (const auto& run : runs) {
        write_file_atomic(dir / ("trace_" + run.method + ".csv"), trace_csv(run.records));
        if (run.reconstruction.size() > 0) {
            write_pgm16(dir / ("recon_" + run.method + ".pgm"), run.reconstruction);
            write_f64(dir / ("recon_" + run.method + ".f64"), run.reconstruction);
        }
    }
    write_file_atomic(dir / "summary.csv", summary_csv(runs));
}

}  // namespace tpg::experiments
