#include "biopepad/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "biopepad/dde.hpp"
#include "biopepad/dssa.hpp"
#include "biopepad/parser.hpp"
#include "biopepad/slts_io.hpp"
#include "biopepad/version.hpp"

namespace biopepad::cli {

namespace {

std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::optional<std::string> read_file(const std::string& path, std::ostream& err) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        err << "cannot open " << path << "\n";
        return std::nullopt;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        err << "cannot read " << path << "\n";
        return std::nullopt;
    }
    return buf.str();
}

bool write_file(const std::string& path, const std::string& content, std::ostream& err) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        err << "cannot open " << path << " for writing\n";
        return false;
    }
    out << content;
    out.flush();
    if (!out) {
        err << "cannot write " << path << "\n";
        return false;
    }
    return true;
}

/// Default output location: model stem + suffix, placed in the directory
/// named by BIOPEPAD_OUT_DIR when set, otherwise the working directory.
std::string default_out_path(const std::string& model_path, const std::string& suffix) {
    std::filesystem::path stem = std::filesystem::path(model_path).stem();
    std::filesystem::path dir = ".";
    if (const char* env = std::getenv(kOutDirEnv); env && *env) dir = env;
    return (dir / (stem.string() + suffix)).string();
}

struct LoadedModel {
    SystemSpec spec;
    ProcessTree tree;
};

/// Reads, parses and validates; on failure prints diagnostics and returns
/// the exit code in `ec`.
std::optional<LoadedModel> load_model(const std::string& path, std::ostream& err, int& ec) {
    auto text = read_file(path, err);
    if (!text) {
        ec = kExitIoError;
        return std::nullopt;
    }
    ModelSource src{*text, path};
    ParseResult parsed = parse_model(src);
    for (const auto& d : parsed.diagnostics) err << format_diagnostic(d, path) << "\n";
    if (!parsed.ok()) {
        ec = kExitModelError;
        return std::nullopt;
    }
    auto violations = validate(*parsed.spec);
    for (const auto& v : violations) err << path << ": " << v.where << ": " << v.message << "\n";
    if (!violations.empty()) {
        ec = kExitModelError;
        return std::nullopt;
    }
    LoadedModel model{std::move(*parsed.spec), {}};
    model.tree = ProcessTree::compile(model.spec);
    ec = kExitOk;
    return model;
}

class ManifestWriter {
public:
    ManifestWriter(std::string command, std::string model_path)
        : started_(std::chrono::steady_clock::now()) {
        j_["tool"] = std::string(kToolName);
        j_["version"] = std::string(kToolVersion);
        j_["command"] = std::move(command);
        j_["model"] = std::move(model_path);
        j_["flags"] = nlohmann::json::object();
    }

    nlohmann::json& flags() { return j_["flags"]; }
    void set_seed(std::uint64_t seed) { j_["seed"] = seed; }
    void set_rng(const char* algorithm) { j_["rng"] = algorithm; }

    void add_output(const std::string& path, const std::string& content) {
        outputs_.push_back({{"path", path}, {"digest_fnv1a64", fnv1a64_hex(content)}});
    }

    bool write(const std::string& primary_output, std::ostream& err) {
        const auto elapsed = std::chrono::steady_clock::now() - started_;
        j_["duration_seconds"] =
            std::chrono::duration_cast<std::chrono::duration<double>>(elapsed).count();
        j_["outputs"] = outputs_;
        return write_file(primary_output + ".manifest.json", j_.dump(2) + "\n", err);
    }

private:
    nlohmann::json j_;
    nlohmann::json outputs_ = nlohmann::json::array();
    std::chrono::steady_clock::time_point started_;
};

const char* capacity_name(CapacityMode mode) {
    return mode == CapacityMode::Strict ? "strict" : "literal";
}

}  // namespace

int cmd_check(const CheckOptions& opts, std::ostream& out, std::ostream& err) {
    int ec = kExitOk;
    auto model = load_model(opts.model_path, err, ec);
    if (!model) return ec;
    out << opts.model_path << ": ok (" << model->spec.components.size() << " species, "
        << model->spec.action_order().size() << " actions)\n";
    return kExitOk;
}

int cmd_explore(const ExploreOptions& opts, std::ostream& out, std::ostream& err) {
    if (opts.format != "dot" && opts.format != "json") {
        err << "unknown format '" << opts.format << "' (expected dot or json)\n";
        return kExitModelError;
    }
    int ec = kExitOk;
    auto model = load_model(opts.model_path, err, ec);
    if (!model) return ec;

    ManifestWriter manifest("explore", opts.model_path);
    manifest.flags() = {{"format", opts.format},
                        {"max_states", opts.max_states},
                        {"max_pending", opts.max_pending},
                        {"capacity", capacity_name(opts.capacity)}};

    ExploreLimits limits{opts.max_states, opts.max_pending};
    Slts slts;
    try {
        slts = explore_slts(model->spec, model->tree, limits, opts.capacity);
    } catch (const std::exception& e) {
        err << "exploration failed: " << e.what() << "\n";
        return kExitModelError;
    }

    const std::string path =
        opts.out_path.value_or(default_out_path(opts.model_path, ".slts." + opts.format));
    const std::string content = opts.format == "dot"
                                    ? slts_dot(slts, model->tree)
                                    : slts_json(slts, model->tree).dump(2) + "\n";
    if (!write_file(path, content, err)) return kExitIoError;
    manifest.add_output(path, content);
    if (!manifest.write(path, err)) return kExitIoError;

    out << slts.states.size() << " states, " << slts.edges.size() << " transitions";
    if (slts.truncated) out << " (truncated: " << slts.truncation_reason << ")";
    out << "\n" << "wrote " << path << "\n";
    return slts.truncated ? kExitTruncated : kExitOk;
}

int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err) {
    if (!(opts.t_end > 0.0)) {
        err << "simulation horizon must be positive\n";
        return kExitModelError;
    }
    if (opts.runs < 1) {
        err << "need at least one run\n";
        return kExitModelError;
    }
    if (opts.runs > 1 && !opts.grid_dt) {
        err << "ensemble runs need --grid\n";
        return kExitModelError;
    }
    if (opts.grid_dt && !(*opts.grid_dt > 0.0)) {
        err << "grid step must be positive\n";
        return kExitModelError;
    }

    int ec = kExitOk;
    auto model = load_model(opts.model_path, err, ec);
    if (!model) return ec;

    ManifestWriter manifest("simulate", opts.model_path);
    manifest.flags() = {{"t_end", opts.t_end},
                        {"runs", opts.runs},
                        {"capacity", capacity_name(opts.capacity)},
                        {"jobs", opts.jobs}};
    if (opts.grid_dt) manifest.flags()["grid"] = *opts.grid_dt;
    manifest.set_seed(opts.seed);
    manifest.set_rng(RngStream::kAlgorithm);

    DssaModel dssa = DssaModel::compile(model->spec, opts.capacity);
    std::string content;
    std::string suffix;
    try {
        if (opts.runs == 1) {
            Recording rec;
            if (opts.grid_dt) rec = {Recording::Mode::Grid, *opts.grid_dt};
            content = trajectory_csv(simulate(dssa, opts.t_end, opts.seed, rec));
            suffix = ".traj.csv";
        } else {
            unsigned jobs = opts.jobs ? opts.jobs : std::thread::hardware_concurrency();
            content = ensemble_csv(
                ensemble(dssa, opts.t_end, opts.runs, opts.seed, *opts.grid_dt, jobs));
            suffix = ".ensemble.csv";
        }
    } catch (const std::exception& e) {
        err << "simulation failed (seed " << opts.seed << "): " << e.what() << "\n";
        return kExitNumericError;
    }

    const std::string path = opts.out_path.value_or(default_out_path(opts.model_path, suffix));
    if (!write_file(path, content, err)) return kExitIoError;
    manifest.add_output(path, content);
    if (!manifest.write(path, err)) return kExitIoError;
    out << "wrote " << path << "\n";
    return kExitOk;
}

int cmd_dde(const DdeOptions& opts, std::ostream& out, std::ostream& err) {
    if (opts.format != "text" && opts.format != "json") {
        err << "unknown format '" << opts.format << "' (expected text or json)\n";
        return kExitModelError;
    }
    if (opts.solve && !(opts.step > 0.0)) {
        err << "integration step must be positive\n";
        return kExitModelError;
    }
    if (opts.solve && !(opts.t_end > 0.0)) {
        err << "horizon must be positive\n";
        return kExitModelError;
    }

    int ec = kExitOk;
    auto model = load_model(opts.model_path, err, ec);
    if (!model) return ec;

    DdeSystem sys;
    try {
        sys = derive_dde(model->spec);
    } catch (const std::exception& e) {
        err << "derivation failed: " << e.what() << "\n";
        return kExitModelError;
    }

    const std::string equations =
        opts.format == "text" ? dde_text(sys) : dde_to_json(sys).dump(2) + "\n";
    out << equations;

    ManifestWriter manifest("dde", opts.model_path);
    manifest.flags() = {{"t_end", opts.t_end},
                        {"step", opts.step},
                        {"solve", opts.solve},
                        {"format", opts.format}};

    std::string primary;
    if (opts.out_path || opts.solve) {
        const std::string eq_path = opts.out_path
                                        ? *opts.out_path
                                        : default_out_path(opts.model_path,
                                                           opts.format == "text" ? ".dde.txt"
                                                                                 : ".dde.json");
        if (!write_file(eq_path, equations, err)) return kExitIoError;
        manifest.add_output(eq_path, equations);
        primary = eq_path;
        out << "wrote " << eq_path << "\n";
    }

    if (opts.solve) {
        SolutionGrid grid;
        try {
            grid = solve_dde(sys, opts.t_end, opts.step);
        } catch (const DdeError& e) {
            err << "integration failed at t=" << format_double(e.time_of_failure) << ": "
                << e.what() << "\n";
            return kExitNumericError;
        } catch (const std::exception& e) {
            err << "integration failed: " << e.what() << "\n";
            return kExitNumericError;
        }
        if (grid.dt != grid.requested_dt)
            out << "step adjusted to " << format_double(grid.dt)
                << " to divide every delay\n";
        const std::string csv = solution_csv(grid, sys);
        const std::string csv_path = default_out_path(opts.model_path, ".dde.csv");
        if (!write_file(csv_path, csv, err)) return kExitIoError;
        manifest.add_output(csv_path, csv);
        if (primary.empty()) primary = csv_path;
        out << "wrote " << csv_path << "\n";
    }

    if (!primary.empty() && !manifest.write(primary, err)) return kExitIoError;
    return kExitOk;
}

}  // namespace biopepad::cli
