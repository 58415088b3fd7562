#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "biopepad/semantics.hpp"

namespace biopepad::cli {

// Exit-code contract, stable across versions.
inline constexpr int kExitOk = 0;
inline constexpr int kExitModelError = 1;  // validation or semantic failure
inline constexpr int kExitIoError = 2;
inline constexpr int kExitTruncated = 3;  // partial result
inline constexpr int kExitNumericError = 4;

/// Directory for default output paths; overridable via this environment
/// variable.
inline constexpr const char* kOutDirEnv = "BIOPEPAD_OUT_DIR";

struct CheckOptions {
    std::string model_path;
};

struct ExploreOptions {
    std::string model_path;
    std::string format = "dot";  // dot | json
    std::size_t max_states = 100000;
    std::size_t max_pending = 4096;
    CapacityMode capacity = CapacityMode::Strict;
    std::optional<std::string> out_path;
};

struct SimulateOptions {
    std::string model_path;
    double t_end = 0.0;
    std::uint64_t seed = 1;
    std::size_t runs = 1;
    std::optional<double> grid_dt;
    unsigned jobs = 0;  // 0 = available parallelism
    CapacityMode capacity = CapacityMode::Strict;
    std::optional<std::string> out_path;
};

struct DdeOptions {
    std::string model_path;
    double t_end = 10.0;
    double step = 0.01;
    bool solve = false;  // false = export only
    std::string format = "text";  // text | json
    std::optional<std::string> out_path;
};

int cmd_check(const CheckOptions& opts, std::ostream& out, std::ostream& err);
int cmd_explore(const ExploreOptions& opts, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_dde(const DdeOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace biopepad::cli
