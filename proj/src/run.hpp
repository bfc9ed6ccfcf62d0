#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

namespace ebind::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_validation = 2,
    exit_not_converged = 3,
    exit_resource = 4,
};

struct RunOptions {
    std::filesystem::path out_dir = ".";
    std::optional<std::size_t> threads;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> max_dim;
    bool write_timestamp = true;
};

// Validates, resolves defaults, runs the command and writes CSV files plus
// manifest.json into out_dir. Diagnostics go to `log`.
int run(const nlohmann::json& spec, const RunOptions& opt, std::ostream& log);

// Reads the spec file first; unreadable or malformed JSON is a validation error.
int run_file(const std::filesystem::path& spec_path, const RunOptions& opt, std::ostream& log);

}  // namespace ebind::cli
