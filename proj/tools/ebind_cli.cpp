#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"ebind: enhanced-binding numerics from a JSON run spec"};
    app.set_version_flag("--version", EBIND_VERSION);

    std::string spec_path, out_dir = ".";
    std::size_t threads = 0, max_dim = 0;
    std::uint64_t seed = 0;
    app.add_option("--spec", spec_path, "run spec (JSON)")->required()->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory for CSV files and manifest.json");
    auto* t = app.add_option("--threads", threads, "worker threads for scan points")->check(CLI::PositiveNumber);
    auto* s = app.add_option("--seed", seed, "solver start-vector seed");
    auto* m = app.add_option("--max-dim", max_dim, "cap on lattice points and Fock dimension")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : ebind::cli::exit_validation;
    }

    ebind::cli::RunOptions opt;
    opt.out_dir = out_dir;
    if (*t) opt.threads = threads;
    if (*s) opt.seed = seed;
    if (*m) opt.max_dim = max_dim;
    return ebind::cli::run_file(spec_path, opt, std::cerr);
}
