#pragma once

#include "dg3pd/imaging.hpp"
#include "dg3pd/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace dg3pd::cli {

struct RunConfig {
    std::optional<std::filesystem::path> input;
    // Phantom description file, or "builtin" for default_phantom_spec().
    std::optional<std::string> phantom;
    std::filesystem::path out = ".";
    SolverParams params{};
    bool offset_view = true;
    // Overrides the phantom's own seed/sigma when set.
    std::optional<std::uint64_t> seed;
    std::optional<double> phantom_sigma;
    // If > 0, delta is replaced by eta * noise_sigma * sqrt(2 ln #coefficients).
    double noise_sigma = 0.0;
    double eta = 1.0;

    /// Throws std::invalid_argument on an inconsistent configuration.
    void validate() const;
};

/// The image to decompose plus, for phantoms, its noise-free reference.
struct InputImage {
    RealImage f;
    std::optional<RealImage> clean;
};

InputImage load_input(const RunConfig& cfg);

/// params.delta after the noise-calibrated rule, if requested.
SolverParams effective_params(const RunConfig& cfg, std::size_t rows, std::size_t cols);

/// key = value lines that reproduce the run when passed back via --config.
/// Derived penalties and the final mu values follow as comments.
std::string params_text(const RunConfig& cfg, const SolverParams& effective, const RunResult* result = nullptr);

/// One axis of a sweep grid, parsed from "key=v1,v2,...". Keys: delta, T
/// (or iters), L, S, gamma, theta.
struct GridAxis {
    std::string key;
    std::vector<double> values;
};

GridAxis parse_grid_axis(const std::string& text);
void apply_grid_value(SolverParams& p, const std::string& key, double value);

int cmd_decompose(const RunConfig& cfg, std::ostream& log);
int cmd_denoise(const RunConfig& cfg, std::ostream& log);
int cmd_sweep(const RunConfig& cfg, const std::vector<GridAxis>& grid, std::size_t jobs, std::ostream& log);

/// Full command-line entry point; returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dg3pd::cli
