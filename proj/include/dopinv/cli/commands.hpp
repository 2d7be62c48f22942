#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "dopinv/cli/config.hpp"

namespace dopinv::cli {

// Stable process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitNotConverged = 4;
inline constexpr int kExitGradcheck = 5;

inline constexpr int kGradcheckMaxGrid = 16;
inline constexpr double kGradcheckTolerance = 1e-4;
// Small enough that the O(step^2) truncation error of central differences
// stays below the 1e-12 zero-gradient threshold at a zero-residual state.
inline constexpr double kGradcheckFdStep = 1e-7;

/// Level-set function of the configured phantom, positive in the N-region.
ScalarField phantom_phi(const RunConfig& cfg, const Grid& grid);

/// Piecewise-constant doping: c_max on the N-region, c_min elsewhere.
forward::DopingField phantom_doping(const RunConfig& cfg, const Grid& grid);

std::vector<forward::VoltageProfile> voltage_profiles(const RunConfig& cfg, const Grid& grid);

/// Measurements for an inversion run: loaded from data_dir when set,
/// otherwise synthesized from the phantom.
forward::MeasurementSet inversion_data(const RunConfig& cfg, const Grid& grid);

int cmd_phantom(const RunConfig& cfg, std::ostream& out);
int cmd_forward(const RunConfig& cfg, std::ostream& out);
int cmd_invert(const RunConfig& cfg, std::ostream& out);
int cmd_gradcheck(const RunConfig& cfg, std::ostream& out);

/// Loads the config, applies the --out override, dispatches, and maps
/// exceptions to exit codes with a one-line diagnostic on `err`.
int run_command(const std::string& command, const std::filesystem::path& config_path,
                const std::optional<std::filesystem::path>& out_override, std::ostream& out, std::ostream& err);

}  // namespace dopinv::cli
