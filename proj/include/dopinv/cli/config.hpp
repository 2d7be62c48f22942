#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dopinv/forward.hpp"
#include "dopinv/inverse.hpp"
#include "dopinv/level_set.hpp"

namespace dopinv::cli {

/// Bad, missing, or out-of-range configuration. The message is one line and
/// names the offending key.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class PhantomKind { Shape, Uniform };

struct PhantomSpec {
    PhantomKind kind = PhantomKind::Shape;
    level_set::Shape shape = level_set::HalfPlane{'y', 0.5};
    double uniform_value = 0.0;
    std::string text = "halfplane y 0.5";
};

struct ProfileSpec {
    double center = 0.5;
    double half_width = 0.25;
    double amplitude = 1.0;
};

enum class SynthModel { LevelSet, Equilibrium };
enum class GradcheckMode { Random, Self };

struct RunConfig {
    int grid_n = 0;
    double lambda_sq = 1e-3;
    double mu_n = 1.0;
    double mu_p = 0.3;
    double c_min = -5.0;
    double c_max = 5.0;
    PhantomSpec phantom;
    std::vector<ProfileSpec> profiles;
    forward::MeasurementKind kind = forward::MeasurementKind::PointwiseTrace;
    double noise_level = 0.0;
    std::uint64_t seed = 0;
    SynthModel synth_model = SynthModel::LevelSet;
    std::optional<std::filesystem::path> data_dir;

    inverse::InversionConfig inversion;
    double eps_smooth = 2.0;
    std::optional<double> gamma_p;
    std::optional<double> gamma_n;
    level_set::Shape init = level_set::Circle{0.5, 0.5, 0.25};

    GradcheckMode gradcheck_mode = GradcheckMode::Random;
    std::filesystem::path out_dir = "out";

    forward::Mobilities mobilities() const { return {mu_n, mu_p}; }
    double resolved_gamma_p() const;
    double resolved_gamma_n() const;
};

/// Strict parse of flat "key = value" text. Relative paths are taken as
/// given, i.e. relative to the working directory.
RunConfig parse_config(std::istream& is);
RunConfig load_config(const std::filesystem::path& path);

/// Parses "circle cx cy r", "halfplane <x|y> offset", or "lshape".
level_set::Shape parse_shape(const std::string& text);

}  // namespace dopinv::cli
