#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dopinv/grid.hpp"

namespace dopinv::forward {

/// Doping profile in units of n_i, constrained to [c_min, c_max].
class DopingField {
public:
    DopingField(ScalarField values, double c_min, double c_max);

    const ScalarField& values() const { return values_; }
    const Grid& grid() const { return values_.grid(); }
    double c_min() const { return c_min_; }
    double c_max() const { return c_max_; }

private:
    ScalarField values_;
    double c_min_;
    double c_max_;
};

/// gamma = exp(V0), strictly positive.
class GammaField {
public:
    explicit GammaField(ScalarField values);

    const ScalarField& values() const { return values_; }
    const Grid& grid() const { return values_.grid(); }
    ScalarField reciprocal() const;
    ScalarField log() const;

private:
    ScalarField values_;
};

/// Applied voltage on the bottom contact; the top contact is grounded.
class VoltageProfile {
public:
    explicit VoltageProfile(Trace values);

    const Trace& values() const { return values_; }
    const Grid& grid() const { return values_.grid(); }

    VoltageProfile scaled(double factor) const;

private:
    Trace values_;
};

struct Mobilities {
    double mu_n = 1.0;
    double mu_p = 1.0;
};

enum class MeasurementKind { PointwiseTrace, CurrentFlow };

std::string kind_name(MeasurementKind kind);
MeasurementKind parse_kind(const std::string& name);

/// Either a full current-density trace on the top contact or its integral.
class Measurement {
public:
    static Measurement pointwise(Trace trace);
    static Measurement current_flow(double value);

    MeasurementKind kind() const { return kind_; }
    const Trace& trace() const;
    double scalar() const;

    /// Max-norm of the payload.
    double magnitude() const;

private:
    Measurement(MeasurementKind kind, std::optional<Trace> trace, std::optional<double> scalar);

    MeasurementKind kind_;
    std::optional<Trace> pointwise_;
    std::optional<double> scalar_;
};

struct MeasurementEntry {
    VoltageProfile profile;
    Measurement data;   // what the inversion sees
    Measurement clean;  // noise-free forward output
};

struct MeasurementSet {
    MeasurementKind kind = MeasurementKind::PointwiseTrace;
    std::vector<MeasurementEntry> entries;
    double noise_level = 0.0;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument if empty or of mixed kinds.
    void validate() const;

    /// Expected norm of the data perturbation in the misfit norm.
    double data_noise_norm() const;
};

/// gamma = exp(V0) for the equilibrium potential of C.
GammaField equilibrium_gamma(const DopingField& doping, double lambda_sq);

/// (u_hat, v_hat) of the two decoupled continuity problems:
/// div(mu_n gamma grad u) = 0 with u = -U on the bottom contact,
/// div(mu_p gamma^-1 grad v) = 0 with v = +U on the bottom contact,
/// both zero on the top contact.
std::pair<ScalarField, ScalarField> solve_continuity(const GammaField& gamma, const VoltageProfile& voltage,
                                                     const Mobilities& mob);

/// mu_n gamma du/dnu - mu_p gamma^-1 dv/dnu on the top contact.
Trace dn_pointwise(const GammaField& gamma, const VoltageProfile& voltage, const Mobilities& mob);

/// Integral of dn_pointwise over the top contact.
double dn_current_flow(const GammaField& gamma, const VoltageProfile& voltage, const Mobilities& mob);

Measurement measure(const GammaField& gamma, const VoltageProfile& voltage, const Mobilities& mob,
                    MeasurementKind kind);

struct DopingRecovery {
    DopingField doping;            // clamped into [c_min, c_max]
    std::size_t clamped_cells = 0; // cells whose raw value fell outside the bounds
    ScalarField raw;               // unclamped gamma - 1/gamma - lambda^2 lap(ln gamma)
};

DopingRecovery doping_from_gamma(const GammaField& gamma, double lambda_sq, double c_min, double c_max);

/// amplitude on bottom faces with |x - center| <= half_width, 0 elsewhere.
VoltageProfile contact_voltage(double center, double half_width, double amplitude, const Grid& grid);

/// Forward outputs for each profile with relative Gaussian noise of standard
/// deviation noise_level * |clean|_inf, drawn from a generator seeded with `seed`.
MeasurementSet synthesize_from_gamma(const GammaField& gamma, const std::vector<VoltageProfile>& profiles,
                                     MeasurementKind kind, const Mobilities& mob, double noise_level,
                                     std::uint64_t seed);

/// Full pipeline C -> V0 -> gamma -> measurements.
MeasurementSet synthesize_data(const DopingField& truth, const std::vector<VoltageProfile>& profiles,
                               MeasurementKind kind, double lambda_sq, const Mobilities& mob,
                               double noise_level, std::uint64_t seed);

/// Writes manifest.txt plus profile_<j>.csv and measurement_<j>.csv per entry.
void save_measurement_set(const std::filesystem::path& dir, const MeasurementSet& set);

/// Reads a directory written by save_measurement_set. Throws io::FormatError
/// naming the offending path.
MeasurementSet load_measurement_set(const std::filesystem::path& dir, const Grid& grid);

}  // namespace dopinv::forward
