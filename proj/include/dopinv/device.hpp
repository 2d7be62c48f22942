#pragma once

#include <utility>

namespace dopinv::device {

/// Physical constants of the semiconductor, in cgs-style device units.
struct DeviceParams {
    double permittivity;       // A s V^-1 cm^-1
    double elementary_charge;  // A s
    double thermal_voltage;    // V
    double intrinsic_density;  // cm^-3
    double mobility_n;         // cm^2 V^-1 s^-1
    double mobility_p;         // cm^2 V^-1 s^-1
    double auger_cn;           // cm^6 / s
    double auger_cp;           // cm^6 / s
    double srh_tau_n;          // s
    double srh_tau_p;          // s

    /// Throws std::invalid_argument naming the first non-positive field.
    void validate() const;
};

/// Dimensionless parameters of the scaled model. Densities are measured in
/// units of n_i and potentials in units of U_T.
struct ScaledParams {
    double lambda_sq;
    double mu_n;
    double mu_p;
};

inline constexpr double kVacuumPermittivity = 8.85e-14;

/// Room-temperature silicon.
DeviceParams silicon_defaults();

/// Nondimensionalize for a device of side length `length_cm`.
///
/// lambda_sq = eps * U_T / (q * n_i * L^2) and mobilities are divided by
/// mobility_n, so the electron mobility becomes 1.
ScaledParams scale(const DeviceParams& params, double length_cm);

/// Device length for which scale() yields the requested lambda_sq.
double length_for_lambda_sq(const DeviceParams& params, double lambda_sq);

/// (n, p) = (e^V u, e^-V v). Throws on negative u or v.
std::pair<double, double> slotboom_to_densities(double potential, double u, double v);

/// Inverse transform: (u, v) = (n e^-V, p e^V).
std::pair<double, double> densities_to_slotboom(double potential, double n, double p);

/// Carrier densities at an Ohmic contact in thermal equilibrium with
/// vanishing space charge: n - p = C and n p = 1.
std::pair<double, double> equilibrium_boundary_densities(double doping);

/// ln(n_D), equal to asinh(C/2).
double built_in_potential(double doping);

/// Shockley-Read-Hall rate in scaled units (n_i = 1).
double recombination_srh(double n, double p, const DeviceParams& params);

/// Auger rate in scaled units (n_i = 1).
double recombination_auger(double n, double p, const DeviceParams& params);

}  // namespace dopinv::device
