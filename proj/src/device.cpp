#include "dopinv/device.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dopinv::device {

void DeviceParams::validate() const
{
    const std::pair<const char*, double> fields[] = {
        {"permittivity", permittivity},
        {"elementary_charge", elementary_charge},
        {"thermal_voltage", thermal_voltage},
        {"intrinsic_density", intrinsic_density},
        {"mobility_n", mobility_n},
        {"mobility_p", mobility_p},
        {"auger_cn", auger_cn},
        {"auger_cp", auger_cp},
        {"srh_tau_n", srh_tau_n},
        {"srh_tau_p", srh_tau_p},
    };
    for (const auto& [name, value] : fields) {
        if (!(value > 0.0) || !std::isfinite(value)) {
            throw std::invalid_argument(std::string("device parameter '") + name +
                                        "' must be positive and finite");
        }
    }
}

DeviceParams silicon_defaults()
{
    return DeviceParams{
        .permittivity = 11.9 * kVacuumPermittivity,
        .elementary_charge = 1.6e-19,
        .thermal_voltage = 0.0259,
        .intrinsic_density = 1.0e10,
        .mobility_n = 1500.0,
        .mobility_p = 450.0,
        .auger_cn = 2.8e-31,
        .auger_cp = 9.9e-32,
        .srh_tau_n = 1.0e-6,
        .srh_tau_p = 1.0e-5,
    };
}

ScaledParams scale(const DeviceParams& params, double length_cm)
{
    if (!(length_cm > 0.0) || !std::isfinite(length_cm)) {
        throw std::invalid_argument("device length must be positive");
    }
    params.validate();
    const double lambda_sq = params.permittivity * params.thermal_voltage /
                             (params.elementary_charge * params.intrinsic_density *
                              length_cm * length_cm);
    return ScaledParams{
        .lambda_sq = lambda_sq,
        .mu_n = 1.0,
        .mu_p = params.mobility_p / params.mobility_n,
    };
}

double length_for_lambda_sq(const DeviceParams& params, double lambda_sq)
{
    if (!(lambda_sq > 0.0)) {
        throw std::invalid_argument("lambda_sq must be positive");
    }
    params.validate();
    return std::sqrt(params.permittivity * params.thermal_voltage /
                     (params.elementary_charge * params.intrinsic_density * lambda_sq));
}

std::pair<double, double> slotboom_to_densities(double potential, double u, double v)
{
    if (u < 0.0 || v < 0.0) {
        throw std::invalid_argument("Slotboom variables must be non-negative");
    }
    return {std::exp(potential) * u, std::exp(-potential) * v};
}

std::pair<double, double> densities_to_slotboom(double potential, double n, double p)
{
    return {n * std::exp(-potential), p * std::exp(potential)};
}

std::pair<double, double> equilibrium_boundary_densities(double doping)
{
    // Evaluate the larger root directly and take its reciprocal for the
    // other one; the textbook form cancels catastrophically for large |C|.
    const double root = std::sqrt(doping * doping + 4.0);
    if (doping >= 0.0) {
        const double n = 0.5 * (doping + root);
        return {n, 1.0 / n};
    }
    const double p = 0.5 * (-doping + root);
    return {1.0 / p, p};
}

double built_in_potential(double doping)
{
    return std::asinh(0.5 * doping);
}

double recombination_srh(double n, double p, const DeviceParams& params)
{
    if (n < 0.0 || p < 0.0) {
        throw std::invalid_argument("carrier densities must be non-negative");
    }
    // tau_n pairs with the electron term, tau_p with the hole term.
    const double denom = params.srh_tau_n * (n + 1.0) + params.srh_tau_p * (p + 1.0);
    return (n * p - 1.0) / denom;
}

double recombination_auger(double n, double p, const DeviceParams& params)
{
    if (n < 0.0 || p < 0.0) {
        throw std::invalid_argument("carrier densities must be non-negative");
    }
    return (params.auger_cn * n + params.auger_cp * p) * (n * p - 1.0);
}

}  // namespace dopinv::device
