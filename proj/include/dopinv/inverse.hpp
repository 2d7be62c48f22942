#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dopinv/forward.hpp"
#include "dopinv/grid.hpp"

namespace dopinv::inverse {

/// Two-level coefficient gamma = gamma_p + (gamma_n - gamma_p) H_eps(phi).
/// The N-region is {phi >= 0}.
struct LevelSetState {
    ScalarField phi;
    double gamma_p;
    double gamma_n;
    double eps_smooth = 2.0;  // Heaviside half-width in cells

    double eps() const { return eps_smooth * phi.grid().h(); }
    void validate() const;
};

forward::GammaField gamma_from_phi(const LevelSetState& s);

struct ObjectiveValue {
    double value = 0.0;                        // 0.5 sum_j |F_j - Y_j|^2
    std::vector<forward::Measurement> residuals;  // F_j - Y_j per entry

    /// sqrt(2 J), the misfit norm used by the stopping rules.
    double residual_norm() const;
};

ObjectiveValue objective(const LevelSetState& s, const forward::MeasurementSet& data, const forward::Mobilities& mob);

/// dJ/dphi from the discrete adjoint of the harmonic-mean scheme: one extra
/// solve per continuity problem and measurement, with the residual as
/// Dirichlet data on the top contact.
ScalarField gradient_adjoint(const LevelSetState& s, const forward::MeasurementSet& data,
                             const forward::Mobilities& mob);

/// Default central-difference step for gradient_fd.
double default_fd_step(const ScalarField& phi);

/// Central differences of the objective, one cell at a time. Costs two
/// objective evaluations per cell; meant for small grids.
ScalarField gradient_fd(const LevelSetState& s, const forward::MeasurementSet& data, const forward::Mobilities& mob,
                        std::optional<double> step = std::nullopt);

struct InversionConfig {
    double step_size = 0.5;  // beta
    int max_iters = 200;
    double discrepancy_tau = 1.5;
    double grad_tol = 1e-10;
    int record_every = 1;
    int reinit_every = 20;
    int max_halvings = 30;
    bool guard_reinit = true;  // reject a redistancing that increases the objective

    void validate() const;
};

enum class StopReason { Discrepancy, SmallGradient, MaxIterations, Stalled };

std::string stop_reason_name(StopReason r);

struct IterationRecord {
    int iter = 0;
    double residual = 0.0;
    std::optional<double> symdiff_error;
};

struct ReconstructionResult {
    LevelSetState final_state;
    std::vector<IterationRecord> records;
    StopReason stop_reason = StopReason::MaxIterations;
    int iterations = 0;
    double final_residual = 0.0;

    bool converged() const
    {
        return stop_reason == StopReason::Discrepancy || stop_reason == StopReason::SmallGradient;
    }
};

/// Normalized steepest descent phi <- phi - t g / |g|_inf with t starting at
/// step_size, halved until the objective does not increase and doubled back
/// (up to step_size) after each accepted step. phi is redistanced every
/// reinit_every iterations when that does not increase the objective.
/// Stops on the discrepancy principle (noisy data), a small gradient, or
/// max_iters.
ReconstructionResult reconstruct(const forward::MeasurementSet& data, const forward::Mobilities& mob,
                                 const InversionConfig& cfg, const LevelSetState& init,
                                 const std::optional<ScalarField>& ground_truth = std::nullopt);

/// Convergence log CSV "iter,residual,symdiff_error".
std::string convergence_csv(const ReconstructionResult& r);

}  // namespace dopinv::inverse
