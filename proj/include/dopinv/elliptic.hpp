#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Sparse>

#include "dopinv/grid.hpp"

namespace dopinv::elliptic {

/// A solve failed to reach its tolerance. Carries the last achieved residual.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual)
    {
    }
    double residual() const { return residual_; }

private:
    double residual_;
};

/// div(a grad w) = f on the unit square, w given on the bottom and top
/// contacts, zero normal flux on the left and right sides.
struct EllipticProblem {
    ScalarField coefficient;
    Trace dirichlet_bottom;
    Trace dirichlet_top;
    ScalarField source;

    /// Zero source, zero Dirichlet data.
    static EllipticProblem homogeneous(const ScalarField& coefficient);
};

/// Symmetric positive-definite 5-point system A w = b. Rows are scaled so
/// that A w - b = -h^2 (div(a grad w) - f) at every cell.
struct LinearSystem {
    Grid grid;
    Eigen::SparseMatrix<double> matrix;
    Eigen::VectorXd rhs;
};

/// Harmonic mean of two positive cell coefficients.
inline double face_coefficient(double a, double b)
{
    return 2.0 * a * b / (a + b);
}

/// Cell-centered finite volumes with harmonic face averaging. Dirichlet faces
/// use the ghost value 2g - w and are folded into the right-hand side.
LinearSystem assemble(const EllipticProblem& p);

/// Right-hand side alone, for reusing a factorized matrix with new data.
Eigen::VectorXd assemble_rhs(const EllipticProblem& p);

inline constexpr double kDefaultRtol = 1e-10;

/// Sparse Cholesky factorization with residual-checked solves.
class SpdSolver {
public:
    explicit SpdSolver(const Eigen::SparseMatrix<double>& matrix);
    ~SpdSolver();
    SpdSolver(SpdSolver&&) noexcept;
    SpdSolver& operator=(SpdSolver&&) noexcept;

    /// Returns w with |A w - b|_2 <= rtol |b|_2, refining iteratively if the
    /// direct solve alone falls short. Throws SolverError otherwise.
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs, double rtol = kDefaultRtol) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

ScalarField solve_spd(const LinearSystem& s, double rtol = kDefaultRtol);

ScalarField to_field(const Grid& grid, const Eigen::VectorXd& v);
Eigen::VectorXd to_vector(const ScalarField& f);

/// Conormal flux a dw/dnu on each top face, (2/h) a_cell (g_top - w_cell),
/// consistent with the ghost-cell scheme.
Trace flux_gamma1(const ScalarField& w, const ScalarField& a, const Trace& dirichlet_top);

/// Flux with homogeneous Dirichlet data on the top contact.
Trace flux_gamma1(const ScalarField& w, const ScalarField& a);

struct NewtonReport {
    int iterations = 0;
    std::vector<double> residual_history;  // max-norm, one entry per accepted iterate
};

/// Dirichlet data for the equilibrium potential: the built-in potential of
/// the doping in each boundary-adjacent cell.
Trace built_in_trace(const ScalarField& doping, Segment segment);

/// Pointwise residual lambda^2 lap_h V - (e^V - e^-V - C) of the discrete
/// equilibrium Poisson problem.
ScalarField equilibrium_residual(const ScalarField& doping, double lambda_sq, const ScalarField& potential);

inline constexpr int kNewtonMaxIterations = 50;

/// Damped Newton for lambda^2 lap V = e^V - e^-V - C, V = asinh(C/2) on the
/// contacts, zero normal derivative on the insulating sides. Stops when the
/// residual max-norm is <= tol. Throws SolverError on divergence.
ScalarField newton_equilibrium(const ScalarField& doping, double lambda_sq, double tol = 1e-10,
                               NewtonReport* report = nullptr);

}  // namespace dopinv::elliptic
