#include "dopinv/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SparseCholesky>

#include "dopinv/device.hpp"

namespace dopinv::elliptic {

namespace {

void check_problem(const EllipticProblem& p)
{
    const Grid& g = p.coefficient.grid();
    if (!(p.source.grid() == g) || !(p.dirichlet_bottom.grid() == g) || !(p.dirichlet_top.grid() == g)) {
        throw std::invalid_argument("elliptic problem mixes grids");
    }
    if (p.dirichlet_bottom.segment() != Segment::Bottom || p.dirichlet_top.segment() != Segment::Top) {
        throw std::invalid_argument("elliptic problem Dirichlet traces are on the wrong segments");
    }
    for (std::size_t k = 0; k < p.coefficient.size(); ++k) {
        if (!(p.coefficient[k] > 0.0) || !std::isfinite(p.coefficient[k])) {
            throw std::invalid_argument("elliptic coefficient must be positive and finite (cell " +
                                        std::to_string(k) + ")");
        }
    }
}

double max_abs(const Eigen::VectorXd& v)
{
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

}  // namespace

EllipticProblem EllipticProblem::homogeneous(const ScalarField& coefficient)
{
    const Grid& g = coefficient.grid();
    return EllipticProblem{coefficient, Trace(g, Segment::Bottom), Trace(g, Segment::Top), ScalarField(g)};
}

Eigen::VectorXd assemble_rhs(const EllipticProblem& p)
{
    check_problem(p);
    const Grid& g = p.coefficient.grid();
    const int n = g.n();
    const double h2 = g.h() * g.h();
    Eigen::VectorXd b(static_cast<Eigen::Index>(g.cell_count()));
    for (std::size_t k = 0; k < g.cell_count(); ++k) b[static_cast<Eigen::Index>(k)] = -h2 * p.source[k];
    for (int i = 0; i < n; ++i) {
        const auto bot = static_cast<Eigen::Index>(g.index(i, 0));
        const auto top = static_cast<Eigen::Index>(g.index(i, n - 1));
        b[bot] += 2.0 * p.coefficient(i, 0) * p.dirichlet_bottom[i];
        b[top] += 2.0 * p.coefficient(i, n - 1) * p.dirichlet_top[i];
    }
    return b;
}

LinearSystem assemble(const EllipticProblem& p)
{
    check_problem(p);
    const Grid& g = p.coefficient.grid();
    const int n = g.n();
    const ScalarField& a = p.coefficient;

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(5 * g.cell_count());
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const auto row = static_cast<int>(g.index(i, j));
            double diag = 0.0;
            auto couple = [&](int ni, int nj) {
                const double af = face_coefficient(a(i, j), a(ni, nj));
                diag += af;
                triplets.emplace_back(row, static_cast<int>(g.index(ni, nj)), -af);
            };
            if (i > 0) couple(i - 1, j);
            if (i < n - 1) couple(i + 1, j);
            if (j > 0) couple(i, j - 1);
            if (j < n - 1) couple(i, j + 1);
            // Dirichlet faces on the contacts; insulating faces add nothing.
            if (j == 0) diag += 2.0 * a(i, j);
            if (j == n - 1) diag += 2.0 * a(i, j);
            triplets.emplace_back(row, row, diag);
        }
    }
    LinearSystem sys{g, Eigen::SparseMatrix<double>(static_cast<Eigen::Index>(g.cell_count()),
                                                    static_cast<Eigen::Index>(g.cell_count())),
                     assemble_rhs(p)};
    sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
    sys.matrix.makeCompressed();
    return sys;
}

struct SpdSolver::Impl {
    Eigen::SparseMatrix<double> matrix;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

SpdSolver::SpdSolver(const Eigen::SparseMatrix<double>& matrix) : impl_(std::make_unique<Impl>())
{
    impl_->matrix = matrix;
    impl_->ldlt.compute(impl_->matrix);
    if (impl_->ldlt.info() != Eigen::Success) {
        throw SolverError("sparse LDL^T factorization failed (matrix not SPD?)", std::nan(""));
    }
}

SpdSolver::~SpdSolver() = default;
SpdSolver::SpdSolver(SpdSolver&&) noexcept = default;
SpdSolver& SpdSolver::operator=(SpdSolver&&) noexcept = default;

Eigen::VectorXd SpdSolver::solve(const Eigen::VectorXd& rhs, double rtol) const
{
    if (!(rtol > 0.0) || rtol > 1e-6) {
        throw std::invalid_argument("solve rtol must lie in (0, 1e-6]");
    }
    const double bnorm = rhs.norm();
    if (bnorm == 0.0) return Eigen::VectorXd::Zero(rhs.size());

    Eigen::VectorXd w = impl_->ldlt.solve(rhs);
    Eigen::VectorXd r = rhs - impl_->matrix * w;
    double rnorm = r.norm();
    constexpr int kMaxRefinements = 5;
    for (int it = 0; it < kMaxRefinements && rnorm > rtol * bnorm; ++it) {
        w += impl_->ldlt.solve(r);
        r = rhs - impl_->matrix * w;
        rnorm = r.norm();
    }
    if (!(rnorm <= rtol * bnorm)) {
        throw SolverError("linear solve stalled at relative residual " + std::to_string(rnorm / bnorm),
                          rnorm / bnorm);
    }
    return w;
}

ScalarField solve_spd(const LinearSystem& s, double rtol)
{
    const SpdSolver solver(s.matrix);
    return to_field(s.grid, solver.solve(s.rhs, rtol));
}

ScalarField to_field(const Grid& grid, const Eigen::VectorXd& v)
{
    return ScalarField(grid, std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd to_vector(const ScalarField& f)
{
    const auto vals = f.values();
    return Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

Trace flux_gamma1(const ScalarField& w, const ScalarField& a, const Trace& dirichlet_top)
{
    const Grid& g = w.grid();
    const int n = g.n();
    Trace out(g, Segment::Top);
    for (int i = 0; i < n; ++i) {
        out[i] = a(i, n - 1) * (dirichlet_top[i] - w(i, n - 1)) * (2.0 / g.h());
    }
    return out;
}

Trace flux_gamma1(const ScalarField& w, const ScalarField& a)
{
    return flux_gamma1(w, a, Trace(w.grid(), Segment::Top));
}

Trace built_in_trace(const ScalarField& doping, Segment segment)
{
    if (!is_dirichlet(segment)) throw std::invalid_argument("built-in potential only applies on contacts");
    const Grid& g = doping.grid();
    Trace t(g, segment);
    for (int k = 0; k < g.n(); ++k) t[k] = device::built_in_potential(doping[g.boundary_cell(segment, k)]);
    return t;
}

ScalarField equilibrium_residual(const ScalarField& doping, double lambda_sq, const ScalarField& potential)
{
    const Grid& g = doping.grid();
    const auto unit = ScalarField(g, 1.0);
    EllipticProblem p{unit, built_in_trace(doping, Segment::Bottom), built_in_trace(doping, Segment::Top),
                      ScalarField(g)};
    const LinearSystem sys = assemble(p);
    const Eigen::VectorXd v = to_vector(potential);
    const Eigen::VectorXd lap_part = (sys.matrix * v - sys.rhs) * (-lambda_sq / (g.h() * g.h()));
    ScalarField r(g);
    for (std::size_t k = 0; k < g.cell_count(); ++k) {
        const double vk = potential[k];
        r[k] = lap_part[static_cast<Eigen::Index>(k)] - (std::exp(vk) - std::exp(-vk) - doping[k]);
    }
    return r;
}

ScalarField newton_equilibrium(const ScalarField& doping, double lambda_sq, double tol, NewtonReport* report)
{
    if (!(lambda_sq > 0.0)) throw std::invalid_argument("lambda_sq must be positive");
    if (!doping.all_finite()) throw std::invalid_argument("doping must be finite");
    const Grid& g = doping.grid();
    const double h2 = g.h() * g.h();
    const auto count = static_cast<Eigen::Index>(g.cell_count());

    EllipticProblem p{ScalarField(g, 1.0), built_in_trace(doping, Segment::Bottom),
                      built_in_trace(doping, Segment::Top), ScalarField(g)};
    const LinearSystem lap = assemble(p);
    const Eigen::VectorXd c = to_vector(doping);

    // Scaled residual: lambda^2 lap_h V - (e^V - e^-V - C), returned negated so
    // that the Newton matrix below is its (SPD) Jacobian times h^2.
    auto residual = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd r = (lap.matrix * v - lap.rhs) * (lambda_sq / h2);
        for (Eigen::Index k = 0; k < count; ++k) r[k] += std::exp(v[k]) - std::exp(-v[k]) - c[k];
        return r;
    };

    Eigen::VectorXd v(count);
    for (Eigen::Index k = 0; k < count; ++k) v[k] = device::built_in_potential(c[k]);
    Eigen::VectorXd r = residual(v);
    double rnorm = max_abs(r);
    NewtonReport local;
    local.residual_history.push_back(rnorm);

    int iter = 0;
    while (rnorm > tol) {
        if (iter >= kNewtonMaxIterations) {
            throw SolverError("Newton did not converge in " + std::to_string(kNewtonMaxIterations) +
                              " iterations, residual " + std::to_string(rnorm), rnorm);
        }
        Eigen::SparseMatrix<double> jac = lap.matrix * lambda_sq;
        for (Eigen::Index k = 0; k < count; ++k) {
            jac.coeffRef(k, k) += h2 * (std::exp(v[k]) + std::exp(-v[k]));
        }
        const SpdSolver solver(jac);
        const Eigen::VectorXd rhs = -h2 * r;
        const Eigen::VectorXd step = solver.solve(rhs, 1e-12);

        double t = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
            Eigen::VectorXd trial = v + t * step;
            Eigen::VectorXd rt = residual(trial);
            const double tn = max_abs(rt);
            if (std::isfinite(tn) && tn < rnorm) {
                v = std::move(trial);
                r = std::move(rt);
                rnorm = tn;
                accepted = true;
                break;
            }
        }
        ++iter;
        if (!accepted) {
            throw SolverError("Newton line search failed to reduce residual " + std::to_string(rnorm), rnorm);
        }
        local.residual_history.push_back(rnorm);
    }
    local.iterations = iter;
    if (report) *report = std::move(local);
    return to_field(g, v);
}

}  // namespace dopinv::elliptic
