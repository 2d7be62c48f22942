#include "dopinv/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dopinv/elliptic.hpp"
#include "dopinv/io.hpp"
#include "dopinv/level_set.hpp"

namespace dopinv::inverse {

using forward::Measurement;
using forward::MeasurementKind;
using forward::MeasurementSet;
using forward::Mobilities;

void LevelSetState::validate() const
{
    if (!(gamma_p > 0.0 && gamma_p < gamma_n)) throw std::invalid_argument("level-set contrast needs 0 < gamma_p < gamma_n");
    if (!(eps_smooth > 0.0)) throw std::invalid_argument("Heaviside smoothing width must be positive");
    if (!phi.all_finite()) throw std::invalid_argument("level-set function must be finite");
}

forward::GammaField gamma_from_phi(const LevelSetState& s)
{
    s.validate();
    const double eps = s.eps();
    ScalarField g(s.phi.grid());
    for (std::size_t k = 0; k < g.size(); ++k) {
        g[k] = s.gamma_p + (s.gamma_n - s.gamma_p) * level_set::smoothed_heaviside(s.phi[k], eps);
    }
    return forward::GammaField(std::move(g));
}

double ObjectiveValue::residual_norm() const
{
    return std::sqrt(2.0 * value);
}

namespace {

struct Evaluation {
    ObjectiveValue objective;
    std::optional<ScalarField> gradient;
};

// Conductivity-weighted continuity operator for one carrier type.
struct Carrier {
    ScalarField coefficient;
    double sign;  // +1: current enters the trace with +, Dirichlet data -U
    elliptic::SpdSolver solver;

    Carrier(ScalarField a, double s)
        : coefficient(std::move(a)), sign(s),
          solver(elliptic::assemble(elliptic::EllipticProblem::homogeneous(coefficient)).matrix)
    {
    }

    ScalarField solve(const Trace& bottom, const Trace& top) const
    {
        const Grid& g = coefficient.grid();
        const elliptic::EllipticProblem p{coefficient, bottom, top, ScalarField(g)};
        return elliptic::to_field(g, solver.solve(elliptic::assemble_rhs(p)));
    }
};

double misfit_sq(const Measurement& r)
{
    if (r.kind() == MeasurementKind::CurrentFlow) return r.scalar() * r.scalar();
    double sum = 0.0;
    for (double v : r.trace().values()) sum += v * v;
    return r.trace().grid().h() * sum;
}

// Adds dJ/da for one forward solution w and its adjoint field wa to `out`.
// Differentiates the assembled residual A(a) w - b(a) and the flux output.
void accumulate_coefficient_sensitivity(const Carrier& c, const ScalarField& w, const ScalarField& wa,
                                        const Trace& bottom, const Trace& rho, ScalarField& out)
{
    const ScalarField& a = c.coefficient;
    const Grid& g = a.grid();
    const int n = g.n();
    auto face = [&](int i, int j, int ni, int nj) {
        const double ap = a(i, j);
        const double aq = a(ni, nj);
        const double denom = (ap + aq) * (ap + aq);
        const double t = (w(i, j) - w(ni, nj)) * (wa(i, j) - wa(ni, nj));
        out(i, j) += 2.0 * aq * aq / denom * t;
        out(ni, nj) += 2.0 * ap * ap / denom * t;
    };
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            if (i + 1 < n) face(i, j, i + 1, j);
            if (j + 1 < n) face(i, j, i, j + 1);
        }
    }
    for (int i = 0; i < n; ++i) {
        out(i, 0) += 2.0 * (w(i, 0) - bottom[i]) * wa(i, 0);
        // Top face: Dirichlet value 0, plus the explicit dependence of the
        // flux output on the boundary-cell coefficient.
        out(i, n - 1) += 2.0 * w(i, n - 1) * wa(i, n - 1);
        out(i, n - 1) += -2.0 * c.sign * rho[i] * w(i, n - 1);
    }
}

void check_inputs(const LevelSetState& s, const MeasurementSet& data)
{
    s.validate();
    data.validate();
    for (const auto& e : data.entries) {
        if (!(e.profile.grid() == s.phi.grid())) throw std::invalid_argument("measurement grid differs from phi grid");
    }
}

Evaluation evaluate(const LevelSetState& s, const MeasurementSet& data, const Mobilities& mob, bool with_gradient)
{
    check_inputs(s, data);
    const Grid& g = s.phi.grid();
    const forward::GammaField gamma = gamma_from_phi(s);

    ScalarField a_n = gamma.values();
    for (double& x : a_n.values()) x *= mob.mu_n;
    ScalarField a_p = gamma.reciprocal();
    for (double& x : a_p.values()) x *= mob.mu_p;
    const Carrier electrons(std::move(a_n), +1.0);
    const Carrier holes(std::move(a_p), -1.0);

    Evaluation ev;
    ScalarField da_n(g);
    ScalarField da_p(g);
    const Trace zero_top(g, Segment::Top);

    for (const auto& entry : data.entries) {
        const Trace& volt = entry.profile.values();
        const Trace u_bottom = entry.profile.scaled(-1.0).values();
        const ScalarField u = electrons.solve(u_bottom, zero_top);
        const ScalarField v = holes.solve(volt, zero_top);

        Trace trace = elliptic::flux_gamma1(u, electrons.coefficient);
        const Trace vf = elliptic::flux_gamma1(v, holes.coefficient);
        for (std::size_t k = 0; k < trace.size(); ++k) trace[k] -= vf[k];

        Trace rho(g, Segment::Top);
        if (data.kind == MeasurementKind::PointwiseTrace) {
            const Trace& y = entry.data.trace();
            for (std::size_t k = 0; k < rho.size(); ++k) rho[k] = trace[k] - y[k];
            ev.objective.residuals.push_back(Measurement::pointwise(rho));
        } else {
            const double r = integrate_trace(trace) - entry.data.scalar();
            for (double& x : rho.values()) x = r;
            ev.objective.residuals.push_back(Measurement::current_flow(r));
        }
        ev.objective.value += 0.5 * misfit_sq(ev.objective.residuals.back());

        if (with_gradient) {
            Trace rho_neg = rho;
            for (double& x : rho_neg.values()) x = -x;
            const Trace zero_bottom(g, Segment::Bottom);
            const ScalarField wu = electrons.solve(zero_bottom, rho);
            const ScalarField wv = holes.solve(zero_bottom, rho_neg);
            accumulate_coefficient_sensitivity(electrons, u, wu, u_bottom, rho, da_n);
            accumulate_coefficient_sensitivity(holes, v, wv, volt, rho, da_p);
        }
    }

    if (with_gradient) {
        const double eps = s.eps();
        const double contrast = s.gamma_n - s.gamma_p;
        ScalarField grad(g);
        for (std::size_t k = 0; k < grad.size(); ++k) {
            const double gk = gamma.values()[k];
            const double dj_dgamma = mob.mu_n * da_n[k] - mob.mu_p / (gk * gk) * da_p[k];
            grad[k] = dj_dgamma * contrast * level_set::smoothed_delta(s.phi[k], eps);
        }
        ev.gradient = std::move(grad);
    }
    return ev;
}

}  // namespace

ObjectiveValue objective(const LevelSetState& s, const MeasurementSet& data, const Mobilities& mob)
{
    return evaluate(s, data, mob, false).objective;
}

ScalarField gradient_adjoint(const LevelSetState& s, const MeasurementSet& data, const Mobilities& mob)
{
    return *evaluate(s, data, mob, true).gradient;
}

double default_fd_step(const ScalarField& phi)
{
    return 1e-5 * phi.max_abs() + 1e-8;
}

ScalarField gradient_fd(const LevelSetState& s, const MeasurementSet& data, const Mobilities& mob,
                        std::optional<double> step)
{
    const double delta = step.value_or(default_fd_step(s.phi));
    if (!(delta > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
    ScalarField grad(s.phi.grid());
    LevelSetState probe = s;
    for (std::size_t k = 0; k < grad.size(); ++k) {
        probe.phi[k] = s.phi[k] + delta;
        const double jp = objective(probe, data, mob).value;
        probe.phi[k] = s.phi[k] - delta;
        const double jm = objective(probe, data, mob).value;
        probe.phi[k] = s.phi[k];
        grad[k] = (jp - jm) / (2.0 * delta);
    }
    return grad;
}

void InversionConfig::validate() const
{
    if (!(step_size >= 0.0)) throw std::invalid_argument("step_size must be non-negative");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(discrepancy_tau >= 1.0)) throw std::invalid_argument("discrepancy_tau must be >= 1");
    if (!(grad_tol >= 0.0)) throw std::invalid_argument("grad_tol must be non-negative");
    if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
    if (reinit_every < 0) throw std::invalid_argument("reinit_every must be >= 0");
    if (max_halvings < 0) throw std::invalid_argument("max_halvings must be >= 0");
}

std::string stop_reason_name(StopReason r)
{
    switch (r) {
    case StopReason::Discrepancy: return "discrepancy";
    case StopReason::SmallGradient: return "small-gradient";
    case StopReason::MaxIterations: return "max-iterations";
    case StopReason::Stalled: return "stalled";
    }
    return "?";
}

ReconstructionResult reconstruct(const MeasurementSet& data, const Mobilities& mob, const InversionConfig& cfg,
                                 const LevelSetState& init, const std::optional<ScalarField>& ground_truth)
{
    cfg.validate();
    check_inputs(init, data);
    if (ground_truth && !(ground_truth->grid() == init.phi.grid())) {
        throw std::invalid_argument("ground truth grid differs from phi grid");
    }

    ReconstructionResult result{init, {}, StopReason::MaxIterations, 0, 0.0};
    LevelSetState& state = result.final_state;
    Evaluation current = evaluate(state, data, mob, true);

    auto make_record = [&](int iter) {
        IterationRecord rec{iter, current.objective.residual_norm(), std::nullopt};
        if (ground_truth) rec.symdiff_error = symmetric_difference_error(indicator_nonnegative(state.phi), *ground_truth);
        return rec;
    };
    result.records.push_back(make_record(0));

    const double noise_norm = data.data_noise_norm();
    double step = cfg.step_size;
    int iter = 0;
    bool just_redistanced = false;
    auto redistance = [&] {
        LevelSetState redistanced = state;
        redistanced.phi = level_set::reinitialize(state.phi);
        Evaluation ev = evaluate(redistanced, data, mob, true);
        just_redistanced = true;
        if (cfg.guard_reinit && ev.objective.value > current.objective.value) return;
        state = std::move(redistanced);
        current = std::move(ev);
    };
    while (true) {
        const double resid = current.objective.residual_norm();
        if (data.noise_level > 0.0 && resid <= cfg.discrepancy_tau * noise_norm) {
            result.stop_reason = StopReason::Discrepancy;
            break;
        }
        double gmax = current.gradient->max_abs();
        if (gmax <= cfg.grad_tol && cfg.step_size > 0.0 && !just_redistanced) {
            // Large steps can carry every cell out of the Heaviside band;
            // redistancing restores a band around the interface.
            redistance();
            gmax = current.gradient->max_abs();
        }
        if (gmax <= cfg.grad_tol) {
            result.stop_reason = StopReason::SmallGradient;
            break;
        }
        just_redistanced = false;
        if (iter >= cfg.max_iters) {
            result.stop_reason = StopReason::MaxIterations;
            break;
        }
        ++iter;

        bool accepted = false;
        for (int halving = 0; halving <= cfg.max_halvings; ++halving) {
            LevelSetState trial = state;
            const double scale = step / (gmax + 1e-300);
            for (std::size_t k = 0; k < trial.phi.size(); ++k) trial.phi[k] -= scale * (*current.gradient)[k];
            const double jt = objective(trial, data, mob).value;
            if (jt <= current.objective.value) {
                state = std::move(trial);
                current = evaluate(state, data, mob, true);
                step = std::min(cfg.step_size, 2.0 * step);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            result.stop_reason = StopReason::Stalled;
            --iter;
            break;
        }

        if (cfg.reinit_every > 0 && cfg.step_size > 0.0 && iter % cfg.reinit_every == 0) redistance();

        if (iter % cfg.record_every == 0) result.records.push_back(make_record(iter));
    }

    if (result.records.back().iter != iter) result.records.push_back(make_record(iter));
    result.iterations = iter;
    result.final_residual = current.objective.residual_norm();
    return result;
}

std::string convergence_csv(const ReconstructionResult& r)
{
    std::ostringstream os;
    os << "iter,residual,symdiff_error\n";
    for (const auto& rec : r.records) {
        os << rec.iter << ',' << io::format_double(rec.residual) << ',';
        if (rec.symdiff_error) os << io::format_double(*rec.symdiff_error);
        os << '\n';
    }
    return os.str();
}

}  // namespace dopinv::inverse
