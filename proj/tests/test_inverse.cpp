#include "doctest.h"

#include <cmath>
#include <random>
#include <stdexcept>

#include "dopinv/inverse.hpp"
#include "dopinv/level_set.hpp"

using namespace dopinv;
using namespace dopinv::inverse;
using forward::MeasurementKind;
using doctest::Approx;

namespace {

const forward::Mobilities kMob{1.0, 0.3};
const double kGammaP = std::exp(std::asinh(-2.5));
const double kGammaN = std::exp(std::asinh(2.5));

LevelSetState state(ScalarField phi)
{
    return LevelSetState{std::move(phi), kGammaP, kGammaN, 2.0};
}

ScalarField random_phi(const Grid& g, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-3 * g.h(), 3 * g.h());
    ScalarField phi(g);
    for (double& v : phi.values()) v = d(rng);
    return phi;
}

std::vector<forward::VoltageProfile> two_profiles(const Grid& g)
{
    return {forward::contact_voltage(0.3, 0.2, 1.0, g), forward::contact_voltage(0.7, 0.2, -0.5, g)};
}

forward::MeasurementSet data_for(const ScalarField& phi, MeasurementKind kind, double noise = 0.0,
                                 std::uint64_t seed = 0)
{
    return forward::synthesize_from_gamma(gamma_from_phi(state(phi)), two_profiles(phi.grid()), kind, kMob, noise,
                                          seed);
}

double rel_l2(const ScalarField& a, const ScalarField& b)
{
    double d = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        d += (a[k] - b[k]) * (a[k] - b[k]);
        nb += b[k] * b[k];
    }
    return std::sqrt(d / nb);
}

}  // namespace

TEST_CASE("gamma_from_phi")
{
    const Grid g(16);
    const double eps = 2 * g.h();
    const auto hi = gamma_from_phi(state(ScalarField(g, 10 * eps)));
    for (double v : hi.values().values()) CHECK(v == kGammaN);
    const auto lo = gamma_from_phi(state(ScalarField(g, -10 * eps)));
    for (double v : lo.values().values()) CHECK(v == kGammaP);

    const auto half = gamma_from_phi(state(level_set::init_phi(g, level_set::HalfPlane{'y', 0.5})));
    for (int j = 0; j < g.n(); ++j) {
        for (int i = 0; i < g.n(); ++i) {
            CHECK(half.values()(i, j) >= kGammaP);
            CHECK(half.values()(i, j) <= kGammaN);
            if (j > 0) CHECK(half.values()(i, j) >= half.values()(i, j - 1));
        }
    }

    // Cells already saturated keep their value when phi is shifted further out.
    const auto phi = random_phi(g, 3);
    ScalarField shifted = phi;
    for (double& v : shifted.values()) v = v > eps ? v + 1.0 : v;
    const auto a = gamma_from_phi(state(phi)), b = gamma_from_phi(state(shifted));
    CHECK(a.values() == b.values());

    CHECK_THROWS_AS(gamma_from_phi(LevelSetState{phi, 2.0, 1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("objective")
{
    const Grid g(16);
    const auto phi = random_phi(g, 4);
    for (auto kind : {MeasurementKind::PointwiseTrace, MeasurementKind::CurrentFlow}) {
        const auto self = objective(state(phi), data_for(phi, kind), kMob);
        CHECK(self.value <= 1e-16);
        CHECK(self.value >= 0.0);

        auto data = data_for(random_phi(g, 5), kind);
        const auto j1 = objective(state(phi), data, kMob);
        CHECK(j1.value > 0.0);
        CHECK(j1.residual_norm() == Approx(std::sqrt(2 * j1.value)).epsilon(1e-15));

        // Y' = 2Y - F doubles every residual.
        const auto F = data_for(phi, kind);
        for (std::size_t e = 0; e < data.entries.size(); ++e) {
            if (kind == MeasurementKind::PointwiseTrace) {
                Trace t = data.entries[e].data.trace();
                for (std::size_t k = 0; k < t.size(); ++k) t[k] = 2 * t[k] - F.entries[e].clean.trace()[k];
                data.entries[e].data = forward::Measurement::pointwise(t);
            } else {
                data.entries[e].data = forward::Measurement::current_flow(2 * data.entries[e].data.scalar() -
                                                                          F.entries[e].clean.scalar());
            }
        }
        CHECK(objective(state(phi), data, kMob).value == Approx(4 * j1.value).epsilon(1e-9));
    }
}

TEST_CASE("pointwise objective uses the h-weighted trace norm")
{
    const Grid g(8);
    const auto phi = random_phi(g, 6);
    const auto data = data_for(random_phi(g, 7), MeasurementKind::PointwiseTrace);
    const auto J = objective(state(phi), data, kMob);
    const auto F = data_for(phi, MeasurementKind::PointwiseTrace);
    double expect = 0.0;
    for (std::size_t e = 0; e < data.entries.size(); ++e) {
        for (int k = 0; k < g.n(); ++k) {
            const double r = F.entries[e].clean.trace()[k] - data.entries[e].data.trace()[k];
            expect += 0.5 * g.h() * r * r;
        }
    }
    CHECK(J.value == Approx(expect).epsilon(1e-9));
}

TEST_CASE("adjoint gradient matches central differences on 8x8")
{
    const Grid g(8);
    for (auto kind : {MeasurementKind::PointwiseTrace, MeasurementKind::CurrentFlow}) {
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            const auto phi = random_phi(g, 100 + seed);
            const auto data = data_for(random_phi(g, 200 + seed), kind);
            const auto adj = gradient_adjoint(state(phi), data, kMob);
            const auto fd = gradient_fd(state(phi), data, kMob);
            CHECK(rel_l2(adj, fd) <= 1e-4);
        }
    }
}

TEST_CASE("gradient degenerate cases")
{
    const Grid g(8);
    const auto phi = random_phi(g, 8);
    const auto self = data_for(phi, MeasurementKind::PointwiseTrace);
    CHECK(gradient_adjoint(state(phi), self, kMob).max_abs() <= 1e-10);
    CHECK(gradient_fd(state(phi), self, kMob).max_abs() <= 1e-10);

    const auto other = data_for(random_phi(g, 9), MeasurementKind::PointwiseTrace);
    const double eps = 2 * g.h();
    CHECK(gradient_adjoint(state(ScalarField(g, 10 * eps)), other, kMob).max_abs() == 0.0);
    CHECK(gradient_adjoint(state(ScalarField(g, -10 * eps)), other, kMob).max_abs() == 0.0);

    // Duplicating every measurement doubles J and its gradient.
    auto twice = other;
    twice.entries.insert(twice.entries.end(), other.entries.begin(), other.entries.end());
    const auto g1 = gradient_fd(state(phi), other, kMob, 1e-6);
    const auto g2 = gradient_fd(state(phi), twice, kMob, 1e-6);
    for (std::size_t k = 0; k < g1.size(); ++k) CHECK(g2[k] == Approx(2 * g1[k]).epsilon(1e-9).scale(g1.max_abs()));
    CHECK_THROWS_AS(gradient_fd(state(phi), other, kMob, 0.0), std::invalid_argument);
    CHECK(default_fd_step(ScalarField(g, -2.0)) == Approx(2e-5 + 1e-8).epsilon(1e-15));
}

TEST_CASE("reconstruct: fixed point and zero step")
{
    const Grid g(16);
    const auto truth_phi = level_set::init_phi(g, level_set::HalfPlane{'y', 0.5});
    const auto truth = indicator_nonnegative(truth_phi);
    const auto data = data_for(truth_phi, MeasurementKind::PointwiseTrace);

    const auto fixed = reconstruct(data, kMob, InversionConfig{}, state(truth_phi), truth);
    CHECK(fixed.converged());
    CHECK(fixed.records.size() == 1);
    CHECK(fixed.final_residual <= 1e-8);
    CHECK(fixed.final_state.phi == truth_phi);

    InversionConfig frozen;
    frozen.step_size = 0.0;
    frozen.max_iters = 5;
    const auto init = state(level_set::init_phi(g, level_set::Circle{0.5, 0.5, 0.25}));
    const auto still = reconstruct(data, kMob, frozen, init, truth);
    CHECK(still.stop_reason == StopReason::MaxIterations);
    CHECK(still.iterations == 5);
    CHECK(still.final_state.phi == init.phi);
    CHECK_FALSE(still.converged());
}

TEST_CASE("reconstruct: monotone residuals, determinism, csv")
{
    const Grid g(16);
    const auto truth_phi = level_set::init_phi(g, level_set::Circle{0.5, 0.6, 0.3});
    const auto data = data_for(truth_phi, MeasurementKind::PointwiseTrace);
    InversionConfig cfg;
    cfg.max_iters = 40;
    const auto init = state(level_set::init_phi(g, level_set::Circle{0.5, 0.5, 0.25}));
    const auto r1 = reconstruct(data, kMob, cfg, init, indicator_nonnegative(truth_phi));
    for (std::size_t k = 1; k < r1.records.size(); ++k) CHECK(r1.records[k].residual <= r1.records[k - 1].residual);
    CHECK(r1.records.back().residual < r1.records.front().residual);

    const auto r2 = reconstruct(data, kMob, cfg, init, indicator_nonnegative(truth_phi));
    CHECK(convergence_csv(r1) == convergence_csv(r2));
    CHECK(r1.final_state.phi == r2.final_state.phi);

    const std::string csv = convergence_csv(r1);
    CHECK(csv.rfind("iter,residual,symdiff_error\n0,", 0) == 0);
    const auto blind = reconstruct(data, kMob, cfg, init);
    const std::string bcsv = convergence_csv(blind);
    CHECK(bcsv.substr(bcsv.find('\n') + 1, 2) == "0,");
    CHECK(bcsv.find(",\n") != std::string::npos);
    CHECK(blind.final_state.phi == r1.final_state.phi);
}

TEST_CASE("reconstruct: discrepancy stop")
{
    const Grid g(16);
    const auto truth_phi = level_set::init_phi(g, level_set::HalfPlane{'y', 0.5});
    const auto data = data_for(truth_phi, MeasurementKind::PointwiseTrace, 0.05, 3);
    InversionConfig cfg;
    const auto init = state(level_set::init_phi(g, level_set::Circle{0.5, 0.5, 0.25}));
    const auto r = reconstruct(data, kMob, cfg, init);
    REQUIRE(r.stop_reason == StopReason::Discrepancy);
    CHECK(r.final_residual <= cfg.discrepancy_tau * data.data_noise_norm());
    CHECK(r.converged());
}

TEST_CASE("inversion config validation")
{
    InversionConfig c;
    CHECK_NOTHROW(c.validate());
    c.max_iters = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.step_size = -1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.discrepancy_tau = 0.5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK(stop_reason_name(StopReason::Discrepancy) == "discrepancy");
}
