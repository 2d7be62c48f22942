#include "dopinv/level_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace dopinv::level_set {

double smoothed_heaviside(double t, double eps)
{
    if (!(eps > 0.0)) throw std::invalid_argument("Heaviside smoothing width must be positive");
    if (t <= -eps) return 0.0;
    if (t >= eps) return 1.0;
    const double s = t / eps;
    return 0.5 * (1.0 + s + std::sin(std::numbers::pi * s) / std::numbers::pi);
}

double smoothed_delta(double t, double eps)
{
    if (!(eps > 0.0)) throw std::invalid_argument("Heaviside smoothing width must be positive");
    if (t <= -eps || t >= eps) return 0.0;
    return 0.5 * (1.0 + std::cos(std::numbers::pi * t / eps)) / eps;
}

Polygon l_shape()
{
    return Polygon{{{0.0, 0.25}, {0.4, 0.25}, {0.4, 0.6}, {1.0, 0.6}, {1.0, 1.0}, {0.0, 1.0}}};
}

namespace {

double segment_distance(double px, double py, std::pair<double, double> a, std::pair<double, double> b)
{
    const double dx = b.first - a.first;
    const double dy = b.second - a.second;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((px - a.first) * dx + (py - a.second) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(px - (a.first + t * dx), py - (a.second + t * dy));
}

void validate(const Shape& shape)
{
    if (const auto* c = std::get_if<Circle>(&shape)) {
        if (!(c->radius > 0.0)) throw std::invalid_argument("circle radius must be positive");
    } else if (const auto* hp = std::get_if<HalfPlane>(&shape)) {
        if (hp->axis != 'x' && hp->axis != 'y') throw std::invalid_argument("half-plane axis must be x or y");
        if (!(hp->offset > 0.0 && hp->offset < 1.0)) {
            throw std::invalid_argument("half-plane offset must lie strictly inside (0, 1)");
        }
    } else {
        const auto& poly = std::get<Polygon>(shape);
        if (poly.vertices.size() < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
    }
}

}  // namespace

double signed_distance(const Shape& shape, double x, double y)
{
    if (const auto* c = std::get_if<Circle>(&shape)) {
        return c->radius - std::hypot(x - c->cx, y - c->cy);
    }
    if (const auto* hp = std::get_if<HalfPlane>(&shape)) {
        return (hp->axis == 'x' ? x : y) - hp->offset;
    }
    const auto& v = std::get<Polygon>(shape).vertices;
    double dist = std::numeric_limits<double>::infinity();
    bool inside = false;
    for (std::size_t k = 0, prev = v.size() - 1; k < v.size(); prev = k++) {
        dist = std::min(dist, segment_distance(x, y, v[prev], v[k]));
        const auto [xk, yk] = v[k];
        const auto [xp, yp] = v[prev];
        if ((yk > y) != (yp > y) && x < (xp - xk) * (y - yk) / (yp - yk) + xk) inside = !inside;
    }
    return inside ? dist : -dist;
}

ScalarField init_phi(const Grid& grid, const Shape& shape)
{
    validate(shape);
    return ScalarField::from_function(grid, [&](double x, double y) { return signed_distance(shape, x, y); });
}

ScalarField reinitialize(const ScalarField& phi)
{
    const Grid& g = phi.grid();
    const int n = g.n();
    const double h = g.h();
    constexpr double kInf = std::numeric_limits<double>::infinity();

    ScalarField dist(g, kInf);
    bool any_interface = false;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const double p = phi(i, j);
            const bool inside = p >= 0.0;
            auto seed = [&](int ni, int nj) {
                if (ni < 0 || nj < 0 || ni >= n || nj >= n) return;
                const double q = phi(ni, nj);
                if ((q >= 0.0) == inside) return;
                const double d = h * std::abs(p) / (std::abs(p) + std::abs(q));
                dist(i, j) = std::min(dist(i, j), d);
                any_interface = true;
            };
            seed(i - 1, j);
            seed(i + 1, j);
            seed(i, j - 1);
            seed(i, j + 1);
        }
    }
    if (!any_interface) return phi;

    const ScalarField fixed = dist;
    auto update = [&](int i, int j) {
        if (std::isfinite(fixed(i, j))) return false;
        const double a = std::min(i > 0 ? dist(i - 1, j) : kInf, i < n - 1 ? dist(i + 1, j) : kInf);
        const double b = std::min(j > 0 ? dist(i, j - 1) : kInf, j < n - 1 ? dist(i, j + 1) : kInf);
        double cand;
        if (!std::isfinite(a) && !std::isfinite(b)) return false;
        if (std::abs(a - b) >= h) {
            cand = std::min(a, b) + h;
        } else {
            cand = 0.5 * (a + b + std::sqrt(2.0 * h * h - (a - b) * (a - b)));
        }
        if (cand < dist(i, j)) {
            dist(i, j) = cand;
            return true;
        }
        return false;
    };

    constexpr int kMaxRounds = 16;
    for (int round = 0; round < kMaxRounds; ++round) {
        bool changed = false;
        for (int sweep = 0; sweep < 4; ++sweep) {
            const bool rev_i = sweep & 1;
            const bool rev_j = sweep & 2;
            for (int jj = 0; jj < n; ++jj) {
                const int j = rev_j ? n - 1 - jj : jj;
                for (int ii = 0; ii < n; ++ii) {
                    const int i = rev_i ? n - 1 - ii : ii;
                    changed |= update(i, j);
                }
            }
        }
        if (!changed) break;
    }

    ScalarField out(g);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = phi[k] >= 0.0 ? dist[k] : -dist[k];
    return out;
}

}  // namespace dopinv::level_set
