#pragma once

#include <utility>
#include <variant>
#include <vector>

#include "dopinv/grid.hpp"

namespace dopinv::level_set {

/// 0 for t <= -eps, 1 for t >= eps, 0.5 (1 + t/eps + sin(pi t/eps)/pi) between.
double smoothed_heaviside(double t, double eps);

/// Derivative of smoothed_heaviside: (1 + cos(pi t/eps)) / (2 eps) inside the band.
double smoothed_delta(double t, double eps);

struct Circle {
    double cx;
    double cy;
    double radius;
};

/// The side where the chosen coordinate exceeds `offset`.
struct HalfPlane {
    char axis;  // 'x' or 'y'
    double offset;
};

/// Simple polygon, interior designated by the even-odd rule.
struct Polygon {
    std::vector<std::pair<double, double>> vertices;
};

using Shape = std::variant<Circle, HalfPlane, Polygon>;

/// The L-shaped region used as a stand-in phantom: the top strip y > 0.6
/// joined with the column x < 0.4, y > 0.25.
Polygon l_shape();

/// Signed distance at (x, y), positive inside the shape.
double signed_distance(const Shape& shape, double x, double y);

/// Exact signed distance sampled at cell centers. Throws std::invalid_argument
/// for degenerate shapes.
ScalarField init_phi(const Grid& grid, const Shape& shape);

/// Redistance phi to the signed distance of its zero level set, keeping the
/// sign of every cell (phi >= 0 stays non-negative). Interface cells are
/// seeded by linear interpolation, the rest by fast sweeping on |grad d| = 1.
/// A field without sign change is returned unchanged.
ScalarField reinitialize(const ScalarField& phi);

}  // namespace dopinv::level_set
