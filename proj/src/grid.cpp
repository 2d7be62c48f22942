#include "dopinv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dopinv {

const char* segment_name(Segment s)
{
    switch (s) {
    case Segment::Bottom: return "bottom";
    case Segment::Top: return "top";
    case Segment::Left: return "left";
    case Segment::Right: return "right";
    }
    return "?";
}

bool is_dirichlet(Segment s)
{
    return s == Segment::Bottom || s == Segment::Top;
}

Grid::Grid(int n) : n_(n), h_(0.0)
{
    if (n < kMinCells) {
        throw std::invalid_argument("grid needs at least " + std::to_string(kMinCells) +
                                    " cells per side, got " + std::to_string(n));
    }
    h_ = 1.0 / n;
}

std::size_t Grid::boundary_cell(Segment s, int k) const
{
    switch (s) {
    case Segment::Bottom: return index(k, 0);
    case Segment::Top: return index(k, n_ - 1);
    case Segment::Left: return index(0, k);
    case Segment::Right: return index(n_ - 1, k);
    }
    return 0;
}

Grid make_grid(int n)
{
    return Grid(n);
}

ScalarField::ScalarField(const Grid& grid, double fill)
    : grid_(grid), values_(grid.cell_count(), fill)
{
}

ScalarField::ScalarField(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values))
{
    if (values_.size() != grid_.cell_count()) {
        throw std::invalid_argument("field has " + std::to_string(values_.size()) +
                                    " values, grid needs " +
                                    std::to_string(grid_.cell_count()));
    }
}

double ScalarField::max_abs() const
{
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

bool ScalarField::all_finite() const
{
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Trace::Trace(const Grid& grid, Segment segment, double fill)
    : grid_(grid), segment_(segment), values_(static_cast<std::size_t>(grid.n()), fill)
{
}

Trace::Trace(const Grid& grid, Segment segment, std::vector<double> values)
    : grid_(grid), segment_(segment), values_(std::move(values))
{
    if (values_.size() != static_cast<std::size_t>(grid_.n())) {
        throw std::invalid_argument("trace length " + std::to_string(values_.size()) +
                                    " does not match grid side " + std::to_string(grid_.n()));
    }
}

double Trace::max_abs() const
{
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double integrate_trace(const Trace& t)
{
    if (t.segment() != Segment::Top) {
        throw std::invalid_argument(std::string("integrate_trace expects a top-contact trace, got ") +
                                    segment_name(t.segment()));
    }
    double sum = 0.0;
    for (double v : t.values()) sum += v;
    return t.grid().h() * sum;
}

ScalarField field_laplacian(const ScalarField& f)
{
    const Grid& g = f.grid();
    const int n = g.n();
    const double inv_h2 = 1.0 / (g.h() * g.h());
    ScalarField out(g);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const double c = f(i, j);
            const double west = i > 0 ? f(i - 1, j) : c;
            const double east = i < n - 1 ? f(i + 1, j) : c;
            const double dxx = west - 2.0 * c + east;
            double dyy;
            if (j == 0) {
                dyy = 2.0 * c - 5.0 * f(i, 1) + 4.0 * f(i, 2) - f(i, 3);
            } else if (j == n - 1) {
                dyy = 2.0 * c - 5.0 * f(i, n - 2) + 4.0 * f(i, n - 3) - f(i, n - 4);
            } else {
                dyy = f(i, j - 1) - 2.0 * c + f(i, j + 1);
            }
            out(i, j) = (dxx + dyy) * inv_h2;
        }
    }
    return out;
}

double symmetric_difference_error(const ScalarField& a, const ScalarField& b)
{
    if (!(a.grid() == b.grid())) {
        throw std::invalid_argument("indicator fields live on different grids");
    }
    std::size_t differ = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double va = a[k];
        const double vb = b[k];
        if ((va != 0.0 && va != 1.0) || (vb != 0.0 && vb != 1.0)) {
            throw std::invalid_argument("symmetric_difference_error needs {0,1} indicator fields");
        }
        if (va != vb) ++differ;
    }
    const double h = a.grid().h();
    return h * h * static_cast<double>(differ);
}

ScalarField indicator_nonnegative(const ScalarField& f)
{
    ScalarField out(f.grid());
    for (std::size_t k = 0; k < f.size(); ++k) out[k] = f[k] >= 0.0 ? 1.0 : 0.0;
    return out;
}

}  // namespace dopinv
