#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dopinv {

/// Boundary sides of the unit square. Bottom is the contact where voltage is
/// applied, Top is the measurement contact, Left/Right are insulating.
enum class Segment { Bottom, Top, Left, Right };

const char* segment_name(Segment s);
bool is_dirichlet(Segment s);

/// Uniform cell-centered n x n discretization of the unit square.
class Grid {
public:
    static constexpr int kMinCells = 4;

    explicit Grid(int n);

    int n() const { return n_; }
    double h() const { return h_; }
    std::size_t cell_count() const { return static_cast<std::size_t>(n_) * n_; }

    /// Row-major by y-row: index = j * n + i, with i the x index.
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * n_ + i; }

    double x(int i) const { return (i + 0.5) * h_; }
    double y(int j) const { return (j + 0.5) * h_; }

    /// Cell adjacent to face k of segment s.
    std::size_t boundary_cell(Segment s, int k) const;

    /// Coordinate along the segment of face k's midpoint.
    double face_coordinate(int k) const { return (k + 0.5) * h_; }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    int n_;
    double h_;
};

Grid make_grid(int n);

/// Cell-centered real field on a grid.
class ScalarField {
public:
    explicit ScalarField(const Grid& grid, double fill = 0.0);
    ScalarField(const Grid& grid, std::vector<double> values);

    template <class F>
    static ScalarField from_function(const Grid& grid, F&& f)
    {
        ScalarField out(grid);
        for (int j = 0; j < grid.n(); ++j) {
            for (int i = 0; i < grid.n(); ++i) {
                out(i, j) = f(grid.x(i), grid.y(j));
            }
        }
        return out;
    }

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }

    double& operator()(int i, int j) { return values_[grid_.index(i, j)]; }
    double operator()(int i, int j) const { return values_[grid_.index(i, j)]; }
    double& operator[](std::size_t k) { return values_[k]; }
    double operator[](std::size_t k) const { return values_[k]; }

    std::span<double> values() & { return values_; }
    std::span<const double> values() const& { return values_; }
    std::span<const double> values() const&& = delete;  // would dangle

    double max_abs() const;
    bool all_finite() const;

    friend bool operator==(const ScalarField&, const ScalarField&) = default;

private:
    Grid grid_;
    std::vector<double> values_;
};

/// One value per boundary face of a segment, ordered by increasing coordinate.
class Trace {
public:
    Trace(const Grid& grid, Segment segment, double fill = 0.0);
    Trace(const Grid& grid, Segment segment, std::vector<double> values);

    const Grid& grid() const { return grid_; }
    Segment segment() const { return segment_; }
    std::size_t size() const { return values_.size(); }

    double& operator[](std::size_t k) { return values_[k]; }
    double operator[](std::size_t k) const { return values_[k]; }
    std::span<double> values() & { return values_; }
    std::span<const double> values() const& { return values_; }
    std::span<const double> values() const&& = delete;  // would dangle

    double max_abs() const;

    friend bool operator==(const Trace&, const Trace&) = default;

private:
    Grid grid_;
    Segment segment_;
    std::vector<double> values_;
};

/// Midpoint-rule integral over the top contact.
double integrate_trace(const Trace& t);

/// 5-point Laplacian. Mirror ghosts on the insulating sides, one-sided
/// second-order differences in y on the bottom and top rows.
ScalarField field_laplacian(const ScalarField& f);

/// Area of the symmetric difference of two {0,1} indicator fields.
double symmetric_difference_error(const ScalarField& a, const ScalarField& b);

/// 1 where f >= 0, else 0.
ScalarField indicator_nonnegative(const ScalarField& f);

}  // namespace dopinv
