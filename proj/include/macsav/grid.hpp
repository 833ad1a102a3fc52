#pragma once

// Staggered (MAC) grid containers on the unit square.
//
// Placements:
//   cell    f(i,j) ~ f((i+1/2)h, (j+1/2)h),  0 <= i,j < N
//   x_edge  f(i,j) ~ f(i h, (j+1/2)h),        0 <= i <= N, 0 <= j < N
//   y_edge  f(i,j) ~ f((i+1/2)h, j h),        0 <= i < N, 0 <= j <= N
//
// Every field carries one padded ghost layer (index -1 and extent) that is
// a pure function of the interior and the boundary condition attached to the
// placement: homogeneous Neumann for cell fields, no-penetration in the normal
// direction and free-slip in the tangential direction for edge fields.

#include <cassert>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace macsav {

class GridSpec {
 public:
  explicit GridSpec(int n_cells);

  int n() const { return n_; }
  double h() const { return h_; }

  bool operator==(const GridSpec& other) const { return n_ == other.n_; }

 private:
  int n_;
  double h_;
};

enum class Placement : std::uint8_t { cell = 0, x_edge = 1, y_edge = 2 };

// Thrown when a velocity-like field carries nonzero normal boundary values.
class BoundaryViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Absolute tolerance on normal boundary values accepted by the velocity fill.
inline constexpr double kNormalBoundaryTolerance = 1e-14;

template <Placement P>
class Field {
 public:
  static constexpr Placement placement = P;

  explicit Field(GridSpec grid)
      : grid_(grid),
        nx_(grid.n() + (P == Placement::x_edge ? 1 : 0)),
        ny_(grid.n() + (P == Placement::y_edge ? 1 : 0)),
        data_(static_cast<std::size_t>(nx_ + 2) * static_cast<std::size_t>(ny_ + 2), 0.0) {}

  const GridSpec& grid() const { return grid_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }

  /// Read access; i in [-1, nx], j in [-1, ny]. Corner ghosts are never defined.
  double operator()(int i, int j) const {
    assert(i >= -1 && i <= nx_ && j >= -1 && j <= ny_);
    assert(!((i == -1 || i == nx_) && (j == -1 || j == ny_)) && "corner ghost read");
    return data_[index(i, j)];
  }

  /// Write access to an interior value. Invalidates the ghost layer.
  double& ref(int i, int j) {
    assert(i >= 0 && i < nx_ && j >= 0 && j < ny_);
    ghosts_valid_ = false;
    return data_[index(i, j)];
  }

  bool ghosts_valid() const { return ghosts_valid_; }

  /// Repopulates the ghost layer from the interior. For edge placements the
  /// normal boundary line is validated against kNormalBoundaryTolerance and
  /// then pinned to exactly zero.
  void fill_ghosts();

  /// Throws std::logic_error if the ghost layer is stale.
  void require_ghosts(const char* who) const {
    if (!ghosts_valid_) throw std::logic_error(std::string(who) + ": input ghost layer is stale");
  }

  // Linear algebra on the padded storage. Ghost rules are linear, so a
  // combination of filled fields is itself filled.
  Field& operator+=(const Field& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    ghosts_valid_ = ghosts_valid_ && o.ghosts_valid_;
    return *this;
  }
  Field& operator-=(const Field& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    ghosts_valid_ = ghosts_valid_ && o.ghosts_valid_;
    return *this;
  }
  Field& operator*=(double a) {
    for (double& v : data_) v *= a;
    return *this;
  }
  /// this += a * x
  Field& axpy(double a, const Field& x) {
    check_same(x);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += a * x.data_[k];
    ghosts_valid_ = ghosts_valid_ && x.ghosts_valid_;
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }

  /// Padded storage, row-major with j as the slow index.
  std::span<const double> storage() const { return data_; }

  bool operator==(const Field& o) const { return grid_ == o.grid_ && data_ == o.data_; }

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j + 1) * static_cast<std::size_t>(nx_ + 2) +
           static_cast<std::size_t>(i + 1);
  }
  void check_same(const Field& o) const {
    if (!(grid_ == o.grid_)) throw std::invalid_argument("field grid mismatch");
  }

  GridSpec grid_;
  int nx_;
  int ny_;
  std::vector<double> data_;
  bool ghosts_valid_ = true;
};

using CellField = Field<Placement::cell>;
using XEdgeField = Field<Placement::x_edge>;
using YEdgeField = Field<Placement::y_edge>;

template <>
void Field<Placement::cell>::fill_ghosts();
template <>
void Field<Placement::x_edge>::fill_ghosts();
template <>
void Field<Placement::y_edge>::fill_ghosts();

/// Staggered velocity u = (u^x, u^y).
struct MacVector {
  explicit MacVector(GridSpec grid) : x(grid), y(grid) {}
  MacVector(XEdgeField xs, YEdgeField ys) : x(std::move(xs)), y(std::move(ys)) {
    if (!(x.grid() == y.grid())) throw std::invalid_argument("MacVector components on different grids");
  }

  const GridSpec& grid() const { return x.grid(); }
  void fill_ghosts() {
    x.fill_ghosts();
    y.fill_ghosts();
  }
  bool ghosts_valid() const { return x.ghosts_valid() && y.ghosts_valid(); }

  MacVector& operator+=(const MacVector& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  MacVector& operator-=(const MacVector& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  MacVector& operator*=(double a) {
    x *= a;
    y *= a;
    return *this;
  }
  MacVector& axpy(double a, const MacVector& o) {
    x.axpy(a, o.x);
    y.axpy(a, o.y);
    return *this;
  }
  friend MacVector operator+(MacVector a, const MacVector& b) { return a += b; }
  friend MacVector operator-(MacVector a, const MacVector& b) { return a -= b; }
  friend MacVector operator*(double s, MacVector a) { return a *= s; }

  bool operator==(const MacVector& o) const { return x == o.x && y == o.y; }

  XEdgeField x;
  YEdgeField y;
};

/// Returns a copy of f with homogeneous Neumann ghosts.
CellField neumann_ghost_fill(CellField f);

/// Returns a copy of v with no-penetration / free-slip ghosts. Throws
/// BoundaryViolation if a normal boundary value exceeds the tolerance.
MacVector velocity_ghost_fill(MacVector v);

/// <f, 1>_c = h^2 * sum of all N^2 cell values.
double cell_average(const CellField& f);

/// Samples fn at the placement's physical points and fills ghosts. For edge
/// placements the normal boundary line is left at zero.
template <Placement P, class Fn>
Field<P> sample(GridSpec grid, Fn&& fn) {
  Field<P> f(grid);
  const double h = grid.h();
  const int n = grid.n();
  for (int j = 0; j < f.ny(); ++j) {
    for (int i = 0; i < f.nx(); ++i) {
      double x = (i + 0.5) * h;
      double y = (j + 0.5) * h;
      if constexpr (P == Placement::x_edge) {
        if (i == 0 || i == n) continue;
        x = i * h;
      } else if constexpr (P == Placement::y_edge) {
        if (j == 0 || j == n) continue;
        y = j * h;
      }
      f.ref(i, j) = fn(x, y);
    }
  }
  f.fill_ghosts();
  return f;
}

}  // namespace macsav
