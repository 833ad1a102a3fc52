#include "macsav/grid.hpp"

#include <cmath>
#include <sstream>

namespace macsav {

GridSpec::GridSpec(int n_cells) : n_(n_cells), h_(0.0) {
  if (n_cells < 2) throw std::invalid_argument("GridSpec: need at least 2 cells per direction");
  h_ = 1.0 / static_cast<double>(n_cells);
}

namespace {

[[noreturn]] void throw_normal_violation(const char* comp, int i, int j, double v) {
  std::ostringstream os;
  os << "velocity ghost fill: normal boundary value " << comp << "(" << i << "," << j << ") = " << v
     << " exceeds " << kNormalBoundaryTolerance;
  throw BoundaryViolation(os.str());
}

}  // namespace

template <>
void Field<Placement::cell>::fill_ghosts() {
  const int n = nx_;
  for (int j = 0; j < n; ++j) {
    data_[index(-1, j)] = data_[index(0, j)];
    data_[index(n, j)] = data_[index(n - 1, j)];
  }
  for (int i = 0; i < n; ++i) {
    data_[index(i, -1)] = data_[index(i, 0)];
    data_[index(i, n)] = data_[index(i, n - 1)];
  }
  ghosts_valid_ = true;
}

template <>
void Field<Placement::x_edge>::fill_ghosts() {
  const int n = grid_.n();
  for (int j = 0; j < n; ++j) {
    for (int i : {0, n}) {
      double& v = data_[index(i, j)];
      if (std::abs(v) > kNormalBoundaryTolerance) throw_normal_violation("ux", i, j, v);
      v = 0.0;
    }
    // odd reflection across the wall: u_{-1} = -u_{1}
    data_[index(-1, j)] = -data_[index(1, j)];
    data_[index(n + 1, j)] = -data_[index(n - 1, j)];
  }
  for (int i = 0; i <= n; ++i) {
    data_[index(i, -1)] = data_[index(i, 0)];
    data_[index(i, n)] = data_[index(i, n - 1)];
  }
  ghosts_valid_ = true;
}

template <>
void Field<Placement::y_edge>::fill_ghosts() {
  const int n = grid_.n();
  for (int i = 0; i < n; ++i) {
    for (int j : {0, n}) {
      double& v = data_[index(i, j)];
      if (std::abs(v) > kNormalBoundaryTolerance) throw_normal_violation("uy", i, j, v);
      v = 0.0;
    }
    data_[index(i, -1)] = -data_[index(i, 1)];
    data_[index(i, n + 1)] = -data_[index(i, n - 1)];
  }
  for (int j = 0; j <= n; ++j) {
    data_[index(-1, j)] = data_[index(0, j)];
    data_[index(n, j)] = data_[index(n - 1, j)];
  }
  ghosts_valid_ = true;
}

CellField neumann_ghost_fill(CellField f) {
  f.fill_ghosts();
  return f;
}

MacVector velocity_ghost_fill(MacVector v) {
  v.fill_ghosts();
  return v;
}

double cell_average(const CellField& f) {
  const int n = f.grid().n();
  double sum = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) sum += f(i, j);
  const double h = f.grid().h();
  return h * h * sum;
}

}  // namespace macsav
