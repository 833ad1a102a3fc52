#pragma once

// Direct solvers for the constant-coefficient systems of the scheme.
//
// The Neumann five-point Laplacian on cell centers is diagonal in the
// half-sample cosine basis cos(k pi (i+1/2)/N); the velocity Helmholtz
// operator is diagonal in whole-sample sines sin(k pi i/N) along the normal
// direction of each component and half-sample cosines along the tangential
// one. In 1D both have eigenvalues -(4/h^2) sin^2(k pi / (2N)).

#include <memory>

#include "macsav/grid.hpp"

namespace macsav {

/// L_phi X = (3/(2 tau)) X + epsilon^2 Delta_h^2 X, Neumann ghosts at both Laplacians.
struct PhaseOperatorSpec {
  double tau;
  double epsilon;
  GridSpec grid;
};

/// L_u V = (3/(2 tau)) V - nu Delta_h V, no-penetration / free-slip.
struct VelocityOperatorSpec {
  double tau;
  double nu;
  GridSpec grid;
};

/// Thrown when the Neumann Poisson right-hand side has a nonzero mean.
class IncompatibleRhs : public std::runtime_error {
 public:
  IncompatibleRhs(const std::string& what, double mean) : std::runtime_error(what), mean_(mean) {}
  double mean() const { return mean_; }

 private:
  double mean_;
};

/// Positive 1D eigenvalue (4/h^2) sin^2(k pi / (2N)) of -Delta_h.
double laplacian_eigenvalue_1d(int k, const GridSpec& grid);

/// Transform plans and scratch buffers for one grid size. Not thread-safe;
/// each thread (or stepper) owns its own instance.
class FastSolver {
 public:
  explicit FastSolver(GridSpec grid);
  ~FastSolver();
  FastSolver(const FastSolver&) = delete;
  FastSolver& operator=(const FastSolver&) = delete;
  FastSolver(FastSolver&&) noexcept;
  FastSolver& operator=(FastSolver&&) noexcept;

  const GridSpec& grid() const;

  CellField solve_phase(const PhaseOperatorSpec& spec, const CellField& rhs);
  MacVector solve_velocity(const VelocityOperatorSpec& spec, const MacVector& rhs);
  CellField solve_poisson_neumann(const CellField& rhs);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Convenience entry points backed by a per-thread solver cache.
CellField solve_phase(const PhaseOperatorSpec& spec, const CellField& rhs);
MacVector solve_velocity(const VelocityOperatorSpec& spec, const MacVector& rhs);
CellField solve_poisson_neumann(const CellField& rhs);

/// Mean tolerance for the Neumann compatibility check, scaled by max(1, ||rhs||_inf).
inline constexpr double kPoissonMeanTolerance = 1e-10;

}  // namespace macsav
