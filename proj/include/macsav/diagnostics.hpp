#pragma once

// Energy functionals, conservation monitors and discrete-identity checkers.

#include <cstdint>
#include <random>
#include <string>

#include "macsav/grid.hpp"
#include "macsav/scheme.hpp"

namespace macsav {

/// Modified energy of the two most recent stored levels:
///   eps^2/4 (|grad phi^n|^2 + |grad(2 phi^n - phi^{n-1})|^2)
///   + 1/2 (r_n^2 + (2 r_n - r_nm1)^2) + 1/4 (q_n^2 + (2 q_n - q_nm1)^2)
///   + |u^n|^2 / (2 lambda) + tau^2 / (3 lambda) |grad p^n|^2
double modified_energy(const SimState& state, const Params& params);

/// <(phi^2 - 1)^2 / 4 + 1, 1>_c + eps^2/2 |grad phi|^2 + |u|^2 / (2 lambda)
double original_energy(const CellField& phi, const MacVector& u, const Params& params);

struct DiagRecord {
  long step;
  double time;
  double energy_modified;
  double energy_original;
  double mass;
  double max_div;
  double r;
  double q_minus_one;
  double grad_phi_l2;
};

DiagRecord make_record(const SimState& state, const Params& params);

/// "step,time,energy_modified,energy_original,mass,max_div,r,q_minus_one,grad_phi_l2"
std::string csv_header();
/// One CSV row, round-trip precision, no trailing newline.
std::string csv_row(const DiagRecord& rec);

/// Largest amount by which the trajectory bounds implied by energy decay are
/// exceeded (<= 0 when they hold):
///   |grad phi| <= 2 sqrt(E0)/eps, |r| <= sqrt(2 E0), |q| <= 2 sqrt(E0), |u| <= sqrt(2 lambda E0).
double energy_bound_excess(const SimState& state, const Params& params, double e0);

// Seeded test-data generators with the proper boundary conditions.
CellField random_cell_field(const GridSpec& grid, std::mt19937_64& rng, double amplitude = 1.0);
/// Random no-penetration / free-slip velocity (not solenoidal).
MacVector random_mac_vector(const GridSpec& grid, std::mt19937_64& rng, double amplitude = 1.0);
/// Discrete curl (-D_y psi, D_x psi) of a random nodal stream function that
/// vanishes on the boundary, so div_mac is zero to roundoff.
MacVector random_solenoidal(const GridSpec& grid, std::mt19937_64& rng, double amplitude = 1.0);

struct SbpReport {
  double defect_div_free_gradient = 0.0;  // <u, grad f>_1 = 0 for div u = 0
  double defect_cell_laplacian = 0.0;     // <f, Delta f>_c = -|grad f|^2
  double defect_vector_laplacian = 0.0;   // -<v, Delta v>_1 = |grad v|^2
  double defect_advection = 0.0;          // -<g, div(f u)>_c = <u, f grad g>_1
  double tolerance = 1e-12;
  bool pass = true;

  double max_defect() const;
};

/// Evaluates the summation-by-parts identities on `trials` seeded random fields.
SbpReport check_sbp(const GridSpec& grid, int trials, std::uint64_t seed);

struct ProjectionDefects {
  double l2 = 0.0;  // | |u^|^2 - |u|^2 - |u^ - u|^2 | / |u^|^2
  double h1 = 0.0;  // same with grad_h
};

ProjectionDefects projection_defects(const MacVector& u_hat, const MacVector& u);

}  // namespace macsav
