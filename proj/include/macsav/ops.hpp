#pragma once

// Discrete difference, averaging, nonlinear and inner-product operators on the
// MAC grid. All operators are pure: inputs must carry valid ghosts, outputs are
// freshly allocated with their ghosts filled.
//
// Reductions (inner products, norms) run over the interior points of each
// placement: all N^2 cells, and for edge fields the N-1 interior edge lines in
// the normal direction. Normal boundary lines are excluded; under
// no-penetration they are identically zero anyway.

#include "macsav/grid.hpp"

namespace macsav {

/// (D^c_x f, D^c_y f) on the edges; zero on the boundary edges.
MacVector grad_cell(const CellField& f);

/// D^ew_x v^x + D^ns_y v^y at cell centers. v need not be solenoidal.
CellField div_mac(const MacVector& v);

/// Five-point Laplacian with the ghosts of the placement. For edge fields the
/// normal boundary line of the output is zero (Dirichlet rows).
template <Placement P>
Field<P> laplacian_5pt(const Field<P>& f);

/// Componentwise Laplacian of a staggered vector.
MacVector laplacian_5pt(const MacVector& v);

/// Discrete u . grad v using long-stencil differences and A_xy averaging.
MacVector advect_velocity(const MacVector& u, const MacVector& v);

/// Discrete mu grad phi: (D^c_x phi A_x mu, D^c_y phi A_y mu).
MacVector mu_grad_phi(const CellField& mu, const CellField& phi);

/// Discrete div(phi u): D^ew_x(u^x A_x phi) + D^ns_y(u^y A_y phi).
CellField div_phi_u(const CellField& phi, const MacVector& u);

double inner_cell(const CellField& f, const CellField& g);
double inner_x_edge(const XEdgeField& f, const XEdgeField& g);
double inner_y_edge(const YEdgeField& f, const YEdgeField& g);
/// <u, v>_1 = <u^x, v^x>_ew + <u^y, v^y>_ns
double inner_mac(const MacVector& u, const MacVector& v);

/// h^2-weighted l^p norm, p >= 1.
template <Placement P>
double norm(const Field<P>& f, double p);
double norm(const MacVector& v, double p);

template <Placement P>
double norm_inf(const Field<P>& f);
double norm_inf(const MacVector& v);

/// ||grad_h f||_2^2 for a Neumann cell field.
double grad_norm_sq(const CellField& f);

/// ||grad_h v||_2^2 for a no-penetration / free-slip staggered vector: the
/// x-derivative of u^x lives at cell centers, the y-derivative of u^x at
/// interior nodes (and symmetrically for u^y).
double grad_norm_sq(const MacVector& v);

/// sqrt(<f, (-Delta_h)^{-1} f>_c) for mean-zero f. Throws std::invalid_argument
/// when |cell_average(f)| > 1e-12.
double norm_h1m(const CellField& f);

namespace detail {
// Averaging operators (exposed for tests).
double avg_x(const CellField& f, int i, int j);     // A_x f at x-edge (i, j+1/2)
double avg_y(const CellField& f, int i, int j);     // A_y f at y-edge (i+1/2, j)
double avg_xy_to_x(const YEdgeField& v, int i, int j);  // A_xy u^y at x-edge (i, j+1/2)
double avg_xy_to_y(const XEdgeField& u, int i, int j);  // A_xy u^x at y-edge (i+1/2, j)
}  // namespace detail

}  // namespace macsav
