#include "macsav/ops.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "macsav/fastsolve.hpp"

namespace macsav {

namespace detail {

double avg_x(const CellField& f, int i, int j) { return 0.5 * (f(i - 1, j) + f(i, j)); }

double avg_y(const CellField& f, int i, int j) { return 0.5 * (f(i, j - 1) + f(i, j)); }

double avg_xy_to_x(const YEdgeField& v, int i, int j) {
  return 0.25 * (v(i - 1, j) + v(i, j) + v(i - 1, j + 1) + v(i, j + 1));
}

double avg_xy_to_y(const XEdgeField& u, int i, int j) {
  return 0.25 * (u(i, j - 1) + u(i, j) + u(i + 1, j - 1) + u(i + 1, j));
}

}  // namespace detail

using detail::avg_x;
using detail::avg_xy_to_x;
using detail::avg_xy_to_y;
using detail::avg_y;

MacVector grad_cell(const CellField& f) {
  f.require_ghosts("grad_cell");
  const GridSpec g = f.grid();
  const int n = g.n();
  const double inv_h = 1.0 / g.h();
  MacVector out(g);
  for (int j = 0; j < n; ++j)
    for (int i = 1; i < n; ++i) out.x.ref(i, j) = (f(i, j) - f(i - 1, j)) * inv_h;
  for (int j = 1; j < n; ++j)
    for (int i = 0; i < n; ++i) out.y.ref(i, j) = (f(i, j) - f(i, j - 1)) * inv_h;
  out.fill_ghosts();
  return out;
}

CellField div_mac(const MacVector& v) {
  v.x.require_ghosts("div_mac");
  v.y.require_ghosts("div_mac");
  const GridSpec g = v.grid();
  const int n = g.n();
  const double inv_h = 1.0 / g.h();
  CellField out(g);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      out.ref(i, j) = (v.x(i + 1, j) - v.x(i, j)) * inv_h + (v.y(i, j + 1) - v.y(i, j)) * inv_h;
  out.fill_ghosts();
  return out;
}

template <Placement P>
Field<P> laplacian_5pt(const Field<P>& f) {
  f.require_ghosts("laplacian_5pt");
  const GridSpec g = f.grid();
  const int n = g.n();
  const double inv_h2 = 1.0 / (g.h() * g.h());
  Field<P> out(g);
  const int i_lo = (P == Placement::x_edge) ? 1 : 0;
  const int i_hi = (P == Placement::x_edge) ? n - 1 : f.nx() - 1;
  const int j_lo = (P == Placement::y_edge) ? 1 : 0;
  const int j_hi = (P == Placement::y_edge) ? n - 1 : f.ny() - 1;
  for (int j = j_lo; j <= j_hi; ++j)
    for (int i = i_lo; i <= i_hi; ++i)
      out.ref(i, j) = (f(i + 1, j) + f(i - 1, j) + f(i, j + 1) + f(i, j - 1) - 4.0 * f(i, j)) * inv_h2;
  out.fill_ghosts();
  return out;
}

template CellField laplacian_5pt(const CellField&);
template XEdgeField laplacian_5pt(const XEdgeField&);
template YEdgeField laplacian_5pt(const YEdgeField&);

MacVector laplacian_5pt(const MacVector& v) { return MacVector(laplacian_5pt(v.x), laplacian_5pt(v.y)); }

MacVector advect_velocity(const MacVector& u, const MacVector& v) {
  u.x.require_ghosts("advect_velocity");
  u.y.require_ghosts("advect_velocity");
  v.x.require_ghosts("advect_velocity");
  v.y.require_ghosts("advect_velocity");
  const GridSpec g = u.grid();
  const int n = g.n();
  const double inv_2h = 0.5 / g.h();
  MacVector out(g);
  // Normal boundary lines vanish identically: u^x = 0 there and the
  // tangential long-stencil difference of v^x along the wall is zero.
  for (int j = 0; j < n; ++j) {
    for (int i = 1; i < n; ++i) {
      const double dvx_dx = (v.x(i + 1, j) - v.x(i - 1, j)) * inv_2h;
      const double dvx_dy = (v.x(i, j + 1) - v.x(i, j - 1)) * inv_2h;
      out.x.ref(i, j) = u.x(i, j) * dvx_dx + avg_xy_to_x(u.y, i, j) * dvx_dy;
    }
  }
  for (int j = 1; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double dvy_dx = (v.y(i + 1, j) - v.y(i - 1, j)) * inv_2h;
      const double dvy_dy = (v.y(i, j + 1) - v.y(i, j - 1)) * inv_2h;
      out.y.ref(i, j) = avg_xy_to_y(u.x, i, j) * dvy_dx + u.y(i, j) * dvy_dy;
    }
  }
  out.fill_ghosts();
  return out;
}

MacVector mu_grad_phi(const CellField& mu, const CellField& phi) {
  mu.require_ghosts("mu_grad_phi");
  phi.require_ghosts("mu_grad_phi");
  const GridSpec g = phi.grid();
  const int n = g.n();
  const double inv_h = 1.0 / g.h();
  MacVector out(g);
  for (int j = 0; j < n; ++j)
    for (int i = 1; i < n; ++i) out.x.ref(i, j) = (phi(i, j) - phi(i - 1, j)) * inv_h * avg_x(mu, i, j);
  for (int j = 1; j < n; ++j)
    for (int i = 0; i < n; ++i) out.y.ref(i, j) = (phi(i, j) - phi(i, j - 1)) * inv_h * avg_y(mu, i, j);
  out.fill_ghosts();
  return out;
}

CellField div_phi_u(const CellField& phi, const MacVector& u) {
  phi.require_ghosts("div_phi_u");
  u.x.require_ghosts("div_phi_u");
  u.y.require_ghosts("div_phi_u");
  const GridSpec g = phi.grid();
  const int n = g.n();
  const double inv_h = 1.0 / g.h();
  CellField out(g);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double fx_e = u.x(i + 1, j) * avg_x(phi, i + 1, j);
      const double fx_w = u.x(i, j) * avg_x(phi, i, j);
      const double fy_n = u.y(i, j + 1) * avg_y(phi, i, j + 1);
      const double fy_s = u.y(i, j) * avg_y(phi, i, j);
      out.ref(i, j) = (fx_e - fx_w) * inv_h + (fy_n - fy_s) * inv_h;
    }
  }
  out.fill_ghosts();
  return out;
}

namespace {

// Interior index box of a placement, excluding normal boundary lines.
struct Box {
  int i_lo, i_hi, j_lo, j_hi;
};

template <Placement P>
Box interior_box(const Field<P>& f) {
  const int n = f.grid().n();
  if constexpr (P == Placement::x_edge) return {1, n - 1, 0, n - 1};
  if constexpr (P == Placement::y_edge) return {0, n - 1, 1, n - 1};
  return {0, n - 1, 0, n - 1};
}

template <Placement P>
double inner_impl(const Field<P>& f, const Field<P>& g) {
  if (!(f.grid() == g.grid())) throw std::invalid_argument("inner product: grid mismatch");
  const Box b = interior_box(f);
  double sum = 0.0;
  for (int j = b.j_lo; j <= b.j_hi; ++j)
    for (int i = b.i_lo; i <= b.i_hi; ++i) sum += f(i, j) * g(i, j);
  const double h = f.grid().h();
  return h * h * sum;
}

template <Placement P>
double pow_sum(const Field<P>& f, double p) {
  const Box b = interior_box(f);
  double sum = 0.0;
  for (int j = b.j_lo; j <= b.j_hi; ++j)
    for (int i = b.i_lo; i <= b.i_hi; ++i) sum += std::pow(std::abs(f(i, j)), p);
  const double h = f.grid().h();
  return h * h * sum;
}

}  // namespace

double inner_cell(const CellField& f, const CellField& g) { return inner_impl(f, g); }
double inner_x_edge(const XEdgeField& f, const XEdgeField& g) { return inner_impl(f, g); }
double inner_y_edge(const YEdgeField& f, const YEdgeField& g) { return inner_impl(f, g); }
double inner_mac(const MacVector& u, const MacVector& v) { return inner_impl(u.x, v.x) + inner_impl(u.y, v.y); }

template <Placement P>
double norm(const Field<P>& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("norm: p must be >= 1");
  if (p == 2.0) return std::sqrt(inner_impl(f, f));
  return std::pow(pow_sum(f, p), 1.0 / p);
}

template double norm(const CellField&, double);
template double norm(const XEdgeField&, double);
template double norm(const YEdgeField&, double);

double norm(const MacVector& v, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("norm: p must be >= 1");
  if (p == 2.0) return std::sqrt(inner_mac(v, v));
  return std::pow(pow_sum(v.x, p) + pow_sum(v.y, p), 1.0 / p);
}

template <Placement P>
double norm_inf(const Field<P>& f) {
  const Box b = interior_box(f);
  double m = 0.0;
  for (int j = b.j_lo; j <= b.j_hi; ++j)
    for (int i = b.i_lo; i <= b.i_hi; ++i) m = std::max(m, std::abs(f(i, j)));
  return m;
}

template double norm_inf(const CellField&);
template double norm_inf(const XEdgeField&);
template double norm_inf(const YEdgeField&);

double norm_inf(const MacVector& v) { return std::max(norm_inf(v.x), norm_inf(v.y)); }

double grad_norm_sq(const CellField& f) {
  const MacVector g = grad_cell(f);
  return inner_mac(g, g);
}

double grad_norm_sq(const MacVector& v) {
  v.x.require_ghosts("grad_norm_sq");
  v.y.require_ghosts("grad_norm_sq");
  const int n = v.grid().n();
  const double inv_h = 1.0 / v.grid().h();
  double sum = 0.0;
  // d/dx u^x at cell centers, d/dy u^y at cell centers
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double a = (v.x(i + 1, j) - v.x(i, j)) * inv_h;
      const double b = (v.y(i, j + 1) - v.y(i, j)) * inv_h;
      sum += a * a + b * b;
    }
  }
  // d/dy u^x and d/dx u^y at interior nodes; the wall rows vanish by the
  // free-slip mirror and the wall columns by no-penetration.
  for (int j = 1; j < n; ++j) {
    for (int i = 1; i < n; ++i) {
      const double a = (v.x(i, j) - v.x(i, j - 1)) * inv_h;
      const double b = (v.y(i, j) - v.y(i - 1, j)) * inv_h;
      sum += a * a + b * b;
    }
  }
  const double h = v.grid().h();
  return h * h * sum;
}

double norm_h1m(const CellField& f) {
  const double mean = cell_average(f);
  if (std::abs(mean) > 1e-12) {
    std::ostringstream os;
    os << "norm_h1m: input is not mean-zero (cell average " << mean << ")";
    throw std::invalid_argument(os.str());
  }
  CellField psi = solve_poisson_neumann(f);
  // psi solves Delta_h psi = f, so (-Delta_h)^{-1} f = -psi.
  return std::sqrt(std::max(0.0, -inner_cell(f, psi)));
}

}  // namespace macsav
