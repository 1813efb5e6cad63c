#pragma once

#include "mhdhho/discrete_space.hpp"

#include <Eigen/Dense>

#include <vector>

namespace mhdhho {

/// I^k_U v: RTN interpolate on elements, componentwise L2 projection on faces.
/// With homogeneous_bc the boundary face blocks are set to zero.
HybridVectorField interpolate_velocity(const DiscreteSpace& space, const VectorFunction& v,
                                       bool homogeneous_bc = false, int quad_degree = -1);

/// L2 projections on elements and faces; with zero_mean the global mean is
/// removed from the element blocks.
HybridScalarField interpolate_pressure(const DiscreteSpace& space, const ScalarFunction& q, bool zero_mean = false,
                                       int quad_degree = -1);

/// Sum over elements of int_T q_T.
double element_integral(const DiscreteSpace& space, const HybridScalarField& q);

/// Value of the element polynomial v_T at x.
Eigen::Vector2d evaluate_element(const DiscreteSpace& space, const HybridVectorField& v, std::size_t t, const Point& x);
double evaluate_element(const DiscreteSpace& space, const HybridScalarField& q, std::size_t t, const Point& x);

/// Points used to estimate sup norms on an element: quadrature points of the
/// default degree plus vertices and edge midpoints.
std::vector<Point> element_sample_points(const DiscreteSpace& space, std::size_t t);
/// Quadrature points of the default degree on a face plus its endpoints.
std::vector<Point> face_sample_points(const DiscreteSpace& space, std::size_t f);

double inner_product_0h(const DiscreteSpace& space, const HybridVectorField& a, const HybridVectorField& b);
double norm_0h(const DiscreteSpace& space, const HybridVectorField& v);
double norm_1T(const DiscreteSpace& space, const HybridVectorField& v, std::size_t t);
double norm_1h(const DiscreteSpace& space, const HybridVectorField& v);
double norm_1infty_h(const DiscreteSpace& space, const HybridVectorField& v);
/// sup_T |v_T| on element t (Euclidean norm, sampled).
double element_sup_norm(const DiscreteSpace& space, const HybridVectorField& v, std::size_t t);

/// p_T^{k+1} v as coefficients in reconstruction_basis(t): x block then y block.
Eigen::VectorXd velocity_reconstruction(const DiscreteSpace& space, std::size_t t, const Eigen::VectorXd& local);
Eigen::Vector2d evaluate_reconstruction(const DiscreteSpace& space, std::size_t t, const Eigen::VectorXd& coefficients,
                                        const Point& x);

struct LocalDiffusion {
  Eigen::MatrixXd a;
  Eigen::MatrixXd s;
};
LocalDiffusion local_diffusion(const DiscreteSpace& space, std::size_t t);
double diffusion_form(const DiscreteSpace& space, const HybridVectorField& w, const HybridVectorField& v);

/// Extreme generalized eigenvalues of a_T against ||.||_{1,T}^2 over all
/// elements, on the quotient by the lifted constants.
struct EquivalenceConstants {
  double lower = 0.0;
  double upper = 0.0;
};
EquivalenceConstants diffusion_equivalence_constants(const DiscreteSpace& space);

/// G_T^k q as RTN coefficients on element t.
Eigen::VectorXd pressure_gradient(const DiscreteSpace& space, std::size_t t, const Eigen::VectorXd& local_q);
/// B_h(v, q) = sum_T int_T v_T . G_T q.
double divergence_coupling(const DiscreteSpace& space, const HybridVectorField& v, const HybridScalarField& q);

struct DivergenceReport {
  double max_divergence = 0.0;       // sup_T |div v_T|
  double max_normal_jump = 0.0;      // sup over interior faces of |[v . n]|
  double max_boundary_normal = 0.0;  // sup over boundary faces of |v_T . n - data|
  double max_rtn_excess = 0.0;       // sup_T |v_T - pi^k_T v_T|
  double scale = 0.0;                // sup |v_T|
  double worst_relative() const;
  bool passes(double rtol) const { return worst_relative() <= rtol; }
};

/// Measures how far v is from the discretely divergence-free subspace. When
/// boundary_data is given, the boundary normal trace is compared against
/// pi^k_F(boundary_data . n), computed with the highest quadrature degree,
/// instead of zero.
DivergenceReport check_divergence_free(const DiscreteSpace& space, const HybridVectorField& v,
                                       const VectorFunction& boundary_data = {});

double trilinear_form(const DiscreteSpace& space, const HybridVectorField& w, const HybridVectorField& v,
                      const HybridVectorField& z);

/// A with t_T(w, v, z) = z^T A v for fixed element coefficients w_T (nLoc x nLoc).
Eigen::MatrixXd convection_matrix(const DiscreteSpace& space, std::size_t t, const Eigen::VectorXd& w_element);
/// C with t_T(w, v, z) = z^T C w_T for fixed local v (nLoc x nR).
Eigen::MatrixXd transport_matrix(const DiscreteSpace& space, std::size_t t, const Eigen::VectorXd& v_local);

double upwind_form(const DiscreteSpace& space, const std::vector<double>& alpha, const HybridVectorField& w,
                   const HybridVectorField& v);
double upwind_seminorm(const DiscreteSpace& space, const std::vector<double>& alpha, const HybridVectorField& v);

}  // namespace mhdhho
