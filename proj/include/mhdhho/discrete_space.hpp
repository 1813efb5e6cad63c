#pragma once

#include "mhdhho/mesh.hpp"
#include "mhdhho/polyspace.hpp"

#include <Eigen/Dense>

#include <array>
#include <memory>
#include <stdexcept>
#include <vector>

namespace mhdhho {

inline constexpr int kMaxDegree = 3;

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Element basis values cached at the points of a quadrature rule.
struct ElementQuadrature {
  std::vector<Point> points;
  std::vector<double> weights;
  std::vector<Eigen::MatrixX2d> psi;     // RTN values, nR x 2
  std::vector<Eigen::MatrixX2d> grad_x;  // gradients of the x components, nR x 2
  std::vector<Eigen::MatrixX2d> grad_y;
};

/// Face quadrature of one local face of an element, with the element RTN
/// basis and the face P^k basis evaluated at each point.
struct FaceQuadrature {
  std::vector<Point> points;
  std::vector<double> weights;
  std::vector<Eigen::MatrixX2d> psi;     // nR x 2
  std::vector<Eigen::VectorXd> face;     // nF
  Point normal = Point::Zero();
};

/// Local matrices of one element. Local vector unknowns are ordered
/// [v_T | v_F0 (x, y) | v_F1 (x, y) | v_F2 (x, y)]; local scalar unknowns as
/// [q_T | q_F0 | q_F1 | q_F2].
struct LocalOperatorSet {
  double lambda = 0.0;
  Eigen::MatrixXd rtn_mass;        // Gram matrix of the RTN basis
  Eigen::MatrixXd reconstruction;  // local vector -> P^{k+1}(T)^2 coefficients (x block, y block)
  Eigen::MatrixXd consistency;     // (grad p, grad p)_T
  Eigen::MatrixXd delta_element;   // delta_T, nR x nLoc
  std::array<Eigen::MatrixXd, 3> delta_face;  // delta_TF, 2 nF x nLoc
  Eigen::MatrixXd stabilization;
  Eigen::MatrixXd diffusion;       // a_T
  Eigen::MatrixXd jump;            // sum_F int_F (v_F - v_T).(w_F - w_T)
  Eigen::MatrixXd mass;            // (.,.)_{0,T}
  Eigen::MatrixXd norm1;           // ||.||_{1,T}^2
  Eigen::MatrixXd gradient_rhs;    // D: int_T G q . psi_j, nR x nPloc
  Eigen::MatrixXd gradient;        // G_T in the RTN basis
  Eigen::VectorXd scalar_integral; // int_T phi_i for the P^k(T) basis
};

/// Hybrid spaces U^k_h and P^k_h on a mesh, with all per-element bases,
/// quadrature caches and local operators precomputed.
class DiscreteSpace {
 public:
  DiscreteSpace(Mesh mesh, int k);
  DiscreteSpace(const DiscreteSpace&) = delete;
  DiscreteSpace& operator=(const DiscreteSpace&) = delete;

  const Mesh& mesh() const { return mesh_; }
  const GeometryCache& geometry() const { return geometry_; }
  int degree() const { return k_; }
  std::size_t num_elements() const { return mesh_.num_elements(); }
  std::size_t num_faces() const { return mesh_.num_faces(); }

  std::size_t rtn_dim() const { return n_rtn_; }
  std::size_t scalar_dim() const { return n_scalar_; }
  std::size_t face_scalar_dim() const { return n_face_; }
  std::size_t face_vector_dim() const { return 2 * n_face_; }
  std::size_t local_vector_dim() const { return n_rtn_ + 6 * n_face_; }
  std::size_t local_scalar_dim() const { return n_scalar_ + 3 * n_face_; }

  /// Degree used for polynomial integrands (exact for the trilinear form).
  int polynomial_quadrature_degree() const { return 3 * k_ + 3; }
  /// Degree used for non-polynomial integrands.
  int default_quadrature_degree() const { return 2 * (k_ + 2) + 2; }

  const Triangle& triangle(std::size_t t) const { return elements_[t].tri; }
  const VectorBasis& rtn_basis(std::size_t t) const { return elements_[t].rtn; }
  const ScalarBasis& scalar_basis(std::size_t t) const { return elements_[t].scalar; }
  const ScalarBasis& reconstruction_basis(std::size_t t) const { return elements_[t].recon; }
  const RtnInterpolator& interpolator(std::size_t t) const { return elements_[t].interp; }
  const FaceBasis& face_basis(std::size_t f) const { return face_bases_[f]; }
  const LocalOperatorSet& operators(std::size_t t) const { return elements_[t].ops; }
  const ElementQuadrature& element_quadrature(std::size_t t) const { return elements_[t].quad; }
  const FaceQuadrature& face_quadrature(std::size_t t, std::size_t i) const { return elements_[t].face_quad[i]; }

  /// Segment endpoints of a face in its stored orientation.
  std::array<Point, 2> face_segment(std::size_t f) const;

 private:
  struct ElementData {
    Triangle tri{};
    VectorBasis rtn;
    ScalarBasis scalar;
    ScalarBasis recon;
    RtnInterpolator interp;
    ElementQuadrature quad;
    std::array<FaceQuadrature, 3> face_quad;
    LocalOperatorSet ops;
  };

  void build_element(std::size_t t);
  void build_operators(std::size_t t);

  Mesh mesh_;
  GeometryCache geometry_;
  int k_;
  std::size_t n_rtn_, n_scalar_, n_face_;
  std::vector<FaceBasis> face_bases_;
  std::vector<ElementData> elements_;
};

/// Element of U^k_h: RTN^{k+1} blocks on elements and P^k(F)^2 blocks on faces
/// (x coefficients first, then y).
class HybridVectorField {
 public:
  HybridVectorField() = default;
  explicit HybridVectorField(const DiscreteSpace& space, bool homogeneous_bc = false);

  std::size_t element_dim() const { return n_element_; }
  std::size_t face_dim() const { return n_face_; }
  bool homogeneous_bc() const { return homogeneous_bc_; }
  void set_homogeneous_bc(bool flag) { homogeneous_bc_ = flag; }

  Eigen::VectorXd& elements() { return elements_; }
  const Eigen::VectorXd& elements() const { return elements_; }
  Eigen::VectorXd& faces() { return faces_; }
  const Eigen::VectorXd& faces() const { return faces_; }

  auto element_block(std::size_t t) { return elements_.segment(idx(t * n_element_), idx(n_element_)); }
  auto element_block(std::size_t t) const { return elements_.segment(idx(t * n_element_), idx(n_element_)); }
  auto face_block(std::size_t f) { return faces_.segment(idx(f * n_face_), idx(n_face_)); }
  auto face_block(std::size_t f) const { return faces_.segment(idx(f * n_face_), idx(n_face_)); }

  /// Local unknowns of element t in the LocalOperatorSet ordering.
  Eigen::VectorXd local(const DiscreteSpace& space, std::size_t t) const;
  void check_compatible(const DiscreteSpace& space) const;

  HybridVectorField& operator+=(const HybridVectorField& o);
  HybridVectorField& operator-=(const HybridVectorField& o);
  HybridVectorField& operator*=(double s);

 private:
  static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }
  std::size_t n_element_ = 0;
  std::size_t n_face_ = 0;
  bool homogeneous_bc_ = false;
  Eigen::VectorXd elements_;
  Eigen::VectorXd faces_;
};

HybridVectorField operator+(HybridVectorField a, const HybridVectorField& b);
HybridVectorField operator-(HybridVectorField a, const HybridVectorField& b);
HybridVectorField operator*(double s, HybridVectorField a);

/// Element of P^k_h: P^k(T) blocks on elements and P^k(F) blocks on faces.
class HybridScalarField {
 public:
  HybridScalarField() = default;
  explicit HybridScalarField(const DiscreteSpace& space, bool zero_mean = false);

  std::size_t element_dim() const { return n_element_; }
  std::size_t face_dim() const { return n_face_; }
  bool zero_mean() const { return zero_mean_; }
  void set_zero_mean(bool flag) { zero_mean_ = flag; }

  Eigen::VectorXd& elements() { return elements_; }
  const Eigen::VectorXd& elements() const { return elements_; }
  Eigen::VectorXd& faces() { return faces_; }
  const Eigen::VectorXd& faces() const { return faces_; }

  auto element_block(std::size_t t) { return elements_.segment(idx(t * n_element_), idx(n_element_)); }
  auto element_block(std::size_t t) const { return elements_.segment(idx(t * n_element_), idx(n_element_)); }
  auto face_block(std::size_t f) { return faces_.segment(idx(f * n_face_), idx(n_face_)); }
  auto face_block(std::size_t f) const { return faces_.segment(idx(f * n_face_), idx(n_face_)); }

  Eigen::VectorXd local(const DiscreteSpace& space, std::size_t t) const;
  void check_compatible(const DiscreteSpace& space) const;

 private:
  static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }
  std::size_t n_element_ = 0;
  std::size_t n_face_ = 0;
  bool zero_mean_ = false;
  Eigen::VectorXd elements_;
  Eigen::VectorXd faces_;
};

}  // namespace mhdhho
