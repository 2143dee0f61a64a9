#ifndef MULTIPHASE_OPERATOR_HPP
#define MULTIPHASE_OPERATOR_HPP

#include "multiphase/fe_function.hpp"
#include "multiphase/modular.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <vector>

namespace multiphase {

/// Flux a(x, g) = (s^{p-2} + mu1 s^{q-2} + mu2 s^{r-2}) g with s = sqrt(|g|^2 + eps^2).
struct FluxParams {
    PhaseFunction tf;
    double eps = 0.0;

    /// eps = 0 is rejected when p- < 2.
    FluxParams(PhaseFunction phase, double regularization);
};

/// Coefficient a and derivative factor b of one power term c s^{e-2} g:
/// d/dg = a I + b g g^T.
template <typename Scalar>
void power_term(Scalar s, Scalar e, Scalar c, Scalar& a, Scalar& b)
{
    using std::pow;
    if (c == Scalar(0)) return;
    if (e == Scalar(2)) {
        a += c;
        return;
    }
    if (s == Scalar(0)) return;
    const Scalar se = pow(s, e - Scalar(2));
    a += c * se;
    b += c * (e - Scalar(2)) * se / (s * s);
}

Point flux(const FluxParams& fp, const Point& x, const Point& g);

struct AssembledSystem {
    Eigen::VectorXd residual;
    Eigen::SparseMatrix<double> jacobian;
    double energy = 0.0;
};

/// P1 discretization of the operator on a fixed mesh. Exponents and weights are sampled
/// once at the quadrature points; boundary vertices are Dirichlet nodes.
class DiscreteOperator {
public:
    DiscreteOperator(FluxParams fp, MeshPtr mesh, int quad_degree = 5);

    const FluxParams& params() const { return fp_; }
    const TriMesh& mesh() const { return *mesh_; }
    const MeshPtr& mesh_ptr() const { return mesh_; }
    const QuadratureMeasure& quadrature() const { return quad_; }
    const PhaseSamples& phase() const { return phase_; }

    Index num_free() const { return static_cast<Index>(free_.size()); }
    const std::vector<Index>& free_nodes() const { return free_; }
    /// -1 for boundary vertices.
    Index free_index(Index vertex) const { return free_index_[static_cast<std::size_t>(vertex)]; }

    Eigen::VectorXd restrict_to_free(const Eigen::VectorXd& nodal) const;
    /// Copy of base with its free values replaced.
    Eigen::VectorXd with_free(const Eigen::VectorXd& base, const Eigen::VectorXd& free_values) const;

    /// sum c (s^e - eps^e) / e integrated; eps = 0 gives the energy of the unregularized flux.
    double energy(const FeFunction& u, double eps) const;
    /// Residual over free nodes: int a(x, grad u) . grad phi_i - load_i. An empty load means none.
    Eigen::VectorXd residual(const FeFunction& u, double eps, const Eigen::VectorXd& load = {}) const;
    /// Residual, exact Jacobian of the regularized flux and the unregularized energy.
    AssembledSystem assemble(const FeFunction& u, double eps, const Eigen::VectorXd& load = {}) const;

    /// Standard P1 stiffness matrix on the free nodes.
    Eigen::SparseMatrix<double> stiffness() const;
    /// Consistent P1 mass matrix on the free nodes.
    Eigen::SparseMatrix<double> mass() const;

private:
    FluxParams fp_;
    MeshPtr mesh_;
    QuadratureMeasure quad_;
    PhaseSamples phase_;
    std::vector<Index> free_;
    std::vector<Index> free_index_;

    void check_mesh(const FeFunction& u) const;
    void accumulate(const FeFunction& u, double eps, Eigen::VectorXd* residual,
                    std::vector<Eigen::Triplet<double>>* triplets, double* energy, double energy_eps) const;
};

/// Energy with the unregularized integrand.
double energy(const FluxParams& fp, const FeFunction& u);
AssembledSystem assemble(const FluxParams& fp, const FeFunction& u, const Eigen::VectorXd& load = {});

/// |(I(u + d h) - I(u - d h)) / 2d - <A(u), h>|. eps = 0 is used whenever p- >= 2.
double check_gateaux(const FluxParams& fp, const FeFunction& u, const FeFunction& h, double delta);
/// <A(u) - A(v), u - v> over the free nodes.
double check_monotone(const FluxParams& fp, const FeFunction& u, const FeFunction& v);

struct CoerciveSample {
    double scale = 0.0;
    double ratio = 0.0;
    /// min(||grad cu||^{p- - 1}, ||grad cu||^{r+ - 1}).
    double lower_bound = 0.0;
};
/// ratio = <A(cu), cu> / ||grad(cu)||_T for each scale c.
std::vector<CoerciveSample> check_coercive(const FluxParams& fp, const FeFunction& u, const std::vector<double>& scales);

} // namespace multiphase

#endif
