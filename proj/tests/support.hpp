#ifndef MULTIPHASE_TESTS_SUPPORT_HPP
#define MULTIPHASE_TESTS_SUPPORT_HPP

// Helpers and test-side reference computations. Nothing here calls the library
// routine it is used to check.

#include "multiphase/operator.hpp"
#include "multiphase/quadrature.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SparseCore>

#include <cmath>
#include <functional>
#include <numbers>

namespace mptest {

using namespace multiphase;

inline constexpr double kPi = std::numbers::pi;

inline ScalarField field(double c) { return ScalarField::constant(c); }
inline ScalarField field(std::function<double(const Point&)> fn) { return ScalarField::from_function(std::move(fn)); }

inline PhaseFunction phase(ScalarField p, ScalarField q, ScalarField r, ScalarField mu1, ScalarField mu2,
                           const Domain2D& domain = Domain2D::unit_square(), int grid = 64)
{
    return PhaseFunction{ExponentTriple(std::move(p), std::move(q), std::move(r), domain, grid),
                         WeightPair(std::move(mu1), std::move(mu2), domain, grid)};
}

inline PhaseFunction constant_phase(double p, double q, double r, double mu1, double mu2,
                                    const Domain2D& domain = Domain2D::unit_square())
{
    return phase(field(p), field(q), field(r), field(mu1), field(mu2), domain, 8);
}

inline MeshPtr unit_mesh(int n) { return structured_mesh(Domain2D::unit_square(), n); }

/// Bisection on alpha -> rho(1/alpha) - 1 from a wide fixed bracket, no power-law seeding.
inline double bisect_norm(const std::function<double(double)>& modular_of_scaled)
{
    double lo = 1e-12, hi = 1e12;
    for (int i = 0; i < 400; ++i) {
        const double mid = std::sqrt(lo * hi);
        if (modular_of_scaled(1.0 / mid) > 1.0)
            lo = mid;
        else
            hi = mid;
    }
    return std::sqrt(lo * hi);
}

/// Gauss-Legendre nodes and weights on [a, b] by Newton on the Legendre recurrence.
inline void gauss_legendre(int n, double a, double b, std::vector<double>& x, std::vector<double>& w)
{
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i] = 0.5 * (a + b) + 0.5 * (b - a) * z;
        w[i] = (b - a) / ((1.0 - z * z) * dp * dp);
    }
}

/// Integral of f over the disk B_R(c) in polar coordinates.
inline double polar_integral(const std::function<double(const Point&)>& f, const Point& c, double R, int nr = 40,
                             int nt = 128)
{
    std::vector<double> rx, rw;
    gauss_legendre(nr, 0.0, R, rx, rw);
    double sum = 0.0;
    for (int i = 0; i < nr; ++i) {
        for (int k = 0; k < nt; ++k) {
            const double th = 2.0 * kPi * k / nt;
            sum += rw[i] * rx[i] * (2.0 * kPi / nt) * f(c + rx[i] * Point(std::cos(th), std::sin(th)));
        }
    }
    return sum;
}

/// Residual and Jacobian of a flux sum_k c_k(x) s^{e_k(x) - 2} g, written as a plain
/// per-triangle loop over the degree-5 rule. Terms are (exponent, weight) callbacks.
struct ReferenceTerm {
    std::function<double(const Point&)> exponent;
    std::function<double(const Point&)> weight;
};

struct ReferenceSystem {
    Eigen::VectorXd residual;
    Eigen::MatrixXd jacobian;
    double energy = 0.0;
};

inline ReferenceSystem reference_assembly(const TriMesh& mesh, const std::vector<ReferenceTerm>& terms,
                                          const Eigen::VectorXd& u, double eps)
{
    std::vector<Index> free_index(mesh.num_vertices(), -1);
    Index nfree = 0;
    for (Index v = 0; v < mesh.num_vertices(); ++v)
        if (!mesh.is_boundary(v)) free_index[v] = nfree++;
    ReferenceSystem sys;
    sys.residual = Eigen::VectorXd::Zero(nfree);
    sys.jacobian = Eigen::MatrixXd::Zero(nfree, nfree);
    const TriangleRule& rule = triangle_rule(5);
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const auto& G = mesh.basis_gradients(t);
        Eigen::Vector2d g = Eigen::Vector2d::Zero();
        for (int a = 0; a < 3; ++a) g += u[tri[a]] * G.row(a).transpose();
        const double s2 = g.squaredNorm() + eps * eps;
        const double s = std::sqrt(s2);
        for (std::size_t k = 0; k < rule.weights.size(); ++k) {
            Point x = Point::Zero();
            for (int a = 0; a < 3; ++a) x += rule.bary[k][a] * mesh.vertex(tri[a]);
            const double w = rule.weights[k] * mesh.area(t);
            double coef = 0.0, dcoef = 0.0;
            for (const auto& term : terms) {
                const double e = term.exponent(x), c = term.weight(x);
                if (c == 0.0) continue;
                sys.energy += w * c * std::pow(std::sqrt(g.squaredNorm()), e) / e;
                if (s == 0.0) {
                    if (e == 2.0) coef += c;
                    continue;
                }
                coef += c * std::pow(s, e - 2.0);
                dcoef += c * (e - 2.0) * std::pow(s, e - 4.0);
            }
            const Eigen::Matrix2d D = coef * Eigen::Matrix2d::Identity() + dcoef * g * g.transpose();
            for (int a = 0; a < 3; ++a) {
                const Index i = free_index[tri[a]];
                if (i < 0) continue;
                sys.residual[i] += w * coef * g.dot(G.row(a).transpose());
                for (int b = 0; b < 3; ++b) {
                    const Index j = free_index[tri[b]];
                    if (j < 0) continue;
                    sys.jacobian(i, j) += w * G.row(a).dot(D * G.row(b).transpose());
                }
            }
        }
    }
    return sys;
}

/// Newton on the reference assembly with zero load; boundary values are kept from u0.
inline Eigen::VectorXd reference_newton(const TriMesh& mesh, const std::vector<ReferenceTerm>& terms,
                                        Eigen::VectorXd u, double eps, const Eigen::VectorXd& load_free)
{
    std::vector<Index> free;
    for (Index v = 0; v < mesh.num_vertices(); ++v)
        if (!mesh.is_boundary(v)) free.push_back(v);
    for (int it = 0; it < 100; ++it) {
        const ReferenceSystem sys = reference_assembly(mesh, terms, u, eps);
        const Eigen::VectorXd r = sys.residual - load_free;
        const Eigen::VectorXd du = sys.jacobian.ldlt().solve(-r);
        for (std::size_t k = 0; k < free.size(); ++k) u[free[k]] += du[static_cast<Index>(k)];
        if (du.lpNorm<Eigen::Infinity>() < 1e-15 * (1.0 + u.lpNorm<Eigen::Infinity>())) break;
    }
    return u;
}

/// Consistent load int g phi_i over free nodes with the degree-5 rule.
inline Eigen::VectorXd reference_load(const TriMesh& mesh, const std::function<double(const Point&)>& g)
{
    std::vector<Index> free_index(mesh.num_vertices(), -1);
    Index nfree = 0;
    for (Index v = 0; v < mesh.num_vertices(); ++v)
        if (!mesh.is_boundary(v)) free_index[v] = nfree++;
    Eigen::VectorXd load = Eigen::VectorXd::Zero(nfree);
    const TriangleRule& rule = triangle_rule(5);
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        for (std::size_t k = 0; k < rule.weights.size(); ++k) {
            Point x = Point::Zero();
            for (int a = 0; a < 3; ++a) x += rule.bary[k][a] * mesh.vertex(tri[a]);
            const double gx = g(x) * rule.weights[k] * mesh.area(t);
            for (int a = 0; a < 3; ++a)
                if (free_index[tri[a]] >= 0) load[free_index[tri[a]]] += gx * rule.bary[k][a];
        }
    }
    return load;
}

/// Radial solution of -div(|u'|^{p-2} u') = 1 on the unit disk with u(1) = 0, by
/// Simpson integration of u'(rho) = -(rho / N)^{1/(p-1)} from rho to 1.
inline double radial_reference(double rho, double p, int N = 2, int panels = 2000)
{
    auto du = [&](double s) { return std::pow(s / N, 1.0 / (p - 1.0)); };
    const double h = (1.0 - rho) / panels;
    double sum = du(rho) + du(1.0);
    for (int i = 1; i < panels; ++i) sum += (i % 2 ? 4.0 : 2.0) * du(rho + i * h);
    return sum * h / 3.0;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

} // namespace mptest

#endif
