#ifndef MULTIPHASE_QUADRATURE_HPP
#define MULTIPHASE_QUADRATURE_HPP

#include "multiphase/mesh.hpp"

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <vector>

namespace multiphase {

/// Symmetric rule on the reference triangle; weights sum to one.
struct TriangleRule {
    std::vector<Eigen::Vector3d> bary;
    std::vector<double> weights;
    int degree = 0;
};

/// Smallest built-in rule exact to `degree` (1: centroid, 2: three points, up to 5: seven points).
const TriangleRule& triangle_rule(int degree);

struct QuadraturePoint {
    Point x;
    double weight = 0.0;
    Index tri = -1;
    Eigen::Vector3d bary = Eigen::Vector3d::Zero();
};

/// Discrete measure: located points with positive weights.
struct QuadratureMeasure {
    std::vector<QuadraturePoint> points;
    double total_mass = 0.0;
    /// Nonzero when the points come triangle-major from one rule over the whole mesh.
    int points_per_triangle = 0;

    std::size_t size() const { return points.size(); }
};

QuadratureMeasure mesh_quadrature(const TriMesh& mesh, int degree = 5);
/// Free-standing points (tri = -1); used for sampled integrands in tests and checks.
QuadratureMeasure point_measure(const PointSet& points, const std::vector<double>& weights);

/// Sum of weight * f(point); throws Error on a non-finite sample.
template <typename F>
double integrate(const QuadratureMeasure& quad, F&& f)
{
    CompensatedSum sum;
    for (const QuadraturePoint& qp : quad.points) {
        const double v = f(qp);
        if (!std::isfinite(v)) throw Error("non-finite integrand");
        sum += qp.weight * v;
    }
    return sum.value();
}

double integrate(const std::function<double(const Point&)>& f, const TriMesh& mesh, int rule_degree = 5);

} // namespace multiphase

#endif
