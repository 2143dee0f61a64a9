#include "multiphase/quadrature.hpp"

namespace multiphase {

namespace {

TriangleRule make_centroid()
{
    return {{Eigen::Vector3d(1.0 / 3, 1.0 / 3, 1.0 / 3)}, {1.0}, 1};
}

TriangleRule make_three_point()
{
    TriangleRule rule;
    rule.degree = 2;
    rule.bary = {Eigen::Vector3d(2.0 / 3, 1.0 / 6, 1.0 / 6), Eigen::Vector3d(1.0 / 6, 2.0 / 3, 1.0 / 6),
                 Eigen::Vector3d(1.0 / 6, 1.0 / 6, 2.0 / 3)};
    rule.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    return rule;
}

// Radon's seven-point rule, exact for degree 5.
TriangleRule make_seven_point()
{
    const double s15 = std::sqrt(15.0);
    const double b1 = (6.0 + s15) / 21.0, a1 = 1.0 - 2.0 * b1;
    const double b2 = (6.0 - s15) / 21.0, a2 = 1.0 - 2.0 * b2;
    const double w1 = (155.0 + s15) / 1200.0;
    const double w2 = (155.0 - s15) / 1200.0;
    TriangleRule rule;
    rule.degree = 5;
    rule.bary = {Eigen::Vector3d(1.0 / 3, 1.0 / 3, 1.0 / 3),
                 Eigen::Vector3d(a1, b1, b1), Eigen::Vector3d(b1, a1, b1), Eigen::Vector3d(b1, b1, a1),
                 Eigen::Vector3d(a2, b2, b2), Eigen::Vector3d(b2, a2, b2), Eigen::Vector3d(b2, b2, a2)};
    rule.weights = {9.0 / 40.0, w1, w1, w1, w2, w2, w2};
    return rule;
}

} // namespace

const TriangleRule& triangle_rule(int degree)
{
    static const TriangleRule centroid = make_centroid();
    static const TriangleRule three = make_three_point();
    static const TriangleRule seven = make_seven_point();
    require(degree >= 0, "quadrature degree must be nonnegative");
    if (degree <= 1) return centroid;
    if (degree == 2) return three;
    if (degree <= 5) return seven;
    throw ContractError("no built-in triangle rule above degree 5");
}

QuadratureMeasure mesh_quadrature(const TriMesh& mesh, int degree)
{
    const TriangleRule& rule = triangle_rule(degree);
    QuadratureMeasure quad;
    quad.points_per_triangle = static_cast<int>(rule.weights.size());
    quad.points.reserve(static_cast<std::size_t>(mesh.num_triangles()) * rule.weights.size());
    CompensatedSum mass;
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        for (std::size_t k = 0; k < rule.weights.size(); ++k) {
            QuadraturePoint qp;
            qp.tri = t;
            qp.bary = rule.bary[k];
            qp.x = mesh.map(t, qp.bary);
            qp.weight = rule.weights[k] * mesh.area(t);
            mass += qp.weight;
            quad.points.push_back(qp);
        }
    }
    quad.total_mass = mass.value();
    return quad;
}

QuadratureMeasure point_measure(const PointSet& points, const std::vector<double>& weights)
{
    require(points.size() == weights.size(), "point_measure: size mismatch");
    QuadratureMeasure quad;
    CompensatedSum mass;
    for (std::size_t i = 0; i < points.size(); ++i) {
        require(weights[i] > 0, "quadrature weights must be positive");
        QuadraturePoint qp;
        qp.x = points[i];
        qp.weight = weights[i];
        mass += weights[i];
        quad.points.push_back(qp);
    }
    quad.total_mass = mass.value();
    return quad;
}

double integrate(const std::function<double(const Point&)>& f, const TriMesh& mesh, int rule_degree)
{
    return integrate(mesh_quadrature(mesh, rule_degree), [&](const QuadraturePoint& qp) { return f(qp.x); });
}

} // namespace multiphase
