#ifndef MULTIPHASE_FE_FUNCTION_HPP
#define MULTIPHASE_FE_FUNCTION_HPP

#include "multiphase/mesh.hpp"
#include "multiphase/quadrature.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace multiphase {

/// Continuous piecewise-linear function given by its nodal values.
class FeFunction {
public:
    FeFunction(MeshPtr mesh, Eigen::VectorXd values);
    static FeFunction zero(MeshPtr mesh);

    const TriMesh& mesh() const { return *mesh_; }
    const MeshPtr& mesh_ptr() const { return mesh_; }
    const Eigen::VectorXd& values() const { return values_; }

    double value_at(Index tri, const Eigen::Vector3d& bary) const;
    double value_at(const QuadraturePoint& qp) const { return value_at(qp.tri, qp.bary); }
    Point gradient_on(Index tri) const;

    FeFunction operator+(const FeFunction& other) const;
    FeFunction operator-(const FeFunction& other) const;
    FeFunction operator*(double c) const;
    friend FeFunction operator*(double c, const FeFunction& u) { return u * c; }

private:
    MeshPtr mesh_;
    Eigen::VectorXd values_;
};

Point gradient_on(Index tri, const FeFunction& u);

/// nodal_values[i] = fn(vertex_i); throws Error on a non-finite value.
FeFunction interpolate(const std::function<double(const Point&)>& fn, MeshPtr mesh);

/// Nodal values uniform in [-1, 1] times an amplitude 10^U(-log_span, log_span); zero on
/// boundary vertices when requested.
std::vector<FeFunction> random_fe_functions(const MeshPtr& mesh, int count, std::uint64_t seed,
                                            bool zero_boundary = false, double log_span = 1.0);

/// u at every quadrature point (points must carry a triangle).
Eigen::VectorXd sample_values(const FeFunction& u, const QuadratureMeasure& quad);
/// |grad u| at every quadrature point.
Eigen::VectorXd sample_gradient_norms(const FeFunction& u, const QuadratureMeasure& quad);

/// Ball B_R(center).
struct Ball {
    Point center = Point::Zero();
    double radius = 1.0;
};

/// Distance from x to the nearest boundary edge of the mesh.
double distance_to_mesh_boundary(const TriMesh& mesh, const Point& x);

/// Throws Error("ball escapes Ω") unless the ball lies in the mesh up to h_max.
void check_ball_inside(const TriMesh& mesh, const Ball& ball);

/// Quadrature of the mesh clipped to the ball: triangles crossing the circle are
/// split `depth` times and the leaf rule points are kept when inside the ball.
/// total_mass is the clipped measure.
QuadratureMeasure ball_quadrature(const TriMesh& mesh, const Ball& ball, int degree = 5, int depth = 3);

/// Mean of u over the clipped ball (divided by the clipped measure).
double ball_average(const FeFunction& u, const Ball& ball);

/// Legacy ASCII VTK 3.0 unstructured grid with nodal scalars and per-triangle 2-vectors.
struct VtkCellVectors {
    std::string name;
    Eigen::Matrix<double, Eigen::Dynamic, 2> data;
};
void write_vtk(const std::string& path, const TriMesh& mesh, const std::string& title,
               const std::vector<std::pair<std::string, Eigen::VectorXd>>& point_scalars,
               const std::vector<VtkCellVectors>& cell_vectors = {});

/// Per-triangle gradients of u, shaped for write_vtk.
Eigen::Matrix<double, Eigen::Dynamic, 2> gradient_field(const FeFunction& u);

} // namespace multiphase

#endif
