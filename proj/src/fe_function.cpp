#include "multiphase/fe_function.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <random>

namespace multiphase {

FeFunction::FeFunction(MeshPtr mesh, Eigen::VectorXd values) : mesh_(std::move(mesh)), values_(std::move(values))
{
    require(mesh_ != nullptr, "FeFunction needs a mesh");
    require(values_.size() == mesh_->num_vertices(), "FeFunction: one value per vertex required");
}

FeFunction FeFunction::zero(MeshPtr mesh)
{
    const Index n = mesh->num_vertices();
    return FeFunction(std::move(mesh), Eigen::VectorXd::Zero(n));
}

double FeFunction::value_at(Index tri, const Eigen::Vector3d& bary) const
{
    const auto& t = mesh_->triangle(tri);
    return bary[0] * values_[t[0]] + bary[1] * values_[t[1]] + bary[2] * values_[t[2]];
}

Point FeFunction::gradient_on(Index tri) const
{
    const auto& t = mesh_->triangle(tri);
    const Eigen::Vector3d local(values_[t[0]], values_[t[1]], values_[t[2]]);
    return mesh_->basis_gradients(tri).transpose() * local;
}

FeFunction FeFunction::operator+(const FeFunction& other) const
{
    require(mesh_ == other.mesh_, "FeFunction arithmetic needs a shared mesh");
    return FeFunction(mesh_, values_ + other.values_);
}

FeFunction FeFunction::operator-(const FeFunction& other) const
{
    require(mesh_ == other.mesh_, "FeFunction arithmetic needs a shared mesh");
    return FeFunction(mesh_, values_ - other.values_);
}

FeFunction FeFunction::operator*(double c) const { return FeFunction(mesh_, c * values_); }

Point gradient_on(Index tri, const FeFunction& u) { return u.gradient_on(tri); }

FeFunction interpolate(const std::function<double(const Point&)>& fn, MeshPtr mesh)
{
    Eigen::VectorXd values(mesh->num_vertices());
    for (Index i = 0; i < mesh->num_vertices(); ++i) {
        values[i] = fn(mesh->vertex(i));
        if (!std::isfinite(values[i])) throw Error("interpolate: non-finite vertex value");
    }
    return FeFunction(std::move(mesh), std::move(values));
}

std::vector<FeFunction> random_fe_functions(const MeshPtr& mesh, int count, std::uint64_t seed, bool zero_boundary,
                                            double log_span)
{
    require(count >= 0 && log_span >= 0.0, "invalid random function parameters");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<FeFunction> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const double amplitude = std::pow(10.0, log_span * uni(rng));
        Eigen::VectorXd v(mesh->num_vertices());
        for (Index i = 0; i < v.size(); ++i) {
            const double r = uni(rng);
            v[i] = zero_boundary && mesh->is_boundary(i) ? 0.0 : amplitude * r;
        }
        out.emplace_back(mesh, std::move(v));
    }
    return out;
}

Eigen::VectorXd sample_values(const FeFunction& u, const QuadratureMeasure& quad)
{
    Eigen::VectorXd out(static_cast<Index>(quad.size()));
    for (std::size_t k = 0; k < quad.size(); ++k) out[static_cast<Index>(k)] = u.value_at(quad.points[k]);
    return out;
}

Eigen::VectorXd sample_gradient_norms(const FeFunction& u, const QuadratureMeasure& quad)
{
    Eigen::VectorXd out(static_cast<Index>(quad.size()));
    Index cached_tri = -1;
    double cached = 0.0;
    for (std::size_t k = 0; k < quad.size(); ++k) {
        const Index t = quad.points[k].tri;
        if (t != cached_tri) {
            cached = u.gradient_on(t).norm();
            cached_tri = t;
        }
        out[static_cast<Index>(k)] = cached;
    }
    return out;
}

namespace {

double point_triangle_distance(const Point& x, const std::array<Point, 3>& v)
{
    auto cross2 = [](const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); };
    const double d1 = cross2(v[1] - v[0], x - v[0]);
    const double d2 = cross2(v[2] - v[1], x - v[1]);
    const double d3 = cross2(v[0] - v[2], x - v[2]);
    if ((d1 >= 0 && d2 >= 0 && d3 >= 0) || (d1 <= 0 && d2 <= 0 && d3 <= 0)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
        const Point& a = v[k];
        const Point ab = v[(k + 1) % 3] - a;
        const double s = std::clamp((x - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
        best = std::min(best, (x - (a + s * ab)).norm());
    }
    return best;
}

struct BallClipper {
    const TriMesh& mesh;
    const Ball& ball;
    const TriangleRule& rule;
    int depth;
    QuadratureMeasure& out;
    CompensatedSum mass;

    void emit(Index t, const std::array<Eigen::Vector3d, 3>& corners, double area, bool filter)
    {
        for (std::size_t k = 0; k < rule.weights.size(); ++k) {
            const Eigen::Vector3d& lb = rule.bary[k];
            QuadraturePoint qp;
            qp.tri = t;
            qp.bary = lb[0] * corners[0] + lb[1] * corners[1] + lb[2] * corners[2];
            qp.x = mesh.map(t, qp.bary);
            if (filter && (qp.x - ball.center).norm() > ball.radius) continue;
            qp.weight = rule.weights[k] * area;
            mass += qp.weight;
            out.points.push_back(qp);
        }
    }

    void clip(Index t, const std::array<Eigen::Vector3d, 3>& corners, double area, int level)
    {
        std::array<Point, 3> pts;
        int inside = 0;
        for (int k = 0; k < 3; ++k) {
            pts[k] = mesh.map(t, corners[k]);
            if ((pts[k] - ball.center).norm() <= ball.radius) ++inside;
        }
        if (inside == 3) {
            emit(t, corners, area, false);
            return;
        }
        if (point_triangle_distance(ball.center, pts) >= ball.radius) return;
        if (level == depth) {
            emit(t, corners, area, true);
            return;
        }
        const Eigen::Vector3d ab = 0.5 * (corners[0] + corners[1]);
        const Eigen::Vector3d bc = 0.5 * (corners[1] + corners[2]);
        const Eigen::Vector3d ca = 0.5 * (corners[2] + corners[0]);
        const double quarter = 0.25 * area;
        clip(t, {corners[0], ab, ca}, quarter, level + 1);
        clip(t, {ab, corners[1], bc}, quarter, level + 1);
        clip(t, {ca, bc, corners[2]}, quarter, level + 1);
        clip(t, {ab, bc, ca}, quarter, level + 1);
    }
};

} // namespace

double distance_to_mesh_boundary(const TriMesh& mesh, const Point& x)
{
    double dist = std::numeric_limits<double>::infinity();
    for (const auto& e : mesh.boundary_edges()) {
        const Point& a = mesh.vertex(e[0]);
        const Point ab = mesh.vertex(e[1]) - a;
        const double s = std::clamp((x - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
        dist = std::min(dist, (x - (a + s * ab)).norm());
    }
    return dist;
}

void check_ball_inside(const TriMesh& mesh, const Ball& ball)
{
    require(ball.radius > 0, "ball radius must be positive");
    if (!mesh.locate(ball.center)) throw Error("ball escapes Ω: center outside the mesh");
    if (distance_to_mesh_boundary(mesh, ball.center) < ball.radius - mesh.h_max()) throw Error("ball escapes Ω");
}

QuadratureMeasure ball_quadrature(const TriMesh& mesh, const Ball& ball, int degree, int depth)
{
    require(ball.radius > 0, "ball radius must be positive");
    QuadratureMeasure quad;
    BallClipper clipper{mesh, ball, triangle_rule(degree), depth, quad, {}};
    const std::array<Eigen::Vector3d, 3> unit = {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0),
                                                 Eigen::Vector3d(0, 0, 1)};
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const Point& a = mesh.vertex(tri[0]);
        const double reach = mesh.h_max() + ball.radius;
        if ((a - ball.center).squaredNorm() > reach * reach) continue;
        clipper.clip(t, unit, mesh.area(t), 0);
    }
    quad.total_mass = clipper.mass.value();
    return quad;
}

double ball_average(const FeFunction& u, const Ball& ball)
{
    check_ball_inside(u.mesh(), ball);
    const QuadratureMeasure quad = ball_quadrature(u.mesh(), ball);
    if (!(quad.total_mass > 0)) throw Error("ball does not meet the mesh");
    return integrate(quad, [&](const QuadraturePoint& qp) { return u.value_at(qp); }) / quad.total_mass;
}

Eigen::Matrix<double, Eigen::Dynamic, 2> gradient_field(const FeFunction& u)
{
    Eigen::Matrix<double, Eigen::Dynamic, 2> out(u.mesh().num_triangles(), 2);
    for (Index t = 0; t < u.mesh().num_triangles(); ++t) out.row(t) = u.gradient_on(t).transpose();
    return out;
}

void write_vtk(const std::string& path, const TriMesh& mesh, const std::string& title,
               const std::vector<std::pair<std::string, Eigen::VectorXd>>& point_scalars,
               const std::vector<VtkCellVectors>& cell_vectors)
{
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << std::setprecision(17);
    std::string header = title.substr(0, 255);
    std::replace(header.begin(), header.end(), '\n', ' ');
    out << "# vtk DataFile Version 3.0\n" << header << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.num_vertices() << " double\n";
    for (const Point& v : mesh.vertices()) out << v.x() << ' ' << v.y() << " 0\n";
    out << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
    for (const auto& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    out << "CELL_TYPES " << mesh.num_triangles() << '\n';
    for (Index t = 0; t < mesh.num_triangles(); ++t) out << "5\n";
    if (!point_scalars.empty()) {
        out << "POINT_DATA " << mesh.num_vertices() << '\n';
        for (const auto& [name, values] : point_scalars) {
            require(values.size() == mesh.num_vertices(), "VTK point data size mismatch");
            out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
            for (Index i = 0; i < values.size(); ++i) out << values[i] << '\n';
        }
    }
    if (!cell_vectors.empty()) {
        out << "CELL_DATA " << mesh.num_triangles() << '\n';
        for (const auto& field : cell_vectors) {
            require(field.data.rows() == mesh.num_triangles(), "VTK cell data size mismatch");
            out << "VECTORS " << field.name << " double\n";
            for (Index t = 0; t < field.data.rows(); ++t)
                out << field.data(t, 0) << ' ' << field.data(t, 1) << " 0\n";
        }
    }
    if (!out) throw Error("failed writing " + path);
}

} // namespace multiphase
