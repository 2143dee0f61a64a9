#ifndef MULTIPHASE_MESH_HPP
#define MULTIPHASE_MESH_HPP

#include "multiphase/exponent_fields.hpp"
#include "multiphase/types.hpp"

#include <Eigen/Core>

#include <array>
#include <memory>
#include <optional>
#include <vector>

namespace multiphase {

/// Conforming triangulation with cached P1 element geometry. Immutable.
class TriMesh {
public:
    using Triangle = std::array<Index, 3>;
    using Edge = std::array<Index, 2>;
    /// Rows are the constant gradients of the three barycentric basis functions.
    using BasisGradients = Eigen::Matrix<double, 3, 2>;

    /// Triangles are reoriented counter-clockwise; zero-area triangles are rejected.
    TriMesh(PointSet vertices, std::vector<Triangle> triangles, std::vector<Edge> parents = {});

    Index num_vertices() const { return static_cast<Index>(vertices_.size()); }
    Index num_triangles() const { return static_cast<Index>(triangles_.size()); }
    const PointSet& vertices() const { return vertices_; }
    const Point& vertex(Index i) const { return vertices_[i]; }
    const std::vector<Triangle>& triangles() const { return triangles_; }
    const Triangle& triangle(Index t) const { return triangles_[t]; }

    bool is_boundary(Index v) const { return boundary_[v] != 0; }
    const std::vector<char>& boundary_flags() const { return boundary_; }
    const std::vector<Edge>& boundary_edges() const { return boundary_edges_; }

    double h_max() const { return h_max_; }
    double area(Index t) const { return areas_[t]; }
    double total_area() const;
    const BasisGradients& basis_gradients(Index t) const { return gradients_[t]; }

    /// For refined meshes: the two parent vertices of each vertex (equal for inherited vertices).
    const std::vector<Edge>& parents() const { return parents_; }

    Point map(Index t, const Eigen::Vector3d& bary) const;
    /// Triangle containing x with its barycentric coordinates (linear scan).
    std::optional<std::pair<Index, Eigen::Vector3d>> locate(const Point& x) const;

private:
    PointSet vertices_;
    std::vector<Triangle> triangles_;
    std::vector<Edge> parents_;
    std::vector<char> boundary_;
    std::vector<Edge> boundary_edges_;
    std::vector<double> areas_;
    std::vector<BasisGradients> gradients_;
    double h_max_ = 0.0;
};

using MeshPtr = std::shared_ptr<const TriMesh>;

/// Axis-aligned rectangles get an (n+1)^2 grid split into 2n^2 triangles; other
/// polygons are ear-clipped and uniformly refined ceil(log2 n) times.
MeshPtr structured_mesh(const Domain2D& domain, int n);

/// Regular 4-split of every triangle.
MeshPtr refine(const TriMesh& mesh);

/// Concentric-ring triangulation of a disk with `rings` rings; boundary vertices lie on the circle.
MeshPtr disk_mesh(const Point& center, double radius, int rings);

} // namespace multiphase

#endif
