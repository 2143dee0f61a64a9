#include "multiphase/mesh.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <unordered_map>

namespace multiphase {

namespace {

double cross2(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

std::uint64_t edge_key(Index a, Index b)
{
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

bool point_in_triangle(const Point& x, const Point& a, const Point& b, const Point& c)
{
    const double d1 = cross2(b - a, x - a);
    const double d2 = cross2(c - b, x - b);
    const double d3 = cross2(a - c, x - c);
    return d1 >= 0 && d2 >= 0 && d3 >= 0;
}

std::vector<TriMesh::Triangle> ear_clip(const PointSet& poly)
{
    std::vector<Index> ring(poly.size());
    for (std::size_t i = 0; i < poly.size(); ++i) ring[i] = static_cast<Index>(i);
    std::vector<TriMesh::Triangle> tris;
    while (ring.size() > 3) {
        bool clipped = false;
        const std::size_t n = ring.size();
        for (std::size_t i = 0; i < n && !clipped; ++i) {
            const Index ia = ring[(i + n - 1) % n], ib = ring[i], ic = ring[(i + 1) % n];
            const Point &a = poly[ia], &b = poly[ib], &c = poly[ic];
            if (cross2(b - a, c - b) <= 0) continue;
            bool empty = true;
            for (Index other : ring) {
                if (other == ia || other == ib || other == ic) continue;
                if (point_in_triangle(poly[other], a, b, c)) {
                    empty = false;
                    break;
                }
            }
            if (!empty) continue;
            tris.push_back({ia, ib, ic});
            ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(i));
            clipped = true;
        }
        if (!clipped) throw Error("ear clipping failed: degenerate polygon");
    }
    tris.push_back({ring[0], ring[1], ring[2]});
    return tris;
}

} // namespace

TriMesh::TriMesh(PointSet vertices, std::vector<Triangle> triangles, std::vector<Edge> parents)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), parents_(std::move(parents))
{
    require(!triangles_.empty(), "mesh needs at least one triangle");
    const Index nv = num_vertices();
    if (parents_.empty()) {
        parents_.resize(vertices_.size());
        for (Index i = 0; i < nv; ++i) parents_[i] = {i, i};
    }

    areas_.resize(triangles_.size());
    gradients_.resize(triangles_.size());
    std::unordered_map<std::uint64_t, int> edge_count;
    edge_count.reserve(triangles_.size() * 3);

    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        Triangle& tri = triangles_[t];
        for (Index v : tri)
            if (v < 0 || v >= nv) throw Error("triangle references a missing vertex");
        const Point& a = vertices_[tri[0]];
        double twice = cross2(vertices_[tri[1]] - a, vertices_[tri[2]] - a);
        if (twice < 0) {
            std::swap(tri[1], tri[2]);
            twice = -twice;
        }
        if (!(twice > 0)) throw Error("degenerate triangle with zero area");
        areas_[t] = 0.5 * twice;

        Eigen::Matrix2d jac;
        jac.col(0) = vertices_[tri[1]] - a;
        jac.col(1) = vertices_[tri[2]] - a;
        const Eigen::Matrix2d inv_t = jac.inverse().transpose();
        gradients_[t].row(1) = inv_t.col(0).transpose();
        gradients_[t].row(2) = inv_t.col(1).transpose();
        gradients_[t].row(0) = -(gradients_[t].row(1) + gradients_[t].row(2));

        for (int k = 0; k < 3; ++k) {
            const Index u = tri[k], v = tri[(k + 1) % 3];
            h_max_ = std::max(h_max_, (vertices_[u] - vertices_[v]).norm());
            if (++edge_count[edge_key(u, v)] > 2) throw Error("non-conforming mesh: edge shared by more than two triangles");
        }
    }

    boundary_.assign(vertices_.size(), 0);
    for (const Triangle& tri : triangles_) {
        for (int k = 0; k < 3; ++k) {
            const Index u = tri[k], v = tri[(k + 1) % 3];
            if (edge_count[edge_key(u, v)] == 1) {
                boundary_edges_.push_back({u, v});
                boundary_[u] = boundary_[v] = 1;
            }
        }
    }
}

double TriMesh::total_area() const
{
    CompensatedSum sum;
    for (double a : areas_) sum += a;
    return sum.value();
}

Point TriMesh::map(Index t, const Eigen::Vector3d& bary) const
{
    const Triangle& tri = triangles_[t];
    return bary[0] * vertices_[tri[0]] + bary[1] * vertices_[tri[1]] + bary[2] * vertices_[tri[2]];
}

std::optional<std::pair<Index, Eigen::Vector3d>> TriMesh::locate(const Point& x) const
{
    constexpr double tol = 1e-12;
    for (Index t = 0; t < num_triangles(); ++t) {
        const Point& a = vertices_[triangles_[t][0]];
        Eigen::Vector3d bary;
        const Point d = x - a;
        bary[1] = gradients_[t].row(1).dot(d);
        bary[2] = gradients_[t].row(2).dot(d);
        bary[0] = 1.0 - bary[1] - bary[2];
        if (bary.minCoeff() >= -tol) return std::make_pair(t, bary);
    }
    return std::nullopt;
}

MeshPtr structured_mesh(const Domain2D& domain, int n)
{
    require(n >= 1, "structured_mesh needs n >= 1");
    if (domain.is_axis_rectangle()) {
        const auto [lo, hi] = domain.bounding_box();
        PointSet verts;
        verts.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n; ++j)
                verts.emplace_back(lo.x() + (hi.x() - lo.x()) * i / n, lo.y() + (hi.y() - lo.y()) * j / n);
        auto id = [n](int i, int j) { return static_cast<Index>(i) * (n + 1) + j; };
        std::vector<TriMesh::Triangle> tris;
        tris.reserve(static_cast<std::size_t>(2) * n * n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
                tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
            }
        }
        return std::make_shared<const TriMesh>(std::move(verts), std::move(tris));
    }

    auto mesh = std::make_shared<const TriMesh>(domain.vertices(), ear_clip(domain.vertices()));
    for (int level = 1; level < n; level *= 2) mesh = refine(*mesh);
    return mesh;
}

MeshPtr refine(const TriMesh& mesh)
{
    PointSet verts = mesh.vertices();
    std::vector<TriMesh::Edge> parents;
    parents.reserve(verts.size() * 4);
    for (Index i = 0; i < mesh.num_vertices(); ++i) parents.push_back({i, i});

    std::unordered_map<std::uint64_t, Index> midpoint;
    midpoint.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 3);
    auto mid = [&](Index a, Index b) {
        const auto [it, inserted] = midpoint.try_emplace(edge_key(a, b), static_cast<Index>(verts.size()));
        if (inserted) {
            verts.push_back(0.5 * (mesh.vertex(a) + mesh.vertex(b)));
            parents.push_back({std::min(a, b), std::max(a, b)});
        }
        return it->second;
    };

    std::vector<TriMesh::Triangle> tris;
    tris.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 4);
    for (const auto& t : mesh.triangles()) {
        const Index ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
        tris.push_back({t[0], ab, ca});
        tris.push_back({ab, t[1], bc});
        tris.push_back({ca, bc, t[2]});
        tris.push_back({ab, bc, ca});
    }
    return std::make_shared<const TriMesh>(std::move(verts), std::move(tris), std::move(parents));
}

MeshPtr disk_mesh(const Point& center, double radius, int rings)
{
    require(rings >= 1 && radius > 0, "disk_mesh needs rings >= 1 and radius > 0");
    PointSet verts{center};
    auto ring_start = [](int k) { return static_cast<Index>(1 + 3 * k * (k - 1)); };
    for (int k = 1; k <= rings; ++k) {
        const int count = 6 * k;
        for (int j = 0; j < count; ++j) {
            const double th = 2.0 * std::numbers::pi * j / count;
            verts.emplace_back(center + radius * k / rings * Point(std::cos(th), std::sin(th)));
        }
    }
    std::vector<TriMesh::Triangle> tris;
    for (int j = 0; j < 6; ++j) tris.push_back({0, ring_start(1) + j, ring_start(1) + (j + 1) % 6});
    for (int k = 2; k <= rings; ++k) {
        const int m = 6 * (k - 1), big = 6 * k;
        const Index in0 = ring_start(k - 1), out0 = ring_start(k);
        int i = 0, j = 0;
        while (i < m || j < big) {
            const double next_in = static_cast<double>(i + 1) / m;
            const double next_out = static_cast<double>(j + 1) / big;
            if (j < big && (i == m || next_out <= next_in)) {
                tris.push_back({in0 + i % m, out0 + j % big, out0 + (j + 1) % big});
                ++j;
            } else {
                tris.push_back({in0 + i % m, out0 + j % big, in0 + (i + 1) % m});
                ++i;
            }
        }
    }
    return std::make_shared<const TriMesh>(std::move(verts), std::move(tris));
}

} // namespace multiphase
