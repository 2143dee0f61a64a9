#include "multiphase/operator.hpp"

#include "multiphase/parallel.hpp"

#include <algorithm>

namespace multiphase {

namespace {

constexpr Index kBlock = 256;

struct PointCoefficients {
    double a = 0.0;
    double b = 0.0;
};

PointCoefficients coefficients(double s, double p, double q, double r, double mu1, double mu2)
{
    PointCoefficients c;
    power_term(s, p, 1.0, c.a, c.b);
    power_term(s, q, mu1, c.a, c.b);
    power_term(s, r, mu2, c.a, c.b);
    return c;
}

double potential_term(double s, double eps, double e, double c)
{
    if (c == 0.0) return 0.0;
    const double top = eps == 0.0 ? std::pow(s, e) : std::pow(s, e) - std::pow(eps, e);
    return c * top / e;
}

} // namespace

FluxParams::FluxParams(PhaseFunction phase, double regularization) : tf(std::move(phase)), eps(regularization)
{
    require(eps >= 0.0, "flux regularization must be nonnegative");
    require(eps > 0.0 || tf.exp.p_minus() >= 2.0, "eps = 0 needs p- >= 2");
}

Point flux(const FluxParams& fp, const Point& x, const Point& g)
{
    const double s = std::sqrt(g.squaredNorm() + fp.eps * fp.eps);
    const auto c = coefficients(s, fp.tf.exp.p()(x), fp.tf.exp.q()(x), fp.tf.exp.r()(x), fp.tf.w.mu1()(x),
                                fp.tf.w.mu2()(x));
    return c.a * g;
}

DiscreteOperator::DiscreteOperator(FluxParams fp, MeshPtr mesh, int quad_degree)
    : fp_(std::move(fp)), mesh_(std::move(mesh))
{
    require(mesh_ != nullptr, "operator needs a mesh");
    quad_ = mesh_quadrature(*mesh_, quad_degree);
    phase_ = sample_phase(fp_.tf, quad_);
    if (fp_.eps == 0.0) require(phase_.p_minus >= 2.0, "eps = 0 needs p- >= 2");
    free_index_.assign(static_cast<std::size_t>(mesh_->num_vertices()), -1);
    for (Index v = 0; v < mesh_->num_vertices(); ++v) {
        if (mesh_->is_boundary(v)) continue;
        free_index_[static_cast<std::size_t>(v)] = static_cast<Index>(free_.size());
        free_.push_back(v);
    }
}

Eigen::VectorXd DiscreteOperator::restrict_to_free(const Eigen::VectorXd& nodal) const
{
    require(nodal.size() == mesh_->num_vertices(), "nodal vector size mismatch");
    Eigen::VectorXd out(num_free());
    for (Index i = 0; i < num_free(); ++i) out[i] = nodal[free_[static_cast<std::size_t>(i)]];
    return out;
}

Eigen::VectorXd DiscreteOperator::with_free(const Eigen::VectorXd& base, const Eigen::VectorXd& free_values) const
{
    require(base.size() == mesh_->num_vertices() && free_values.size() == num_free(), "vector size mismatch");
    Eigen::VectorXd out = base;
    for (Index i = 0; i < num_free(); ++i) out[free_[static_cast<std::size_t>(i)]] = free_values[i];
    return out;
}

void DiscreteOperator::check_mesh(const FeFunction& u) const
{
    require(&u.mesh() == mesh_.get(), "function lives on a different mesh");
}

void DiscreteOperator::accumulate(const FeFunction& u, double eps, Eigen::VectorXd* residual,
                                  std::vector<Eigen::Triplet<double>>* triplets, double* energy,
                                  double energy_eps) const
{
    check_mesh(u);
    require(eps >= 0.0 && energy_eps >= 0.0, "regularization must be nonnegative");
    if (eps == 0.0 && (residual || triplets)) require(phase_.p_minus >= 2.0, "eps = 0 needs p- >= 2");
    const Index ntri = mesh_->num_triangles();
    const Index nblocks = (ntri + kBlock - 1) / kBlock;
    const int ppt = quad_.points_per_triangle;
    require(ppt > 0, "operator quadrature must be triangle-major");

    std::vector<Eigen::VectorXd> block_res(static_cast<std::size_t>(residual ? nblocks : 0));
    std::vector<std::vector<Eigen::Triplet<double>>> block_trip(static_cast<std::size_t>(triplets ? nblocks : 0));
    std::vector<double> block_energy(static_cast<std::size_t>(nblocks), 0.0);

    parallel_for(nblocks, [&](Index blk) {
        Eigen::VectorXd* res = nullptr;
        if (residual) {
            block_res[static_cast<std::size_t>(blk)] = Eigen::VectorXd::Zero(num_free());
            res = &block_res[static_cast<std::size_t>(blk)];
        }
        std::vector<Eigen::Triplet<double>>* trip = triplets ? &block_trip[static_cast<std::size_t>(blk)] : nullptr;
        CompensatedSum e_sum;
        const Index end = std::min(ntri, (blk + 1) * kBlock);
        for (Index t = blk * kBlock; t < end; ++t) {
            const auto& tri = mesh_->triangle(t);
            const TriMesh::BasisGradients& B = mesh_->basis_gradients(t);
            const Eigen::Vector3d local(u.values()[tri[0]], u.values()[tri[1]], u.values()[tri[2]]);
            const Eigen::Vector2d g = B.transpose() * local;
            const double g2 = g.squaredNorm();
            const double s = std::sqrt(g2 + eps * eps);
            const double s_energy = std::sqrt(g2 + energy_eps * energy_eps);
            double a_sum = 0.0, b_sum = 0.0;
            for (int k = 0; k < ppt; ++k) {
                const Index qi = t * ppt + k;
                const double w = quad_.points[static_cast<std::size_t>(qi)].weight;
                const double p = phase_.p[qi], q = phase_.q[qi], r = phase_.r[qi];
                const double mu1 = phase_.mu1[qi], mu2 = phase_.mu2[qi];
                if (res || trip) {
                    const auto c = coefficients(s, p, q, r, mu1, mu2);
                    a_sum += w * c.a;
                    b_sum += w * c.b;
                }
                if (energy) {
                    e_sum += w * (potential_term(s_energy, energy_eps, p, 1.0) +
                                  potential_term(s_energy, energy_eps, q, mu1) +
                                  potential_term(s_energy, energy_eps, r, mu2));
                }
            }
            if (res) {
                const Eigen::Vector3d local_res = a_sum * (B * g);
                for (int i = 0; i < 3; ++i) {
                    const Index fi = free_index_[static_cast<std::size_t>(tri[i])];
                    if (fi >= 0) (*res)[fi] += local_res[i];
                }
            }
            if (trip) {
                const Eigen::Matrix2d D = a_sum * Eigen::Matrix2d::Identity() + b_sum * g * g.transpose();
                Eigen::Matrix3d K = B * D * B.transpose();
                K = 0.5 * (K + K.transpose()).eval();
                for (int i = 0; i < 3; ++i) {
                    const Index fi = free_index_[static_cast<std::size_t>(tri[i])];
                    if (fi < 0) continue;
                    for (int j = 0; j < 3; ++j) {
                        const Index fj = free_index_[static_cast<std::size_t>(tri[j])];
                        if (fj >= 0) trip->emplace_back(fi, fj, K(i, j));
                    }
                }
            }
        }
        block_energy[static_cast<std::size_t>(blk)] = e_sum.value();
    });

    if (residual) {
        *residual = Eigen::VectorXd::Zero(num_free());
        for (const auto& r : block_res) *residual += r;
        if (!residual->allFinite()) throw Error("non-finite residual");
    }
    if (triplets) {
        triplets->clear();
        for (auto& b : block_trip) triplets->insert(triplets->end(), b.begin(), b.end());
    }
    if (energy) {
        CompensatedSum total;
        for (double e : block_energy) total += e;
        *energy = total.value();
        if (!std::isfinite(*energy)) throw Error("non-finite energy");
    }
}

double DiscreteOperator::energy(const FeFunction& u, double eps) const
{
    double e = 0.0;
    accumulate(u, eps, nullptr, nullptr, &e, eps);
    return e;
}

Eigen::VectorXd DiscreteOperator::residual(const FeFunction& u, double eps, const Eigen::VectorXd& load) const
{
    Eigen::VectorXd res;
    accumulate(u, eps, &res, nullptr, nullptr, 0.0);
    if (load.size() > 0) res -= restrict_to_free(load);
    return res;
}

AssembledSystem DiscreteOperator::assemble(const FeFunction& u, double eps, const Eigen::VectorXd& load) const
{
    AssembledSystem sys;
    std::vector<Eigen::Triplet<double>> trip;
    accumulate(u, eps, &sys.residual, &trip, &sys.energy, 0.0);
    if (load.size() > 0) sys.residual -= restrict_to_free(load);
    sys.jacobian.resize(num_free(), num_free());
    sys.jacobian.setFromTriplets(trip.begin(), trip.end());
    return sys;
}

Eigen::SparseMatrix<double> DiscreteOperator::stiffness() const
{
    std::vector<Eigen::Triplet<double>> trip;
    for (Index t = 0; t < mesh_->num_triangles(); ++t) {
        const auto& tri = mesh_->triangle(t);
        const TriMesh::BasisGradients& B = mesh_->basis_gradients(t);
        const Eigen::Matrix3d K = mesh_->area(t) * B * B.transpose();
        for (int i = 0; i < 3; ++i) {
            const Index fi = free_index_[static_cast<std::size_t>(tri[i])];
            if (fi < 0) continue;
            for (int j = 0; j < 3; ++j) {
                const Index fj = free_index_[static_cast<std::size_t>(tri[j])];
                if (fj >= 0) trip.emplace_back(fi, fj, K(i, j));
            }
        }
    }
    Eigen::SparseMatrix<double> K(num_free(), num_free());
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

Eigen::SparseMatrix<double> DiscreteOperator::mass() const
{
    std::vector<Eigen::Triplet<double>> trip;
    for (Index t = 0; t < mesh_->num_triangles(); ++t) {
        const auto& tri = mesh_->triangle(t);
        const double a = mesh_->area(t);
        for (int i = 0; i < 3; ++i) {
            const Index fi = free_index_[static_cast<std::size_t>(tri[i])];
            if (fi < 0) continue;
            for (int j = 0; j < 3; ++j) {
                const Index fj = free_index_[static_cast<std::size_t>(tri[j])];
                if (fj >= 0) trip.emplace_back(fi, fj, a * (i == j ? 1.0 / 6.0 : 1.0 / 12.0));
            }
        }
    }
    Eigen::SparseMatrix<double> M(num_free(), num_free());
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
}

double energy(const FluxParams& fp, const FeFunction& u)
{
    return DiscreteOperator(fp, u.mesh_ptr()).energy(u, 0.0);
}

AssembledSystem assemble(const FluxParams& fp, const FeFunction& u, const Eigen::VectorXd& load)
{
    return DiscreteOperator(fp, u.mesh_ptr()).assemble(u, fp.eps, load);
}

namespace {

double working_eps(const DiscreteOperator& op) { return op.phase().p_minus >= 2.0 ? 0.0 : op.params().eps; }

} // namespace

double check_gateaux(const FluxParams& fp, const FeFunction& u, const FeFunction& h, double delta)
{
    require(delta > 0.0, "Gateaux check needs delta > 0");
    const DiscreteOperator op(fp, u.mesh_ptr());
    for (Index v = 0; v < u.mesh().num_vertices(); ++v)
        require(!u.mesh().is_boundary(v) || h.values()[v] == 0.0, "direction must vanish on the boundary");
    const double eps = working_eps(op);
    const double plus = op.energy(u + delta * h, eps);
    const double minus = op.energy(u - delta * h, eps);
    const double pairing = op.residual(u, eps).dot(op.restrict_to_free(h.values()));
    return std::abs((plus - minus) / (2.0 * delta) - pairing);
}

double check_monotone(const FluxParams& fp, const FeFunction& u, const FeFunction& v)
{
    const DiscreteOperator op(fp, u.mesh_ptr());
    const Eigen::VectorXd diff = op.residual(u, fp.eps) - op.residual(v, fp.eps);
    return diff.dot(op.restrict_to_free(u.values() - v.values()));
}

std::vector<CoerciveSample> check_coercive(const FluxParams& fp, const FeFunction& u, const std::vector<double>& scales)
{
    const DiscreteOperator op(fp, u.mesh_ptr());
    for (Index v = 0; v < u.mesh().num_vertices(); ++v)
        require(!u.mesh().is_boundary(v) || u.values()[v] == 0.0, "coercivity needs zero boundary values");
    require(u.values().cwiseAbs().maxCoeff() > 0.0, "coercivity needs u != 0");
    const double eps = working_eps(op);
    std::vector<CoerciveSample> out;
    double previous = 0.0;
    for (double c : scales) {
        require(c > previous, "scales must be positive and increasing");
        previous = c;
        const FeFunction cu = c * u;
        const double pairing = op.residual(cu, eps).dot(op.restrict_to_free(cu.values()));
        const double norm = luxemburg_norm(op.phase(), op.quadrature(), sample_gradient_norms(cu, op.quadrature()))
                                .luxemburg_norm;
        CoerciveSample s;
        s.scale = c;
        s.ratio = pairing / norm;
        s.lower_bound = std::min(std::pow(norm, op.phase().p_minus - 1.0), std::pow(norm, op.phase().r_plus - 1.0));
        out.push_back(s);
    }
    return out;
}

} // namespace multiphase
