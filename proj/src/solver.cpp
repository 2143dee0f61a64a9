#include "multiphase/solver.hpp"

#include "multiphase/parallel.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <random>

namespace multiphase {

SourceTerm SourceTerm::zero()
{
    SourceTerm s;
    s.eval = [](const Point&, double, const Point&) { return 0.0; };
    return s;
}

SourceTerm SourceTerm::of_x(std::function<double(const Point&)> g)
{
    SourceTerm s;
    s.eval = [g = std::move(g)](const Point& x, double, const Point&) { return g(x); };
    return s;
}

void spot_check_source(const SourceTerm& src, const Domain2D& domain, std::uint64_t seed)
{
    if (src.grad_dependent) return;
    std::mt19937_64 rng(seed);
    const auto [lo, hi] = domain.bounding_box();
    std::uniform_real_distribution<double> ux(lo.x(), hi.x()), uy(lo.y(), hi.y()), ut(-2.0, 2.0);
    for (int k = 0; k < 32; ++k) {
        const Point x(ux(rng), uy(rng));
        const double t = ut(rng);
        const double a = src(x, t, Point(ut(rng), ut(rng)));
        const double b = src(x, t, Point(ut(rng), ut(rng)));
        if (a != b) throw ContractError("source declared gradient-free depends on z");
    }
}

PhaseProblem make_problem(MeshPtr mesh, FluxParams fp, SourceTerm source,
                          const std::function<double(const Point&)>& boundary)
{
    require(mesh != nullptr, "problem needs a mesh");
    Eigen::VectorXd g = Eigen::VectorXd::Zero(mesh->num_vertices());
    if (boundary) {
        for (Index v = 0; v < mesh->num_vertices(); ++v) {
            if (!mesh->is_boundary(v)) continue;
            g[v] = boundary(mesh->vertex(v));
            if (!std::isfinite(g[v])) throw ContractError("non-finite Dirichlet value");
        }
    }
    return PhaseProblem{std::move(mesh), std::move(fp), std::move(source), std::move(g)};
}

namespace {

// Gauss-Legendre nodes and weights on [-1, 1], 8 points.
constexpr std::array<double, 4> kGlNodes = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                            0.9602898564975363};
constexpr std::array<double, 4> kGlWeights = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                              0.1012285362903763};

double primitive(const SourceTerm& src, const Point& x, double t)
{
    if (t == 0.0) return 0.0;
    const double half = 0.5 * t;
    double sum = 0.0;
    for (std::size_t k = 0; k < kGlNodes.size(); ++k) {
        sum += kGlWeights[k] * (src(x, half * (1.0 + kGlNodes[k]), Point::Zero()) +
                                src(x, half * (1.0 - kGlNodes[k]), Point::Zero()));
    }
    return half * sum;
}

/// Load vector and its contribution to the merit and the Jacobian.
class SourceLoad {
public:
    /// Load fixed by values of f at the quadrature points.
    SourceLoad(const DiscreteOperator& op, const Eigen::VectorXd& frozen) : op_(op), src_(nullptr)
    {
        load_ = nodal_load(frozen);
    }
    /// f(x, u) re-evaluated at every state (gradient-free sources).
    SourceLoad(const DiscreteOperator& op, const SourceTerm& src) : op_(op), src_(src.t_dependent ? &src : nullptr)
    {
        if (!src_) {
            Eigen::VectorXd f(static_cast<Index>(op.quadrature().size()));
            for (std::size_t k = 0; k < op.quadrature().size(); ++k)
                f[static_cast<Index>(k)] = src(op.quadrature().points[k].x, 0.0, Point::Zero());
            load_ = nodal_load(f);
        }
    }

    bool varies() const { return src_ != nullptr; }

    Eigen::VectorXd load(const FeFunction& u) const
    {
        if (!src_) return load_;
        const Eigen::VectorXd t = sample_values(u, op_.quadrature());
        Eigen::VectorXd f(t.size());
        for (Index k = 0; k < t.size(); ++k) f[k] = (*src_)(op_.quadrature().points[static_cast<std::size_t>(k)].x, t[k], Point::Zero());
        return nodal_load(f);
    }

    double primitive_integral(const FeFunction& u) const
    {
        if (!src_) return load_.dot(u.values());
        CompensatedSum sum;
        for (const auto& qp : op_.quadrature().points) sum += qp.weight * primitive(*src_, qp.x, u.value_at(qp));
        return sum.value();
    }

    /// Subtracts int d_t f phi_i phi_j from the Jacobian.
    void adjust_jacobian(const FeFunction& u, Eigen::SparseMatrix<double>& J) const
    {
        if (!src_) return;
        std::vector<Eigen::Triplet<double>> trip;
        for (const auto& qp : op_.quadrature().points) {
            const double t = u.value_at(qp);
            const double h = 1e-6 * (1.0 + std::abs(t));
            const double dfdt = ((*src_)(qp.x, t + h, Point::Zero()) - (*src_)(qp.x, t - h, Point::Zero())) / (2.0 * h);
            const auto& tri = op_.mesh().triangle(qp.tri);
            for (int i = 0; i < 3; ++i) {
                const Index fi = op_.free_index(tri[i]);
                if (fi < 0) continue;
                for (int j = 0; j < 3; ++j) {
                    const Index fj = op_.free_index(tri[j]);
                    if (fj >= 0) trip.emplace_back(fi, fj, -qp.weight * dfdt * qp.bary[i] * qp.bary[j]);
                }
            }
        }
        Eigen::SparseMatrix<double> extra(J.rows(), J.cols());
        extra.setFromTriplets(trip.begin(), trip.end());
        J += extra;
    }

private:
    const DiscreteOperator& op_;
    const SourceTerm* src_;
    Eigen::VectorXd load_;

    Eigen::VectorXd nodal_load(const Eigen::VectorXd& f) const
    {
        Eigen::VectorXd load = Eigen::VectorXd::Zero(op_.mesh().num_vertices());
        for (std::size_t k = 0; k < op_.quadrature().size(); ++k) {
            const auto& qp = op_.quadrature().points[k];
            const double v = f[static_cast<Index>(k)];
            if (!std::isfinite(v)) throw Error("non-finite source value");
            const auto& tri = op_.mesh().triangle(qp.tri);
            for (int i = 0; i < 3; ++i) load[tri[i]] += qp.weight * v * qp.bary[i];
        }
        return load;
    }
};

Eigen::VectorXd frozen_source(const DiscreteOperator& op, const SourceTerm& src, const FeFunction& u)
{
    const auto& quad = op.quadrature();
    Eigen::VectorXd f(static_cast<Index>(quad.size()));
    for (std::size_t k = 0; k < quad.size(); ++k) {
        const auto& qp = quad.points[k];
        f[static_cast<Index>(k)] = src(qp.x, u.value_at(qp), u.gradient_on(qp.tri));
    }
    return f;
}

/// Solves J d = rhs; returns false when J is singular for both solvers.
bool linear_solve(const Eigen::SparseMatrix<double>& J, const Eigen::VectorXd& rhs, LinearSolver which,
                  Eigen::VectorXd& d)
{
    if (J.rows() == 0) {
        d.resize(0);
        return true;
    }
    if (which == LinearSolver::direct) {
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(J);
        if (ldlt.info() == Eigen::Success) {
            const Eigen::VectorXd D = ldlt.vectorD().cwiseAbs();
            if (D.maxCoeff() > 0.0 && D.minCoeff() > 1e-13 * D.maxCoeff()) {
                d = ldlt.solve(rhs);
                if (ldlt.info() == Eigen::Success && d.allFinite()) return true;
            }
        }
    }
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(1e-13);
    cg.setMaxIterations(std::max<Index>(100, 10 * J.rows()));
    cg.compute(J);
    if (cg.info() != Eigen::Success) return false;
    d = cg.solve(rhs);
    return cg.info() == Eigen::Success && d.allFinite();
}

std::vector<double> default_schedule(const DiscreteOperator& op)
{
    if (op.phase().p_minus >= 2.0) return {0.0};
    const double final_eps = op.params().eps;
    std::vector<double> s;
    for (double e : {1e-2, 1e-4, 1e-6})
        if (e > final_eps) s.push_back(e);
    s.push_back(final_eps);
    return s;
}

void newton(const DiscreteOperator& op, const SourceLoad& load, FeFunction& u, const SolverOptions& opts,
            std::vector<double> schedule, SolveReport& rep)
{
    require(opts.tol > 0.0, "solver tolerance must be positive");
    require(!schedule.empty(), "eps schedule must be nonempty");
    for (double e : schedule) require(e >= 0.0, "eps schedule entries must be nonnegative");
    if (schedule.back() == 0.0) require(op.phase().p_minus >= 2.0, "final eps = 0 needs p- >= 2");
    int retries = 0;
    const int start_iter = rep.iterations;
    auto merit = [&](const FeFunction& v, double eps) { return op.energy(v, eps) - load.primitive_integral(v); };

    std::size_t s = 0;
    while (s < schedule.size()) {
        const double eps = schedule[s];
        const bool last = s + 1 == schedule.size();
        const double stage_tol = last ? opts.tol : std::max(opts.tol, 1e-6);
        rep.eps_schedule.push_back(eps);
        bool restart = false;
        double m = merit(u, eps);
        for (;;) {
            AssembledSystem sys = op.assemble(u, eps, load.load(u));
            load.adjust_jacobian(u, sys.jacobian);
            const double res = sys.residual.size() ? sys.residual.lpNorm<Eigen::Infinity>() : 0.0;
            rep.residual_history.push_back(res);
            if (res <= stage_tol) break;
            if (rep.iterations - start_iter >= opts.max_iter) {
                rep.converged = false;
                rep.diagnostic = "max_iter exceeded";
                return;
            }
            Eigen::VectorXd d;
            const bool solved = linear_solve(sys.jacobian, -sys.residual, opts.linear_solver, d);
            bool accepted = false;
            if (solved) {
                double slope = sys.residual.dot(d);
                if (!(slope < 0.0)) {
                    d = -sys.residual;
                    slope = -sys.residual.squaredNorm();
                }
                double alpha = 1.0;
                for (int h = 0; h <= opts.max_halvings; ++h, alpha *= 0.5) {
                    FeFunction trial(u.mesh_ptr(), op.with_free(u.values(), op.restrict_to_free(u.values()) + alpha * d));
                    double mt;
                    try {
                        mt = merit(trial, eps);
                    } catch (const Error&) {
                        continue;
                    }
                    if (mt <= m + opts.armijo_c1 * alpha * slope + 1e-14 * (1.0 + std::abs(m))) {
                        u = std::move(trial);
                        m = mt;
                        accepted = true;
                        break;
                    }
                }
            }
            if (!accepted) {
                if (!solved && retries >= opts.max_eps_retries)
                    throw Error("singular Jacobian after " + std::to_string(opts.max_eps_retries) + " eps retries");
                if (retries >= opts.max_eps_retries) {
                    rep.converged = false;
                    rep.diagnostic = "line search stagnation at residual " + std::to_string(res);
                    return;
                }
                ++retries;
                const double larger = eps == 0.0 ? 1e-2 : std::min(1.0, 100.0 * eps);
                spdlog::debug("newton: {} at eps={:.3g}, retrying with eps={:.3g}",
                              solved ? "stagnation" : "singular Jacobian", eps, larger);
                schedule.insert(schedule.begin() + static_cast<std::ptrdiff_t>(s), larger);
                restart = true;
                break;
            }
            ++rep.iterations;
            rep.energy_history.push_back(m);
            rep.energy_eps.push_back(eps);
        }
        if (!restart) ++s;
    }
    rep.converged = true;
}

Eigen::VectorXd initial_state(const PhaseProblem& prob, const std::optional<Eigen::VectorXd>& initial)
{
    Eigen::VectorXd u0 = Eigen::VectorXd::Zero(prob.mesh->num_vertices());
    require(prob.dirichlet.size() == prob.mesh->num_vertices(), "Dirichlet data: one value per vertex required");
    if (initial) {
        require(initial->size() == u0.size(), "initial state size mismatch");
        u0 = *initial;
    }
    for (Index v = 0; v < u0.size(); ++v)
        if (prob.mesh->is_boundary(v)) u0[v] = prob.dirichlet[v];
    return u0;
}

} // namespace

SolveReport solve_variational(const PhaseProblem& prob, const SolverOptions& opts,
                              const std::optional<Eigen::VectorXd>& initial)
{
    require(!prob.source.grad_dependent, "solve_variational needs a gradient-free source");
    const DiscreteOperator op(prob.fp, prob.mesh, opts.quad_degree);
    SolveReport rep{FeFunction(prob.mesh, initial_state(prob, initial)), 0, {}, {}, {}, false, {}, {}};
    const SourceLoad load(op, prob.source);
    newton(op, load, rep.solution, opts, opts.eps_schedule.empty() ? default_schedule(op) : opts.eps_schedule, rep);
    return rep;
}

SolveReport solve_convection(const PhaseProblem& prob, const SolverOptions& opts, int max_outer,
                             const std::optional<Eigen::VectorXd>& initial)
{
    require(max_outer >= 1, "need at least one outer iteration");
    const DiscreteOperator op(prob.fp, prob.mesh, opts.quad_degree);
    SolveReport rep{FeFunction(prob.mesh, initial_state(prob, initial)), 0, {}, {}, {}, false, {}, {}};
    std::vector<double> schedule = opts.eps_schedule.empty() ? default_schedule(op) : opts.eps_schedule;
    double previous = std::numeric_limits<double>::infinity();
    int growing = 0;
    for (int k = 0; k < max_outer; ++k) {
        const SourceLoad load(op, frozen_source(op, prob.source, rep.solution));
        FeFunction next = rep.solution;
        newton(op, load, next, opts, schedule, rep);
        if (!rep.converged) {
            rep.diagnostic = "inner solve failed at outer iteration " + std::to_string(k) + ": " + rep.diagnostic;
            return rep;
        }
        schedule = {schedule.back()};
        const Eigen::VectorXd diff = op.restrict_to_free(next.values() - rep.solution.values());
        const double dist = diff.size() ? diff.lpNorm<Eigen::Infinity>() : 0.0;
        rep.solution = std::move(next);
        spdlog::debug("convection outer {}: distance {:.3e}", k, dist);
        if (dist <= opts.tol) {
            rep.converged = true;
            rep.diagnostic.clear();
            return rep;
        }
        growing = dist > previous ? growing + 1 : 0;
        previous = dist;
        if (growing >= 5) {
            rep.converged = false;
            rep.diagnostic = "outer divergence: distance grew 5 consecutive iterations";
            return rep;
        }
    }
    rep.converged = false;
    rep.diagnostic = "outer iteration limit reached";
    return rep;
}

Eigen::VectorXd weak_residual(const PhaseProblem& prob, const FeFunction& u, double eps, int quad_degree)
{
    const DiscreteOperator op(prob.fp, prob.mesh, quad_degree);
    const SourceLoad load(op, frozen_source(op, prob.source, u));
    return op.residual(u, eps, load.load(u));
}

double rayleigh_quotient(const FeFunction& u, double m, int quad_degree)
{
    require(m > 1.0, "Rayleigh quotient needs m > 1");
    const TriMesh& mesh = u.mesh();
    CompensatedSum top, bottom;
    for (Index t = 0; t < mesh.num_triangles(); ++t) top += mesh.area(t) * std::pow(u.gradient_on(t).norm(), m);
    const QuadratureMeasure quad = mesh_quadrature(mesh, quad_degree);
    for (const auto& qp : quad.points) bottom += qp.weight * std::pow(std::abs(u.value_at(qp)), m);
    if (!(bottom.value() > 0.0)) throw Error("Rayleigh quotient of a zero function");
    return top.value() / bottom.value();
}

namespace {

DiscreteOperator laplace_operator(const MeshPtr& mesh)
{
    const PointSet origin{Point::Zero()};
    const auto two = ScalarField::constant(2.0);
    return DiscreteOperator(FluxParams(PhaseFunction{ExponentTriple(two, two, two, origin), WeightPair::zero()}, 0.0),
                            mesh, 2);
}

} // namespace

EigenResult first_eigenvalue(const MeshPtr& mesh, double m, double tol, int max_iter)
{
    require(m > 1.0, "first eigenvalue needs m > 1");
    require(tol > 0.0, "eigenvalue tolerance must be positive");
    const DiscreteOperator lap = laplace_operator(mesh);
    const Index n = lap.num_free();
    if (n == 0) throw Error("mesh has no interior nodes");
    const Eigen::SparseMatrix<double> K = lap.stiffness();
    const Eigen::SparseMatrix<double> M = lap.mass();
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K);
    if (ldlt.info() != Eigen::Success) throw Error("stiffness factorization failed");

    auto to_fe = [&](const Eigen::VectorXd& x) {
        return FeFunction(mesh, lap.with_free(Eigen::VectorXd::Zero(mesh->num_vertices()), x));
    };

    EigenResult res{0.0, FeFunction::zero(mesh)};
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        x = ldlt.solve(M * x);
        x /= std::sqrt(x.dot(M * x));
        const double next = x.dot(K * x);
        ++res.iterations;
        const bool done = it > 0 && std::abs(next - lambda) <= tol * next;
        lambda = next;
        if (done) break;
    }
    if (x.sum() < 0) x = -x;

    if (m != 2.0) {
        const QuadratureMeasure quad = mesh_quadrature(*mesh, 5);
        auto bottom = [&](const FeFunction& u) {
            CompensatedSum s;
            for (const auto& qp : quad.points) s += qp.weight * std::pow(std::abs(u.value_at(qp)), m);
            return s.value();
        };
        auto normalize = [&](Eigen::VectorXd& v) { v /= std::pow(bottom(to_fe(v)), 1.0 / m); };
        normalize(x);
        double Q = rayleigh_quotient(to_fe(x), m);
        double alpha = 1.0;
        int it = 0;
        for (; it < max_iter; ++it) {
            const FeFunction u = to_fe(x);
            Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
            for (Index t = 0; t < mesh->num_triangles(); ++t) {
                const Point grad = u.gradient_on(t);
                const double s = grad.norm();
                if (s == 0.0) continue;
                const Eigen::Vector3d local = m * mesh->area(t) * std::pow(s, m - 2.0) * (mesh->basis_gradients(t) * grad);
                const auto& tri = mesh->triangle(t);
                for (int i = 0; i < 3; ++i) {
                    const Index fi = lap.free_index(tri[i]);
                    if (fi >= 0) g[fi] += local[i];
                }
            }
            for (const auto& qp : quad.points) {
                const double v = u.value_at(qp);
                if (v == 0.0) continue;
                const double c = -Q * m * qp.weight * std::pow(std::abs(v), m - 1.0) * (v > 0 ? 1.0 : -1.0);
                const auto& tri = mesh->triangle(qp.tri);
                for (int i = 0; i < 3; ++i) {
                    const Index fi = lap.free_index(tri[i]);
                    if (fi >= 0) g[fi] += c * qp.bary[i];
                }
            }
            const Eigen::VectorXd d = -ldlt.solve(g);
            const double slope = g.dot(d);
            if (!(slope < 0.0)) break;
            alpha = std::min(1.0, 2.0 * alpha);
            bool accepted = false;
            double Qn = Q;
            Eigen::VectorXd trial;
            for (int h = 0; h < 60; ++h, alpha *= 0.5) {
                trial = x + alpha * d;
                Qn = rayleigh_quotient(to_fe(trial), m);
                if (Qn <= Q + 1e-4 * alpha * slope) {
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
            normalize(trial);
            x = trial;
            const bool done = std::abs(Q - Qn) <= tol * Qn;
            Q = Qn;
            if (done) break;
        }
        res.iterations += it;
    }
    res.eigenfunction = to_fe(x);
    res.lambda = rayleigh_quotient(res.eigenfunction, m);
    return res;
}

HypothesisReport check_h2(const SourceTerm& src, double lambda_p_minus)
{
    require(lambda_p_minus > 0.0, "H2 needs a positive eigenvalue");
    HypothesisReport rep;
    rep.name = "H2";
    rep.margin = 1.0 - src.constants.k3 - src.constants.k4 / lambda_p_minus;
    rep.passed = rep.margin > 0.0;
    return rep;
}

HypothesisReport check_h3(const SourceTerm& src, double lambda_2, double threshold)
{
    require(lambda_2 > 0.0, "H3 needs a positive eigenvalue");
    HypothesisReport rep;
    rep.name = "H3";
    rep.margin = threshold - (src.constants.k5 / lambda_2 + src.constants.k6 / std::sqrt(lambda_2));
    rep.passed = rep.margin > 0.0;
    return rep;
}

std::vector<Eigen::VectorXd> random_initial_states(const PhaseProblem& prob, int count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const double h = prob.mesh->h_max();
    std::vector<Eigen::VectorXd> out;
    for (int k = 0; k < count; ++k) {
        Eigen::VectorXd v(prob.mesh->num_vertices());
        for (Index i = 0; i < v.size(); ++i) {
            const double r = uni(rng);
            v[i] = prob.mesh->is_boundary(i) ? prob.dirichlet[i] : h * r;
        }
        out.push_back(std::move(v));
    }
    return out;
}

double verify_uniqueness_empirical(const PhaseProblem& prob, int n_starts, double tol, const SolverOptions& opts,
                                   std::uint64_t seed)
{
    require(n_starts >= 2, "uniqueness experiment needs at least two starts");
    return verify_uniqueness_empirical(prob, random_initial_states(prob, n_starts, seed), tol, opts);
}

double verify_uniqueness_empirical(const PhaseProblem& prob, const std::vector<Eigen::VectorXd>& starts, double tol,
                                   const SolverOptions& opts)
{
    require(starts.size() >= 2, "uniqueness experiment needs at least two starts");
    SolverOptions o = opts;
    o.tol = tol;
    std::vector<std::optional<Eigen::VectorXd>> solutions(starts.size());
    parallel_for(static_cast<Index>(starts.size()), [&](Index k) {
        try {
            const SolveReport rep = solve_convection(prob, o, 200, starts[static_cast<std::size_t>(k)]);
            if (rep.converged) solutions[static_cast<std::size_t>(k)] = rep.solution.values();
        } catch (const Error& e) {
            spdlog::warn("uniqueness start {} failed: {}", k, e.what());
        }
    });
    std::vector<Eigen::VectorXd> done;
    for (auto& s : solutions)
        if (s) done.push_back(std::move(*s));
    if (done.size() < 2) throw Error("insufficient converged solves");
    double worst = 0.0;
    for (std::size_t i = 0; i < done.size(); ++i)
        for (std::size_t j = i + 1; j < done.size(); ++j) {
            double d = 0.0;
            for (Index v = 0; v < done[i].size(); ++v)
                if (!prob.mesh->is_boundary(v)) d = std::max(d, std::abs(done[i][v] - done[j][v]));
            worst = std::max(worst, d);
        }
    return worst;
}

} // namespace multiphase
