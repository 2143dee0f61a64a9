#include "support.hpp"

#include "multiphase/fe_function.hpp"
#include "multiphase/solver.hpp"

#include <doctest.h>

using namespace mptest;
using doctest::Approx;

namespace {

double nodal_error(const FeFunction& u, const std::function<double(const Point&)>& exact)
{
    double err = 0.0;
    for (Index v = 0; v < u.mesh().num_vertices(); ++v) err = std::max(err, std::abs(u.values()[v] - exact(u.mesh().vertex(v))));
    return err;
}

FluxParams laplace() { return FluxParams(constant_phase(2, 2, 2, 0, 0), 0.0); }

double sin_sin(const Point& x) { return std::sin(kPi * x.x()) * std::sin(kPi * x.y()); }

SourceTerm manufactured() { return SourceTerm::of_x([](const Point& x) { return 2 * kPi * kPi * sin_sin(x); }); }

void check_energy_history(const SolveReport& rep)
{
    for (std::size_t i = 1; i < rep.energy_history.size(); ++i)
        if (rep.energy_eps[i] == rep.energy_eps[i - 1])
            CHECK(rep.energy_history[i] <= rep.energy_history[i - 1] + 1e-14 * (1 + std::abs(rep.energy_history[i - 1])));
}

} // namespace

TEST_CASE("zero source and zero data give zero")
{
    const PhaseProblem prob = make_problem(unit_mesh(8), laplace(), SourceTerm::zero());
    const SolveReport rep = solve_variational(prob);
    CHECK(rep.converged);
    CHECK(rep.iterations <= 1);
    CHECK(rep.solution.values().lpNorm<Eigen::Infinity>() == 0.0);
    const SolveReport conv = solve_convection(prob);
    CHECK(conv.converged);
    CHECK(conv.solution.values().lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("manufactured Laplace solution converges at second order")
{
    std::vector<double> err;
    for (int n : {8, 16, 32}) {
        const SolveReport rep = solve_variational(make_problem(unit_mesh(n), laplace(), manufactured()));
        CHECK(rep.converged);
        CHECK(rep.residual_history.back() <= 1e-10);
        err.push_back(nodal_error(rep.solution, sin_sin));
    }
    CHECK(err[0] / err[1] >= 3.0);
    CHECK(err[1] / err[2] >= 3.0);
}

TEST_CASE("degenerate exponent with continuation")
{
    const PhaseFunction tf = phase(field([](const Point& x) { return 1.5 + 0.2 * x.x(); }), field(2.0), field(2.4),
                                   field([](const Point& x) { return x.y(); }), field(0.3));
    const FluxParams fp(tf, 1e-8);
    const PhaseProblem prob = make_problem(unit_mesh(12), fp, SourceTerm::of_x([](const Point&) { return 1.0; }),
                                           [](const Point& x) { return 0.2 * x.x(); });
    const SolveReport rep = solve_variational(prob);
    CHECK(rep.converged);
    CHECK(rep.eps_schedule.back() == 1e-8);
    CHECK(rep.eps_schedule.size() >= 2);
    check_energy_history(rep);
    CHECK(weak_residual(prob, rep.solution, 1e-8).lpNorm<Eigen::Infinity>() <= 1e-10);
    for (Index v = 0; v < prob.mesh->num_vertices(); ++v)
        if (prob.mesh->is_boundary(v)) CHECK(rep.solution.values()[v] == Approx(0.2 * prob.mesh->vertex(v).x()));
}

TEST_CASE("t-dependent source")
{
    SourceTerm src;
    src.eval = [](const Point& x, double t, const Point&) { return 1.0 + x.x() - std::sin(t); };
    src.t_dependent = true;
    const FluxParams fp(constant_phase(2.0, 2.5, 3.0, 0.5, 0.2), 0.0);
    const PhaseProblem prob = make_problem(unit_mesh(10), fp, src);
    const SolveReport rep = solve_variational(prob);
    CHECK(rep.converged);
    check_energy_history(rep);
    CHECK(weak_residual(prob, rep.solution, 0.0).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("cg and direct agree")
{
    const FluxParams fp(constant_phase(2.0, 2.5, 3.0, 0.5, 0.2), 0.0);
    const PhaseProblem prob = make_problem(unit_mesh(10), fp, manufactured());
    SolverOptions cg;
    cg.linear_solver = LinearSolver::cg;
    const SolveReport a = solve_variational(prob);
    const SolveReport b = solve_variational(prob, cg);
    CHECK(a.converged);
    CHECK(b.converged);
    CHECK((a.solution.values() - b.solution.values()).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("convection with an x-only source equals the variational solve")
{
    const FluxParams fp(constant_phase(2.0, 2.5, 3.0, 0.5, 0.2), 0.0);
    const PhaseProblem prob = make_problem(unit_mesh(10), fp, manufactured());
    const SolveReport a = solve_variational(prob);
    const SolveReport b = solve_convection(prob);
    CHECK(b.converged);
    CHECK((a.solution.values() - b.solution.values()).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("gradient-dependent source, small convection")
{
    SourceTerm src;
    src.eval = [](const Point& x, double, const Point& z) { return 1.0 + x.y() + 0.2 * z.x(); };
    src.grad_dependent = true;
    src.constants.k3 = 0.0;
    src.constants.k4 = 0.2;
    const PhaseProblem prob = make_problem(unit_mesh(12), laplace(), src);
    CHECK(check_h2(src, 2 * kPi * kPi).passed);
    const SolveReport rep = solve_convection(prob);
    CHECK(rep.converged);
    CHECK(weak_residual(prob, rep.solution, 0.0).lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK(rep.solution.values().lpNorm<Eigen::Infinity>() > 1e-3);
}

TEST_CASE("source spot check")
{
    SourceTerm liar;
    liar.eval = [](const Point&, double, const Point& z) { return z.y(); };
    CHECK_THROWS_AS(spot_check_source(liar, Domain2D::unit_square()), ContractError);
    liar.grad_dependent = true;
    CHECK_NOTHROW(spot_check_source(liar, Domain2D::unit_square()));
    CHECK_NOTHROW(spot_check_source(manufactured(), Domain2D::unit_square()));
}

TEST_CASE("first eigenvalue, m = 2")
{
    const double exact = 2 * kPi * kPi;
    double last = std::numeric_limits<double>::infinity();
    for (int n : {8, 16, 32}) {
        const MeshPtr mesh = unit_mesh(n);
        const EigenResult r = first_eigenvalue(mesh, 2.0);
        CHECK(r.lambda >= exact);
        CHECK(r.lambda <= last);
        last = r.lambda;
        CHECK(rayleigh_quotient(r.eigenfunction, 2.0) == Approx(r.lambda).epsilon(1e-10));
    }
    CHECK(last == Approx(exact).epsilon(0.01));
    CHECK_THROWS_AS(first_eigenvalue(unit_mesh(4), 1.0), ContractError);

    SUBCASE("Rayleigh quotient of the interpolated eigenfunction")
    {
        std::vector<double> err;
        for (int n : {8, 16, 32})
            err.push_back(std::abs(rayleigh_quotient(interpolate(sin_sin, unit_mesh(n)), 2.0) - exact));
        CHECK(err[1] < err[0]);
        CHECK(err[2] < err[1]);
    }
}

TEST_CASE("first eigenvalue, m = 3")
{
    double last = std::numeric_limits<double>::infinity();
    for (int n : {6, 12}) {
        const EigenResult r = first_eigenvalue(unit_mesh(n), 3.0);
        CHECK(rayleigh_quotient(r.eigenfunction, 3.0) == Approx(r.lambda).epsilon(1e-10));
        CHECK(r.lambda <= last + 1e-6);
        last = r.lambda;
    }
}

TEST_CASE("H2 and H3 margins")
{
    const double lambda = 19.7392;
    SourceTerm s = SourceTerm::zero();
    s.constants.k3 = 0.3;
    s.constants.k4 = 0.3;
    CHECK(check_h2(s, lambda).margin == Approx(0.6848).epsilon(1e-4));
    CHECK(check_h2(s, lambda).passed);
    s.constants.k3 = 1.0;
    s.constants.k4 = 0.0;
    CHECK(check_h2(s, lambda).margin == 0.0);
    CHECK_FALSE(check_h2(s, lambda).passed);
    s.constants.k3 = 0.0;
    s.constants.k4 = lambda / 2;
    CHECK(check_h2(s, lambda).margin == Approx(0.5));

    s.constants.k5 = 1.0;
    s.constants.k6 = 1.0;
    CHECK(check_h3(s, lambda, 1.0).margin == Approx(0.72426).epsilon(1e-4));
    CHECK_FALSE(check_h3(s, lambda, 0.2).passed);
    s.constants.k5 = s.constants.k6 = 0.0;
    CHECK(check_h3(s, lambda, 0.37).margin == 0.37);
    CHECK_THROWS_AS(check_h2(s, 0.0), ContractError);
}

TEST_CASE("uniqueness experiments")
{
    const PhaseProblem lin = make_problem(unit_mesh(8), laplace(), manufactured());
    CHECK(verify_uniqueness_empirical(lin, 4, 1e-10) <= 1e-9);
    const auto starts = random_initial_states(lin, 1);
    CHECK(verify_uniqueness_empirical(lin, {starts[0], starts[0]}, 1e-10) == 0.0);
    for (const auto& s : random_initial_states(lin, 3))
        for (Index v = 0; v < lin.mesh->num_vertices(); ++v)
            if (lin.mesh->is_boundary(v)) CHECK(s[v] == lin.dirichlet[v]);

    SourceTerm src;
    src.eval = [](const Point&, double t, const Point& z) { return 1.0 + 0.5 * std::sin(t) + 0.1 * z.x(); };
    src.grad_dependent = true;
    src.t_dependent = true;
    const PhaseProblem prob = make_problem(unit_mesh(8), laplace(), src);
    const PhaseProblem cubic = make_problem(unit_mesh(8), FluxParams(constant_phase(3, 3, 3, 0, 0), 0.0), src);
    SolverOptions starved;
    starved.max_iter = 1;
    starved.tol = 1e-15;
    CHECK_THROWS_WITH_AS(verify_uniqueness_empirical(cubic, 3, 1e-12, starved), "insufficient converged solves", Error);
    CHECK_THROWS_AS(verify_uniqueness_empirical(prob, 1, 1e-10), ContractError);
}
