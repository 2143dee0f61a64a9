#ifndef MULTIPHASE_SOLVER_HPP
#define MULTIPHASE_SOLVER_HPP

#include "multiphase/operator.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace multiphase {

/// Growth constants declared by the user; the hypothesis checks trust them.
struct GrowthConstants {
    double k1 = 0, k2 = 0, k3 = 0, k4 = 0, k5 = 0, k6 = 0;
    ScalarField m_exponent = ScalarField::constant(2.0);
    double gamma1_norm = 0, gamma2_norm = 0, gamma3_norm = 0;
};

/// Right-hand side f(x, t, z) with t = u(x) and z = grad u(x).
struct SourceTerm {
    std::function<double(const Point&, double, const Point&)> eval;
    bool grad_dependent = false;
    /// False when f ignores t, so the load is a fixed vector.
    bool t_dependent = false;
    GrowthConstants constants;

    static SourceTerm zero();
    static SourceTerm of_x(std::function<double(const Point&)> g);
    double operator()(const Point& x, double t, const Point& z) const { return eval(x, t, z); }
};

/// Throws ContractError when grad_dependent is false but eval reacts to z on random inputs.
void spot_check_source(const SourceTerm& src, const Domain2D& domain, std::uint64_t seed = 7);

struct PhaseProblem {
    MeshPtr mesh;
    FluxParams fp;
    SourceTerm source;
    /// Per-vertex values; only boundary entries are used.
    Eigen::VectorXd dirichlet;
};

/// Dirichlet data from a callback; nullptr means zero.
PhaseProblem make_problem(MeshPtr mesh, FluxParams fp, SourceTerm source,
                          const std::function<double(const Point&)>& boundary = nullptr);

enum class LinearSolver { direct, cg };

struct SolverOptions {
    double tol = 1e-10;
    int max_iter = 200;
    /// Empty means automatic: {1e-2, 1e-4, 1e-6, eps} when p- < 2, {0} otherwise.
    std::vector<double> eps_schedule;
    LinearSolver linear_solver = LinearSolver::direct;
    int quad_degree = 5;
    double armijo_c1 = 1e-4;
    int max_halvings = 30;
    int max_eps_retries = 5;
};

struct SolveReport {
    FeFunction solution;
    int iterations = 0;
    std::vector<double> residual_history;
    /// Merit value after every accepted step, with the eps in effect for it.
    std::vector<double> energy_history;
    std::vector<double> energy_eps;
    bool converged = false;
    std::vector<double> eps_schedule;
    std::string diagnostic;
};

/// Damped Newton on E_eps(u) - int F(x, u) with F(x, t) = int_0^t f(x, s) ds.
SolveReport solve_variational(const PhaseProblem& prob, const SolverOptions& opts = {},
                              const std::optional<Eigen::VectorXd>& initial = std::nullopt);

/// Outer fixed point: each step solves A(w) = f(x, u_k, grad u_k) with the load frozen.
SolveReport solve_convection(const PhaseProblem& prob, const SolverOptions& opts = {}, int max_outer = 100,
                             const std::optional<Eigen::VectorXd>& initial = std::nullopt);

/// Weak-form residual over the free nodes: int a(x, grad u) . grad phi_i - int f(x, u, grad u) phi_i.
Eigen::VectorXd weak_residual(const PhaseProblem& prob, const FeFunction& u, double eps, int quad_degree = 5);

struct EigenResult {
    double lambda = 0.0;
    FeFunction eigenfunction;
    int iterations = 0;
};

/// int |grad u|^m / int |u|^m.
double rayleigh_quotient(const FeFunction& u, double m, int quad_degree = 5);

/// m = 2: inverse iteration on (stiffness, mass), eigenfunction mass-normalized.
/// m != 2: projected gradient on the m-quotient in the stiffness metric with Armijo steps,
/// eigenfunction normalized to int |u|^m = 1.
EigenResult first_eigenvalue(const MeshPtr& mesh, double m, double tol = 1e-10, int max_iter = 5000);

HypothesisReport check_h2(const SourceTerm& src, double lambda_p_minus);
HypothesisReport check_h3(const SourceTerm& src, double lambda_2, double threshold);

/// Nodal values uniform in [-1, 1] scaled by h_max on free nodes, Dirichlet data elsewhere.
std::vector<Eigen::VectorXd> random_initial_states(const PhaseProblem& prob, int count, std::uint64_t seed = 0xC0FFEE);

/// Max pairwise free-node sup distance among converged solve_convection runs.
double verify_uniqueness_empirical(const PhaseProblem& prob, int n_starts, double tol, const SolverOptions& opts = {},
                                   std::uint64_t seed = 0xC0FFEE);
double verify_uniqueness_empirical(const PhaseProblem& prob, const std::vector<Eigen::VectorXd>& starts, double tol,
                                   const SolverOptions& opts = {});

} // namespace multiphase

#endif
