// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "support.hpp"

#include "multiphase/fe_function.hpp"
#include "multiphase/modular.hpp"
#include "multiphase/operator.hpp"
#include "multiphase/regularity.hpp"
#include "multiphase/solver.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

using namespace mptest;

namespace {

struct Outcome {
    bool passed = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            passed = false;
            detail << " [failed: " << what << "]";
        }
    }
};

std::vector<PhaseFunction> configurations()
{
    auto x = [](const Point& p) { return p.x(); };
    auto y = [](const Point& p) { return p.y(); };
    return {
        constant_phase(2.0, 2.0, 2.0, 0.0, 0.0),
        constant_phase(1.5, 2.5, 3.5, 1.0, 0.5),
        phase(field([=](const Point& p) { return 1.6 + 0.2 * x(p); }), field(2.2), field(3.0), field(x), field(0.0)),
        phase(field([=](const Point& p) { return 1.3 + 0.2 * y(p); }), field([=](const Point& p) { return 2.0 + 0.5 * x(p); }),
              field(4.0), field([=](const Point& p) { return x(p) * y(p); }), field([=](const Point& p) { return 1 - x(p); })),
        phase(field([](const Point& p) { return 2.5 + 0.3 * std::sin(3 * p.x()); }), field(3.2), field(3.6), field(2.0),
              field([](const Point& p) { return p.squaredNorm(); })),
    };
}

PhaseFunction three_phase()
{
    return phase(field([](const Point& x) { return 2.1 + 0.3 * x.x(); }),
                 field([](const Point& x) { return 2.6 + 0.2 * x.y(); }), field(3.3),
                 field([](const Point& x) { return x.x(); }), field([](const Point& x) { return 0.5 * x.y(); }));
}

double sin_sin(const Point& x) { return std::sin(kPi * x.x()) * std::sin(kPi * x.y()); }

double nodal_error(const FeFunction& u, const std::function<double(const Point&)>& exact)
{
    double err = 0.0;
    for (Index v = 0; v < u.mesh().num_vertices(); ++v)
        err = std::max(err, std::abs(u.values()[v] - exact(u.mesh().vertex(v))));
    return err;
}

void norm_modular(Outcome& out)
{
    const MeshPtr mesh = unit_mesh(8);
    const QuadratureMeasure quad = mesh_quadrature(*mesh, 5);
    double worst = std::numeric_limits<double>::infinity(), worst_h = 0.0;
    std::size_t items = 0, functions = 0;
    std::uint64_t seed = 100;
    for (const PhaseFunction& tf : configurations()) {
        for (const FeFunction& f : random_fe_functions(mesh, 40, seed++)) {
            const Eigen::VectorXd u = sample_values(f, quad);
            const PropertyReport r = check_norm_modular_relations(tf, u, quad);
            items += r.items.size();
            worst = std::min(worst, r.worst_slack);
            const double norm = luxemburg_norm(tf, u, quad).luxemburg_norm;
            for (double c : {0.5, 3.0}) {
                const double scaled = luxemburg_norm(tf, Eigen::VectorXd(c * u), quad).luxemburg_norm;
                worst_h = std::max(worst_h, std::abs(scaled - c * norm) / (c * norm));
            }
            ++functions;
        }
    }
    out.detail << functions << " functions, " << items << " items, worst slack " << worst << ", homogeneity " << worst_h;
    out.require(functions == 200 && items == 8 * functions, "item count");
    out.require(worst >= -1e-8, "slack");
    out.require(worst_h <= 2e-10, "homogeneity");
}

void delta2_convexity(Outcome& out)
{
    std::uint64_t seed = 7;
    std::size_t checked = 0;
    for (const PhaseFunction& tf : configurations()) {
        const auto samples = log_uniform_samples(Domain2D::unit_square(), 10000, seed++);
        for (const PropertyReport& r :
             {check_delta2(tf, samples), check_subadditivity(tf, samples), check_uniform_convexity(tf, 0.5, samples)}) {
            out.require(r.passed, r.name);
            checked += r.samples;
        }
    }
    out.detail << checked << " sample checks";
}

void gateaux_jacobian(Outcome& out)
{
    const MeshPtr mesh = unit_mesh(8);
    const FluxParams fp(three_phase(), 0.0);
    const DiscreteOperator op(fp, mesh);
    const auto us = random_fe_functions(mesh, 50, 301);
    const auto hs = random_fe_functions(mesh, 50, 302, true);
    double worst = 0.0;
    for (std::size_t k = 0; k < us.size(); ++k) {
        const double pairing = op.residual(us[k], 0.0).dot(op.restrict_to_free(hs[k].values()));
        worst = std::max(worst, check_gateaux(fp, us[k], hs[k], 1e-5) / (1 + std::abs(pairing)));
    }
    double worst_col = 0.0;
    const double delta = 1e-6;
    for (const FeFunction& u : random_fe_functions(mesh, 10, 303)) {
        const Eigen::MatrixXd J(op.assemble(u, 0.0).jacobian);
        for (Index j = 0; j < op.num_free(); ++j) {
            Eigen::VectorXd plus = u.values(), minus = u.values();
            plus[op.free_nodes()[j]] += delta;
            minus[op.free_nodes()[j]] -= delta;
            const Eigen::VectorXd col =
                (op.residual(FeFunction(mesh, plus), 0.0) - op.residual(FeFunction(mesh, minus), 0.0)) / (2 * delta);
            worst_col = std::max(worst_col, (col - J.col(j)).norm() / J.col(j).norm());
        }
    }
    out.detail << "gateaux " << worst << ", jacobian columns " << worst_col;
    out.require(worst <= 1e-6, "gateaux");
    out.require(worst_col <= 1e-5, "jacobian");
}

void monotone_coercive(Outcome& out)
{
    const MeshPtr mesh = unit_mesh(8);
    const FluxParams fp(three_phase(), 0.0);
    const auto us = random_fe_functions(mesh, 100, 401, true);
    const auto vs = random_fe_functions(mesh, 100, 402, true);
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < us.size(); ++k) worst = std::min(worst, check_monotone(fp, us[k], vs[k]));
    int increasing = 0;
    for (const FeFunction& d : random_fe_functions(mesh, 10, 403, true)) {
        const auto s = check_coercive(fp, d, {1, 2, 4, 8, 16});
        bool ok = true;
        for (std::size_t k = 1; k < s.size(); ++k) ok = ok && s[k].ratio > s[k - 1].ratio;
        increasing += ok;
    }
    out.detail << "min pairing " << worst << ", increasing directions " << increasing << "/10";
    out.require(worst >= -1e-12, "monotone");
    out.require(increasing == 10, "coercive");
}

void eigenvalue(Outcome& out)
{
    const double exact = 2 * kPi * kPi;
    double last = std::numeric_limits<double>::infinity();
    for (int n : {16, 32, 64}) {
        const double lambda = first_eigenvalue(unit_mesh(n), 2.0).lambda;
        out.detail << "n=" << n << " " << lambda << " ";
        out.require(lambda <= last, "monotone");
        last = lambda;
    }
    out.detail << "rel err " << std::abs(last - exact) / exact;
    out.require(std::abs(last - exact) <= 0.01 * exact, "within 1%");
}

void manufactured(Outcome& out)
{
    const FluxParams lin(constant_phase(2, 2, 2, 0, 0), 0.0);
    const SourceTerm f = SourceTerm::of_x([](const Point& x) { return 2 * kPi * kPi * sin_sin(x); });
    std::vector<double> err;
    for (int n : {16, 32, 64}) {
        const SolveReport rep = solve_variational(make_problem(unit_mesh(n), lin, f));
        out.require(rep.converged, "laplace solve");
        err.push_back(nodal_error(rep.solution, sin_sin));
    }
    out.detail << "laplace errors " << err[0] << " " << err[1] << " " << err[2];
    out.require(err[0] / err[1] >= 3 && err[1] / err[2] >= 3, "factor 3");

    const FluxParams p3(constant_phase(3, 3, 3, 0, 0), 1e-8);
    SolverOptions opts;
    opts.eps_schedule = {1e-2, 1e-4, 1e-8};
    std::vector<double> radial;
    for (int rings : {4, 8, 16}) {
        const MeshPtr disk = disk_mesh(Point(0, 0), 1.0, rings);
        const SolveReport rep = solve_variational(make_problem(disk, p3, SourceTerm::of_x([](const Point&) { return 1.0; })), opts);
        out.require(rep.converged, "radial solve");
        radial.push_back(nodal_error(rep.solution, [](const Point& x) { return radial_reference(x.norm(), 3.0); }));
    }
    out.detail << "; radial errors " << radial[0] << " " << radial[1] << " " << radial[2];
    out.require(radial[1] < radial[0] && radial[2] < radial[1], "radial decrease");
}

void convection(Outcome& out)
{
    const MeshPtr mesh = unit_mesh(16);
    SourceTerm src;
    src.eval = [](const Point& x, double, const Point& z) {
        return 1.0 + 0.5 * x.y() + 0.1 * std::sin(z.x()) + 0.05 * z.y() / (1 + z.squaredNorm());
    };
    src.grad_dependent = true;
    src.constants.k1 = 1.6;
    src.constants.k3 = 0.0;
    src.constants.k4 = 0.15;
    const PhaseProblem prob = make_problem(mesh, FluxParams(constant_phase(2, 2, 2, 0, 0), 0.0), src);
    const HypothesisReport h2 = check_h2(src, first_eigenvalue(mesh, 2.0).lambda);
    const SolveReport rep = solve_convection(prob);
    const double res = weak_residual(prob, rep.solution, 0.0).lpNorm<Eigen::Infinity>();
    const double size = rep.solution.values().lpNorm<Eigen::Infinity>();
    out.detail << "H2 margin " << h2.margin << ", residual " << res << ", sup|u| " << size;
    out.require(h2.passed, "H2");
    out.require(rep.converged, "converged");
    out.require(res <= 1e-8, "residual");
    out.require(size > 0, "nontrivial");
}

void uniqueness(Outcome& out)
{
    const MeshPtr mesh = unit_mesh(16);
    SourceTerm src;
    src.eval = [](const Point& x, double t, const Point& z) {
        return 1.0 + x.x() + 0.2 * std::sin(t) + 0.1 * std::cos(z.x() + z.y()) / std::sqrt(2.0);
    };
    src.grad_dependent = true;
    src.t_dependent = true;
    src.constants.k5 = 0.2;
    src.constants.k6 = 0.1;
    const PhaseProblem prob = make_problem(mesh, FluxParams(constant_phase(2, 2, 2, 0, 0), 0.0), src);
    const HypothesisReport h3 = check_h3(src, first_eigenvalue(mesh, 2.0).lambda, 1.0);
    const double tol = 1e-10;
    const double spread = verify_uniqueness_empirical(prob, 5, tol);
    out.detail << "H3 margin " << h3.margin << ", max pairwise distance " << spread;
    out.require(h3.passed, "H3");
    out.require(spread <= 10 * tol, "spread");
}

void reductions(Outcome& out)
{
    const MeshPtr mesh = unit_mesh(8);
    auto p = [](const Point& x) { return 2.0 + 0.2 * x.x(); };
    auto q = [](const Point& x) { return 2.5 + 0.2 * x.y(); };
    auto mu = [](const Point& x) { return 0.3 + x.x() * x.y(); };
    auto one = [](const Point&) { return 1.0; };
    const double eps = 1e-3;
    SolverOptions opts;
    opts.eps_schedule = {eps};
    opts.tol = 1e-13;
    const SourceTerm src = SourceTerm::of_x(one);
    const Eigen::VectorXd load = reference_load(*mesh, one);

    auto compare = [&](const std::string& name, const FluxParams& fp, const std::vector<ReferenceTerm>& terms) {
        const DiscreteOperator op(fp, mesh);
        double assembly = 0.0;
        for (const FeFunction& u : random_fe_functions(mesh, 5, 501)) {
            const AssembledSystem sys = op.assemble(u, eps);
            const ReferenceSystem ref = reference_assembly(*mesh, terms, u.values(), eps);
            assembly = std::max({assembly, max_abs_diff(sys.residual, ref.residual),
                                 max_abs_diff(Eigen::MatrixXd(sys.jacobian), ref.jacobian)});
        }
        const SolveReport rep = solve_variational(make_problem(mesh, fp, src), opts);
        const Eigen::VectorXd ref = reference_newton(*mesh, terms, Eigen::VectorXd::Zero(mesh->num_vertices()), eps, load);
        const double solve = (rep.solution.values() - ref).lpNorm<Eigen::Infinity>();
        out.detail << name << " assembly " << assembly << " solve " << solve << "; ";
        out.require(assembly <= 1e-12, name + " assembly");
        out.require(rep.converged && solve <= 1e-12, name + " solve");
    };
    compare("two-term", FluxParams(phase(field(p), field(q), field(3.1), field(mu), field(0.0)), eps), {{p, one}, {q, mu}});
    compare("single-term", FluxParams(phase(field(p), field(p), field(p), field(0.0), field(0.0)), eps), {{p, one}});
}

struct Minimizer {
    FluxParams fp;
    std::vector<FeFunction> levels;
};

const Minimizer& two_phase_minimizer()
{
    static const Minimizer m = [] {
        const FluxParams fp(phase(field([](const Point& x) { return 2.0 + 0.2 * x.x(); }), field(2.6), field(2.6),
                                  field([](const Point& x) { return x.x() * x.x(); }), field(0.0)),
                            0.0);
        auto g = [](const Point& x) { return std::sin(kPi * x.x()) + x.y() * x.y(); };
        const MeshPtr coarse = unit_mesh(16);
        std::vector<FeFunction> levels{minimize_dirichlet(fp, coarse, g), minimize_dirichlet(fp, refine(*coarse), g)};
        return Minimizer{fp, std::move(levels)};
    }();
    return m;
}

void caccioppoli(Outcome& out)
{
    const Minimizer& m = two_phase_minimizer();
    const auto pairs = random_ball_pairs(m.levels[0].mesh(), 20, 11, 0.05, 0.1, 2.0);
    std::vector<double> constants;
    for (const FeFunction& u : m.levels) {
        const ProbeReport rep = caccioppoli_probe(m.fp, u, pairs);
        out.require(rep.rows.size() == 20 && rep.all_finite(), "finite ratios");
        constants.push_back(rep.empirical_constant);
    }
    const double change = std::abs(constants[1] - constants[0]) / constants[0];
    const FluxParams lin(constant_phase(2, 2, 2, 0, 0), 0.0);
    const FeFunction affine = interpolate([](const Point& x) { return x.x() + 2 * x.y(); }, unit_mesh(64));
    const double ratio = caccioppoli_ratio(lin, affine, {{Point(0.5, 0.5), 0.15}, {Point(0.5, 0.5), 0.3}});
    // annulus cut-off with slope 1/(R2-R1): ratio = 4 R1^2 (R2-R1)^2 / R2^4
    const double r1 = 0.15, r2 = 0.3;
    const double closed = 4 * r1 * r1 * (r2 - r1) * (r2 - r1) / std::pow(r2, 4);
    out.detail << "constants " << constants[0] << " " << constants[1] << " (change " << change << "), affine "
               << ratio << " vs " << closed;
    out.require(change < 0.5, "refinement change");
    out.require(std::abs(ratio - closed) <= 0.02 * closed, "affine closed form");
}

void higher_integrability(Outcome& out)
{
    const Minimizer& m = two_phase_minimizer();
    const std::vector<double> grid{0.05, 0.1, 0.2, 0.4};
    const auto balls = random_balls(m.levels[0].mesh(), 20, 12, 0.05, 0.1);
    std::vector<ProbeReport> reports;
    for (const FeFunction& u : m.levels) reports.push_back(higher_integrability_probe(m.fp, u, balls, grid));
    const std::optional<double> stable = stable_exponent(reports, grid, 10.0);
    out.detail << "stable m " << (stable ? std::to_string(*stable) : "none");
    out.require(stable.has_value(), "stable exponent");

    const FluxParams lin(constant_phase(2, 2, 2, 0, 0), 0.0);
    const FeFunction u = interpolate([](const Point& x) { return 1.5 * x.x(); }, unit_mesh(16));
    const double c = 1.5 * 1.5;
    double worst = 0.0;
    for (double mm : grid)
        worst = std::max(worst, std::abs(reverse_holder_terms(lin, u, {Point(0.5, 0.5), 0.2}, mm).ratio - c / (1 + c)));
    out.detail << ", constant-gradient deviation " << worst;
    out.require(worst <= 1e-8, "constant gradient");
}

} // namespace

int main()
{
    struct Criterion {
        const char* name;
        void (*run)(Outcome&);
        double budget;
    };
    const Criterion criteria[] = {
        {"norm-modular relations", norm_modular, 30},
        {"delta2, subadditivity, uniform convexity", delta2_convexity, 10},
        {"gateaux derivative and jacobian", gateaux_jacobian, 0},
        {"monotonicity and coercivity", monotone_coercive, 0},
        {"first eigenvalue", eigenvalue, 60},
        {"manufactured and radial convergence", manufactured, 300},
        {"convection solve", convection, 0},
        {"uniqueness", uniqueness, 0},
        {"reduction regressions", reductions, 0},
        {"caccioppoli probe", caccioppoli, 0},
        {"higher integrability probe", higher_integrability, 0},
    };
    int failures = 0;
    int k = 1;
    for (const Criterion& c : criteria) {
        Outcome out;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.run(out);
        } catch (const std::exception& e) {
            out.passed = false;
            out.detail << " [exception: " << e.what() << "]";
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.budget > 0 && seconds > c.budget) out.require(false, "runtime budget");
        failures += !out.passed;
        std::printf("criterion %2d %s: %s (%.2fs) %s\n", k++, c.name, out.passed ? "PASS" : "FAIL", seconds,
                    out.detail.str().c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
