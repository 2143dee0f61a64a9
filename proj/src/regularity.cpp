#include "multiphase/regularity.hpp"

#include "multiphase/parallel.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <random>

namespace multiphase {

FeFunction minimize_dirichlet(const FluxParams& fp, const MeshPtr& mesh,
                              const std::function<double(const Point&)>& boundary, const SolverOptions& opts)
{
    const PhaseProblem prob = make_problem(mesh, fp, SourceTerm::zero(), boundary);
    SolveReport rep = solve_variational(prob, opts);
    if (!rep.converged) throw Error("minimize_dirichlet did not converge: " + rep.diagnostic);
    return std::move(rep.solution);
}

ProbeTerms make_terms(double lhs, double rhs)
{
    ProbeTerms t{lhs, rhs, 0.0};
    if (rhs > 0.0)
        t.ratio = lhs / rhs;
    else if (lhs > 0.0)
        t.ratio = std::numeric_limits<double>::infinity();
    return t;
}

namespace {

struct BallSamples {
    QuadratureMeasure quad;
    Eigen::VectorXd value;
    Eigen::VectorXd grad;
    PhaseSamples phase;

    double t_at(Index k, double t) const
    {
        return phase_value(t, phase.p[k], phase.q[k], phase.r[k], phase.mu1[k], phase.mu2[k]);
    }
    double weight(Index k) const { return quad.points[static_cast<std::size_t>(k)].weight; }
    Index size() const { return value.size(); }

    /// Integral of fn(k) over the clipped ball.
    template <typename F>
    double sum(F&& fn) const
    {
        CompensatedSum s;
        for (Index k = 0; k < size(); ++k) {
            const double v = fn(k);
            if (!std::isfinite(v)) throw Error("non-finite integrand");
            s += weight(k) * v;
        }
        return s.value();
    }
    double average(const std::function<double(Index)>& fn) const { return sum(fn) / quad.total_mass; }
};

BallSamples sample_ball(const FluxParams& fp, const FeFunction& u, const Ball& ball)
{
    check_ball_inside(u.mesh(), ball);
    BallSamples b;
    b.quad = ball_quadrature(u.mesh(), ball);
    if (!(b.quad.total_mass > 0.0)) throw Error("ball does not meet the mesh");
    b.value = sample_values(u, b.quad);
    b.grad = sample_gradient_norms(u, b.quad);
    b.phase = sample_phase(fp.tf, b.quad);
    return b;
}

void check_pair(const BallPair& pair)
{
    require((pair.inner.center - pair.outer.center).norm() <= 1e-12, "ball pair must be concentric");
    require(pair.inner.radius > 0.0 && pair.inner.radius < pair.outer.radius, "ball pair needs 0 < R1 < R2");
}

double power_mean(const BallSamples& b, const std::function<double(Index)>& g, double delta)
{
    return std::pow(b.average([&](Index k) { return std::pow(g(k), delta); }), 1.0 / delta);
}

} // namespace

ProbeTerms caccioppoli_terms(const FluxParams& fp, const FeFunction& u, const BallPair& pair)
{
    check_pair(pair);
    const BallSamples outer = sample_ball(fp, u, pair.outer);
    const BallSamples inner = sample_ball(fp, u, pair.inner);
    const double mean = outer.average([&](Index k) { return outer.value[k]; });
    const double gap = pair.outer.radius - pair.inner.radius;
    const double lhs = inner.sum([&](Index k) { return inner.t_at(k, inner.grad[k]); });
    const double rhs = outer.sum([&](Index k) { return outer.t_at(k, std::abs(outer.value[k] - mean) / gap); });
    return make_terms(lhs, rhs);
}

double caccioppoli_ratio(const FluxParams& fp, const FeFunction& u, const BallPair& pair)
{
    return caccioppoli_terms(fp, u, pair).ratio;
}

ProbeTerms caccioppoli_truncation_terms(const FluxParams& fp, const FeFunction& u, const BallPair& pair, double level,
                                        int sign)
{
    check_pair(pair);
    require(sign == 1 || sign == -1, "truncation sign must be +1 or -1");
    const BallSamples outer = sample_ball(fp, u, pair.outer);
    const BallSamples inner = sample_ball(fp, u, pair.inner);
    const double s = sign;
    const double gap = pair.outer.radius - pair.inner.radius;
    const double lhs = inner.sum([&](Index k) {
        return s * (inner.value[k] - level) > 0.0 ? inner.t_at(k, inner.grad[k]) : 0.0;
    });
    const double rhs = outer.sum([&](Index k) {
        return outer.t_at(k, std::max(s * (outer.value[k] - level), 0.0) / gap);
    });
    return make_terms(lhs, rhs);
}

double caccioppoli_truncation_ratio(const FluxParams& fp, const FeFunction& u, const BallPair& pair, double level,
                                    int sign)
{
    return caccioppoli_truncation_terms(fp, u, pair, level, sign).ratio;
}

ProbeTerms sobolev_poincare_terms(const FluxParams& fp, const FeFunction& u, const Ball& ball, double delta,
                                  std::optional<double> r0)
{
    require(delta > 0.0 && delta < 1.0, "Sobolev-Poincaré probe needs 0 < delta < 1");
    if (r0 && ball.radius > *r0)
        spdlog::warn("Sobolev-Poincaré probe: R = {} exceeds R0 = {}", ball.radius, *r0);
    const BallSamples b = sample_ball(fp, u, ball);
    const double mean = b.average([&](Index k) { return b.value[k]; });
    const double lhs = b.average([&](Index k) { return b.t_at(k, std::abs(b.value[k] - mean) / ball.radius); });
    const double rhs = 1.0 + power_mean(b, [&](Index k) { return b.t_at(k, b.grad[k]); }, delta);
    return make_terms(lhs, rhs);
}

double sobolev_poincare_ratio(const FluxParams& fp, const FeFunction& u, const Ball& ball, double delta,
                              std::optional<double> r0)
{
    return sobolev_poincare_terms(fp, u, ball, delta, r0).ratio;
}

ProbeTerms sobolev_poincare_zero_set_terms(const FluxParams& fp, const FeFunction& u, const Ball& ball,
                                           const std::function<bool(const Point&)>& in_zero_set, double delta,
                                           double gamma)
{
    require(delta > 0.0 && delta < 1.0, "Sobolev-Poincaré probe needs 0 < delta < 1");
    require(gamma > 0.0 && gamma <= 1.0, "zero-set fraction needs 0 < gamma <= 1");
    const BallSamples b = sample_ball(fp, u, ball);
    const double zero_measure = b.sum([&](Index k) { return in_zero_set(b.quad.points[static_cast<std::size_t>(k)].x) ? 1.0 : 0.0; });
    if (zero_measure < gamma * b.quad.total_mass) throw Error("zero-set measure below γ");
    const TriMesh& mesh = u.mesh();
    for (Index v = 0; v < mesh.num_vertices(); ++v) {
        const Point& x = mesh.vertex(v);
        if ((x - ball.center).norm() <= ball.radius && in_zero_set(x) && std::abs(u.values()[v]) > 1e-12)
            throw ContractError("function does not vanish on the zero set");
    }
    const double lhs = b.average([&](Index k) { return b.t_at(k, std::abs(b.value[k]) / ball.radius); });
    const double rhs = power_mean(b, [&](Index k) { return b.t_at(k, b.grad[k]); }, delta);
    return make_terms(lhs, rhs);
}

double sobolev_poincare_zero_set(const FluxParams& fp, const FeFunction& u, const Ball& ball,
                                 const std::function<bool(const Point&)>& in_zero_set, double delta, double gamma)
{
    return sobolev_poincare_zero_set_terms(fp, u, ball, in_zero_set, delta, gamma).ratio;
}

double poincare_w0_ratio(const FluxParams& fp, const FeFunction& u, int quad_degree)
{
    const TriMesh& mesh = u.mesh();
    for (Index v = 0; v < mesh.num_vertices(); ++v)
        require(!mesh.is_boundary(v) || u.values()[v] == 0.0, "Poincaré ratio needs zero boundary values");
    if (u.values().cwiseAbs().maxCoeff() == 0.0) throw Error("Poincaré ratio of the zero function");
    const QuadratureMeasure quad = mesh_quadrature(mesh, quad_degree);
    const PhaseSamples phase = sample_phase(fp.tf, quad);
    const double top = luxemburg_norm(phase, quad, sample_values(u, quad)).luxemburg_norm;
    const double bottom = luxemburg_norm(phase, quad, sample_gradient_norms(u, quad)).luxemburg_norm;
    return top / bottom;
}

ProbeTerms reverse_holder_terms(const FluxParams& fp, const FeFunction& u, const Ball& ball, double m)
{
    require(m > 0.0, "reverse Hölder exponent needs m > 0");
    const BallSamples full = sample_ball(fp, u, ball);
    const BallSamples half = sample_ball(fp, u, Ball{ball.center, 0.5 * ball.radius});
    const double lhs = std::pow(half.average([&](Index k) { return std::pow(half.t_at(k, half.grad[k]), 1.0 + m); }),
                                1.0 / (1.0 + m));
    const double rhs = 1.0 + full.average([&](Index k) { return full.t_at(k, full.grad[k]); });
    return make_terms(lhs, rhs);
}

ProbeTerms boundary_reverse_holder_terms(const FluxParams& fp, const FeFunction& v, const FeFunction& w,
                                         const Ball& ball, double m)
{
    require(m > 0.0, "reverse Hölder exponent needs m > 0");
    require(&v.mesh() == &w.mesh(), "v and w must share a mesh");
    const Ball twice{ball.center, 2.0 * ball.radius};
    const BallSamples vb = sample_ball(fp, v, ball);
    const BallSamples v2 = sample_ball(fp, v, twice);
    const BallSamples w2 = sample_ball(fp, w, twice);
    const double lhs = vb.average([&](Index k) { return std::pow(vb.t_at(k, vb.grad[k]), 1.0 + m); });
    const double rhs = std::pow(v2.average([&](Index k) { return v2.t_at(k, v2.grad[k]); }), 1.0 + m) +
                       w2.average([&](Index k) { return std::pow(w2.t_at(k, w2.grad[k]), 1.0 + m); }) + 1.0;
    return make_terms(lhs, rhs);
}

std::vector<double> ProbeReport::ratios() const
{
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.terms.ratio);
    return out;
}

double ProbeReport::max_ratio(double param) const
{
    double best = 0.0;
    for (const auto& r : rows)
        if (r.param == param) best = std::max(best, r.terms.ratio);
    return best;
}

bool ProbeReport::all_finite() const
{
    return std::all_of(rows.begin(), rows.end(), [](const ProbeRow& r) { return std::isfinite(r.terms.ratio); });
}

void ProbeReport::add(ProbeRow row)
{
    if (std::isnan(row.terms.ratio) || row.terms.ratio > empirical_constant) empirical_constant = row.terms.ratio;
    rows.push_back(std::move(row));
}

namespace {

ProbeReport collect(std::string name, std::vector<ProbeRow> rows)
{
    ProbeReport rep;
    rep.inequality_name = std::move(name);
    for (auto& r : rows) rep.add(std::move(r));
    return rep;
}

} // namespace

ProbeReport caccioppoli_probe(const FluxParams& fp, const FeFunction& u, const std::vector<BallPair>& pairs)
{
    std::vector<ProbeRow> rows(pairs.size());
    parallel_for(static_cast<Index>(pairs.size()), [&](Index i) {
        const BallPair& bp = pairs[static_cast<std::size_t>(i)];
        rows[static_cast<std::size_t>(i)] = {"caccioppoli", bp.outer.center, bp.inner.radius, bp.outer.radius, 0.0,
                                             caccioppoli_terms(fp, u, bp)};
    });
    return collect("caccioppoli", std::move(rows));
}

ProbeReport sobolev_poincare_probe(const FluxParams& fp, const FeFunction& u, const std::vector<Ball>& balls,
                                   double delta, std::optional<double> r0)
{
    std::vector<ProbeRow> rows(balls.size());
    parallel_for(static_cast<Index>(balls.size()), [&](Index i) {
        const Ball& b = balls[static_cast<std::size_t>(i)];
        rows[static_cast<std::size_t>(i)] = {"sobolev-poincare", b.center, b.radius, b.radius, delta,
                                             sobolev_poincare_terms(fp, u, b, delta, r0)};
    });
    ProbeReport rep = collect("sobolev-poincare", std::move(rows));
    rep.parameters["delta"] = delta;
    if (r0) rep.parameters["R0"] = *r0;
    return rep;
}

ProbeReport higher_integrability_probe(const FluxParams& fp, const FeFunction& u, const std::vector<Ball>& balls,
                                       const std::vector<double>& m_grid)
{
    for (double m : m_grid) require(m > 0.0 && m < 1.0, "m grid must lie in (0, 1)");
    const std::size_t nm = m_grid.size();
    std::vector<ProbeRow> rows(balls.size() * nm);
    parallel_for(static_cast<Index>(rows.size()), [&](Index i) {
        const Ball& b = balls[static_cast<std::size_t>(i) / nm];
        const double m = m_grid[static_cast<std::size_t>(i) % nm];
        rows[static_cast<std::size_t>(i)] = {"higher-integrability", b.center, 0.5 * b.radius, b.radius, m,
                                             reverse_holder_terms(fp, u, b, m)};
    });
    return collect("higher-integrability", std::move(rows));
}

ProbeReport boundary_higher_integrability_probe(const FluxParams& fp, const FeFunction& v, const FeFunction& w,
                                                const std::vector<Ball>& balls, const std::vector<double>& m_grid)
{
    for (double m : m_grid) require(m > 0.0 && m < 1.0, "m grid must lie in (0, 1)");
    const std::size_t nm = m_grid.size();
    std::vector<ProbeRow> rows(balls.size() * nm);
    parallel_for(static_cast<Index>(rows.size()), [&](Index i) {
        const Ball& b = balls[static_cast<std::size_t>(i) / nm];
        const double m = m_grid[static_cast<std::size_t>(i) % nm];
        rows[static_cast<std::size_t>(i)] = {"boundary-higher-integrability", b.center, b.radius, 2.0 * b.radius, m,
                                             boundary_reverse_holder_terms(fp, v, w, b, m)};
    });
    return collect("boundary-higher-integrability", std::move(rows));
}

ProbeReport poincare_w0_probe(const FluxParams& fp, const std::vector<FeFunction>& functions)
{
    std::vector<ProbeRow> rows(functions.size());
    parallel_for(static_cast<Index>(functions.size()), [&](Index i) {
        const double ratio = poincare_w0_ratio(fp, functions[static_cast<std::size_t>(i)]);
        rows[static_cast<std::size_t>(i)] = {"poincare-w0", Point::Zero(), 0.0, 0.0, static_cast<double>(i),
                                             ProbeTerms{ratio, 1.0, ratio}};
    });
    return collect("poincare-w0", std::move(rows));
}

std::optional<double> stable_exponent(const std::vector<ProbeReport>& levels, const std::vector<double>& m_grid,
                                      double stability)
{
    require(!levels.empty(), "need at least one refinement level");
    std::optional<double> best;
    for (double m : m_grid) {
        const bool stable = std::all_of(levels.begin(), levels.end(), [&](const ProbeReport& r) {
            const double v = r.max_ratio(m);
            return std::isfinite(v) && v < stability;
        });
        if (stable && (!best || m > *best)) best = m;
    }
    return best;
}

namespace {

std::pair<Point, Point> mesh_box(const TriMesh& mesh)
{
    Point lo = mesh.vertex(0), hi = mesh.vertex(0);
    for (const Point& v : mesh.vertices()) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    return {lo, hi};
}

} // namespace

std::vector<Ball> random_balls(const TriMesh& mesh, int count, std::uint64_t seed, double r_min, double r_max,
                               double clearance)
{
    require(count >= 0 && r_min > 0.0 && r_max >= r_min && clearance > 0.0, "invalid ball family parameters");
    std::mt19937_64 rng(seed);
    const auto [lo, hi] = mesh_box(mesh);
    std::uniform_real_distribution<double> ux(lo.x(), hi.x()), uy(lo.y(), hi.y()), ur(r_min, r_max);
    std::vector<Ball> out;
    long attempts = 0;
    while (static_cast<int>(out.size()) < count) {
        if (++attempts > 100000L * std::max(1, count)) throw Error("could not place balls inside Ω");
        const double r = ur(rng);
        const Point c(ux(rng), uy(rng));
        if (!mesh.locate(c) || distance_to_mesh_boundary(mesh, c) < clearance * r) continue;
        out.push_back({c, r});
    }
    return out;
}

std::vector<BallPair> random_ball_pairs(const TriMesh& mesh, int count, std::uint64_t seed, double r_min,
                                        double r_max, double factor, double clearance)
{
    require(factor > 1.0, "outer radius factor must exceed 1");
    std::vector<BallPair> out;
    for (const Ball& b : random_balls(mesh, count, seed, factor * r_min, factor * r_max, clearance))
        out.push_back({{b.center, b.radius / factor}, b});
    return out;
}

std::vector<FeFunction> random_zero_boundary_functions(const MeshPtr& mesh, int count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    std::uniform_int_distribution<int> freq(1, 4);
    const auto [lo, hi] = mesh_box(*mesh);
    const double pi = std::acos(-1.0);
    std::vector<FeFunction> out;
    while (static_cast<int>(out.size()) < count) {
        std::array<double, 3> a{};
        std::array<int, 6> k{};
        for (auto& v : a) v = amp(rng);
        for (auto& v : k) v = freq(rng);
        Eigen::VectorXd values(mesh->num_vertices());
        for (Index i = 0; i < values.size(); ++i) {
            const Point& x = mesh->vertex(i);
            const double s = (x.x() - lo.x()) / (hi.x() - lo.x());
            const double t = (x.y() - lo.y()) / (hi.y() - lo.y());
            double v = 0.0;
            for (int j = 0; j < 3; ++j) v += a[j] * std::sin(k[2 * j] * pi * s) * std::sin(k[2 * j + 1] * pi * t);
            values[i] = mesh->is_boundary(i) ? 0.0 : v;
        }
        if (values.cwiseAbs().maxCoeff() == 0.0) continue;
        out.emplace_back(mesh, std::move(values));
    }
    return out;
}

std::pair<ConstantEstimate, ConstantEstimate> weight_root_holder(const PhaseFunction& tf, double sigma,
                                                                 const PointSet& samples)
{
    const auto root1 = ScalarField::from_function(
        [&tf](const Point& x) { return std::pow(tf.w.mu1()(x), 1.0 / tf.exp.q()(x)); }, "mu1^(1/q)");
    const auto root2 = ScalarField::from_function(
        [&tf](const Point& x) { return std::pow(tf.w.mu2()(x), 1.0 / tf.exp.r()(x)); }, "mu2^(1/r)");
    return {estimate_holder_constant(root1, sigma, samples), estimate_holder_constant(root2, sigma, samples)};
}

} // namespace multiphase
