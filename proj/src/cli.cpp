#include "multiphase/cli.hpp"

#include "multiphase/config.hpp"
#include "multiphase/parallel.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <map>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

namespace multiphase {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

using Row = std::vector<std::string>;

std::string str(double v) { return format_double(v); }
std::string str(Index v) { return std::to_string(v); }
std::string str(int v) { return std::to_string(v); }

/// Output directory that stamps every artifact with the config hash.
class Artifacts {
public:
    Artifacts(fs::path dir, std::string hash, std::string command)
        : dir_(std::move(dir)), hash_(std::move(hash)), command_(std::move(command))
    {
        fs::create_directories(dir_);
    }

    void csv(const std::string& name, const Row& header, const std::vector<Row>& rows)
    {
        const fs::path path = dir_ / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot open " + path.string() + " for writing");
        out << "# multiphase " << kVersion << " command=" << command_ << " config_hash=" << hash_ << '\n';
        auto line = [&](const Row& r) {
            for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
            out << '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
        if (!out) throw Error("failed writing " + path.string());
        files_.push_back(name);
    }

    void vtk(const std::string& name, const TriMesh& mesh,
             const std::vector<std::pair<std::string, Eigen::VectorXd>>& scalars,
             const std::vector<VtkCellVectors>& vectors = {})
    {
        write_vtk((dir_ / name).string(), mesh, "multiphase " + std::string(kVersion) + " config_hash=" + hash_,
                  scalars, vectors);
        files_.push_back(name);
    }

    void stage(const std::string& name, double seconds) { stages_[name] = seconds; }
    json& extra() { return extra_; }

    void manifest(int status)
    {
        json m;
        m["config_hash"] = hash_;
        m["version"] = kVersion;
        m["command"] = command_;
        m["stage_seconds"] = stages_;
        m["outputs"] = files_;
        m["exit_code"] = status;
        for (auto it = extra_.begin(); it != extra_.end(); ++it) m[it.key()] = it.value();
        std::ofstream out(dir_ / "manifest.json", std::ios::binary);
        out << m.dump(2) << '\n';
    }

private:
    fs::path dir_;
    std::string hash_;
    std::string command_;
    std::vector<std::string> files_;
    std::map<std::string, double> stages_;
    json extra_ = json::object();
};

class Stopwatch {
public:
    double seconds() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

private:
    using Clock = std::chrono::steady_clock;
    Clock::time_point start_ = Clock::now();
};

json report_json(const HypothesisReport& r)
{
    json j;
    j["name"] = r.name;
    j["passed"] = r.passed;
    j["margin"] = format_double(r.margin);
    j["worst_point"] = {format_double(r.worst_point.x()), format_double(r.worst_point.y())};
    return j;
}

std::function<double(const Point&)> boundary_of(const RunConfig& cfg)
{
    if (!cfg.boundary) return nullptr;
    const Expression g = *cfg.boundary;
    return [g](const Point& x) { return g(x.x(), x.y()); };
}

double h3_threshold(const RunConfig& cfg)
{
    const std::string& t = cfg.hypotheses.h3_threshold;
    if (t == "one") return 1.0;
    if (t == "inf_mu1") return cfg.tf().w.inf_mu1();
    if (t == "inf_mu2") return cfg.tf().w.inf_mu2();
    return std::stod(t);
}

int cmd_check_hypotheses(const RunConfig& cfg, Artifacts& out)
{
    Stopwatch clock;
    const PointSet samples = cfg.domain.sample_grid(128);
    const PhaseFunction& tf = cfg.tf();
    const int N = cfg.hypotheses.N;
    std::vector<HypothesisReport> reports;
    std::vector<Row> rows;
    std::optional<MeshPtr> mesh;
    auto get_mesh = [&] {
        if (!mesh) mesh = build_mesh(cfg, cfg.mesh.refinements);
        return *mesh;
    };
    for (const std::string& name : cfg.hypotheses.check) {
        double lambda = std::numeric_limits<double>::quiet_NaN();
        HypothesisReport rep;
        if (name == "H1") {
            rep = check_h1(tf.exp, tf.w, N, samples);
        } else if (name == "Hprime") {
            rep = check_hprime(tf.exp, cfg.hypotheses.sigma, N, samples);
        } else if (name == "H2") {
            lambda = first_eigenvalue(get_mesh(), tf.exp.p_minus(), cfg.eigen.tol).lambda;
            rep = check_h2(cfg.source, lambda);
        } else {
            lambda = first_eigenvalue(get_mesh(), 2.0, cfg.eigen.tol).lambda;
            rep = check_h3(cfg.source, lambda, h3_threshold(cfg));
        }
        rows.push_back({rep.name, rep.passed ? "1" : "0", str(rep.margin), str(rep.worst_point.x()),
                        str(rep.worst_point.y()), str(lambda)});
        reports.push_back(rep);
    }
    std::printf("%-8s %-6s %-24s %s\n", "name", "pass", "margin", "worst point");
    bool all = true;
    json list = json::array();
    for (const auto& r : reports) {
        std::printf("%-8s %-6s %-24s (%s, %s)\n", r.name.c_str(), r.passed ? "yes" : "no", str(r.margin).c_str(),
                    str(r.worst_point.x()).c_str(), str(r.worst_point.y()).c_str());
        all = all && r.passed;
        list.push_back(report_json(r));
    }
    out.csv("hypotheses.csv", {"hypothesis", "passed", "margin", "worst_x", "worst_y", "lambda"}, rows);
    out.extra()["hypotheses"] = list;
    out.stage("check-hypotheses", clock.seconds());
    return all ? kExitOk : kExitFailure;
}

int cmd_solve(const RunConfig& cfg, Artifacts& out)
{
    const FluxParams fp = cfg.flux();
    spot_check_source(cfg.source, cfg.domain, cfg.seed);
    const bool convection = cfg.source.grad_dependent || cfg.solver.convection;
    if (convection) {
        const double lambda = first_eigenvalue(build_mesh(cfg, 0), fp.tf.exp.p_minus(), cfg.eigen.tol).lambda;
        const HypothesisReport h2 = check_h2(cfg.source, lambda);
        if (!h2.passed) spdlog::warn("H2 margin {} <= 0; the fixed-point scheme may not converge", h2.margin);
        out.extra()["hypotheses"] = json::array({report_json(h2)});
    }
    std::vector<Row> rows;
    bool all = true;
    std::optional<SolveReport> finest;
    MeshPtr finest_mesh;
    for (int level = 0; level <= cfg.mesh.refinements; ++level) {
        Stopwatch clock;
        const MeshPtr mesh = build_mesh(cfg, level);
        const PhaseProblem prob = make_problem(mesh, fp, cfg.source, boundary_of(cfg));
        SolveReport rep = convection ? solve_convection(prob, cfg.solver.options, cfg.solver.max_outer)
                                     : solve_variational(prob, cfg.solver.options);
        double err = std::numeric_limits<double>::quiet_NaN();
        if (cfg.exact) {
            err = 0.0;
            for (Index v = 0; v < mesh->num_vertices(); ++v)
                err = std::max(err, std::abs(rep.solution.values()[v] - (*cfg.exact)(mesh->vertex(v).x(), mesh->vertex(v).y())));
        }
        const double res = rep.residual_history.empty() ? 0.0 : rep.residual_history.back();
        rows.push_back({str(level), str(mesh->num_vertices()), str(mesh->h_max()), str(rep.iterations),
                        rep.converged ? "1" : "0", str(res), str(energy(fp, rep.solution)), str(err)});
        std::printf("level %d  h=%s  iterations=%d  converged=%s  residual=%s  error=%s%s%s\n", level,
                    str(mesh->h_max()).c_str(), rep.iterations, rep.converged ? "yes" : "no", str(res).c_str(),
                    str(err).c_str(), rep.diagnostic.empty() ? "" : "  ", rep.diagnostic.c_str());
        all = all && rep.converged;
        out.stage("solve_level" + std::to_string(level), clock.seconds());
        finest = std::move(rep);
        finest_mesh = mesh;
    }
    out.csv("convergence.csv",
            {"level", "vertices", "h_max", "iterations", "converged", "final_residual", "energy", "error_sup"}, rows);
    std::vector<Row> hist;
    for (std::size_t i = 0; i < finest->residual_history.size(); ++i)
        hist.push_back({"residual", str(static_cast<int>(i)), "nan", str(finest->residual_history[i])});
    for (std::size_t i = 0; i < finest->energy_history.size(); ++i)
        hist.push_back({"merit", str(static_cast<int>(i)), str(finest->energy_eps[i]), str(finest->energy_history[i])});
    out.csv("history.csv", {"kind", "index", "eps", "value"}, hist);
    std::vector<std::pair<std::string, Eigen::VectorXd>> scalars{{"u", finest->solution.values()}};
    if (cfg.exact) {
        const Expression e = *cfg.exact;
        scalars.push_back({"exact", interpolate([&](const Point& x) { return e(x.x(), x.y()); }, finest_mesh).values()});
    }
    out.vtk("solution.vtk", *finest_mesh, scalars, {{"grad_u", gradient_field(finest->solution)}});
    return all ? kExitOk : kExitFailure;
}

int cmd_eigen(const RunConfig& cfg, Artifacts& out)
{
    std::vector<Row> rows;
    std::optional<EigenResult> last;
    MeshPtr last_mesh;
    std::printf("%-6s %-24s %-24s %s\n", "level", "h_max", "lambda", "iterations");
    for (int level = 0; level <= cfg.mesh.refinements; ++level) {
        Stopwatch clock;
        const MeshPtr mesh = build_mesh(cfg, level);
        EigenResult res = first_eigenvalue(mesh, cfg.eigen.m, cfg.eigen.tol);
        rows.push_back({str(level), str(mesh->h_max()), str(res.lambda), str(res.iterations)});
        std::printf("%-6d %-24s %-24s %d\n", level, str(mesh->h_max()).c_str(), str(res.lambda).c_str(), res.iterations);
        out.stage("eigen_level" + std::to_string(level), clock.seconds());
        last = std::move(res);
        last_mesh = mesh;
    }
    out.csv("eigen.csv", {"level", "h_max", "lambda", "iterations"}, rows);
    out.vtk("eigenfunction.vtk", *last_mesh, {{"u", last->eigenfunction.values()}},
            {{"grad_u", gradient_field(last->eigenfunction)}});
    out.extra()["lambda"] = format_double(last->lambda);
    return kExitOk;
}

int cmd_verify_modular(const RunConfig& cfg, Artifacts& out)
{
    Stopwatch clock;
    const PhaseFunction& tf = cfg.tf();
    const MeshPtr mesh = build_mesh(cfg, 0);
    const QuadratureMeasure quad = mesh_quadrature(*mesh, cfg.solver.options.quad_degree);
    std::vector<Row> rows;
    bool all = true;
    auto record = [&](const PropertyReport& r, const std::string& fn) {
        for (const auto& item : r.items)
            rows.push_back({r.name, fn, item.label, str(item.slack), r.passed ? "1" : "0"});
        all = all && r.passed;
    };
    const auto functions = random_fe_functions(mesh, cfg.modular.functions, cfg.seed);
    for (std::size_t k = 0; k < functions.size(); ++k) {
        const Eigen::VectorXd u = sample_values(functions[k], quad);
        record(check_norm_modular_relations(tf, u, quad), std::to_string(k));
        record(check_seminorm_domination(tf, u, quad), std::to_string(k));
        const double norm = luxemburg_norm(tf, u, quad).luxemburg_norm;
        for (double c : {0.5, 3.0}) {
            const double scaled = luxemburg_norm(tf, Eigen::VectorXd(c * u), quad).luxemburg_norm;
            const double slack = 2e-10 - std::abs(scaled - c * norm) / (c * norm);
            rows.push_back({"homogeneity", std::to_string(k), "c=" + str(c), str(slack), slack >= 0 ? "1" : "0"});
            all = all && slack >= 0;
        }
    }
    const auto samples = log_uniform_samples(cfg.domain, static_cast<std::size_t>(cfg.modular.samples), cfg.seed);
    record(check_delta2(tf, samples), "-");
    record(check_subadditivity(tf, samples), "-");
    record(check_uniform_convexity(tf, cfg.modular.eps, samples), "-");
    out.csv("modular.csv", {"check", "function", "item", "slack", "passed"}, rows);
    std::printf("verify-modular: %zu checks, %s\n", rows.size(), all ? "all passed" : "FAILURES");
    out.stage("verify-modular", clock.seconds());
    return all ? kExitOk : kExitFailure;
}

std::vector<Row> probe_rows(const ProbeReport& rep)
{
    std::vector<Row> rows;
    for (const auto& r : rep.rows)
        rows.push_back({r.inequality, str(r.center.x()), str(r.center.y()), str(r.r1), str(r.r2), str(r.param),
                        str(r.terms.lhs), str(r.terms.rhs), str(r.terms.ratio)});
    return rows;
}

int cmd_probe(const RunConfig& cfg, const std::string& which, Artifacts& out)
{
    const FluxParams fp = cfg.flux();
    const ProbeSettings& ps = cfg.probe;
    const MeshPtr base = build_mesh(cfg, 0);
    const bool pairs_needed = which == "caccioppoli";

    std::vector<Ball> balls;
    std::vector<BallPair> pairs;
    if (which != "poincare-w0") {
        if (!ps.balls.centers.empty()) {
            for (std::size_t i = 0; i < ps.balls.centers.size(); ++i) {
                const Ball b{ps.balls.centers[i], ps.balls.radii[i]};
                balls.push_back(b);
                pairs.push_back({{b.center, b.radius}, {b.center, ps.balls.factor * b.radius}});
            }
        } else if (pairs_needed) {
            pairs = random_ball_pairs(*base, ps.balls.count, cfg.seed, ps.balls.r_min, ps.balls.r_max, ps.balls.factor);
        } else {
            balls = random_balls(*base, ps.balls.count, cfg.seed, ps.balls.r_min, ps.balls.r_max);
        }
        std::vector<std::string> offending;
        auto check = [&](const Ball& b) {
            try {
                check_ball_inside(*base, b);
            } catch (const Error& e) {
                offending.push_back("(" + str(b.center.x()) + ", " + str(b.center.y()) + ") R=" + str(b.radius));
            }
        };
        if (pairs_needed)
            for (const auto& p : pairs) check(p.outer);
        else
            for (const auto& b : balls) check(b);
        if (!offending.empty()) {
            std::fprintf(stderr, "ball escapes Ω:\n");
            for (const auto& o : offending) std::fprintf(stderr, "  %s\n", o.c_str());
            return kExitFailure;
        }
    }

    std::optional<double> r0;
    if (which == "sobolev-poincare") {
        const PointSet samples = cfg.domain.sample_grid(64);
        const double lr = estimate_holder_constant(cfg.tf().exp.r(), ps.sigma, samples).value;
        const HypothesisReport hp = check_hprime(cfg.tf().exp, ps.sigma, cfg.hypotheses.N, samples);
        if (hp.passed && lr > 0) {
            const double sup_ratio = 1.0 + ps.sigma / cfg.hypotheses.N - hp.margin;
            r0 = compute_r0(cfg.tf().exp.p_minus(), ps.sigma, cfg.hypotheses.N, lr, sup_ratio);
            if (ps.d) {
                const double lmax = std::max({lr, estimate_holder_constant(cfg.tf().exp.p(), ps.sigma, samples).value,
                                              estimate_holder_constant(cfg.tf().exp.q(), ps.sigma, samples).value});
                r0 = tighten_r0(*r0, cfg.tf().exp.p_minus(), ps.sigma, *ps.d, lmax);
            }
        }
    }
    const auto roots = weight_root_holder(cfg.tf(), ps.sigma, cfg.domain.sample_grid(32));

    std::vector<ProbeReport> levels;
    std::vector<Row> trace;
    bool finite = true;
    for (int level = 0; level <= cfg.mesh.refinements; ++level) {
        Stopwatch clock;
        const MeshPtr mesh = build_mesh(cfg, level);
        ProbeReport rep;
        if (which == "poincare-w0") {
            rep = poincare_w0_probe(fp, random_zero_boundary_functions(mesh, ps.functions, cfg.seed));
        } else {
            const FeFunction u = ps.u ? interpolate([e = *ps.u](const Point& x) { return e(x.x(), x.y()); }, mesh)
                                      : minimize_dirichlet(fp, mesh, boundary_of(cfg), cfg.solver.options);
            if (which == "caccioppoli") {
                rep = caccioppoli_probe(fp, u, pairs);
                if (ps.level) {
                    for (int sign : {1, -1})
                        for (const auto& p : pairs)
                            rep.add({sign > 0 ? "caccioppoli-truncation+" : "caccioppoli-truncation-", p.outer.center,
                                     p.inner.radius, p.outer.radius, *ps.level,
                                     caccioppoli_truncation_terms(fp, u, p, *ps.level, sign)});
                }
            } else if (which == "sobolev-poincare") {
                rep = sobolev_poincare_probe(fp, u, balls, ps.delta, r0);
            } else {
                rep = higher_integrability_probe(fp, u, balls, ps.m_grid);
            }
        }
        rep.parameters["sigma"] = ps.sigma;
        rep.parameters["holder_mu1_root"] = roots.first.value;
        rep.parameters["holder_mu2_root"] = roots.second.value;
        finite = finite && rep.all_finite();
        out.csv("probe_" + which + "_level" + std::to_string(level) + ".csv",
                {"inequality", "center_x", "center_y", "R1", "R2", "param", "lhs", "rhs", "ratio"}, probe_rows(rep));
        if (which == "higher-integrability") {
            for (double m : ps.m_grid) trace.push_back({str(level), str(mesh->h_max()), str(m), str(rep.max_ratio(m))});
        } else {
            trace.push_back({str(level), str(mesh->h_max()), "nan", str(rep.empirical_constant)});
        }
        std::printf("level %d  h=%s  empirical constant=%s\n", level, str(mesh->h_max()).c_str(),
                    str(rep.empirical_constant).c_str());
        out.stage("probe_level" + std::to_string(level), clock.seconds());
        levels.push_back(std::move(rep));
    }
    out.csv("probe_" + which + "_trace.csv", {"level", "h_max", "param", "empirical_constant"}, trace);
    json params = json::object();
    for (const auto& [k, v] : levels.back().parameters) params[k] = format_double(v);
    if (r0) params["R0"] = format_double(*r0);
    if (which == "higher-integrability") {
        const auto m0 = stable_exponent(levels, ps.m_grid, ps.stability);
        params["stable_m"] = m0 ? format_double(*m0) : "none";
        std::printf("largest m with max ratio < %s on every level: %s\n", str(ps.stability).c_str(),
                    m0 ? str(*m0).c_str() : "none");
    }
    out.extra()["probe_parameters"] = params;
    if (!finite) std::fprintf(stderr, "probe failed: infinite ratio (rhs = 0 < lhs)\n");
    return finite ? kExitOk : kExitFailure;
}

void configure_logging()
{
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("MULTIPHASE_LOG")) {
        const std::string level = env;
        if (level == "error")
            spdlog::set_level(spdlog::level::err);
        else if (level == "warn")
            spdlog::set_level(spdlog::level::warn);
        else if (level == "info")
            spdlog::set_level(spdlog::level::info);
        else if (level == "debug")
            spdlog::set_level(spdlog::level::debug);
        else
            spdlog::warn("MULTIPHASE_LOG={} not recognized; using warn", level);
    }
}

} // namespace

int run_cli(int argc, const char* const* argv)
{
    configure_logging();
    CLI::App app{"Triple-phase variable-exponent operator: modular calculus, FE solver and regularity probes"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int threads = 0;
    std::optional<std::uint64_t> seed;
    std::string probe_which;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (default: config \"output\")");
        sub->add_option("--threads", threads, "worker cap, 0 = all cores")->check(CLI::NonNegativeNumber);
        sub->add_option("--seed", seed, "overrides the config seed");
    };
    CLI::App* check = app.add_subcommand("check-hypotheses", "evaluate H1, H2, H3 and H' margins");
    CLI::App* solve = app.add_subcommand("solve", "solve the Dirichlet problem on each refinement level");
    CLI::App* eigen = app.add_subcommand("eigen", "first Dirichlet eigenvalue of the m-Laplacian");
    CLI::App* modular = app.add_subcommand("verify-modular", "property checks of the modular and the norm");
    CLI::App* probe = app.add_subcommand("probe", "measure a regularity inequality");
    probe->add_option("which", probe_which, "caccioppoli | sobolev-poincare | higher-integrability | poincare-w0")
        ->required()
        ->check(CLI::IsMember({"caccioppoli", "sobolev-poincare", "higher-integrability", "poincare-w0"}));
    for (CLI::App* sub : {check, solve, eigen, modular, probe}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitUsage;
    }
    if (seed) {
        cfg.seed = *seed;
        cfg.hash = sha256_hex(cfg.canonical + "\nseed=" + std::to_string(*seed));
    }
    set_thread_count(threads);

    CLI::App* chosen = app.get_subcommands().front();
    const std::string command = chosen == probe ? "probe " + probe_which : chosen->get_name();
    int status = kExitFailure;
    std::optional<Artifacts> out;
    try {
        out.emplace(out_dir.empty() ? fs::path(cfg.output) : fs::path(out_dir), cfg.hash, command);
        if (chosen == check)
            status = cmd_check_hypotheses(cfg, *out);
        else if (chosen == solve)
            status = cmd_solve(cfg, *out);
        else if (chosen == eigen)
            status = cmd_eigen(cfg, *out);
        else if (chosen == modular)
            status = cmd_verify_modular(cfg, *out);
        else
            status = cmd_probe(cfg, probe_which, *out);
    } catch (const ContractError& e) {
        std::fprintf(stderr, "contract violation: %s\n", e.what());
        status = kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        status = kExitFailure;
    }
    if (out) out->manifest(status);
    return status;
}

} // namespace multiphase
