#include "multiphase/config.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace multiphase {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

void expect_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed)
{
    if (!j.is_object()) fail(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; }))
            fail(path, "unknown key '" + it.key() + "'");
    }
}

std::string child(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

double number(const json& j, const std::string& path)
{
    if (!j.is_number()) fail(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "expected a finite number");
    return v;
}

int integer(const json& j, const std::string& path, int lo)
{
    if (!j.is_number_integer()) fail(path, "expected an integer");
    const auto v = j.get<long long>();
    if (v < lo || v > 1'000'000'000) fail(path, "integer out of range");
    return static_cast<int>(v);
}

std::string string(const json& j, const std::string& path)
{
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

Point point(const json& j, const std::string& path)
{
    if (!j.is_array() || j.size() != 2) fail(path, "expected [x, y]");
    return Point(number(j[0], path + "[0]"), number(j[1], path + "[1]"));
}

Expression expression(const std::string& text, const std::string& path, bool x_only)
{
    Expression e = [&] {
        try {
            return Expression::parse(text);
        } catch (const std::exception& ex) {
            fail(path, ex.what());
        }
    }();
    if (x_only && (e.uses(Variable::t) || e.uses(Variable::z1) || e.uses(Variable::z2)))
        fail(path, "only x1 and x2 are allowed here");
    return e;
}

ScalarField field(const json& j, const std::string& path)
{
    if (j.is_number()) return ScalarField::constant(number(j, path));
    if (!j.is_object() || j.size() != 1) fail(path, "expected {\"const\": v}, {\"affine\": [a0, a1, a2]} or {\"expr\": \"...\"}");
    if (j.contains("const")) return ScalarField::constant(number(j["const"], path + ".const"));
    if (j.contains("affine")) {
        const json& a = j["affine"];
        if (!a.is_array() || a.size() != 3) fail(path + ".affine", "expected [a0, a1, a2]");
        return ScalarField::affine(number(a[0], path + ".affine[0]"), number(a[1], path + ".affine[1]"),
                                   number(a[2], path + ".affine[2]"));
    }
    if (j.contains("expr")) {
        const Expression e = expression(string(j["expr"], path + ".expr"), path + ".expr", true);
        return ScalarField::from_function([e](const Point& x) { return e(x.x(), x.y()); }, e.text());
    }
    fail(path, "unknown field kind '" + j.begin().key() + "'");
}

void parse_domain(const json& j, RunConfig& cfg)
{
    const std::string path = "domain";
    if (!j.is_object() || !j.contains("type")) fail(path, "expected an object with a \"type\"");
    cfg.domain_type = string(j["type"], path + ".type");
    try {
        if (cfg.domain_type == "unit_square") {
            expect_object(j, path, {"type"});
            cfg.domain = Domain2D::unit_square();
        } else if (cfg.domain_type == "rectangle") {
            expect_object(j, path, {"type", "lower", "upper"});
            if (!j.contains("lower") || !j.contains("upper")) fail(path, "rectangle needs lower and upper");
            cfg.domain = Domain2D::rectangle(point(j["lower"], path + ".lower"), point(j["upper"], path + ".upper"));
        } else if (cfg.domain_type == "polygon") {
            expect_object(j, path, {"type", "vertices"});
            if (!j.contains("vertices") || !j["vertices"].is_array()) fail(path, "polygon needs a vertex list");
            PointSet v;
            for (std::size_t i = 0; i < j["vertices"].size(); ++i)
                v.push_back(point(j["vertices"][i], path + ".vertices[" + std::to_string(i) + "]"));
            cfg.domain = Domain2D(v);
        } else if (cfg.domain_type == "disk") {
            expect_object(j, path, {"type", "center", "radius"});
            if (j.contains("center")) cfg.disk_center = point(j["center"], path + ".center");
            if (j.contains("radius")) cfg.disk_radius = number(j["radius"], path + ".radius");
            if (!(cfg.disk_radius > 0)) fail(path + ".radius", "must be positive");
            cfg.domain = Domain2D::regular_polygon(cfg.disk_center, cfg.disk_radius, 96);
        } else {
            fail(path + ".type", "unknown domain type '" + cfg.domain_type + "'");
        }
    } catch (const ContractError& e) {
        fail(path, e.what());
    }
}

void parse_source(const json& j, RunConfig& cfg)
{
    const std::string path = "source";
    expect_object(j, path, {"f", "constants", "exact", "convection"});
    if (j.contains("f")) {
        const json& f = j["f"];
        const Expression e = f.is_number() ? Expression::parse(std::to_string(number(f, path + ".f")))
                                           : expression(string(f, path + ".f"), path + ".f", false);
        cfg.source_expr = e;
        cfg.source.eval = [e](const Point& x, double t, const Point& z) {
            return e.evaluate({x.x(), x.y(), t, z.x(), z.y()});
        };
        cfg.source.grad_dependent = e.uses(Variable::z1) || e.uses(Variable::z2);
        cfg.source.t_dependent = e.uses(Variable::t);
    }
    if (j.contains("constants")) {
        const json& c = j["constants"];
        const std::string cp = path + ".constants";
        expect_object(c, cp, {"k1", "k2", "k3", "k4", "k5", "k6", "m", "gamma1", "gamma2", "gamma3"});
        auto nonneg = [&](const char* key, double& out) {
            if (!c.contains(key)) return;
            out = number(c[key], child(cp, key));
            if (out < 0) fail(child(cp, key), "must be nonnegative");
        };
        GrowthConstants& g = cfg.source.constants;
        nonneg("k1", g.k1);
        nonneg("k2", g.k2);
        nonneg("k3", g.k3);
        nonneg("k4", g.k4);
        nonneg("k5", g.k5);
        nonneg("k6", g.k6);
        nonneg("gamma1", g.gamma1_norm);
        nonneg("gamma2", g.gamma2_norm);
        nonneg("gamma3", g.gamma3_norm);
        if (c.contains("m")) g.m_exponent = field(c["m"], cp + ".m");
    }
    if (j.contains("exact")) cfg.exact = expression(string(j["exact"], path + ".exact"), path + ".exact", true);
    if (j.contains("convection")) {
        if (!j["convection"].is_boolean()) fail(path + ".convection", "expected a boolean");
        cfg.solver.convection = j["convection"].get<bool>();
    }
}

void parse_solver(const json& j, RunConfig& cfg)
{
    const std::string path = "solver";
    expect_object(j, path,
                  {"tol", "max_iter", "eps", "eps_schedule", "linear_solver", "quad_degree", "max_outer", "max_halvings"});
    SolverOptions& o = cfg.solver.options;
    if (j.contains("tol")) o.tol = number(j["tol"], path + ".tol");
    if (!(o.tol > 0)) fail(path + ".tol", "must be positive");
    if (j.contains("max_iter")) o.max_iter = integer(j["max_iter"], path + ".max_iter", 1);
    if (j.contains("max_halvings")) o.max_halvings = integer(j["max_halvings"], path + ".max_halvings", 0);
    if (j.contains("eps")) cfg.solver.eps = number(j["eps"], path + ".eps");
    if (!(cfg.solver.eps > 0)) fail(path + ".eps", "must be positive");
    if (j.contains("eps_schedule")) {
        if (!j["eps_schedule"].is_array() || j["eps_schedule"].empty()) fail(path + ".eps_schedule", "expected a nonempty list");
        for (std::size_t i = 0; i < j["eps_schedule"].size(); ++i) {
            const double e = number(j["eps_schedule"][i], path + ".eps_schedule[" + std::to_string(i) + "]");
            if (e < 0) fail(path + ".eps_schedule", "entries must be nonnegative");
            o.eps_schedule.push_back(e);
        }
    }
    if (j.contains("linear_solver")) {
        const std::string s = string(j["linear_solver"], path + ".linear_solver");
        if (s == "direct")
            o.linear_solver = LinearSolver::direct;
        else if (s == "cg")
            o.linear_solver = LinearSolver::cg;
        else
            fail(path + ".linear_solver", "expected \"direct\" or \"cg\"");
    }
    if (j.contains("quad_degree")) o.quad_degree = integer(j["quad_degree"], path + ".quad_degree", 1);
    if (o.quad_degree > 5) fail(path + ".quad_degree", "at most 5");
    if (j.contains("max_outer")) cfg.solver.max_outer = integer(j["max_outer"], path + ".max_outer", 1);
}

void parse_hypotheses(const json& j, RunConfig& cfg)
{
    const std::string path = "hypotheses";
    expect_object(j, path, {"check", "N", "sigma", "h3_threshold"});
    HypothesisSettings& h = cfg.hypotheses;
    if (j.contains("check")) {
        if (!j["check"].is_array()) fail(path + ".check", "expected a list");
        h.check.clear();
        for (const auto& v : j["check"]) {
            const std::string name = string(v, path + ".check");
            if (name != "H1" && name != "H2" && name != "H3" && name != "Hprime")
                fail(path + ".check", "unknown hypothesis '" + name + "'");
            h.check.push_back(name);
        }
    }
    if (j.contains("N")) h.N = integer(j["N"], path + ".N", 1);
    if (j.contains("sigma")) h.sigma = number(j["sigma"], path + ".sigma");
    if (!(h.sigma > 0 && h.sigma <= 1)) fail(path + ".sigma", "must lie in (0, 1]");
    if (j.contains("h3_threshold")) {
        const json& t = j["h3_threshold"];
        if (t.is_number()) {
            h.h3_threshold = nlohmann::json(number(t, path + ".h3_threshold")).dump();
        } else {
            h.h3_threshold = string(t, path + ".h3_threshold");
            if (h.h3_threshold != "one" && h.h3_threshold != "inf_mu1" && h.h3_threshold != "inf_mu2")
                fail(path + ".h3_threshold", "expected \"one\", \"inf_mu1\", \"inf_mu2\" or a number");
        }
    }
}

void parse_probe(const json& j, RunConfig& cfg)
{
    const std::string path = "probe";
    expect_object(j, path, {"delta", "m_grid", "balls", "sigma", "d", "u", "level", "stability", "functions"});
    ProbeSettings& p = cfg.probe;
    if (j.contains("delta")) p.delta = number(j["delta"], path + ".delta");
    if (!(p.delta > 0 && p.delta < 1)) fail(path + ".delta", "must lie in (0, 1)");
    if (j.contains("m_grid")) {
        if (!j["m_grid"].is_array() || j["m_grid"].empty()) fail(path + ".m_grid", "expected a nonempty list");
        p.m_grid.clear();
        for (const auto& v : j["m_grid"]) {
            const double m = number(v, path + ".m_grid");
            if (!(m > 0 && m < 1)) fail(path + ".m_grid", "entries must lie in (0, 1)");
            p.m_grid.push_back(m);
        }
        std::sort(p.m_grid.begin(), p.m_grid.end());
    }
    if (j.contains("balls")) {
        const json& b = j["balls"];
        const std::string bp = path + ".balls";
        expect_object(b, bp, {"count", "r_min", "r_max", "factor", "centers", "radii"});
        BallSettings& s = p.balls;
        if (b.contains("count")) s.count = integer(b["count"], bp + ".count", 1);
        if (b.contains("r_min")) s.r_min = number(b["r_min"], bp + ".r_min");
        if (b.contains("r_max")) s.r_max = number(b["r_max"], bp + ".r_max");
        if (!(s.r_min > 0 && s.r_max >= s.r_min)) fail(bp, "need 0 < r_min <= r_max");
        if (b.contains("factor")) s.factor = number(b["factor"], bp + ".factor");
        if (!(s.factor > 1)) fail(bp + ".factor", "must exceed 1");
        if (b.contains("centers") != b.contains("radii")) fail(bp, "centers and radii go together");
        if (b.contains("centers")) {
            if (!b["centers"].is_array() || !b["radii"].is_array() || b["centers"].size() != b["radii"].size() ||
                b["centers"].empty())
                fail(bp, "centers and radii must be nonempty lists of equal length");
            for (std::size_t i = 0; i < b["centers"].size(); ++i) {
                s.centers.push_back(point(b["centers"][i], bp + ".centers[" + std::to_string(i) + "]"));
                const double r = number(b["radii"][i], bp + ".radii[" + std::to_string(i) + "]");
                if (!(r > 0)) fail(bp + ".radii", "radii must be positive");
                s.radii.push_back(r);
            }
        }
    }
    if (j.contains("sigma")) p.sigma = number(j["sigma"], path + ".sigma");
    if (!(p.sigma > 0 && p.sigma <= 1)) fail(path + ".sigma", "must lie in (0, 1]");
    if (j.contains("d")) {
        p.d = number(j["d"], path + ".d");
        if (!(*p.d > 0 && *p.d < 1)) fail(path + ".d", "must lie in (0, 1)");
    }
    if (j.contains("u")) {
        const std::string u = string(j["u"], path + ".u");
        if (u != "minimizer") p.u = expression(u, path + ".u", true);
    }
    if (j.contains("level")) p.level = number(j["level"], path + ".level");
    if (j.contains("stability")) p.stability = number(j["stability"], path + ".stability");
    if (!(p.stability > 0)) fail(path + ".stability", "must be positive");
    if (j.contains("functions")) p.functions = integer(j["functions"], path + ".functions", 1);
}

std::string line_column(const std::string& text, std::size_t byte)
{
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

} // namespace

RunConfig parse_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("JSON syntax error at " + line_column(text, e.byte) + ": " + e.what());
    }
    expect_object(j, "config",
                  {"domain", "exponents", "weights", "source", "boundary", "mesh", "solver", "hypotheses", "eigen",
                   "probe", "modular", "seed", "output"});
    RunConfig cfg;
    if (j.contains("domain")) parse_domain(j["domain"], cfg);

    if (!j.contains("exponents")) fail("config", "missing \"exponents\"");
    expect_object(j["exponents"], "exponents", {"p", "q", "r"});
    const json& e = j["exponents"];
    if (!e.contains("p")) fail("exponents", "missing \"p\"");
    const ScalarField p = field(e["p"], "exponents.p");
    const ScalarField q = e.contains("q") ? field(e["q"], "exponents.q") : p;
    const ScalarField r = e.contains("r") ? field(e["r"], "exponents.r") : q;
    ScalarField mu1 = ScalarField::constant(0.0), mu2 = ScalarField::constant(0.0);
    if (j.contains("weights")) {
        expect_object(j["weights"], "weights", {"mu1", "mu2"});
        if (j["weights"].contains("mu1")) mu1 = field(j["weights"]["mu1"], "weights.mu1");
        if (j["weights"].contains("mu2")) mu2 = field(j["weights"]["mu2"], "weights.mu2");
    }
    try {
        cfg.phase = PhaseFunction{ExponentTriple(p, q, r, cfg.domain), WeightPair(mu1, mu2, cfg.domain)};
    } catch (const ContractError& ex) {
        fail("exponents/weights", ex.what());
    } catch (const Error& ex) {
        fail("exponents/weights", ex.what());
    }

    if (j.contains("source")) parse_source(j["source"], cfg);
    if (j.contains("boundary")) {
        expect_object(j["boundary"], "boundary", {"g"});
        if (j["boundary"].contains("g"))
            cfg.boundary = expression(string(j["boundary"]["g"], "boundary.g"), "boundary.g", true);
    }
    if (j.contains("mesh")) {
        expect_object(j["mesh"], "mesh", {"n", "refinements"});
        if (j["mesh"].contains("n")) cfg.mesh.n = integer(j["mesh"]["n"], "mesh.n", 1);
        if (j["mesh"].contains("refinements"))
            cfg.mesh.refinements = integer(j["mesh"]["refinements"], "mesh.refinements", 0);
        if (cfg.mesh.refinements > 6) fail("mesh.refinements", "at most 6");
    }
    if (j.contains("solver")) parse_solver(j["solver"], cfg);
    if (j.contains("hypotheses")) parse_hypotheses(j["hypotheses"], cfg);
    if (j.contains("eigen")) {
        expect_object(j["eigen"], "eigen", {"m", "tol"});
        if (j["eigen"].contains("m")) cfg.eigen.m = number(j["eigen"]["m"], "eigen.m");
        if (!(cfg.eigen.m > 1)) fail("eigen.m", "must exceed 1");
        if (j["eigen"].contains("tol")) cfg.eigen.tol = number(j["eigen"]["tol"], "eigen.tol");
        if (!(cfg.eigen.tol > 0)) fail("eigen.tol", "must be positive");
    }
    if (j.contains("probe")) parse_probe(j["probe"], cfg);
    if (j.contains("modular")) {
        expect_object(j["modular"], "modular", {"functions", "samples", "eps"});
        if (j["modular"].contains("functions")) cfg.modular.functions = integer(j["modular"]["functions"], "modular.functions", 1);
        if (j["modular"].contains("samples")) cfg.modular.samples = integer(j["modular"]["samples"], "modular.samples", 1);
        if (j["modular"].contains("eps")) cfg.modular.eps = number(j["modular"]["eps"], "modular.eps");
        if (!(cfg.modular.eps > 0)) fail("modular.eps", "must be positive");
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) fail("seed", "expected a nonnegative integer");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("output")) cfg.output = string(j["output"], "output");

    const double p_minus = cfg.tf().exp.p_minus();
    if (p_minus < 2.0 && !cfg.solver.options.eps_schedule.empty() && cfg.solver.options.eps_schedule.back() == 0.0)
        fail("solver.eps_schedule", "final eps must be positive when p- < 2");
    cfg.canonical = j.dump();
    cfg.hash = sha256_hex(cfg.canonical);
    return cfg;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

MeshPtr build_mesh(const RunConfig& cfg, int level)
{
    require(level >= 0, "mesh level must be nonnegative");
    if (cfg.domain_type == "disk") return disk_mesh(cfg.disk_center, cfg.disk_radius, cfg.mesh.n << level);
    MeshPtr mesh = structured_mesh(cfg.domain, cfg.mesh.n);
    for (int l = 0; l < level; ++l) mesh = refine(*mesh);
    return mesh;
}

std::string sha256_hex(const std::string& data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 computation failed");
    std::string hex;
    char byte[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(byte, sizeof byte, "%02x", digest[i]);
        hex += byte;
    }
    return hex;
}

} // namespace multiphase
