#ifndef MULTIPHASE_CONFIG_HPP
#define MULTIPHASE_CONFIG_HPP

#include "multiphase/expression.hpp"
#include "multiphase/regularity.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace multiphase {

/// Malformed or schema-violating configuration (exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MeshSettings {
    int n = 16;
    int refinements = 0;
};

struct SolverSettings {
    SolverOptions options;
    double eps = 1e-8;
    int max_outer = 100;
    /// Forces the fixed-point scheme even for gradient-free sources.
    bool convection = false;
};

struct HypothesisSettings {
    std::vector<std::string> check{"H1", "H2"};
    int N = 2;
    double sigma = 1.0;
    /// "one", "inf_mu1", "inf_mu2" or a number.
    std::string h3_threshold = "one";
};

struct EigenSettings {
    double m = 2.0;
    double tol = 1e-10;
};

struct BallSettings {
    int count = 20;
    double r_min = 0.05;
    double r_max = 0.1;
    double factor = 2.0;
    /// Explicit family; overrides the random one when nonempty.
    std::vector<Point> centers;
    std::vector<double> radii;
};

struct ProbeSettings {
    double delta = 0.75;
    std::vector<double> m_grid{0.05, 0.1, 0.2, 0.4};
    BallSettings balls;
    double sigma = 1.0;
    std::optional<double> d;
    /// Empty means the computed minimizer.
    std::optional<Expression> u;
    std::optional<double> level;
    double stability = 10.0;
    int functions = 100;
};

struct ModularSettings {
    int functions = 40;
    int samples = 10000;
    double eps = 0.5;
};

struct RunConfig {
    std::string domain_type = "unit_square";
    Domain2D domain = Domain2D::unit_square();
    Point disk_center = Point::Zero();
    double disk_radius = 1.0;
    std::optional<PhaseFunction> phase;
    SourceTerm source = SourceTerm::zero();
    std::optional<Expression> source_expr;
    std::optional<Expression> exact;
    std::optional<Expression> boundary;
    MeshSettings mesh;
    SolverSettings solver;
    HypothesisSettings hypotheses;
    EigenSettings eigen;
    ProbeSettings probe;
    ModularSettings modular;
    std::uint64_t seed = 1;
    std::string output = "out";
    /// Key-sorted JSON text of the parsed file.
    std::string canonical;
    /// SHA-256 of the canonical text (and of any command-line seed override).
    std::string hash;

    const PhaseFunction& tf() const { return *phase; }
    FluxParams flux() const { return FluxParams(*phase, tf().exp.p_minus() >= 2.0 ? 0.0 : solver.eps); }
};

/// Strict parse: unknown keys, wrong types and out-of-range values throw ConfigError.
/// JSON syntax errors report line and column.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Mesh for refinement level `level` (n doubled per level; rings for a disk).
MeshPtr build_mesh(const RunConfig& cfg, int level);

std::string sha256_hex(const std::string& data);

} // namespace multiphase

#endif
