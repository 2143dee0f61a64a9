#ifndef MULTIPHASE_REGULARITY_HPP
#define MULTIPHASE_REGULARITY_HPP

#include "multiphase/solver.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace multiphase {

/// Discrete minimizer of the energy with the given Dirichlet trace and no source.
FeFunction minimize_dirichlet(const FluxParams& fp, const MeshPtr& mesh,
                              const std::function<double(const Point&)>& boundary, const SolverOptions& opts = {});

/// Concentric pair B_{R1} inside B_{R2}.
struct BallPair {
    Ball inner;
    Ball outer;
};

/// Two sides of a measured inequality. ratio = lhs / rhs, 0 for 0/0, +inf for rhs = 0 < lhs.
struct ProbeTerms {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
};

ProbeTerms make_terms(double lhs, double rhs);

ProbeTerms caccioppoli_terms(const FluxParams& fp, const FeFunction& u, const BallPair& pair);
double caccioppoli_ratio(const FluxParams& fp, const FeFunction& u, const BallPair& pair);

/// Same for the truncation (u - l)_+ (sign > 0) or (u - l)_- (sign < 0); the truncation
/// gradient is switched on pointwise at the quadrature points.
ProbeTerms caccioppoli_truncation_terms(const FluxParams& fp, const FeFunction& u, const BallPair& pair, double level,
                                        int sign);
double caccioppoli_truncation_ratio(const FluxParams& fp, const FeFunction& u, const BallPair& pair, double level,
                                    int sign);

/// lhs = avg T(x, |u - u_B| / R), rhs = 1 + (avg T(x, |grad u|)^delta)^{1/delta}.
/// Logs a warning when r0 is given and R > r0.
ProbeTerms sobolev_poincare_terms(const FluxParams& fp, const FeFunction& u, const Ball& ball, double delta,
                                  std::optional<double> r0 = std::nullopt);
double sobolev_poincare_ratio(const FluxParams& fp, const FeFunction& u, const Ball& ball, double delta,
                              std::optional<double> r0 = std::nullopt);

/// lhs = avg T(x, |u| / R), rhs = (avg T(x, |grad u|)^delta)^{1/delta}, for u vanishing on E.
/// Throws Error("zero-set measure below γ") when |E ∩ B| < gamma |B|.
ProbeTerms sobolev_poincare_zero_set_terms(const FluxParams& fp, const FeFunction& u, const Ball& ball,
                                           const std::function<bool(const Point&)>& in_zero_set, double delta,
                                           double gamma);
double sobolev_poincare_zero_set(const FluxParams& fp, const FeFunction& u, const Ball& ball,
                                 const std::function<bool(const Point&)>& in_zero_set, double delta, double gamma);

/// ||u||_T / || |grad u| ||_T for u vanishing on the boundary.
double poincare_w0_ratio(const FluxParams& fp, const FeFunction& u, int quad_degree = 5);

/// Reverse Hölder quotient (avg_{B_{R/2}} g^{1+m})^{1/(1+m)} / (1 + avg_{B_R} g), g = T(x, |grad u|).
ProbeTerms reverse_holder_terms(const FluxParams& fp, const FeFunction& u, const Ball& ball, double m);

/// avg_{B_R} g_v^{1+m} over (avg_{B_2R} g_v)^{1+m} + avg_{B_2R} g_w^{1+m} + 1.
ProbeTerms boundary_reverse_holder_terms(const FluxParams& fp, const FeFunction& v, const FeFunction& w,
                                         const Ball& ball, double m);

struct ProbeRow {
    std::string inequality;
    Point center = Point::Zero();
    double r1 = 0.0;
    double r2 = 0.0;
    double param = 0.0;
    ProbeTerms terms;
};

struct ProbeReport {
    std::string inequality_name;
    std::vector<ProbeRow> rows;
    /// Max ratio over rows.
    double empirical_constant = 0.0;
    std::vector<std::pair<double, double>> refinement_trace;
    std::map<std::string, double> parameters;

    std::vector<double> ratios() const;
    /// Max ratio over rows with the given parameter value.
    double max_ratio(double param) const;
    /// False when any ratio is +inf or NaN.
    bool all_finite() const;
    void add(ProbeRow row);
};

ProbeReport caccioppoli_probe(const FluxParams& fp, const FeFunction& u, const std::vector<BallPair>& pairs);
ProbeReport sobolev_poincare_probe(const FluxParams& fp, const FeFunction& u, const std::vector<Ball>& balls,
                                   double delta, std::optional<double> r0 = std::nullopt);
/// One row per (ball, m); B_R must lie in Ω.
ProbeReport higher_integrability_probe(const FluxParams& fp, const FeFunction& u, const std::vector<Ball>& balls,
                                       const std::vector<double>& m_grid);
/// One row per (ball, m); B_2R must lie in Ω.
ProbeReport boundary_higher_integrability_probe(const FluxParams& fp, const FeFunction& v, const FeFunction& w,
                                                const std::vector<Ball>& balls, const std::vector<double>& m_grid);
/// Max ratio over the given zero-boundary functions.
ProbeReport poincare_w0_probe(const FluxParams& fp, const std::vector<FeFunction>& functions);

/// Largest m whose max ratio stays below `stability` in every report (one per refinement level).
std::optional<double> stable_exponent(const std::vector<ProbeReport>& levels, const std::vector<double>& m_grid,
                                      double stability = 10.0);

/// Concentric pairs with random centers; R2 = factor * R1 and the outer ball keeps
/// `clearance` * R2 away from the mesh boundary.
std::vector<BallPair> random_ball_pairs(const TriMesh& mesh, int count, std::uint64_t seed, double r_min,
                                        double r_max, double factor = 2.0, double clearance = 1.0);
/// Balls whose radius times `clearance` keeps them inside the mesh.
std::vector<Ball> random_balls(const TriMesh& mesh, int count, std::uint64_t seed, double r_min, double r_max,
                               double clearance = 1.0);

/// Random zero-boundary functions: smooth bumps with random frequencies and amplitudes.
std::vector<FeFunction> random_zero_boundary_functions(const MeshPtr& mesh, int count, std::uint64_t seed);

/// Sampled Hölder constants of mu1^{1/q} and mu2^{1/r}.
std::pair<ConstantEstimate, ConstantEstimate> weight_root_holder(const PhaseFunction& tf, double sigma,
                                                                 const PointSet& samples);

} // namespace multiphase

#endif
