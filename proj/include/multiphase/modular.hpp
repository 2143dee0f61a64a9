#ifndef MULTIPHASE_MODULAR_HPP
#define MULTIPHASE_MODULAR_HPP

#include "multiphase/exponent_fields.hpp"
#include "multiphase/quadrature.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace multiphase {

/// The three-term N-function T(x, t) = t^p(x) + mu1(x) t^q(x) + mu2(x) t^r(x).
struct PhaseFunction {
    ExponentTriple exp;
    WeightPair w;
};

template <typename Scalar>
Scalar phase_value(Scalar t, Scalar p, Scalar q, Scalar r, Scalar mu1, Scalar mu2)
{
    using std::pow;
    Scalar v = pow(t, p);
    if (mu1 != Scalar(0)) v += mu1 * pow(t, q);
    if (mu2 != Scalar(0)) v += mu2 * pow(t, r);
    return v;
}

/// T(x, t); t must be nonnegative.
double t_value(const PhaseFunction& tf, const Point& x, double t);

/// Exponents and weights evaluated once at the points of a quadrature measure.
struct PhaseSamples {
    Eigen::VectorXd p, q, r, mu1, mu2;
    /// min p and max r over the points, widened by the cached field extremes.
    double p_minus = 0.0;
    double r_plus = 0.0;
};

PhaseSamples sample_phase(const PhaseFunction& tf, const QuadratureMeasure& quad);

/// Quadrature of T(x, scale * |u(x)|).
double modular(const PhaseSamples& phase, const QuadratureMeasure& quad, const Eigen::VectorXd& values,
               double scale = 1.0);
double modular(const PhaseFunction& tf, const Eigen::VectorXd& values, const QuadratureMeasure& quad);

struct ModularReport {
    double modular_value = 0.0;
    double luxemburg_norm = 0.0;
    std::pair<double, double> bracket{0.0, 0.0};
    int iterations = 0;
};

inline constexpr double kNormTolerance = 1e-10;

/// Bisection for alpha with modular_of_scaled(1/alpha) = 1, seeded by the power bracket
/// [min(R^{1/e_max}, R^{1/e_min}), max(...)] with R = modular_of_scaled(1).
/// Stops once the bracket is within rel_tol * alpha and |rho(u/alpha) - 1| <= rel_tol.
ModularReport luxemburg_search(const std::function<double(double)>& modular_of_scaled, double e_min, double e_max,
                               double rel_tol);

ModularReport luxemburg_norm(const PhaseSamples& phase, const QuadratureMeasure& quad, const Eigen::VectorXd& values,
                             double rel_tol = kNormTolerance);
ModularReport luxemburg_norm(const PhaseFunction& tf, const Eigen::VectorXd& values, const QuadratureMeasure& quad,
                             double rel_tol = kNormTolerance);

/// Luxemburg functional of the single-term modular int weight |u|^exponent.
double weighted_seminorm(const ScalarField& exponent, const ScalarField& weight, const Eigen::VectorXd& values,
                         const QuadratureMeasure& quad, double rel_tol = kNormTolerance);

struct PropertyItem {
    std::string label;
    double slack = 0.0;
};

/// Outcome of an inequality check; slacks are >= 0 when the inequality holds.
struct PropertyReport {
    std::string name;
    bool passed = true;
    std::vector<PropertyItem> items;
    double worst_slack = std::numeric_limits<double>::infinity();
    double max_ratio = 0.0;
    double bound = std::numeric_limits<double>::quiet_NaN();
    double measured = std::numeric_limits<double>::quiet_NaN();
    std::size_t samples = 0;

    void add(std::string label, double slack, double tolerance);
};

struct PhaseSample {
    Point x;
    double t = 0.0;
    double s = 0.0;
};

/// Points uniform in the domain, t and s log-uniform in [t_min, t_max].
std::vector<PhaseSample> log_uniform_samples(const Domain2D& domain, std::size_t count, std::uint64_t seed,
                                             double t_min = 1e-6, double t_max = 1e3);

/// All eight statements relating the norm and the modular, each as a measured slack.
PropertyReport check_norm_modular_relations(const PhaseFunction& tf, const Eigen::VectorXd& values,
                                            const QuadratureMeasure& quad, double tolerance = 1e-8);
PropertyReport check_delta2(const PhaseFunction& tf, const std::vector<PhaseSample>& samples);
PropertyReport check_subadditivity(const PhaseFunction& tf, const std::vector<PhaseSample>& samples);
/// Throws Error when no sample has |t - s| > eps * max(t, s).
PropertyReport check_uniform_convexity(const PhaseFunction& tf, double eps, const std::vector<PhaseSample>& samples);
PropertyReport check_seminorm_domination(const PhaseFunction& tf, const Eigen::VectorXd& values,
                                         const QuadratureMeasure& quad);

} // namespace multiphase

#endif
