#ifndef MULTIPHASE_EXPONENT_FIELDS_HPP
#define MULTIPHASE_EXPONENT_FIELDS_HPP

#include "multiphase/types.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>

namespace multiphase {

/// Simple polygon in the plane, stored counter-clockwise.
class Domain2D {
public:
    explicit Domain2D(PointSet vertices);

    static Domain2D unit_square();
    static Domain2D rectangle(const Point& lower, const Point& upper);
    /// Regular polygon inscribed in the circle; used as the sampling domain of disks.
    static Domain2D regular_polygon(const Point& center, double radius, int sides);

    const PointSet& vertices() const { return vertices_; }
    int dim() const { return 2; }
    double area() const;
    bool contains(const Point& x) const;
    double distance_to_boundary(const Point& x) const;
    std::pair<Point, Point> bounding_box() const;
    /// True when the polygon is an axis-aligned rectangle given by its four corners.
    bool is_axis_rectangle() const;

    /// Uniform k-by-k grid over the bounding box restricted to the polygon, plus the vertices.
    PointSet sample_grid(int k = 128) const;

private:
    PointSet vertices_;
};

/// Deterministic scalar callback on the domain.
struct ScalarField {
    std::function<double(const Point&)> eval;
    std::optional<std::pair<double, double>> declared_bounds;
    std::optional<double> constant_value;
    std::string description;

    double operator()(const Point& x) const { return eval(x); }

    static ScalarField constant(double value);
    /// a0 + a1 x1 + a2 x2
    static ScalarField affine(double a0, double a1, double a2);
    static ScalarField from_function(std::function<double(const Point&)> fn, std::string description = "callback");
};

/// Variable exponents p <= q <= r with extremal values cached from sampling.
class ExponentTriple {
public:
    ExponentTriple(ScalarField p, ScalarField q, ScalarField r, const PointSet& samples);
    ExponentTriple(ScalarField p, ScalarField q, ScalarField r, const Domain2D& domain, int grid = 128);

    const ScalarField& p() const { return p_; }
    const ScalarField& q() const { return q_; }
    const ScalarField& r() const { return r_; }

    double p_minus() const { return p_minus_; }
    double p_plus() const { return p_plus_; }
    double q_minus() const { return q_minus_; }
    double q_plus() const { return q_plus_; }
    double r_minus() const { return r_minus_; }
    double r_plus() const { return r_plus_; }

private:
    ScalarField p_, q_, r_;
    double p_minus_ = 0, p_plus_ = 0, q_minus_ = 0, q_plus_ = 0, r_minus_ = 0, r_plus_ = 0;
};

/// Nonnegative modulating coefficients mu1, mu2.
class WeightPair {
public:
    WeightPair(ScalarField mu1, ScalarField mu2, const PointSet& samples);
    WeightPair(ScalarField mu1, ScalarField mu2, const Domain2D& domain, int grid = 128);
    static WeightPair zero();

    const ScalarField& mu1() const { return mu1_; }
    const ScalarField& mu2() const { return mu2_; }
    double inf_mu1() const { return inf_mu1_; }
    double inf_mu2() const { return inf_mu2_; }
    double sup_mu1() const { return sup_mu1_; }
    double sup_mu2() const { return sup_mu2_; }

private:
    ScalarField mu1_, mu2_;
    double inf_mu1_ = 0, inf_mu2_ = 0, sup_mu1_ = 0, sup_mu2_ = 0;
};

struct HypothesisReport {
    std::string name;
    bool passed = false;
    Point worst_point = Point::Constant(std::numeric_limits<double>::quiet_NaN());
    double margin = 0.0;
};

/// Sampled lower bound of a continuity constant.
struct ConstantEstimate {
    double value = 0.0;
    std::size_t pairs = 0;
};

/// Slack below which a strict inequality counts as violated.
inline constexpr double kStrictSlack = 1e-12;

/// N p(x) / (N - p(x)); throws Error when p(x) >= N.
double critical_exponent(const ScalarField& p, int N, const Point& x);

HypothesisReport check_h1(const ExponentTriple& exp, const WeightPair& w, int N, const PointSet& samples);
HypothesisReport check_hprime(const ExponentTriple& exp, double sigma, int N, const PointSet& samples);

/// max |f(x) - f(y)| / |x - y|^sigma over all sample pairs.
ConstantEstimate estimate_holder_constant(const ScalarField& f, double sigma, const PointSet& samples);
/// Smallest d0 with |f(x) - f(y)| <= d0 / |log |x - y|| over pairs closer than 1/2.
ConstantEstimate check_log_holder(const ScalarField& f, const PointSet& samples);

/// Largest admissible ball radius for the local regularity estimates, clamped to (0, 1].
double compute_r0(double p0, double sigma, int N, double holder_r, double sup_ratio_rp);
double tighten_r0(double r0, double p0, double sigma, double d, double holder_max);

} // namespace multiphase

#endif
