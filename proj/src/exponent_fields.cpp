#include "multiphase/exponent_fields.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace multiphase {

namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

double signed_area(const PointSet& v)
{
    double twice = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) twice += cross(v[i], v[(i + 1) % v.size()]);
    return 0.5 * twice;
}

double segment_distance(const Point& x, const Point& a, const Point& b)
{
    const Point ab = b - a;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0 ? (x - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (x - (a + t * ab)).norm();
}

bool segments_cross(const Point& a, const Point& b, const Point& c, const Point& d)
{
    const double d1 = cross(b - a, c - a);
    const double d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c);
    const double d4 = cross(d - c, b - c);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

struct Extremes {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v)
    {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
};

void check_finite_sample(double v, const char* name)
{
    if (!std::isfinite(v)) throw Error(std::string("non-finite value of field ") + name);
}

} // namespace

Domain2D::Domain2D(PointSet vertices) : vertices_(std::move(vertices))
{
    require(vertices_.size() >= 3, "domain needs at least 3 vertices");
    const double a = signed_area(vertices_);
    if (!(std::abs(a) > 0.0)) throw Error("degenerate polygon: zero area");
    if (a < 0) std::reverse(vertices_.begin(), vertices_.end());
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (j == i + 1 || (i == 0 && j == n - 1)) continue;
            if (segments_cross(vertices_[i], vertices_[(i + 1) % n], vertices_[j], vertices_[(j + 1) % n]))
                throw Error("polygon is not simple");
        }
    }
}

Domain2D Domain2D::unit_square()
{
    return Domain2D({Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)});
}

Domain2D Domain2D::rectangle(const Point& lower, const Point& upper)
{
    return Domain2D({lower, Point(upper.x(), lower.y()), upper, Point(lower.x(), upper.y())});
}

Domain2D Domain2D::regular_polygon(const Point& center, double radius, int sides)
{
    require(sides >= 3 && radius > 0, "regular polygon needs >= 3 sides and positive radius");
    PointSet v;
    for (int k = 0; k < sides; ++k) {
        const double th = 2.0 * std::numbers::pi * k / sides;
        v.emplace_back(center + radius * Point(std::cos(th), std::sin(th)));
    }
    return Domain2D(std::move(v));
}

double Domain2D::area() const { return signed_area(vertices_); }

bool Domain2D::contains(const Point& x) const
{
    if (distance_to_boundary(x) <= 1e-12) return true;
    bool inside = false;
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point& a = vertices_[i];
        const Point& b = vertices_[j];
        if ((a.y() > x.y()) != (b.y() > x.y())) {
            const double xi = a.x() + (x.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
            if (x.x() < xi) inside = !inside;
        }
    }
    return inside;
}

double Domain2D::distance_to_boundary(const Point& x) const
{
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < vertices_.size(); ++i)
        d = std::min(d, segment_distance(x, vertices_[i], vertices_[(i + 1) % vertices_.size()]));
    return d;
}

std::pair<Point, Point> Domain2D::bounding_box() const
{
    Point lo = vertices_.front();
    Point hi = vertices_.front();
    for (const Point& v : vertices_) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    return {lo, hi};
}

bool Domain2D::is_axis_rectangle() const
{
    if (vertices_.size() != 4) return false;
    const auto [lo, hi] = bounding_box();
    for (const Point& v : vertices_) {
        const bool corner_x = v.x() == lo.x() || v.x() == hi.x();
        const bool corner_y = v.y() == lo.y() || v.y() == hi.y();
        if (!corner_x || !corner_y) return false;
    }
    return std::abs(area() - (hi - lo).prod()) <= 1e-14 * (hi - lo).prod();
}

PointSet Domain2D::sample_grid(int k) const
{
    require(k >= 2, "sample grid needs k >= 2");
    const auto [lo, hi] = bounding_box();
    PointSet out;
    out.reserve(static_cast<std::size_t>(k) * k + vertices_.size());
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            const Point x(lo.x() + (hi.x() - lo.x()) * i / (k - 1), lo.y() + (hi.y() - lo.y()) * j / (k - 1));
            if (contains(x)) out.push_back(x);
        }
    }
    out.insert(out.end(), vertices_.begin(), vertices_.end());
    return out;
}

ScalarField ScalarField::constant(double value)
{
    ScalarField f;
    f.eval = [value](const Point&) { return value; };
    f.declared_bounds = std::make_pair(value, value);
    f.constant_value = value;
    f.description = "const " + std::to_string(value);
    return f;
}

ScalarField ScalarField::affine(double a0, double a1, double a2)
{
    if (a1 == 0.0 && a2 == 0.0) return constant(a0);
    ScalarField f;
    f.eval = [a0, a1, a2](const Point& x) { return a0 + a1 * x.x() + a2 * x.y(); };
    f.description = "affine";
    return f;
}

ScalarField ScalarField::from_function(std::function<double(const Point&)> fn, std::string description)
{
    ScalarField f;
    f.eval = std::move(fn);
    f.description = std::move(description);
    return f;
}

ExponentTriple::ExponentTriple(ScalarField p, ScalarField q, ScalarField r, const PointSet& samples)
    : p_(std::move(p)), q_(std::move(q)), r_(std::move(r))
{
    require(!samples.empty(), "exponent sampling needs at least one point");
    Extremes ep, eq, er;
    for (const Point& x : samples) {
        const double pv = p_(x), qv = q_(x), rv = r_(x);
        check_finite_sample(pv, "p");
        check_finite_sample(qv, "q");
        check_finite_sample(rv, "r");
        if (!(pv > 1.0)) throw ContractError("exponent p must exceed 1 everywhere");
        if (qv < pv - kStrictSlack || rv < qv - kStrictSlack)
            throw ContractError("exponents must satisfy p <= q <= r everywhere");
        ep.add(pv);
        eq.add(qv);
        er.add(rv);
    }
    p_minus_ = ep.lo;
    p_plus_ = ep.hi;
    q_minus_ = eq.lo;
    q_plus_ = eq.hi;
    r_minus_ = er.lo;
    r_plus_ = er.hi;
}

ExponentTriple::ExponentTriple(ScalarField p, ScalarField q, ScalarField r, const Domain2D& domain, int grid)
    : ExponentTriple(std::move(p), std::move(q), std::move(r), domain.sample_grid(grid))
{
}

WeightPair::WeightPair(ScalarField mu1, ScalarField mu2, const PointSet& samples)
    : mu1_(std::move(mu1)), mu2_(std::move(mu2))
{
    require(!samples.empty(), "weight sampling needs at least one point");
    Extremes e1, e2;
    for (const Point& x : samples) {
        const double a = mu1_(x), b = mu2_(x);
        check_finite_sample(a, "mu1");
        check_finite_sample(b, "mu2");
        if (a < 0.0 || b < 0.0) throw ContractError("weights mu1, mu2 must be nonnegative");
        e1.add(a);
        e2.add(b);
    }
    inf_mu1_ = e1.lo;
    sup_mu1_ = e1.hi;
    inf_mu2_ = e2.lo;
    sup_mu2_ = e2.hi;
}

WeightPair::WeightPair(ScalarField mu1, ScalarField mu2, const Domain2D& domain, int grid)
    : WeightPair(std::move(mu1), std::move(mu2), domain.sample_grid(grid))
{
}

WeightPair WeightPair::zero()
{
    return WeightPair(ScalarField::constant(0.0), ScalarField::constant(0.0), PointSet{Point::Zero()});
}

double critical_exponent(const ScalarField& p, int N, const Point& x)
{
    const double pv = p(x);
    if (!(pv < N)) throw Error("critical exponent undefined: p(x) >= N");
    require(pv > 1.0, "critical exponent needs p(x) > 1");
    return N * pv / (N - pv);
}

HypothesisReport check_h1(const ExponentTriple& exp, const WeightPair& w, int N, const PointSet& samples)
{
    require(!samples.empty(), "check_h1 needs samples");
    HypothesisReport rep;
    rep.name = "H1";
    rep.margin = std::numeric_limits<double>::infinity();
    for (const Point& x : samples) {
        const double p = exp.p()(x), q = exp.q()(x), r = exp.r()(x);
        double slack = std::min({p - 1.0, N - p, q - p, r - q});
        if (p < N) slack = std::min(slack, N * p / (N - p) - r);
        for (double mu : {w.mu1()(x), w.mu2()(x)})
            if (mu < 0.0) slack = std::min(slack, mu);
        if (slack < rep.margin) {
            rep.margin = slack;
            rep.worst_point = x;
        }
    }
    rep.passed = rep.margin > kStrictSlack;
    if (!rep.passed && rep.margin > 0.0) rep.margin = 0.0;
    return rep;
}

HypothesisReport check_hprime(const ExponentTriple& exp, double sigma, int N, const PointSet& samples)
{
    require(sigma > 0.0 && sigma <= 1.0, "check_hprime needs 0 < sigma <= 1");
    require(!samples.empty(), "check_hprime needs samples");
    HypothesisReport rep;
    rep.name = "Hprime";
    double worst = -std::numeric_limits<double>::infinity();
    for (const Point& x : samples) {
        const double p = exp.p()(x);
        const double ratio = std::max(exp.q()(x) / p, exp.r()(x) / p);
        if (ratio > worst) {
            worst = ratio;
            rep.worst_point = x;
        }
    }
    rep.margin = 1.0 + sigma / N - worst;
    rep.passed = rep.margin > 0.0;
    return rep;
}

ConstantEstimate estimate_holder_constant(const ScalarField& f, double sigma, const PointSet& samples)
{
    require(samples.size() >= 2, "Hoelder estimate needs at least two samples");
    std::vector<double> values(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) values[i] = f(samples[i]);
    ConstantEstimate est;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t j = i + 1; j < samples.size(); ++j) {
            const double dist = (samples[i] - samples[j]).norm();
            if (dist == 0.0) continue;
            ++est.pairs;
            est.value = std::max(est.value, std::abs(values[i] - values[j]) / std::pow(dist, sigma));
        }
    }
    require(est.pairs > 0, "Hoelder estimate needs two distinct samples");
    return est;
}

ConstantEstimate check_log_holder(const ScalarField& f, const PointSet& samples)
{
    std::vector<double> values(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) values[i] = f(samples[i]);
    ConstantEstimate est;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t j = i + 1; j < samples.size(); ++j) {
            const double dist = (samples[i] - samples[j]).norm();
            if (dist == 0.0 || dist >= 0.5) continue;
            ++est.pairs;
            est.value = std::max(est.value, std::abs(values[i] - values[j]) * std::abs(std::log(dist)));
        }
    }
    if (est.pairs == 0) throw Error("no pairs with |x-y| < 1/2");
    return est;
}

double compute_r0(double p0, double sigma, int N, double holder_r, double sup_ratio_rp)
{
    require(p0 > 1.0 && holder_r > 0.0 && sigma > 0.0 && sigma <= 1.0, "compute_r0: need p0 > 1, L_r > 0, 0 < sigma <= 1");
    const double gap = 1.0 + sigma / N - sup_ratio_rp;
    if (!(gap > 0.0)) throw Error("(H') violated: sup r/p >= 1 + sigma/N");
    const double bound = p0 * gap / (std::pow(2.0, 1.0 + sigma) * holder_r);
    return std::min(1.0, std::pow(bound, 1.0 / sigma));
}

double tighten_r0(double r0, double p0, double sigma, double d, double holder_max)
{
    require(d > 0.0 && d < 1.0 && holder_max > 0.0, "tighten_r0: need 0 < d < 1 and L_max > 0");
    const double bound = (1.0 - d) / d * p0 / (std::pow(2.0, sigma) * holder_max);
    const double radius = std::pow(bound, 1.0 / sigma) * (1.0 - 1e-9);
    return std::min(r0, radius);
}

} // namespace multiphase
