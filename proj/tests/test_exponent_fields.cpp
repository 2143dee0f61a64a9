#include "support.hpp"

#include "multiphase/expression.hpp"

#include <doctest.h>

#include <random>

using namespace mptest;
using doctest::Approx;

TEST_CASE("expression grammar")
{
    CHECK(Expression::parse("1 + 2*3")(0, 0) == 7.0);
    CHECK(Expression::parse("2^3^2")(0, 0) == 512.0);
    CHECK(Expression::parse("-2^2")(0, 0) == -4.0);
    CHECK(Expression::parse("max(x1, x2) - min(x1, x2)")(0.25, 1.0) == 0.75);
    CHECK(Expression::parse("sin(pi*x1)")(0.5, 0.0) == Approx(1.0).epsilon(1e-15));
    CHECK(Expression::parse("abs(x2) + exp(0) + cos(0)")(0.0, -3.0) == 5.0);
    const Expression e = Expression::parse("x1 + t*z2");
    CHECK(e.evaluate({1.0, 0.0, 2.0, 0.0, 3.0}) == 7.0);
    CHECK(e.uses(Variable::t));
    CHECK(e.uses(Variable::z2));
    CHECK_FALSE(e.uses(Variable::z1));
    CHECK_THROWS_AS(Expression::parse("1 +"), ContractError);
    CHECK_THROWS_AS(Expression::parse("foo(1)"), ContractError);
    CHECK_THROWS_AS(Expression::parse("(1"), ContractError);
}

TEST_CASE("domain geometry")
{
    const Domain2D sq = Domain2D::unit_square();
    CHECK(sq.area() == Approx(1.0));
    CHECK(sq.contains(Point(0.5, 0.5)));
    CHECK_FALSE(sq.contains(Point(1.5, 0.5)));
    CHECK(sq.distance_to_boundary(Point(0.25, 0.5)) == Approx(0.25));
    CHECK(sq.is_axis_rectangle());
    CHECK_THROWS(Domain2D(PointSet{Point(0, 0), Point(1, 0), Point(2, 0)}));
    const Domain2D tri(PointSet{Point(0, 0), Point(1, 0), Point(0, 1)});
    CHECK(tri.area() == Approx(0.5));
    CHECK_FALSE(tri.is_axis_rectangle());
}

TEST_CASE("critical exponent")
{
    CHECK(critical_exponent(field(2.0), 4, Point(0, 0)) == Approx(4.0));
    CHECK(critical_exponent(field(1.5), 2, Point(0, 0)) == Approx(6.0));
    CHECK_THROWS_AS(critical_exponent(field(2.0), 2, Point(0, 0)), Error);
}

TEST_CASE("check_h1")
{
    const PointSet samples = Domain2D::unit_square().sample_grid(64);
    SUBCASE("constant exponents, margin from r < p*")
    {
        const ExponentTriple exp(field(1.5), field(1.7), field(2.0), samples);
        const HypothesisReport rep = check_h1(exp, WeightPair::zero(), 2, samples);
        CHECK(rep.passed);
        // slacks: p-1 = 0.5, N-p = 0.5, q-p = 0.2, r-q = 0.3, p*-r = 4
        CHECK(rep.margin == Approx(0.2));
    }
    SUBCASE("equal exponents fail")
    {
        const ExponentTriple exp(field(2.0), field(2.0), field(2.0), samples);
        const HypothesisReport rep = check_h1(exp, WeightPair::zero(), 3, samples);
        CHECK_FALSE(rep.passed);
        CHECK(rep.margin <= 0.0);
    }
    SUBCASE("affine exponents")
    {
        auto p = [](const Point& x) { return 1.5 + 0.2 * x.x(); };
        const ExponentTriple exp(field(p), field([p](const Point& x) { return p(x) + 0.1; }),
                                 field([p](const Point& x) { return p(x) + 0.2; }), samples);
        const HypothesisReport rep = check_h1(exp, WeightPair::zero(), 2, samples);
        CHECK(rep.passed);
        CHECK(rep.margin == Approx(0.1));
    }
    SUBCASE("p = N fails")
    {
        const ExponentTriple exp(field(2.0), field(2.1), field(2.2), samples);
        CHECK_FALSE(check_h1(exp, WeightPair::zero(), 2, samples).passed);
    }
    SUBCASE("negative weight fails")
    {
        const ExponentTriple exp(field(1.5), field(1.7), field(2.0), samples);
        PointSet right;
        for (const Point& x : samples)
            if (x.x() >= 0.5) right.push_back(x);
        const WeightPair w(field([](const Point& x) { return x.x() - 0.5; }), field(0.0), right);
        const HypothesisReport rep = check_h1(exp, w, 2, samples);
        CHECK_FALSE(rep.passed);
        CHECK(rep.margin == Approx(-0.5));
        CHECK(rep.worst_point.x() == Approx(0.0));
    }
}

TEST_CASE("check_hprime")
{
    const PointSet samples = Domain2D::unit_square().sample_grid(16);
    const ExponentTriple a(field(2.0), field(2.2), field(2.4), samples);
    HypothesisReport rep = check_hprime(a, 1.0, 2, samples);
    CHECK(rep.passed);
    CHECK(rep.margin == Approx(0.3));
    const ExponentTriple b(field(2.0), field(2.0), field(3.2), samples);
    CHECK_FALSE(check_hprime(b, 1.0, 2, samples).passed);
    const ExponentTriple c(field(2.0), field(2.0), field(2.0 + 1e-9), samples);
    rep = check_hprime(c, 0.5, 2, samples);
    CHECK(rep.passed);
    CHECK(rep.margin == Approx(0.25).epsilon(1e-8));
    CHECK_THROWS_AS(check_hprime(a, 0.0, 2, samples), ContractError);
}

TEST_CASE("hprime with bound 2 passes when q, r < 2p")
{
    const PointSet samples = Domain2D::unit_square().sample_grid(16);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int k = 0; k < 20; ++k) {
        const double p = 1.1 + U(rng), q = p * (1.0 + 0.9 * U(rng)), r = q + (2.0 * p - q) * 0.99 * U(rng);
        const ExponentTriple exp(field(p), field(q), field(r), samples);
        // sigma / N = 1 gives the bound 1 + sigma / N = 2
        CHECK(check_hprime(exp, 1.0, 1, samples).passed);
    }
}

TEST_CASE("holder constants")
{
    const PointSet grid = Domain2D::unit_square().sample_grid(16);
    CHECK(estimate_holder_constant(field(3.0), 1.0, grid).value == 0.0);
    CHECK(estimate_holder_constant(field([](const Point& x) { return 2.0 + 0.1 * x.x(); }), 1.0, grid).value ==
          Approx(0.1));

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    PointSet random;
    for (int i = 0; i < 46; ++i) random.emplace_back(U(rng), U(rng));
    const double sinc = estimate_holder_constant(field([](const Point& x) { return std::sin(x.x()); }), 1.0, random).value;
    CHECK(sinc <= 1.0);
    CHECK(sinc >= 0.9);

    SUBCASE("monotone in the sample set")
    {
        auto f = field([](const Point& x) { return std::sin(3 * x.x()) * x.y(); });
        PointSet growing;
        double last = 0.0;
        for (int i = 0; i < 60; ++i) {
            growing.emplace_back(U(rng), U(rng));
            if (growing.size() < 2) continue;
            const double v = estimate_holder_constant(f, 0.7, growing).value;
            CHECK(v >= last);
            last = v;
        }
    }
}

TEST_CASE("log-Hoelder constant")
{
    const PointSet two{Point(0.0, 0.0), Point(0.1, 0.0)};
    CHECK(check_log_holder(field(1.0), two).value == 0.0);
    const double d0 = check_log_holder(field([](const Point& x) { return x.x(); }), two).value;
    CHECK(d0 == Approx(0.1 * std::abs(std::log(0.1))));
    CHECK(d0 == Approx(0.230).epsilon(1e-3));
    CHECK_THROWS_AS(check_log_holder(field(1.0), PointSet{Point(0, 0), Point(0.6, 0)}), Error);
}

TEST_CASE("R0 bounds")
{
    CHECK(compute_r0(1.5, 1.0, 2, 1.0, 1.2) == Approx(0.1125));
    CHECK(compute_r0(1.5, 1.0, 2, 1e3, 1.2) == Approx(1.125e-4));
    CHECK(compute_r0(1.5, 1.0, 2, 1e-6, 1.2) == 1.0);
    CHECK_THROWS_AS(compute_r0(1.5, 1.0, 2, 1.0, 1.5), Error);
    CHECK(tighten_r0(0.1125, 1.5, 1.0, 0.5, 1.0) == Approx(0.1125));
    CHECK(tighten_r0(0.1125, 1.5, 1.0, 0.99, 1.0) == Approx(0.01 / 0.99 * 1.5 / 2.0).epsilon(1e-8));
    CHECK(tighten_r0(0.1125, 1.5, 1.0, 0.99, 1.0) < 0.01 / 0.99 * 0.75);

    SUBCASE("nonincreasing in L_r and in the ratio, inside (0, 1]")
    {
        double last = 2.0;
        for (double L : {1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0}) {
            const double r0 = compute_r0(1.7, 0.5, 2, L, 1.1);
            CHECK(r0 > 0.0);
            CHECK(r0 <= 1.0);
            CHECK(r0 <= last);
            last = r0;
        }
        last = 2.0;
        for (double s : {1.0, 1.05, 1.1, 1.2, 1.24}) {
            const double r0 = compute_r0(1.7, 0.5, 2, 3.0, s);
            CHECK(r0 <= last);
            last = r0;
        }
    }
}

TEST_CASE("cached extremes bracket fresh samples")
{
    const Domain2D dom = Domain2D::unit_square();
    const ExponentTriple exp(field([](const Point& x) { return 1.5 + 0.3 * std::sin(5 * x.x()) * x.y(); }),
                             field([](const Point& x) { return 2.0 + 0.2 * x.x() * x.x(); }),
                             field([](const Point& x) { return 2.5 + 0.1 * std::cos(4 * x.y()); }), dom, 128);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double slack = 1e-3;
    for (int i = 0; i < 10000; ++i) {
        const Point x(U(rng), U(rng));
        CHECK_LE(exp.p()(x), exp.p_plus() + slack);
        CHECK_GE(exp.p()(x), exp.p_minus() - slack);
        CHECK_LE(exp.r()(x), exp.r_plus() + slack);
        CHECK_GE(exp.q()(x), exp.q_minus() - slack);
    }
}

TEST_CASE("affine extremes are exact")
{
    const Domain2D dom = Domain2D::unit_square();
    const ExponentTriple exp(ScalarField::affine(1.5, 0.2, -0.1), ScalarField::affine(1.9, 0.0, 0.3),
                             ScalarField::affine(2.5, 0.1, 0.1), dom, 128);
    CHECK(exp.p_minus() == Approx(1.4));
    CHECK(exp.p_plus() == Approx(1.7));
    CHECK(exp.r_plus() == Approx(2.7));
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
        const Point x(U(rng), U(rng));
        CHECK_LE(exp.p()(x), exp.p_plus());
        CHECK_GE(exp.p()(x), exp.p_minus());
        CHECK_LE(exp.q()(x), exp.q_plus());
        CHECK_GE(exp.q()(x), exp.q_minus());
        CHECK_LE(exp.r()(x), exp.r_plus());
        CHECK_GE(exp.r()(x), exp.r_minus());
    }
}

TEST_CASE("exponent ordering is enforced")
{
    const PointSet samples = Domain2D::unit_square().sample_grid(8);
    CHECK_THROWS(ExponentTriple(field(2.0), field(1.5), field(3.0), samples));
    CHECK_THROWS(ExponentTriple(field(0.9), field(1.5), field(3.0), samples));
    CHECK_THROWS(WeightPair(field(-1.0), field(0.0), samples));
}
