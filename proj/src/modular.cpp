#include "multiphase/modular.hpp"

#include <algorithm>
#include <random>

namespace multiphase {

double t_value(const PhaseFunction& tf, const Point& x, double t)
{
    require(t >= 0.0, "T(x, t) needs t >= 0");
    return phase_value(t, tf.exp.p()(x), tf.exp.q()(x), tf.exp.r()(x), tf.w.mu1()(x), tf.w.mu2()(x));
}

PhaseSamples sample_phase(const PhaseFunction& tf, const QuadratureMeasure& quad)
{
    const Index n = static_cast<Index>(quad.size());
    PhaseSamples s;
    s.p.resize(n);
    s.q.resize(n);
    s.r.resize(n);
    s.mu1.resize(n);
    s.mu2.resize(n);
    auto fill = [&](const ScalarField& f, Eigen::VectorXd& out) {
        if (f.constant_value) {
            out.setConstant(*f.constant_value);
            return;
        }
        for (Index k = 0; k < n; ++k) out[k] = f(quad.points[static_cast<std::size_t>(k)].x);
    };
    fill(tf.exp.p(), s.p);
    fill(tf.exp.q(), s.q);
    fill(tf.exp.r(), s.r);
    fill(tf.w.mu1(), s.mu1);
    fill(tf.w.mu2(), s.mu2);
    s.p_minus = tf.exp.p_minus();
    s.r_plus = tf.exp.r_plus();
    if (n > 0) {
        s.p_minus = std::min(s.p_minus, s.p.minCoeff());
        s.r_plus = std::max(s.r_plus, s.r.maxCoeff());
    }
    return s;
}

double modular(const PhaseSamples& phase, const QuadratureMeasure& quad, const Eigen::VectorXd& values, double scale)
{
    require(values.size() == static_cast<Index>(quad.size()), "modular: one value per quadrature point required");
    CompensatedSum sum;
    for (Index k = 0; k < values.size(); ++k) {
        const double t = scale * std::abs(values[k]);
        if (!std::isfinite(t)) throw Error("non-finite integrand");
        if (t == 0.0) continue;
        const double v = phase_value(t, phase.p[k], phase.q[k], phase.r[k], phase.mu1[k], phase.mu2[k]);
        if (!std::isfinite(v)) throw Error("non-finite integrand");
        sum += quad.points[static_cast<std::size_t>(k)].weight * v;
    }
    return sum.value();
}

double modular(const PhaseFunction& tf, const Eigen::VectorXd& values, const QuadratureMeasure& quad)
{
    return modular(sample_phase(tf, quad), quad, values);
}

ModularReport luxemburg_search(const std::function<double(double)>& modular_of_scaled, double e_min, double e_max,
                               double rel_tol)
{
    require(rel_tol > 0.0, "Luxemburg norm needs rel_tol > 0");
    require(e_min > 0.0 && e_max >= e_min, "Luxemburg norm needs 0 < e_min <= e_max");
    ModularReport rep;
    const double rho = modular_of_scaled(1.0);
    rep.modular_value = rho;
    if (!std::isfinite(rho)) throw Error("non-finite integrand");
    if (rho == 0.0) return rep;

    double lo = std::min(std::pow(rho, 1.0 / e_min), std::pow(rho, 1.0 / e_max));
    double hi = std::max(std::pow(rho, 1.0 / e_min), std::pow(rho, 1.0 / e_max));
    int doublings = 0;
    while (modular_of_scaled(1.0 / lo) < 1.0) {
        lo *= 0.5;
        if (++doublings > 200) throw Error("norm bracket failure");
    }
    while (modular_of_scaled(1.0 / hi) > 1.0) {
        hi *= 2.0;
        if (++doublings > 200) throw Error("norm bracket failure");
    }

    double mid = 0.5 * (lo + hi);
    for (;;) {
        mid = 0.5 * (lo + hi);
        const double val = modular_of_scaled(1.0 / mid);
        ++rep.iterations;
        if (val == 1.0) {
            lo = hi = mid;
            break;
        }
        if (val > 1.0)
            lo = mid;
        else
            hi = mid;
        const bool narrow = hi - lo <= rel_tol * mid;
        if ((narrow && std::abs(val - 1.0) <= rel_tol) || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * mid ||
            rep.iterations > 2000)
            break;
    }
    rep.luxemburg_norm = mid;
    rep.bracket = {lo, hi};
    return rep;
}

ModularReport luxemburg_norm(const PhaseSamples& phase, const QuadratureMeasure& quad, const Eigen::VectorXd& values,
                             double rel_tol)
{
    return luxemburg_search([&](double beta) { return modular(phase, quad, values, beta); }, phase.p_minus,
                            phase.r_plus, rel_tol);
}

ModularReport luxemburg_norm(const PhaseFunction& tf, const Eigen::VectorXd& values, const QuadratureMeasure& quad,
                             double rel_tol)
{
    return luxemburg_norm(sample_phase(tf, quad), quad, values, rel_tol);
}

double weighted_seminorm(const ScalarField& exponent, const ScalarField& weight, const Eigen::VectorXd& values,
                         const QuadratureMeasure& quad, double rel_tol)
{
    require(values.size() == static_cast<Index>(quad.size()), "seminorm: one value per quadrature point required");
    const Index n = values.size();
    Eigen::VectorXd e(n), w(n);
    for (Index k = 0; k < n; ++k) {
        const Point& x = quad.points[static_cast<std::size_t>(k)].x;
        e[k] = exponent(x);
        w[k] = weight(x);
        require(w[k] >= 0.0, "seminorm weight must be nonnegative");
    }
    if (n == 0) return 0.0;
    auto rho = [&](double beta) {
        CompensatedSum sum;
        for (Index k = 0; k < n; ++k) {
            if (w[k] == 0.0 || values[k] == 0.0) continue;
            const double v = w[k] * std::pow(beta * std::abs(values[k]), e[k]);
            if (!std::isfinite(v)) throw Error("non-finite integrand");
            sum += quad.points[static_cast<std::size_t>(k)].weight * v;
        }
        return sum.value();
    };
    return luxemburg_search(rho, e.minCoeff(), e.maxCoeff(), rel_tol).luxemburg_norm;
}

void PropertyReport::add(std::string label, double slack, double tolerance)
{
    worst_slack = std::min(worst_slack, slack);
    if (!(slack >= -tolerance)) passed = false;
    items.push_back({std::move(label), slack});
}

std::vector<PhaseSample> log_uniform_samples(const Domain2D& domain, std::size_t count, std::uint64_t seed,
                                             double t_min, double t_max)
{
    require(t_min > 0 && t_max > t_min, "log-uniform sampling needs 0 < t_min < t_max");
    std::mt19937_64 rng(seed);
    const auto [lo, hi] = domain.bounding_box();
    std::uniform_real_distribution<double> ux(lo.x(), hi.x()), uy(lo.y(), hi.y());
    std::uniform_real_distribution<double> ul(std::log(t_min), std::log(t_max));
    std::vector<PhaseSample> out;
    out.reserve(count);
    while (out.size() < count) {
        const Point x(ux(rng), uy(rng));
        if (!domain.contains(x)) continue;
        const double t = std::exp(ul(rng));
        const double s = std::exp(ul(rng));
        out.push_back({x, t, s});
    }
    return out;
}

namespace {

double relative(double slack, double scale) { return slack / std::max(1.0, std::abs(scale)); }

} // namespace

PropertyReport check_norm_modular_relations(const PhaseFunction& tf, const Eigen::VectorXd& values,
                                            const QuadratureMeasure& quad, double tolerance)
{
    PropertyReport rep;
    rep.name = "norm-modular";
    const PhaseSamples phase = sample_phase(tf, quad);
    const double pm = phase.p_minus, rp = phase.r_plus;
    const ModularReport nr = luxemburg_norm(phase, quad, values);
    const double norm = nr.luxemburg_norm;
    const double rho = nr.modular_value;
    rep.measured = norm;
    auto rho_at = [&](double beta) { return modular(phase, quad, values, beta); };

    if (norm == 0.0) {
        for (const char* label : {"i", "ii", "iii", "iv", "v", "vi", "vii", "viii"}) rep.add(label, 0.0, tolerance);
        rep.add("zero-consistency", -std::abs(rho), tolerance);
        return rep;
    }

    rep.add("i", kNormTolerance - std::abs(rho_at(1.0 / norm) - 1.0), tolerance);
    rep.add("ii", (norm - 1.0) * (rho - 1.0), tolerance);

    auto power_slack = [&](double n, double r) {
        if (n < 1.0) return relative(std::min(r - std::pow(n, rp), std::pow(n, pm) - r), std::pow(n, pm));
        if (n > 1.0) return relative(std::min(r - std::pow(n, pm), std::pow(n, rp) - r), std::pow(n, rp));
        return -std::abs(r - 1.0);
    };
    rep.add("iii", norm < 1.0 ? power_slack(norm, rho) : 0.0, tolerance);
    rep.add("iv", norm > 1.0 ? power_slack(norm, rho) : 0.0, tolerance);

    // Along beta u with ||beta u|| = beta ||u||, the power bounds force joint convergence.
    double to_zero = std::numeric_limits<double>::infinity();
    double to_infinity = std::numeric_limits<double>::infinity();
    double to_one = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 30; ++k) {
        const double small = std::ldexp(1.0, -k);
        to_zero = std::min(to_zero, power_slack(small, rho_at(small / norm)));
        const double large = std::ldexp(1.0, std::min(k, 12));
        to_infinity = std::min(to_infinity, power_slack(large, rho_at(large / norm)));
        for (double n : {1.0 - small, 1.0 + small}) {
            const double r = rho_at(n / norm);
            const double bound = std::max(std::abs(std::pow(n, pm) - 1.0), std::abs(std::pow(n, rp) - 1.0));
            to_one = std::min(to_one, bound + kNormTolerance * rp - std::abs(r - 1.0));
        }
    }
    rep.add("v", to_zero, tolerance);
    rep.add("vi", to_infinity, tolerance);
    rep.add("vii", to_one, tolerance);

    // eps -> rho(u + eps v) is convex, so |rho(u + eps v) - rho(u)| <= eps max(|f(1) - f(0)|, |f(0) - f(-1)|).
    const Eigen::VectorXd v = (values.array().abs() + 1.0).matrix();
    const double f_plus = modular(phase, quad, values + v);
    const double f_minus = modular(phase, quad, values - v);
    const double lipschitz = std::max(std::abs(f_plus - rho), std::abs(rho - f_minus));
    double continuity = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 30; ++k) {
        const double eps = std::ldexp(1.0, -k);
        const double f = modular(phase, quad, values + eps * v);
        continuity = std::min(continuity, relative(eps * lipschitz - std::abs(f - rho), rho));
    }
    rep.add("viii", continuity, tolerance);
    return rep;
}

PropertyReport check_delta2(const PhaseFunction& tf, const std::vector<PhaseSample>& samples)
{
    PropertyReport rep;
    rep.name = "delta2";
    double r_plus = tf.exp.r_plus();
    for (const auto& s : samples) r_plus = std::max(r_plus, tf.exp.r()(s.x));
    rep.bound = std::pow(2.0, r_plus);
    for (const auto& s : samples) {
        require(s.t > 0.0, "delta2 samples need t > 0");
        const double ratio = t_value(tf, s.x, 2.0 * s.t) / t_value(tf, s.x, s.t);
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        ++rep.samples;
    }
    rep.add("T(2t) <= 2^{r+} T(t)", (rep.bound - rep.max_ratio) / rep.bound, 1e-12);
    return rep;
}

PropertyReport check_subadditivity(const PhaseFunction& tf, const std::vector<PhaseSample>& samples)
{
    PropertyReport rep;
    rep.name = "subadditivity";
    double r_plus = tf.exp.r_plus();
    for (const auto& s : samples) r_plus = std::max(r_plus, tf.exp.r()(s.x));
    rep.bound = std::pow(2.0, r_plus);
    for (const auto& s : samples) {
        require(s.t >= 0.0 && s.s >= 0.0, "subadditivity samples need t, s >= 0");
        const double denom = t_value(tf, s.x, s.t) + t_value(tf, s.x, s.s);
        if (denom == 0.0) continue;
        rep.max_ratio = std::max(rep.max_ratio, t_value(tf, s.x, s.t + s.s) / denom);
        ++rep.samples;
    }
    rep.add("T(t+s) <= C_delta (T(t) + T(s))", (rep.bound - rep.max_ratio) / rep.bound, 1e-12);
    return rep;
}

PropertyReport check_uniform_convexity(const PhaseFunction& tf, double eps, const std::vector<PhaseSample>& samples)
{
    require(eps > 0.0, "uniform convexity needs eps > 0");
    PropertyReport rep;
    rep.name = "uniform-convexity";
    double eta = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
        if (!(std::abs(s.t - s.s) > eps * std::max(s.t, s.s))) continue;
        const double mid = t_value(tf, s.x, 0.5 * (s.t + s.s));
        const double ends = t_value(tf, s.x, s.t) + t_value(tf, s.x, s.s);
        eta = std::min(eta, 1.0 - 2.0 * mid / ends);
        ++rep.samples;
    }
    if (rep.samples == 0) throw Error("uniform convexity: no samples with |t - s| > eps max(t, s)");
    rep.measured = eta;
    rep.passed = eta > 0.0;
    rep.items.push_back({"eta_hat > 0", eta});
    rep.worst_slack = eta;
    return rep;
}

PropertyReport check_seminorm_domination(const PhaseFunction& tf, const Eigen::VectorXd& values,
                                         const QuadratureMeasure& quad)
{
    PropertyReport rep;
    rep.name = "seminorm-domination";
    const double norm = luxemburg_norm(tf, values, quad).luxemburg_norm;
    const double semi_q = weighted_seminorm(tf.exp.q(), tf.w.mu1(), values, quad);
    const double semi_r = weighted_seminorm(tf.exp.r(), tf.w.mu2(), values, quad);
    rep.measured = norm;
    rep.add("||u||_{q,mu1} <= ||u||_T", norm - semi_q, 1e-8);
    rep.add("||u||_{r,mu2} <= ||u||_T", norm - semi_r, 1e-8);
    return rep;
}

} // namespace multiphase
