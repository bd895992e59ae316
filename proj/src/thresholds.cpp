#include "slab/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace slab {

EigenTriple EigenTriple::limiting(double theta) {
    if (!(theta > 1)) throw domain_error("EigenTriple::limiting: theta must be > 1");
    return {theta + 1.0 / theta, 2.0, -2.0};
}

EigenTriple EigenTriple::from_spectrum(const Spectrum& spec) {
    return {spec.lambda1(), spec.lambda2(), spec.lambdaN()};
}

ThresholdSet compute_thresholds(const PhasePoint& phase, const EigenTriple& eig) {
    if (!(eig.lambda1 > eig.lambda2) || !(eig.lambda2 >= eig.lambdaN))
        throw domain_error("compute_thresholds: need lambda1 > lambda2 >= lambdaN");
    const double beta = phase.beta();
    const double gap = eig.lambda1 - eig.lambda2;
    if (!(beta * gap > 1))
        throw domain_error("compute_thresholds: beta*(lambda1-lambda2) must exceed 1");

    ThresholdSet t;
    t.m_e = std::sqrt(1.0 - 1.0 / (beta * gap));
    t.m_be = std::sqrt((eig.lambda1 - eig.lambdaN - 1.0 / beta) /
                       (2.0 * eig.lambda1 - eig.lambda2 - eig.lambdaN));
    t.m_pi = std::sqrt(std::max(0.0, 1.0 - 1.0 / (beta * phase.theta)));
    const double step = 0.25 * (t.m_e - t.m_be);
    t.m1 = t.m_be + step;
    t.m2 = t.m_be + 2.0 * step;
    t.m3 = t.m_be + 3.0 * step;
    t.valid = t.m_e > t.m_be;
    t.c_e = gap * (t.m_e * t.m_e - t.m3 * t.m3);
    t.kappa_be = (2.0 * eig.lambda1 - eig.lambda2 - eig.lambdaN) * t.m1 * t.m1 -
                 (eig.lambda1 - eig.lambdaN) + 1.0 / beta;
    if (t.valid) {
        const double n = static_cast<double>(phase.n);
        t.t_hit = 100.0 *
                  (0.5 * std::log(n) +
                   std::log(std::sqrt(0.5 * beta * t.c_e) * std::asin(t.m3))) /
                  t.c_e;
    } else {
        t.t_hit = std::numeric_limits<double>::quiet_NaN();
    }
    return t;
}

double theta_0H(double alpha) {
    if (!(alpha > 0) || !(alpha < 1)) throw domain_error("theta_0H: need 0 < alpha < 1");
    return 1.0 / (1.0 / std::sqrt(alpha) - 1.0);
}

namespace {
double theta_0L_rhs(double theta) {
    const double a = theta * (theta + 1.0);
    const double b = (theta - 1.0) * (theta - 1.0);
    return (a / b) * (a / b);
}
}  // namespace

double theta_0L(double alpha) {
    if (!(alpha > 1)) throw domain_error("theta_0L: need alpha > 1");
    // rhs is strictly decreasing on (1, inf) from +inf to 1.
    double lo = 1.0 + 1e-12;
    double hi = 2.0;
    while (theta_0L_rhs(hi) > alpha) hi *= 2.0;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (theta_0L_rhs(mid) > alpha)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

BumpValues bump_F(double x) {
    if (!(x > 0) || !(x < 1)) throw domain_error("bump_F: need 0 < x < 1");
    // Scaled by powers of e^{-2/x} relative to the defining expressions so
    // nothing overflows as x -> 0+.
    const double u = std::exp(-2.0 / x);
    const double c = std::exp(-2.0);
    const double d = c - u;  // positive on (0,1), -> 0 as x -> 1-
    BumpValues out;
    out.F = -u / d;
    const double x2 = x * x;
    out.F1 = -2.0 * u * c / (x2 * d * d);
    out.F2 = -4.0 * (std::exp(-4.0 - 2.0 / x) * (1.0 - x) + std::exp(-2.0 - 4.0 / x) * (1.0 + x)) /
             (x2 * x2 * d * d * d);
    return out;
}

std::optional<double> modified_hamiltonian(const Spectrum& spectrum, const ThresholdSet& thr,
                                           const SphereState& x) {
    if (!thr.valid) throw domain_error("modified_hamiltonian: thresholds not valid");
    const Observables obs = observe(spectrum, x);
    const double m = std::abs(obs.m[0]);
    if (m <= thr.m1) return std::nullopt;
    if (m >= thr.m2) return obs.H;
    return obs.H + bump_F((thr.m2 - m) / (thr.m2 - thr.m1)).F;
}

std::optional<double> log_tilde_weight(double m, const ThresholdSet& thr, double beta) {
    if (!thr.valid) throw domain_error("log_tilde_weight: thresholds not valid");
    const double a = std::abs(m);
    if (a <= thr.m1) return std::nullopt;
    if (a >= thr.m2) return 0.0;
    return beta * bump_F((thr.m2 - a) / (thr.m2 - thr.m1)).F;
}

}  // namespace slab
