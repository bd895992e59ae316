#include "slab/free_energy.hpp"

#include "slab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <vector>

namespace slab {

SemicircleFuncs semicircle_funcs(double z) {
    if (!(z > 2)) throw domain_error("semicircle_funcs: need z > 2");
    const double root = std::sqrt(z * z - 4.0);
    SemicircleFuncs f;
    f.s0 = 0.25 * z * (z - root) + std::log(z + root) - std::log(2.0) - 0.5;
    f.s1 = 0.5 * (z - root);
    f.s2 = 0.5 * (z - root) / root;
    return f;
}

double semicircle_quadrature_oracle(double z, int k) {
    if (!(z > 2)) throw domain_error("semicircle_quadrature_oracle: need z > 2");
    if (k < 0 || k > 2) throw domain_error("semicircle_quadrature_oracle: k must be 0, 1 or 2");

    // Chebyshev-U nodes: with x = 2 cos(phi), the weight sqrt(4-x^2)/(2 pi)
    // and the Jacobian combine into (2/(n+1)) sin^2(phi_i).
    auto estimate = [&](int n) {
        double acc = 0;
        for (int i = 1; i <= n; ++i) {
            const double phi = M_PI * i / (n + 1);
            const double x = 2.0 * std::cos(phi);
            const double s = std::sin(phi);
            double f;
            if (k == 0)
                f = std::log(z - x);
            else if (k == 1)
                f = 1.0 / (z - x);
            else
                f = 1.0 / ((z - x) * (z - x));
            acc += s * s * f;
        }
        return acc * 2.0 / (n + 1.0);
    };

    double prev = estimate(16);
    for (int n = 32; n <= (1 << 22); n *= 2) {
        const double cur = estimate(n);
        if (std::abs(cur - prev) <= 1e-12) return cur;
        prev = cur;
    }
    throw numerical_error("semicircle_quadrature_oracle: quadrature did not converge");
}

double f_ssk(double beta) {
    if (!(beta >= 0)) throw domain_error("f_ssk: need beta >= 0");
    if (beta < 1) return 0.25 * beta * beta;
    return beta - 0.75 - 0.5 * std::log(beta);
}

double f_spiked(const PhasePoint& phase) {
    if (!(phase.theta > 1)) throw domain_error("f_spiked: need theta > 1");
    const double a = phase.alpha;
    const double th = phase.theta;
    if (a < 1) return a * a / (4.0 * th * th);
    return (a / (2.0 * th)) * (th + 1.0 / th) - 1.0 / (4.0 * th * th) - 0.5 * std::log(a) - 0.5;
}

double f_band(double q, const PhasePoint& phase) {
    if (!(phase.theta > 1)) throw domain_error("f_band: need theta > 1");
    if (!(phase.alpha > 1)) throw domain_error("f_band: need alpha > 1");
    if (!(std::abs(q) < 1)) throw domain_error("f_band: need |q| < 1");
    const double beta = phase.beta();
    const double lam = phase.theta + 1.0 / phase.theta;
    const double q2 = q * q;
    return 0.5 * beta * lam * q2 + f_ssk(beta * (1.0 - q2)) + 0.5 * std::log1p(-q2);
}

double delta_rate(const PhasePoint& phase) {
    if (!(phase.alpha > 1)) throw domain_error("delta_rate: need alpha > 1");
    if (!(phase.theta > 1)) throw domain_error("delta_rate: need theta > 1");
    const double a = phase.alpha;
    const double th = phase.theta;
    if (a <= th)
        return 0.5 * a - (a - 1.0) * (a - 1.0) / (4.0 * th * th) - 0.5 * std::log(a) - 0.5;
    const double r = 1.0 - 1.0 / th;
    return 0.5 * a * r * r - 0.5 * std::log(th) - 1.0 / (4.0 * th * th) + 0.25;
}

namespace {

double g_prime(const VectorXd& lambdas, double beta, double z) {
    const double n = static_cast<double>(lambdas.size());
    double s = 0;
    for (Eigen::Index i = 0; i < lambdas.size(); ++i) s += 1.0 / (z - lambdas[i]);
    return beta - s / n;
}

double g_value_at(const VectorXd& lambdas, double beta, double z) {
    const double n = static_cast<double>(lambdas.size());
    double s = 0;
    for (Eigen::Index i = 0; i < lambdas.size(); ++i) s += std::log(z - lambdas[i]);
    return beta * z - s / n;
}

SaddleResult find_saddle(const VectorXd& lambdas, double beta) {
    if (!(beta > 0)) throw domain_error("saddle_and_contour: need beta > 0");
    const double lam1 = lambdas.maxCoeff();
    // G' -> -inf at lambda1+ and G'(z) >= beta - 1/(z - lambda1) > 0 for
    // z > lambda1 + 1/beta, so the root is bracketed.
    double lo = lam1 + 1e-14 * std::max(1.0, std::abs(lam1));
    double hi = lam1 + 1.0 / beta + 1.0;
    if (!(g_prime(lambdas, beta, hi) > 0))
        throw numerical_error("saddle_and_contour: saddle bracket failed; increase N or beta");
    while (!(g_prime(lambdas, beta, lo) < 0)) {
        lo = lam1 + 0.5 * (lo - lam1);
        if (lo - lam1 < 1e-300)
            throw numerical_error("saddle_and_contour: saddle bracket degenerate");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g_prime(lambdas, beta, mid) < 0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-15 * std::max(1.0, std::abs(hi))) break;
    }
    SaddleResult out;
    out.gamma = 0.5 * (lo + hi);
    out.g_value = g_value_at(lambdas, beta, out.gamma);
    out.newton_residual = std::abs(g_prime(lambdas, beta, out.gamma));
    return out;
}

// log of int_-inf^inf e^{(N/2)(G(gamma+iu)-G(gamma))} du.
//
// With d_i = gamma - lambda_i and the saddle identity sum_i 1/d_i = N beta,
// the complex log-integrand is
//   L(u) = i (N/2) beta u - (1/2) sum_i log(1 + i u / d_i),
// whose modulus prod_i (1+u^2/d_i^2)^{-1/4} is even and decreasing in |u| but
// whose phase keeps rotating at rate ~ 1/(2 d_1) long after the modulus lobe.
// Each segment therefore uses the exponential-fit rule
//   int e^L du ~= (e^{L2} - e^{L1}) / ((L2 - L1)/du),
// exact for linear L, with the step size adapted to the curvature
//   L''(u) = -(1/2) sum_i (d_i + iu)^{-2}
// so that the central lobe carries >= 200 nodes; truncation once the modulus
// falls below 1e-16 of the peak.
double log_contour_integral(const VectorXd& lambdas, double beta, double gamma) {
    using cd = std::complex<double>;
    const Eigen::Index n = lambdas.size();
    VectorXd d(n);
    for (Eigen::Index i = 0; i < n; ++i) d[i] = gamma - lambdas[i];
    const double d_min = d.minCoeff();

    auto log_integrand = [&](double u, double& curvature) -> cd {
        double re = 0, im = 0, curv = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double w = u / d[i];
            re += std::log1p(w * w);
            im += std::atan(w);
            curv += 1.0 / (d[i] * d[i] + u * u);
        }
        curvature = 0.5 * curv;
        return
            cd(-0.25 * re, 0.5 * (static_cast<double>(n) * beta * u - im));
    };

    const double log_cut = std::log(1e-16);
    const std::int64_t max_nodes = 50000000;
    double curv0 = 0;
    cd l_prev = log_integrand(0.0, curv0);
    double u_prev = 0;
    cd acc(0, 0);
    std::int64_t nodes = 0;
    for (; nodes < max_nodes; ++nodes) {
        double step = 0.004 / std::sqrt(curv0);
        step = std::max(step, 1e-3 * d_min);
        const double u = u_prev + step;
        const cd l_cur = log_integrand(u, curv0);
        const cd c1 = (l_cur - l_prev) / step;
        if (std::abs(c1) * step > 1e-8)
            acc += (std::exp(l_cur) - std::exp(l_prev)) / c1;
        else
            acc += 0.5 * step * (std::exp(l_cur) + std::exp(l_prev));
        u_prev = u;
        l_prev = l_cur;
        if (l_cur.real() < log_cut) break;
    }
    if (nodes >= max_nodes)
        throw numerical_error("saddle_and_contour: contour quadrature did not converge");
    const double integral = 2.0 * acc.real();
    if (!(integral > 0))
        throw numerical_error("saddle_and_contour: contour quadrature lost positivity");
    return std::log(integral);
}

}  // namespace

ContourResult saddle_and_contour(const VectorXd& lambdas, double beta) {
    if (lambdas.size() < 2) throw domain_error("saddle_and_contour: need at least 2 eigenvalues");
    ContourResult out;
    out.saddle = find_saddle(lambdas, beta);
    const double n = static_cast<double>(lambdas.size());
    // (1/N) log C_N with C_N = Gamma(N/2) / (2 pi (N beta / 2)^{N/2 - 1});
    // the i in the usual prefactor is absorbed by dz = i du.
    const double log_cn =
        (std::lgamma(0.5 * n) - std::log(2.0 * M_PI) - (0.5 * n - 1.0) * std::log(0.5 * n * beta)) /
        n;
    out.log_z_saddle = log_cn + 0.5 * out.saddle.g_value;
    out.log_z = out.log_z_saddle + log_contour_integral(lambdas, beta, out.saddle.gamma) / n;
    return out;
}

namespace {

// Barycentric Chebyshev interpolant of an analytic 1-d function; used to
// avoid one contour evaluation per marginal grid point (the orthogonal-sphere
// log-partition is analytic in the effective inverse temperature).
class ChebInterp {
  public:
    template <typename F>
    ChebInterp(double a, double b, int k, F&& f) : x_(k), y_(k) {
        for (int j = 0; j < k; ++j) {
            const double t = std::cos(M_PI * j / (k - 1));
            x_[j] = 0.5 * (a + b) + 0.5 * (b - a) * t;
            y_[j] = f(x_[j]);
        }
    }

    double operator()(double x) const {
        const int k = static_cast<int>(x_.size());
        double num = 0, den = 0;
        for (int j = 0; j < k; ++j) {
            const double dx = x - x_[j];
            if (dx == 0) return y_[j];
            double w = (j % 2 == 0) ? 1.0 : -1.0;
            if (j == 0 || j == k - 1) w *= 0.5;
            const double r = w / dx;
            num += r * y_[j];
            den += r;
        }
        return num / den;
    }

  private:
    VectorXd x_, y_;
};

}  // namespace

VectorXd exact_m_marginal(const VectorXd& lambdas, double beta, const VectorXd& m_grid) {
    const Eigen::Index n_all = lambdas.size();
    if (n_all < 4) throw domain_error("exact_m_marginal: need N >= 4");
    if (!(beta >= 0)) throw domain_error("exact_m_marginal: need beta >= 0");
    const double n = static_cast<double>(n_all);
    const VectorXd rest = lambdas.tail(n_all - 1);
    const double lam1 = lambdas[0];

    double bmin = std::numeric_limits<double>::infinity(), bmax = 0;
    for (Eigen::Index i = 0; i < m_grid.size(); ++i) {
        if (!(std::abs(m_grid[i]) < 1))
            throw domain_error("exact_m_marginal: grid must lie in (-1,1)");
        const double b = beta * (1.0 - m_grid[i] * m_grid[i]) * n / (n - 1.0);
        bmin = std::min(bmin, b);
        bmax = std::max(bmax, b);
    }

    auto log_z_perp = [&](double b) { return (n - 1.0) * saddle_and_contour(rest, b).log_z; };
    constexpr int kKnots = 129;
    const bool interpolate =
        beta > 0 && m_grid.size() > 2 * kKnots && bmax - bmin > 1e-8 * std::max(1.0, bmax);
    std::unique_ptr<ChebInterp> fit;
    if (interpolate) fit = std::make_unique<ChebInterp>(bmin, bmax, kKnots, log_z_perp);

    VectorXd logrho(m_grid.size());
    for (Eigen::Index i = 0; i < m_grid.size(); ++i) {
        const double m = m_grid[i];
        const double om2 = 1.0 - m * m;
        double lr = 0.5 * (n - 3.0) * std::log(om2) + 0.5 * beta * n * lam1 * m * m;
        if (beta > 0) {
            const double beta_eff = beta * om2 * n / (n - 1.0);
            lr += interpolate ? (*fit)(beta_eff) : log_z_perp(beta_eff);
        }
        logrho[i] = lr;
    }

    const double shift = logrho.maxCoeff();
    VectorXd rho = (logrho.array() - shift).exp().matrix();
    // trapezoid normalization on the supplied grid
    double z = 0;
    for (Eigen::Index i = 0; i + 1 < m_grid.size(); ++i)
        z += 0.5 * (rho[i] + rho[i + 1]) * (m_grid[i + 1] - m_grid[i]);
    if (!(z > 0)) throw numerical_error("exact_m_marginal: normalization failed");
    return rho / z;
}

VectorXd exact_m_marginal_modified(const VectorXd& lambdas, double beta, const VectorXd& m_grid,
                                   const ThresholdSet& thr) {
    VectorXd rho = exact_m_marginal(lambdas, beta, m_grid);
    for (Eigen::Index i = 0; i < m_grid.size(); ++i) {
        const auto lw = log_tilde_weight(m_grid[i], thr, beta);
        rho[i] = lw ? rho[i] * std::exp(*lw) : 0.0;
    }
    double z = 0;
    for (Eigen::Index i = 0; i + 1 < m_grid.size(); ++i)
        z += 0.5 * (rho[i] + rho[i + 1]) * (m_grid[i + 1] - m_grid[i]);
    if (!(z > 0)) throw numerical_error("exact_m_marginal_modified: normalization failed");
    return rho / z;
}

OverlapPrediction stationary_overlap_prediction(const PhasePoint& phase) {
    const double bt = phase.beta() * phase.theta;
    if (!(bt > 1)) throw domain_error("stationary_overlap_prediction: need beta*theta > 1");
    OverlapPrediction out;
    out.mean_r = 1.0 - 1.0 / bt;
    const double s2 = semicircle_funcs(phase.theta + 1.0 / phase.theta).s2;
    out.var_r = 2.0 * s2 / (phase.beta() * phase.beta() * static_cast<double>(phase.n));
    return out;
}

MonteCarloLogZ mc_log_partition(const VectorXd& lambdas, double beta, std::int64_t samples,
                                std::uint64_t seed) {
    if (samples < 2) throw domain_error("mc_log_partition: need at least 2 samples");
    const Eigen::Index n = lambdas.size();
    GaussianStream g(derive_seed(seed, {7}));
    // Online log-sum-exp of w_b = e^{beta H_b} plus sum of squares for the
    // delta-method standard error.
    double max_lw = -std::numeric_limits<double>::infinity();
    double sum_w = 0, sum_w2 = 0;
    VectorXd x(n);
    for (std::int64_t b = 0; b < samples; ++b) {
        g.fill(x);
        const double r2 = x.squaredNorm();
        const double h = lambdas.cwiseProduct(x.cwiseAbs2()).sum() / r2;  // already scale-free
        const double lw = 0.5 * beta * static_cast<double>(n) * h;
        if (lw > max_lw) {
            const double f = std::exp(max_lw - lw);
            sum_w *= f;
            sum_w2 *= f * f;
            max_lw = lw;
        }
        const double w = std::exp(lw - max_lw);
        sum_w += w;
        sum_w2 += w * w;
    }
    const double b = static_cast<double>(samples);
    const double mean_w = sum_w / b;
    const double var_w = std::max(0.0, sum_w2 / b - mean_w * mean_w) * b / (b - 1.0);
    MonteCarloLogZ out;
    out.value = (max_lw + std::log(mean_w)) / static_cast<double>(n);
    out.stderr_ = std::sqrt(var_w / b) / (mean_w * static_cast<double>(n));
    return out;
}

double density_tv(const VectorXd& grid, const VectorXd& rho_a, const VectorXd& rho_b) {
    double tv = 0;
    for (Eigen::Index i = 0; i + 1 < grid.size(); ++i) {
        const double da = std::abs(rho_a[i] - rho_b[i]);
        const double db = std::abs(rho_a[i + 1] - rho_b[i + 1]);
        tv += 0.25 * (da + db) * (grid[i + 1] - grid[i]);
    }
    return tv;
}

}  // namespace slab
