#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "slab/free_energy.hpp"
#include "slab/matrix_model.hpp"
#include "slab/thresholds.hpp"

#include <cmath>
#include <complex>

using namespace slab;

TEST_CASE("semicircle functions against the quadrature oracle") {
    for (double z : {2.1, 2.5, 3.0, 4.0, 6.0}) {
        const auto f = semicircle_funcs(z);
        CHECK(f.s0 == doctest::Approx(semicircle_quadrature_oracle(z, 0)).epsilon(1e-8));
        CHECK(f.s1 == doctest::Approx(semicircle_quadrature_oracle(z, 1)).epsilon(1e-8));
        CHECK(f.s2 == doctest::Approx(semicircle_quadrature_oracle(z, 2)).epsilon(1e-8));
    }
    CHECK_THROWS_AS(semicircle_funcs(2.0), domain_error);
    CHECK_THROWS_AS(semicircle_quadrature_oracle(1.9, 0), domain_error);
}

TEST_CASE("log potential at the spiked edge: s0(theta + 1/theta)") {
    for (double theta : {1.5, 2.0, 4.0}) {
        const double z = theta + 1.0 / theta;
        const double expected = 1.0 / (2.0 * theta * theta) + std::log(theta);
        CHECK(semicircle_funcs(z).s0 == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("Stieltjes values and asymptotics") {
    CHECK(semicircle_funcs(2.5).s1 == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(semicircle_funcs(2.5).s2 == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(semicircle_quadrature_oracle(2.5, 1) == doctest::Approx(0.5).epsilon(1e-10));

    // s2 equals -d/dz of the k=1 quadrature
    const double h = 1e-5;
    const double fd = -(semicircle_quadrature_oracle(2.5 + h, 1) -
                        semicircle_quadrature_oracle(2.5 - h, 1)) /
                      (2 * h);
    CHECK(semicircle_quadrature_oracle(2.5, 2) == doctest::Approx(fd).epsilon(1e-8));

    const auto far = semicircle_funcs(100.0);
    CHECK(std::abs(far.s0 - std::log(100.0)) < 1e-3);
    CHECK(far.s1 == doctest::Approx(0.01).epsilon(1e-3));
    CHECK(far.s2 == doctest::Approx(1e-4).epsilon(1e-3));
    CHECK(semicircle_quadrature_oracle(100.0, 0) ==
          doctest::Approx(std::log(100.0)).epsilon(1e-4));
}

TEST_CASE("spiked free energy branches") {
    CHECK(f_spiked(PhasePoint(2.0, 0.5, 100)) == doctest::Approx(0.015625).epsilon(1e-14));
    const double expected22 = 1.25 - 0.0625 - 0.5 * std::log(2.0) - 0.5;
    CHECK(f_spiked(PhasePoint(2.0, 2.0, 100)) == doctest::Approx(expected22).epsilon(1e-14));
    CHECK(expected22 == doctest::Approx(0.34093).epsilon(1e-4));

    // branch continuity at alpha = 1
    for (double theta : {1.5, 2.0, 5.0}) {
        const double lo = f_spiked(PhasePoint(theta, 1.0 - 1e-12, 100));
        const double hi = f_spiked(PhasePoint(theta, 1.0 + 1e-12, 100));
        CHECK(lo == doctest::Approx(hi).epsilon(1e-10));
        CHECK(hi == doctest::Approx(1.0 / (4.0 * theta * theta)).epsilon(1e-9));
    }
    CHECK_THROWS_AS(f_spiked(PhasePoint(0.9, 2.0, 100)), domain_error);
}

TEST_CASE("band free energy: stationarity at m_pi, symmetry, special values") {
    // the band through the stationary overlap attains the global free energy
    for (double alpha : {1.5, 2.0, 4.0, 8.0, 20.0}) {
        for (double theta : {1.3, 2.0, 4.0, 10.0}) {
            const PhasePoint phase(theta, alpha, 100);
            const double m_pi = std::sqrt(1.0 - 1.0 / alpha);
            CHECK(f_band(m_pi, phase) == doctest::Approx(f_spiked(phase)).epsilon(1e-9));
        }
    }
    // q = 0 in the 1 < alpha <= theta regime
    CHECK(f_band(0.0, PhasePoint(4.0, 2.0, 100)) == doctest::Approx(4.0 / 64.0).epsilon(1e-12));
    // symmetry
    const PhasePoint phase(2.0, 3.0, 100);
    CHECK(f_band(0.3, phase) == doctest::Approx(f_band(-0.3, phase)).epsilon(1e-14));
    CHECK_THROWS_AS(f_band(1.0, phase), domain_error);
    CHECK_THROWS_AS(f_band(0.0, PhasePoint(2.0, 0.5, 100)), domain_error);
}

TEST_CASE("band free energy: branch continuity where the residual sphere turns critical") {
    for (double alpha : {3.0, 6.0, 12.0}) {
        for (double theta : {1.5, 2.0}) {
            // both branch expressions evaluated at the same crossover overlap
            const double beta = alpha / theta;
            const double lam = theta + 1.0 / theta;
            const double q2 = 1.0 - theta / alpha;  // where beta (1-q^2) = 1
            const double om2 = 1.0 - q2;
            const double cold =
                0.5 * beta * lam * q2 + (beta * om2 - 0.75 - 0.5 * std::log(beta * om2)) +
                0.5 * std::log(om2);
            const double hot = 0.5 * beta * lam * q2 + 0.25 * beta * beta * om2 * om2 +
                               0.5 * std::log(om2);
            CHECK(cold == doctest::Approx(hot).epsilon(1e-12));
            CHECK(f_band(std::sqrt(q2), PhasePoint(theta, alpha, 100)) ==
                  doctest::Approx(hot).epsilon(1e-10));
        }
    }
}

TEST_CASE("band profile maximizer sits at the stationary overlap") {
    for (double alpha : {2.0, 8.0}) {
        const PhasePoint phase(4.0, alpha, 100);
        double best_q = 0, best_f = -1e300;
        for (int i = 0; i <= 20000; ++i) {
            const double q = -0.99995 + 1.9999 * i / 20000.0;
            const double f = f_band(q, phase);
            if (f > best_f) {
                best_f = f;
                best_q = q;
            }
        }
        const double m_pi = std::sqrt(1.0 - 1.0 / alpha);
        CHECK(std::abs(std::abs(best_q) - m_pi) < 2e-4);
    }
}

TEST_CASE("delta rate: pinned values, branch agreement, grid identity") {
    const double d22 = delta_rate(PhasePoint(2.0, 2.0, 100));
    CHECK(d22 == doctest::Approx(1.0 - 1.0 / 16.0 - 0.5 * std::log(2.0) - 0.5).epsilon(1e-14));
    CHECK(d22 == doctest::Approx(0.09093).epsilon(1e-4));
    const double d210 = delta_rate(PhasePoint(10.0, 2.0, 100));
    CHECK(d210 == doctest::Approx(1.0 - 1.0 / 400.0 - 0.5 * std::log(2.0) - 0.5).epsilon(1e-14));
    CHECK(d210 == doctest::Approx(0.1509).epsilon(1e-3));
    CHECK_THROWS_AS(delta_rate(PhasePoint(2.0, 0.9, 100)), domain_error);

    // both branch formulas coincide at alpha = theta
    for (double theta : {1.5, 2.0, 4.0, 9.0}) {
        const double a = theta;
        const double branch_low =
            0.5 * a - (a - 1) * (a - 1) / (4 * theta * theta) - 0.5 * std::log(a) - 0.5;
        const double r = 1.0 - 1.0 / theta;
        const double branch_high =
            0.5 * a * r * r - 0.5 * std::log(theta) - 1.0 / (4 * theta * theta) + 0.25;
        CHECK(branch_low == doctest::Approx(branch_high).epsilon(1e-12));
    }

    // Delta = F - F(0; .) across a 20x20 grid, and positivity above theta_0L
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 20; ++j) {
            const double alpha = 1.05 + 0.5 * i;
            const double theta = 1.1 + 0.45 * j;
            const PhasePoint phase(theta, alpha, 100);
            const double delta = delta_rate(phase);
            CHECK(delta ==
                  doctest::Approx(f_spiked(phase) - f_band(0.0, phase)).epsilon(1e-12));
            if (theta > theta_0L(alpha)) CHECK(delta > 0);
        }
    }
}

TEST_CASE("contour quadrature matches a brute-force reference at small N") {
    const auto spec = sample_spectrum_values_only(12, 2.0, 100);
    const VectorXd& lam = spec.lambdas;
    const double beta = 1.3;
    const auto res = saddle_and_contour(lam, beta);
    CHECK(res.saddle.newton_residual < 1e-10);
    CHECK(res.saddle.gamma > lam[0]);

    // plain fine-step trapezoid of the same contour integrand, truncated on
    // the modulus (the signed value oscillates through zero)
    const double gamma = res.saddle.gamma;
    const int n = 12;
    auto log_integrand = [&](double u) {
        std::complex<double> acc(0, 0.5 * n * beta * u);
        for (int i = 0; i < n; ++i)
            acc -= 0.5 * std::log(std::complex<double>(1.0, u / (gamma - lam[i])));
        return acc;
    };
    const double du = 2e-5;
    double integral = 1.0;  // value at u = 0
    for (std::int64_t k = 1; k < 60000000; ++k) {
        const auto l = log_integrand(k * du);
        integral += 2.0 * std::exp(l).real();
        if (l.real() < std::log(1e-11)) break;
    }
    integral *= du;
    const double log_cn = (std::lgamma(0.5 * n) - std::log(2.0 * M_PI) -
                           (0.5 * n - 1.0) * std::log(0.5 * n * beta)) /
                          n;
    const double reference = log_cn + 0.5 * res.saddle.g_value + std::log(integral) / n;
    CHECK(res.log_z == doctest::Approx(reference).epsilon(1e-5));
}

TEST_CASE("contour log-partition approaches the limiting free energies at N=400") {
    for (int seed : {1, 2, 3}) {
        const auto spec = sample_spectrum_values_only(400, 2.0, 200 + seed);
        const double low = saddle_and_contour(spec.lambdas, 1.0).log_z;
        CHECK(std::abs(low - f_spiked(PhasePoint(2.0, 2.0, 400))) < 0.05);
        const double high = saddle_and_contour(spec.lambdas, 0.25).log_z;
        CHECK(std::abs(high - 0.015625) < 0.05);
    }
}

TEST_CASE("saddle location scales like (beta - 1/theta)^-1 / N") {
    const auto spec = sample_spectrum_values_only(400, 2.0, 300);
    const auto res = saddle_and_contour(spec.lambdas, 1.0);
    const double s = 1.0 / (1.0 - 0.5);  // = 2
    const double gap = res.saddle.gamma - spec.lambda1();
    CHECK(gap > 0.5 * s / 400.0);
    CHECK(gap < 2.0 * s / 400.0);
}

TEST_CASE("N=8 Monte Carlo cross-validates the contour value") {
    const auto spec = sample_spectrum_values_only(8, 2.0, 400);
    const double contour = saddle_and_contour(spec.lambdas, 1.0).log_z;
    const auto mc = mc_log_partition(spec.lambdas, 1.0, 1000000, 401);
    CHECK(std::abs(mc.value - contour) < 3.0 * mc.stderr_);
    CHECK(mc.stderr_ < 0.01);
}

TEST_CASE("exact overlap marginal: uniform case, normalization, modes") {
    const int g = 1001;
    VectorXd grid(g);
    for (int i = 0; i < g; ++i) grid[i] = -0.999 + 1.998 * i / (g - 1.0);

    // beta = 0: the pure co-area density, proportional to (1-m^2)^((N-3)/2)
    {
        const int n = 24;
        const auto spec = sample_spectrum_values_only(n, 2.0, 500);
        const VectorXd rho = exact_m_marginal(spec.lambdas, 0.0, grid);
        VectorXd expected(g);
        for (int i = 0; i < g; ++i)
            expected[i] = std::pow(1.0 - grid[i] * grid[i], 0.5 * (n - 3));
        double z = 0;
        for (int i = 0; i + 1 < g; ++i)
            z += 0.5 * (expected[i] + expected[i + 1]) * (grid[i + 1] - grid[i]);
        expected /= z;
        CHECK((rho - expected).cwiseAbs().maxCoeff() < 1e-10);
    }

    // low temperature: bimodal with modes near +- m_pi
    {
        const int n = 100;
        const auto spec = sample_spectrum_values_only(n, 4.0, 501);
        const double beta = 2.0;  // alpha = 8
        const VectorXd rho = exact_m_marginal(spec.lambdas, beta, grid);

        double z = 0;
        for (int i = 0; i + 1 < g; ++i)
            z += 0.5 * (rho[i] + rho[i + 1]) * (grid[i + 1] - grid[i]);
        CHECK(z == doctest::Approx(1.0).epsilon(1e-6));

        int arg_pos = 0, arg_neg = 0;
        for (int i = 1; i < g; ++i) {
            if (grid[i] > 0 && rho[i] > rho[arg_pos]) arg_pos = i;
            if (grid[i] < 0 && (grid[arg_neg] >= 0 || rho[i] > rho[arg_neg])) arg_neg = i;
        }
        const double m_pi = std::sqrt(1.0 - 1.0 / 8.0);
        CHECK(std::abs(grid[arg_pos] - m_pi) < 0.03);
        CHECK(std::abs(grid[arg_neg] + m_pi) < 0.03);
    }
}

TEST_CASE("marginal interpolation path agrees with direct evaluation") {
    const int n = 60;
    const auto spec = sample_spectrum_values_only(n, 4.0, 502);
    const double beta = 2.0;

    const int g = 801;  // above the interpolation threshold
    VectorXd grid(g);
    for (int i = 0; i < g; ++i) grid[i] = -0.995 + 1.99 * i / (g - 1.0);
    const VectorXd rho_interp = exact_m_marginal(spec.lambdas, beta, grid);

    VectorXd subgrid(81);
    for (int i = 0; i < 81; ++i) subgrid[i] = grid[i * 10];
    const VectorXd rho_direct = exact_m_marginal(spec.lambdas, beta, subgrid);

    // compare density ratios (normalizations differ across grids)
    const double ref_i = rho_interp[400], ref_d = rho_direct[40];
    for (int i = 0; i < 81; ++i) {
        const double a = rho_interp[i * 10] / ref_i;
        const double b = rho_direct[i] / ref_d;
        CHECK(a == doctest::Approx(b).epsilon(1e-6));
    }
}

TEST_CASE("stationary overlap prediction") {
    const auto pred = stationary_overlap_prediction(PhasePoint(4.0, 8.0, 1000));
    CHECK(pred.mean_r == doctest::Approx(0.875).epsilon(1e-14));
    const double s2 = semicircle_funcs(4.25).s2;
    CHECK(pred.var_r == doctest::Approx(2.0 * s2 / (4.0 * 1000.0)).epsilon(1e-12));

    // centering vanishes at criticality
    CHECK(stationary_overlap_prediction(PhasePoint(10.0, 1.1, 1000)).mean_r ==
          doctest::Approx(1.0 - 1.0 / 1.1).epsilon(1e-12));
    CHECK_THROWS_AS(stationary_overlap_prediction(PhasePoint(2.0, 0.9, 1000)), domain_error);

    // fluctuation scale at theta=2, beta=1 uses s2(2.5) = 1/3
    const auto p2 = stationary_overlap_prediction(PhasePoint(2.0, 2.0, 500));
    CHECK(p2.var_r == doctest::Approx(2.0 * (1.0 / 3.0) / 500.0).epsilon(1e-10));
}

TEST_CASE("modified-measure marginal TV decreases geometrically in N") {
    const double alpha = 8.0, theta = 4.0;
    double prev_tv = 1.0;
    for (int n : {50, 100, 200}) {
        const auto spec = sample_spectrum_values_only(n, theta, 600 + n);
        const PhasePoint phase(theta, alpha, n);
        const auto thr = compute_thresholds(phase, EigenTriple::from_spectrum(spec));
        REQUIRE(thr.valid);
        const int g = 2001;
        VectorXd grid(g);
        for (int i = 0; i < g; ++i) grid[i] = -0.9995 + 1.999 * i / (g - 1.0);
        const VectorXd rho = exact_m_marginal(spec.lambdas, phase.beta(), grid);
        const VectorXd rho_mod =
            exact_m_marginal_modified(spec.lambdas, phase.beta(), grid, thr);
        const double tv = density_tv(grid, rho, rho_mod);
        CHECK(tv < 0.5 * prev_tv);
        prev_tv = tv;
    }
    CHECK(prev_tv < 1e-4);
}

TEST_CASE("marginal band rate moves toward the closed-form rate") {
    const double alpha = 8.0, theta = 4.0;
    const double delta = delta_rate(PhasePoint(theta, alpha, 100));
    double prev_err = 1e300;
    for (int n : {50, 100}) {
        const auto spec = sample_spectrum_values_only(n, theta, 700 + n);
        const int g = 4001;
        VectorXd grid(g);
        for (int i = 0; i < g; ++i) grid[i] = -0.9995 + 1.999 * i / (g - 1.0);
        const VectorXd rho = exact_m_marginal(spec.lambdas, alpha / theta, grid);
        double mass = 0;
        for (int i = 0; i + 1 < g; ++i)
            if (std::abs(grid[i]) <= 0.05 && std::abs(grid[i + 1]) <= 0.05)
                mass += 0.5 * (rho[i] + rho[i + 1]) * (grid[i + 1] - grid[i]);
        const double rate = -std::log(mass) / n;
        CHECK(std::abs(rate - delta) < prev_err);
        prev_err = std::abs(rate - delta);
    }
}
