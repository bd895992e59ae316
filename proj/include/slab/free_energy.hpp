#pragma once

#include "slab/matrix_model.hpp"
#include "slab/thresholds.hpp"
#include "slab/types.hpp"

#include <cstdint>

namespace slab {

// Semicircle log potential, Stieltjes transform, and its negated derivative,
// for z > 2:
//   s0(z) = z(z - sqrt(z^2-4))/4 + log(z + sqrt(z^2-4)) - log 2 - 1/2
//   s1(z) = (z - sqrt(z^2-4))/2
//   s2(z) = (z - sqrt(z^2-4))/(2 sqrt(z^2-4))
struct SemicircleFuncs {
    double s0 = 0;
    double s1 = 0;
    double s2 = 0;
};
SemicircleFuncs semicircle_funcs(double z);

// Independent quadrature oracle for the same three integrals:
//   k=0: int log(z-x) dsc(x),  k=1: int (z-x)^-1 dsc(x),  k=2: int (z-x)^-2 dsc(x)
// against the semicircle density sqrt(4-x^2)/(2 pi) on [-2,2]. Gauss-Chebyshev
// (second kind) nodes absorb the endpoint square-root weight; the node count
// doubles until successive estimates agree to 1e-12 (absolute), an explicit
// error if that never happens.
double semicircle_quadrature_oracle(double z, int k);

// Free energy of the spherical SK model without a spike:
// beta^2/4 for beta < 1, beta - 3/4 - log(beta)/2 otherwise.
double f_ssk(double beta);

// Limiting free energy F(alpha, theta) of the spiked model; theta > 1.
double f_spiked(const PhasePoint& phase);

// Band free energy F(q; alpha, theta) at fixed top overlap q in (-1,1):
//   beta*lambda_theta/2 q^2 + F_ssk(beta (1-q^2)) + log(1-q^2)/2,
// branches split where beta (1-q^2) = 1. Requires theta > 1, alpha > 1.
double f_band(double q, const PhasePoint& phase);

// Exponential rate Delta_{alpha,theta} of the worst-case mixing time;
// equals f_spiked - f_band(0). Requires alpha > 1, theta > 1.
double delta_rate(const PhasePoint& phase);

struct SaddleResult {
    double gamma = 0;           // critical point of G, strictly above lambda1
    double g_value = 0;         // G(gamma)
    double newton_residual = 0; // |G'(gamma)| at the returned point
};

struct ContourResult {
    SaddleResult saddle;
    double log_z = 0;         // (1/N) log Z_N, quadrature-corrected
    double log_z_saddle = 0;  // Stirling term + G(gamma)/2 only
};

// Finite-N log-partition function (1/N) log E_haar[e^{beta H}] through the
// exact contour representation Z_N = C_N int e^{(N/2) G(z)} dz along the
// vertical line through the saddle gamma.
ContourResult saddle_and_contour(const VectorXd& lambdas, double beta);

// Exact finite-N density of the top overlap m on the supplied grid
// (normalized to unit trapezoid integral). Conditional on m, the orthogonal
// (N-1)-sphere is handled by saddle_and_contour at inverse temperature
// beta (1-m^2) N/(N-1). beta = 0 reduces to the uniform co-area factor.
VectorXd exact_m_marginal(const VectorXd& lambdas, double beta, const VectorXd& m_grid);

// Same marginal with the collar/cutoff reweighting of the modified
// Hamiltonian applied (zero mass at |m| <= m1).
VectorXd exact_m_marginal_modified(const VectorXd& lambdas, double beta, const VectorXd& m_grid,
                                   const ThresholdSet& thr);

struct OverlapPrediction {
    double mean_r = 0;   // stationary mean of m_1^2: 1 - 1/(beta theta)
    double var_r = 0;    // 2 s2(lambda_theta) / (beta^2 N)
};
// Requires beta*theta > 1.
OverlapPrediction stationary_overlap_prediction(const PhasePoint& phase);

struct MonteCarloLogZ {
    double value = 0;   // (1/N) log mean(e^{beta H}) over uniform samples
    double stderr_ = 0; // delta-method standard error of `value`
};
MonteCarloLogZ mc_log_partition(const VectorXd& lambdas, double beta, std::int64_t samples,
                                std::uint64_t seed);

// Total-variation distance between two densities on a common grid (trapezoid).
double density_tv(const VectorXd& grid, const VectorXd& rho_a, const VectorXd& rho_b);

}  // namespace slab
