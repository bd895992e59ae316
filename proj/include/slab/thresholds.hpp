#pragma once

#include "slab/matrix_model.hpp"
#include "slab/types.hpp"

#include <optional>

namespace slab {

// Top, second and bottom eigenvalues; either realized from a Spectrum or the
// limiting values (theta + 1/theta, 2, -2).
struct EigenTriple {
    double lambda1 = 0;
    double lambda2 = 0;
    double lambdaN = 0;

    static EigenTriple limiting(double theta);
    static EigenTriple from_spectrum(const Spectrum& spec);
};

// Overlap thresholds and derived constants for one phase point.
//   m_e   : drift of m_t is positive below it (easy band edge)
//   m_be  : curvature condition holds strictly above it
//   m_pi  : stationary overlap
//   m1..m3: quartile points between m_be and m_e
//   c_e   : drift floor on |m| <= m3
//   kappa_be : curvature constant at m1 (N -> infinity form)
//   t_hit : hitting-time budget for |m| to reach m3
// valid is false when m_e <= m_be; the quartile ordering is then meaningless.
struct ThresholdSet {
    double m_e = 0;
    double m_be = 0;
    double m_pi = 0;
    double m1 = 0;
    double m2 = 0;
    double m3 = 0;
    double c_e = 0;
    double kappa_be = 0;
    double t_hit = 0;
    bool valid = false;
};

// Requires beta*(lambda1-lambda2) > 1 (domain error otherwise); returns
// valid=false (not an error) when m_e <= m_be.
ThresholdSet compute_thresholds(const PhasePoint& phase, const EigenTriple& eig);

// Fast-mixing threshold in theta for alpha < 1. Equals the closed form
// (1+sqrt(1/alpha))/(1/alpha - 1).
double theta_0H(double alpha);

// Symmetric-fast-mixing threshold for alpha > 1: the unique theta > 1 with
// alpha = theta^2 (theta+1)^2 / (theta-1)^4, found by bisection to 1e-10.
double theta_0L(double alpha);

struct BumpValues {
    double F = 0;
    double F1 = 0;
    double F2 = 0;
};

// F(x) = e^{-2/x} / (e^{-2/x} - e^{-2}) on (0,1): smooth, decreasing, concave,
// F(0+) = 0, F -> -inf as x -> 1-. Returns F and its first two derivatives.
BumpValues bump_F(double x);

// Energy of the modified Hamiltonian: equal to H for |m| >= m2, H + F(...) in
// the collar (m1, m2), and nullopt (the -infinity sentinel; Gibbs weight 0)
// for |m| <= m1.
std::optional<double> modified_hamiltonian(const Spectrum& spectrum, const ThresholdSet& thr,
                                           const SphereState& x);

// Same cutoff/collar weight applied to an overlap value directly:
// log of the reweighting factor e^{beta (Htilde - H)}, nullopt when |m| <= m1.
std::optional<double> log_tilde_weight(double m, const ThresholdSet& thr, double beta);

}  // namespace slab
