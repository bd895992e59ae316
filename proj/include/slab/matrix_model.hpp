#pragma once

#include "slab/rng.hpp"
#include "slab/types.hpp"

#include <string>

namespace slab {

// Realized disorder: M = G + (theta/N) v v^T with G a GOE draw and v uniform
// on the radius-sqrt(N) sphere.
struct SpikedInstance {
    MatrixXd entries;
    VectorXd spike;
    double theta = 0;
    std::uint64_t seed = 0;

    int n() const { return static_cast<int>(spike.size()); }
};

// Full eigensystem of a realized matrix, eigenvalues descending. Column i of
// `eigenvectors` is u_{i+1}; u_1 is aligned with the planted spike
// (<u_1, v> >= 0) and every other column has its largest-magnitude entry
// positive. spike_overlap = <u_1, v>/sqrt(N) in [-1, 1].
struct Spectrum {
    VectorXd lambdas;
    MatrixXd eigenvectors;
    double spike_overlap = 0;

    int n() const { return static_cast<int>(lambdas.size()); }
    double lambda1() const { return lambdas[0]; }
    double lambda2() const { return lambdas[1]; }
    double lambdaN() const { return lambdas[lambdas.size() - 1]; }
};

// Energy and overlap observables of a state in the eigenbasis.
struct Observables {
    double H = 0;   // (1/2) sum_i lambda_i X_i^2
    double h = 0;   // 2H/N
    VectorXd m;     // m_i = X_i / sqrt(N)
};

// v uniform on the sphere of radius sqrt(n).
VectorXd sample_sphere_uniform(int n, GaussianStream& g);

// GOE + rank-one spike. theta = 0 gives the pure noise matrix.
// Deterministic given (n, theta, seed). Rejects n < 4 and theta < 0.
SpikedInstance sample_spiked_instance(int n, double theta, std::uint64_t seed);
SpikedInstance sample_spiked_instance(const PhasePoint& phase, std::uint64_t seed);

Spectrum eigendecompose(const SpikedInstance& instance);

// Eigenvalues only (no eigenvector matrix); considerably faster at large N.
// The returned spike_overlap is NaN and `eigenvectors` is empty.
Spectrum eigendecompose_values_only(const SpikedInstance& instance);

// Sampling + eigenvalues without materializing the eigenvector matrix.
Spectrum sample_spectrum_values_only(int n, double theta, std::uint64_t seed);

// Requires |x|^2 = N within tolerance; throws otherwise.
Observables observe(const Spectrum& spectrum, const SphereState& x);

template <typename DerivedL, typename DerivedX>
double energy_h(const Eigen::MatrixBase<DerivedL>& lambdas, const Eigen::MatrixBase<DerivedX>& x) {
    return lambdas.cwiseProduct(x.cwiseAbs2()).sum() / static_cast<double>(x.size());
}

// Spectrum cache file ("SLABSPEC" magic; header records version, N, theta,
// seed; payload is eigenvalues, spike_overlap, eigenvector matrix).
void save_spectrum(const std::string& path, const Spectrum& spectrum, double theta,
                   std::uint64_t seed);
Spectrum load_spectrum(const std::string& path, double* theta_out = nullptr,
                       std::uint64_t* seed_out = nullptr);

}  // namespace slab
