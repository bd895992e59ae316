#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace slab {

template <typename T> using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T> using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;

// Thrown when an input violates a documented parameter domain (CLI exit 1).
struct domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

// Thrown when an algorithm fails to converge or a solver reports failure (CLI exit 2).
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Phase point of the model: signal-to-noise theta, reduced inverse temperature
// alpha, dimension n. The inverse temperature is always derived as alpha/theta.
struct PhasePoint {
    double theta = 0;
    double alpha = 0;
    int n = 0;

    PhasePoint() = default;
    PhasePoint(double theta_, double alpha_, int n_) : theta(theta_), alpha(alpha_), n(n_) {
        if (!(theta > 0)) throw domain_error("PhasePoint: theta must be > 0");
        if (!(alpha > 0)) throw domain_error("PhasePoint: alpha must be > 0");
        if (n < 4) throw domain_error("PhasePoint: n must be >= 4");
    }

    double beta() const { return alpha / theta; }
};

// Point on the sphere of radius sqrt(N), stored as eigenbasis coordinates.
struct SphereState {
    VectorXd coords;

    int n() const { return static_cast<int>(coords.size()); }
};

inline constexpr double kSphereNormRelTol = 1e-10;

template <typename Derived>
void check_on_sphere(const Eigen::MatrixBase<Derived>& x, double rel_tol = kSphereNormRelTol) {
    const double n = static_cast<double>(x.size());
    const double r2 = x.squaredNorm();
    if (std::abs(r2 - n) > rel_tol * n)
        throw domain_error("state violates |x|^2 = N (got " + std::to_string(r2) +
                           " for N = " + std::to_string(x.size()) + ")");
}

}  // namespace slab
