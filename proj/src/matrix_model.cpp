#include "slab/matrix_model.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace slab {

VectorXd sample_sphere_uniform(int n, GaussianStream& g) {
    VectorXd v(n);
    g.fill(v);
    v *= std::sqrt(static_cast<double>(n)) / v.norm();
    return v;
}

SpikedInstance sample_spiked_instance(int n, double theta, std::uint64_t seed) {
    if (n < 4) throw domain_error("sample_spiked_instance: n must be >= 4");
    if (theta < 0) throw domain_error("sample_spiked_instance: theta must be >= 0");

    GaussianStream g(derive_seed(seed, {0}));
    SpikedInstance inst;
    inst.theta = theta;
    inst.seed = seed;
    inst.spike = sample_sphere_uniform(n, g);

    // GOE scaling: off-diagonal N(0, 1/N), diagonal N(0, 2/N); the spike term
    // is added per pair so M stays bit-exactly symmetric.
    const double off = 1.0 / std::sqrt(static_cast<double>(n));
    const double diag = std::sqrt(2.0 / static_cast<double>(n));
    const double spike_scale = theta / n;
    inst.entries.resize(n, n);
    for (int i = 0; i < n; ++i) {
        inst.entries(i, i) = diag * g() + spike_scale * inst.spike[i] * inst.spike[i];
        for (int j = i + 1; j < n; ++j) {
            const double e = off * g() + spike_scale * inst.spike[i] * inst.spike[j];
            inst.entries(i, j) = e;
            inst.entries(j, i) = e;
        }
    }
    return inst;
}

SpikedInstance sample_spiked_instance(const PhasePoint& phase, std::uint64_t seed) {
    return sample_spiked_instance(phase.n, phase.theta, seed);
}

namespace {

void fix_signs(Spectrum& spec, const VectorXd& spike) {
    const int n = spec.n();
    // u_1 points toward the spike; other columns get their largest-|.| entry positive.
    if (spec.eigenvectors.col(0).dot(spike) < 0) spec.eigenvectors.col(0) *= -1.0;
    for (int j = 1; j < n; ++j) {
        int imax = 0;
        spec.eigenvectors.col(j).cwiseAbs().maxCoeff(&imax);
        if (spec.eigenvectors(imax, j) < 0) spec.eigenvectors.col(j) *= -1.0;
    }
    spec.spike_overlap = spec.eigenvectors.col(0).dot(spike) / std::sqrt(static_cast<double>(n));
}

}  // namespace

Spectrum eigendecompose(const SpikedInstance& instance) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(instance.entries);
    if (solver.info() != Eigen::Success)
        throw numerical_error("eigendecompose: SelfAdjointEigenSolver failed to converge");

    const int n = instance.n();
    Spectrum spec;
    spec.lambdas = solver.eigenvalues().reverse();
    spec.eigenvectors = solver.eigenvectors().rowwise().reverse();
    for (int i = 0; i < n; ++i)
        if (!std::isfinite(spec.lambdas[i]))
            throw numerical_error("eigendecompose: non-finite eigenvalue");
    fix_signs(spec, instance.spike);
    return spec;
}

Spectrum eigendecompose_values_only(const SpikedInstance& instance) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(instance.entries, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw numerical_error("eigendecompose: SelfAdjointEigenSolver failed to converge");
    Spectrum spec;
    spec.lambdas = solver.eigenvalues().reverse();
    for (int i = 0; i < spec.n(); ++i)
        if (!std::isfinite(spec.lambdas[i]))
            throw numerical_error("eigendecompose: non-finite eigenvalue");
    spec.spike_overlap = std::numeric_limits<double>::quiet_NaN();
    return spec;
}

Spectrum sample_spectrum_values_only(int n, double theta, std::uint64_t seed) {
    return eigendecompose_values_only(sample_spiked_instance(n, theta, seed));
}

Observables observe(const Spectrum& spectrum, const SphereState& x) {
    if (x.n() != spectrum.n()) throw domain_error("observe: dimension mismatch");
    check_on_sphere(x.coords);
    Observables obs;
    const double n = static_cast<double>(x.n());
    obs.H = 0.5 * spectrum.lambdas.cwiseProduct(x.coords.cwiseAbs2()).sum();
    obs.h = 2.0 * obs.H / n;
    obs.m = x.coords / std::sqrt(n);
    return obs;
}

namespace {
constexpr char kMagic[8] = {'S', 'L', 'A', 'B', 'S', 'P', 'E', 'C'};
constexpr std::uint32_t kFormatVersion = 1;
}  // namespace

void save_spectrum(const std::string& path, const Spectrum& spectrum, double theta,
                   std::uint64_t seed) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw numerical_error("save_spectrum: cannot open " + path);
    const std::uint64_t n = static_cast<std::uint64_t>(spectrum.n());
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&kFormatVersion), sizeof(kFormatVersion));
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(&theta), sizeof(theta));
    out.write(reinterpret_cast<const char*>(&seed), sizeof(seed));
    out.write(reinterpret_cast<const char*>(&spectrum.spike_overlap), sizeof(double));
    out.write(reinterpret_cast<const char*>(spectrum.lambdas.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
    const std::uint64_t vec_count = static_cast<std::uint64_t>(spectrum.eigenvectors.size());
    out.write(reinterpret_cast<const char*>(&vec_count), sizeof(vec_count));
    if (vec_count > 0)
        out.write(reinterpret_cast<const char*>(spectrum.eigenvectors.data()),
                  static_cast<std::streamsize>(vec_count * sizeof(double)));
    if (!out) throw numerical_error("save_spectrum: write failed for " + path);
}

Spectrum load_spectrum(const std::string& path, double* theta_out, std::uint64_t* seed_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw numerical_error("load_spectrum: cannot open " + path);
    char magic[8];
    std::uint32_t version = 0;
    std::uint64_t n = 0, seed = 0;
    double theta = 0;
    Spectrum spec;
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw numerical_error("load_spectrum: bad magic in " + path);
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kFormatVersion)
        throw numerical_error("load_spectrum: unsupported format version");
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    in.read(reinterpret_cast<char*>(&theta), sizeof(theta));
    in.read(reinterpret_cast<char*>(&seed), sizeof(seed));
    in.read(reinterpret_cast<char*>(&spec.spike_overlap), sizeof(double));
    spec.lambdas.resize(static_cast<Eigen::Index>(n));
    in.read(reinterpret_cast<char*>(spec.lambdas.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    std::uint64_t vec_count = 0;
    in.read(reinterpret_cast<char*>(&vec_count), sizeof(vec_count));
    if (vec_count > 0) {
        spec.eigenvectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        in.read(reinterpret_cast<char*>(spec.eigenvectors.data()),
                static_cast<std::streamsize>(vec_count * sizeof(double)));
    }
    if (!in) throw numerical_error("load_spectrum: truncated file " + path);
    if (theta_out) *theta_out = theta;
    if (seed_out) *seed_out = seed;
    return spec;
}

}  // namespace slab
