#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "slab/matrix_model.hpp"
#include "slab/rng.hpp"

#include <cmath>
#include <cstdio>

using namespace slab;

TEST_CASE("sampling rejects bad parameters") {
    CHECK_THROWS_AS(sample_spiked_instance(3, 1.0, 1), domain_error);
    CHECK_THROWS_AS(sample_spiked_instance(10, -0.5, 1), domain_error);
}

TEST_CASE("determinism: equal seeds give bit-identical instances") {
    const auto a = sample_spiked_instance(50, 2.0, 42);
    const auto b = sample_spiked_instance(50, 2.0, 42);
    CHECK((a.entries - b.entries).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.spike - b.spike).cwiseAbs().maxCoeff() == 0.0);
    const auto c = sample_spiked_instance(50, 2.0, 43);
    CHECK((a.entries - c.entries).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("theta = 0 is the pure noise model") {
    const auto null_model = sample_spiked_instance(40, 0.0, 7);
    const auto spiked = sample_spiked_instance(40, 3.0, 7);
    // same seed, so subtracting the spike term recovers the same noise matrix
    const MatrixXd g = spiked.entries - (3.0 / 40.0) * spiked.spike * spiked.spike.transpose();
    CHECK((null_model.entries - g).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("spike lies on the radius-sqrt(N) sphere") {
    const auto inst = sample_spiked_instance(300, 1.5, 9);
    CHECK(inst.spike.squaredNorm() == doctest::Approx(300.0).epsilon(1e-12));
}

TEST_CASE("GOE entry variances at N=100 over 1000 instances") {
    const int n = 100;
    const int instances = 1000;
    double off_s2 = 0, diag_s2 = 0;
    std::int64_t off_count = 0, diag_count = 0;
    for (int k = 0; k < instances; ++k) {
        const auto inst = sample_spiked_instance(n, 1.0, 1000 + k);
        CHECK((inst.entries - inst.entries.transpose()).cwiseAbs().maxCoeff() == 0.0);
        const MatrixXd g =
            inst.entries - (1.0 / n) * inst.spike * inst.spike.transpose();
        CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-14);
        for (int i = 0; i < n; ++i) {
            diag_s2 += g(i, i) * g(i, i);
            ++diag_count;
            for (int j = i + 1; j < n; ++j) {
                off_s2 += g(i, j) * g(i, j);
                ++off_count;
            }
        }
    }
    CHECK(off_s2 / off_count == doctest::Approx(1.0 / n).epsilon(0.10));
    CHECK(diag_s2 / diag_count == doctest::Approx(2.0 / n).epsilon(0.10));
}

TEST_CASE("already-diagonal matrix decomposes exactly") {
    SpikedInstance inst;
    inst.entries = Eigen::Vector4d(1, 3, 4, 2).asDiagonal();
    inst.spike = Eigen::Vector4d(0, 0, 2, 0);  // |v|^2 = 4 = N, aligned with lambda1
    inst.theta = 0;
    inst.seed = 0;
    const auto spec = eigendecompose(inst);
    CHECK(spec.lambdas[0] == doctest::Approx(4.0));
    CHECK(spec.lambdas[1] == doctest::Approx(3.0));
    CHECK(spec.lambdas[2] == doctest::Approx(2.0));
    CHECK(spec.lambdas[3] == doctest::Approx(1.0));
    CHECK(spec.eigenvectors.col(0)[2] == doctest::Approx(1.0));  // aligned with spike
    CHECK(spec.spike_overlap == doctest::Approx(1.0));
}

TEST_CASE("eigendecomposition invariants at N=120") {
    const auto inst = sample_spiked_instance(120, 2.0, 5);
    const auto spec = eigendecompose(inst);

    const MatrixXd& u = spec.eigenvectors;
    CHECK((u.transpose() * u - MatrixXd::Identity(120, 120)).cwiseAbs().maxCoeff() < 1e-8);

    MatrixXd recon = MatrixXd::Zero(120, 120);
    for (int i = 0; i < 120; ++i)
        recon += spec.lambdas[i] * u.col(i) * u.col(i).transpose();
    CHECK((recon - inst.entries).cwiseAbs().maxCoeff() < 1e-8);

    for (int i = 0; i + 1 < 120; ++i) CHECK(spec.lambdas[i] > spec.lambdas[i + 1]);
    CHECK(u.col(0).dot(inst.spike) >= 0.0);

    const auto values_only = eigendecompose_values_only(inst);
    CHECK((values_only.lambdas - spec.lambdas).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("edge eigenvalues approach theta + 1/theta, 2, -2") {
    const auto spec = sample_spectrum_values_only(800, 2.0, 11);
    CHECK(spec.lambda1() == doctest::Approx(2.5).epsilon(0.08));
    CHECK(spec.lambda2() == doctest::Approx(2.0).epsilon(0.08));
    CHECK(spec.lambdaN() == doctest::Approx(-2.0).epsilon(0.08));
}

TEST_CASE("observe: ground and bottom states, energy bounds") {
    const auto inst = sample_spiked_instance(100, 2.0, 3);
    const auto spec = eigendecompose(inst);
    const double sqrt_n = std::sqrt(100.0);

    SphereState top{VectorXd::Zero(100)};
    top.coords[0] = sqrt_n;
    auto obs = observe(spec, top);
    CHECK(obs.m[0] == doctest::Approx(1.0));
    CHECK(obs.h == doctest::Approx(spec.lambda1()));

    SphereState bottom{VectorXd::Zero(100)};
    bottom.coords[99] = sqrt_n;
    obs = observe(spec, bottom);
    CHECK(obs.m[99] == doctest::Approx(1.0));
    CHECK(obs.h == doctest::Approx(spec.lambdaN()));

    GaussianStream g(17);
    for (int k = 0; k < 10000; ++k) {
        SphereState x{sample_sphere_uniform(100, g)};
        obs = observe(spec, x);
        CHECK(obs.h >= spec.lambdaN() - 1e-12);
        CHECK(obs.h <= spec.lambda1() + 1e-12);
        const double m1sq = obs.m[0] * obs.m[0];
        CHECK(obs.h <= spec.lambda1() * m1sq + spec.lambda2() * (1.0 - m1sq) + 1e-12);
        CHECK(obs.m.squaredNorm() == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("observe rejects off-sphere states") {
    const auto inst = sample_spiked_instance(10, 1.0, 1);
    const auto spec = eigendecompose(inst);
    SphereState bad{VectorXd::Ones(10)};  // |x|^2 = 10 = N is fine
    CHECK_NOTHROW(observe(spec, bad));
    bad.coords *= 1.01;
    CHECK_THROWS_AS(observe(spec, bad), domain_error);
}

TEST_CASE("spectrum cache round-trip") {
    const auto inst = sample_spiked_instance(30, 1.5, 21);
    const auto spec = eigendecompose(inst);
    const std::string path = "test_spectrum_cache.bin";
    save_spectrum(path, spec, inst.theta, inst.seed);
    double theta = 0;
    std::uint64_t seed = 0;
    const auto loaded = load_spectrum(path, &theta, &seed);
    CHECK(theta == 1.5);
    CHECK(seed == 21);
    CHECK((loaded.lambdas - spec.lambdas).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.eigenvectors - spec.eigenvectors).cwiseAbs().maxCoeff() == 0.0);
    CHECK(loaded.spike_overlap == spec.spike_overlap);
    std::remove(path.c_str());
}

TEST_CASE("BBP detectability contrast in the spike overlap") {
    // theta above the transition: macroscopic overlap; below: vanishing
    const auto above = eigendecompose(sample_spiked_instance(1500, 2.0, 33));
    CHECK(above.spike_overlap * above.spike_overlap >= 0.5);
    const auto below = eigendecompose(sample_spiked_instance(1500, 0.5, 34));
    CHECK(below.spike_overlap * below.spike_overlap <= 0.05);
}
