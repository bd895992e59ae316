#pragma once

#include "slab/matrix_model.hpp"
#include "slab/rng.hpp"
#include "slab/thresholds.hpp"
#include "slab/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace slab {

// Tangent-Euler integrator parameters. dt defaults to 0.01/max(1, lambda1).
struct IntegratorConfig {
    double dt = 0;
    double t_max = 0;
    int record_stride = 1;
    std::uint64_t seed = 0;
    bool record_full_state = false;
};

double default_dt(double lambda1);

struct HittingEvent {
    std::string label;
    double time = 0;     // linearly interpolated within the crossing step
    bool censored = false;
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> m1;
    std::vector<double> h;
    std::vector<VectorXd> full_m;  // populated when record_full_state is set
    std::vector<HittingEvent> hitting_events;
    SphereState final_state;
};

struct Initialization {
    enum class Kind { uniform, point, equator, plus_cap };
    Kind kind = Kind::uniform;
    double cap_overlap = 0;  // m1 value for plus_cap
    VectorXd x0;             // used by point

    static Initialization uniform() { return {Kind::uniform, 0, {}}; }
    static Initialization point(VectorXd x);
    static Initialization equator() { return {Kind::equator, 0, {}}; }
    static Initialization plus_cap(double c);
};

VectorXd make_initial_state(const Initialization& init, int n, GaussianStream& g);

// One tangent-space Euler-Maruyama step of
//   dX = grad_Sp H dt + sqrt(2/beta) dB,   grad_Sp H = (I - XX^T/N) Lambda X,
// in the eigenbasis: drift_i = (lambda_i - h) X_i, tangentially projected
// noise, then exact rescaling back to radius sqrt(N).
class LangevinStepper {
  public:
    LangevinStepper(VectorXd lambdas, double beta, double dt, std::uint64_t stream_seed);

    void set_state(const VectorXd& x);
    void step();
    // step() followed by X_1 <- |X_1| (half-sphere reflection).
    void step_reflected();

    double t() const { return t_; }
    double m1() const { return x_[0] * inv_sqrt_n_; }
    double h() const { return h_; }
    const VectorXd& state() const { return x_; }
    VectorXd& mutable_state() { return x_; }
    double dt() const { return dt_; }
    double beta() const { return beta_; }
    const VectorXd& lambdas() const { return lam_; }
    GaussianStream& noise() { return g_; }

  private:
    VectorXd lam_;
    double beta_, dt_, noise_coef_, inv_sqrt_n_, sqrt_n_;
    GaussianStream g_;
    VectorXd x_, xi_;
    double h_ = 0;
    double t_ = 0;
};

// Convenience single-step form.
SphereState langevin_step(const SphereState& state, const Spectrum& spectrum,
                          const PhasePoint& phase, double dt, GaussianStream& noise);

// Full trajectory with observables every record_stride steps and hitting
// events for |m| crossing {m1, m2, m3, m_e} (when thresholds are valid) plus
// the m = 0 crossing. Horizon exhaustion reports censored events.
TrajectoryRecord simulate(const VectorXd& lambdas, double beta, const IntegratorConfig& config,
                          const Initialization& init, const ThresholdSet* thresholds = nullptr);
TrajectoryRecord simulate(const Spectrum& spectrum, const PhasePoint& phase,
                          const IntegratorConfig& config, const Initialization& init,
                          const ThresholdSet* thresholds = nullptr);

// Reflected dynamics on the half-sphere m1 >= 0.
TrajectoryRecord reflected_simulate(const VectorXd& lambdas, double beta,
                                    const IntegratorConfig& config, const Initialization& init,
                                    const ThresholdSet* thresholds = nullptr);

enum class HPolicy { worst_case };

struct ScalarTrajectory {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<HittingEvent> hitting_events;
    int clamp_count = 0;
};

// 1-d Euler-Maruyama integration of the top-overlap SDE
//   dm = ((lambda1 - h) - (1 - 1/N)/beta) m dt + sqrt(2 (1-m^2)/(beta N)) dW
// with h = lambda1 m^2 + lambda2 (1-m^2) (worst-case policy). |m| is clamped
// to 1 - 1e-12 with a flag; more than 100 clamps is an error (dt too large).
ScalarTrajectory reduced_m_simulate(const PhasePoint& phase, const EigenTriple& eig,
                                    HPolicy policy, const IntegratorConfig& config, double m0,
                                    const std::vector<std::pair<std::string, double>>& levels = {});

// Mean-repelling Ornstein-Uhlenbeck process dY = Y dt + dW/sqrt(N), sampled
// with its exact Gaussian transition; hitting of each labeled level y is
// recorded (first time Y >= y for levels above y0, Y <= y for levels below;
// with track_abs, first time |Y| >= y).
ScalarTrajectory ou_simulate(int n, double y0, const IntegratorConfig& config,
                             const std::vector<std::pair<std::string, double>>& levels = {},
                             bool track_abs = false);

// Y' = sqrt(beta c_e / 2) arcsin(m); |m| < 1 required.
double arcsin_overlap(double m, double beta, double c_e);

}  // namespace slab
