#include "slab/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace slab {

double default_dt(double lambda1) { return 0.01 / std::max(1.0, lambda1); }

Initialization Initialization::point(VectorXd x) {
    Initialization init;
    init.kind = Kind::point;
    init.x0 = std::move(x);
    return init;
}

Initialization Initialization::plus_cap(double c) {
    if (!(c > -1) || !(c < 1)) throw domain_error("plus_cap: overlap must lie in (-1,1)");
    Initialization init;
    init.kind = Kind::plus_cap;
    init.cap_overlap = c;
    return init;
}

VectorXd make_initial_state(const Initialization& init, int n, GaussianStream& g) {
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    switch (init.kind) {
        case Initialization::Kind::uniform:
            return sample_sphere_uniform(n, g);
        case Initialization::Kind::point: {
            if (init.x0.size() != n) throw domain_error("point init: dimension mismatch");
            check_on_sphere(init.x0);
            return init.x0;
        }
        case Initialization::Kind::equator:
        case Initialization::Kind::plus_cap: {
            const double c =
                init.kind == Initialization::Kind::equator ? 0.0 : init.cap_overlap;
            // remaining coordinates uniform on the residual sphere
            VectorXd x(n);
            VectorXd rest(n - 1);
            g.fill(rest);
            rest *= sqrt_n * std::sqrt(1.0 - c * c) / rest.norm();
            x[0] = c * sqrt_n;
            x.tail(n - 1) = rest;
            return x;
        }
    }
    throw domain_error("make_initial_state: unknown initialization");
}

LangevinStepper::LangevinStepper(VectorXd lambdas, double beta, double dt,
                                 std::uint64_t stream_seed)
    : lam_(std::move(lambdas)),
      beta_(beta),
      dt_(dt),
      g_(stream_seed),
      x_(lam_.size()),
      xi_(lam_.size()) {
    if (!(beta > 0)) throw domain_error("LangevinStepper: need beta > 0");
    if (!(dt > 0)) throw domain_error("LangevinStepper: need dt > 0");
    const double n = static_cast<double>(lam_.size());
    sqrt_n_ = std::sqrt(n);
    inv_sqrt_n_ = 1.0 / sqrt_n_;
    noise_coef_ = std::sqrt(2.0 * dt_ / beta_);
    x_.setZero();
}

void LangevinStepper::set_state(const VectorXd& x) {
    if (x.size() != x_.size()) throw domain_error("set_state: dimension mismatch");
    check_on_sphere(x);
    x_ = x;
    h_ = energy_h(lam_, x_);
    t_ = 0;
}

void LangevinStepper::step() {
    const double n = static_cast<double>(x_.size());
    g_.fill(xi_);
    const double xdotxi = x_.dot(xi_) / n;
    // drift (lambda_i - h) X_i dt, tangential noise, exact retraction
    x_.array() += dt_ * (lam_.array() - h_) * x_.array() +
                  noise_coef_ * (xi_.array() - xdotxi * x_.array());
    x_ *= sqrt_n_ / x_.norm();
    h_ = energy_h(lam_, x_);
    t_ += dt_;
}

void LangevinStepper::step_reflected() {
    step();
    if (x_[0] < 0) x_[0] = -x_[0];
}

SphereState langevin_step(const SphereState& state, const Spectrum& spectrum,
                          const PhasePoint& phase, double dt, GaussianStream& noise) {
    check_on_sphere(state.coords);
    const VectorXd& lam = spectrum.lambdas;
    const double n = static_cast<double>(state.n());
    const double h = energy_h(lam, state.coords);
    VectorXd xi(state.n());
    noise.fill(xi);
    const double xdotxi = state.coords.dot(xi) / n;
    VectorXd x = state.coords;
    x.array() += dt * (lam.array() - h) * x.array() +
                 std::sqrt(2.0 * dt / phase.beta()) * (xi.array() - xdotxi * x.array());
    x *= std::sqrt(n) / x.norm();
    return {x};
}

namespace {

struct LevelTracker {
    std::string label;
    double level = 0;     // crossing of |m| upward through `level`; 0 tracks sign change
    bool hit = false;
    double time = 0;
};

std::vector<LevelTracker> make_trackers(const ThresholdSet* thr) {
    std::vector<LevelTracker> tr;
    if (thr && thr->valid) {
        tr.push_back({"m1", thr->m1});
        tr.push_back({"m2", thr->m2});
        tr.push_back({"m3", thr->m3});
        tr.push_back({"m_e", thr->m_e});
    }
    tr.push_back({"m0", 0.0});
    return tr;
}

void update_trackers(std::vector<LevelTracker>& trackers, double t_prev, double m_prev,
                     double t_cur, double m_cur) {
    for (auto& tr : trackers) {
        if (tr.hit) continue;
        if (tr.level == 0.0) {
            if (m_prev == 0.0 || (m_prev > 0) != (m_cur > 0) || m_cur == 0.0) {
                const double frac =
                    (m_prev == m_cur) ? 0.0 : std::abs(m_prev) / std::abs(m_prev - m_cur);
                tr.hit = true;
                tr.time = t_prev + frac * (t_cur - t_prev);
            }
        } else if (std::abs(m_cur) >= tr.level) {
            const double a = std::abs(m_prev), b = std::abs(m_cur);
            const double frac = (b == a) ? 1.0 : std::max(0.0, (tr.level - a) / (b - a));
            tr.hit = true;
            tr.time = t_prev + std::min(1.0, frac) * (t_cur - t_prev);
        }
    }
}

TrajectoryRecord run_simulation(const VectorXd& lambdas, double beta,
                                const IntegratorConfig& config, const Initialization& init,
                                const ThresholdSet* thresholds, bool reflected) {
    if (!(config.t_max > 0)) throw domain_error("simulate: need t_max > 0");
    if (config.record_stride < 1) throw domain_error("simulate: record_stride must be >= 1");
    const double dt = config.dt > 0 ? config.dt : default_dt(lambdas.maxCoeff());

    LangevinStepper stepper(lambdas, beta, dt, derive_seed(config.seed, {2}));
    GaussianStream init_stream(derive_seed(config.seed, {1}));
    VectorXd x0 = make_initial_state(init, static_cast<int>(lambdas.size()), init_stream);
    if (reflected && x0[0] < 0)
        throw domain_error("reflected_simulate: initialization must satisfy m1 >= 0");
    stepper.set_state(x0);

    auto trackers = make_trackers(thresholds);
    // catch levels already satisfied by the initial state
    update_trackers(trackers, 0.0, stepper.m1(), 0.0, stepper.m1());
    const auto steps = static_cast<std::int64_t>(std::ceil(config.t_max / dt));

    TrajectoryRecord rec;
    rec.times.push_back(0.0);
    rec.m1.push_back(stepper.m1());
    rec.h.push_back(stepper.h());
    if (config.record_full_state)
        rec.full_m.push_back(stepper.state() / std::sqrt(static_cast<double>(lambdas.size())));

    double m_prev = stepper.m1();
    for (std::int64_t k = 1; k <= steps; ++k) {
        const double t_prev = stepper.t();
        if (reflected)
            stepper.step_reflected();
        else
            stepper.step();
        update_trackers(trackers, t_prev, m_prev, stepper.t(), stepper.m1());
        m_prev = stepper.m1();
        if (k % config.record_stride == 0 || k == steps) {
            rec.times.push_back(stepper.t());
            rec.m1.push_back(stepper.m1());
            rec.h.push_back(stepper.h());
            if (config.record_full_state)
                rec.full_m.push_back(stepper.state() /
                                     std::sqrt(static_cast<double>(lambdas.size())));
        }
    }
    for (const auto& tr : trackers)
        rec.hitting_events.push_back({tr.label, tr.hit ? tr.time : config.t_max, !tr.hit});
    rec.final_state = SphereState{stepper.state()};
    return rec;
}

}  // namespace

TrajectoryRecord simulate(const VectorXd& lambdas, double beta, const IntegratorConfig& config,
                          const Initialization& init, const ThresholdSet* thresholds) {
    return run_simulation(lambdas, beta, config, init, thresholds, false);
}

TrajectoryRecord simulate(const Spectrum& spectrum, const PhasePoint& phase,
                          const IntegratorConfig& config, const Initialization& init,
                          const ThresholdSet* thresholds) {
    return run_simulation(spectrum.lambdas, phase.beta(), config, init, thresholds, false);
}

TrajectoryRecord reflected_simulate(const VectorXd& lambdas, double beta,
                                    const IntegratorConfig& config, const Initialization& init,
                                    const ThresholdSet* thresholds) {
    return run_simulation(lambdas, beta, config, init, thresholds, true);
}

ScalarTrajectory reduced_m_simulate(const PhasePoint& phase, const EigenTriple& eig,
                                    HPolicy policy, const IntegratorConfig& config, double m0,
                                    const std::vector<std::pair<std::string, double>>& levels) {
    if (policy != HPolicy::worst_case)
        throw domain_error("reduced_m_simulate: unknown h policy");
    if (!(std::abs(m0) < 1)) throw domain_error("reduced_m_simulate: need |m0| < 1");
    if (!(config.t_max > 0)) throw domain_error("reduced_m_simulate: need t_max > 0");
    const double beta = phase.beta();
    const double n = static_cast<double>(phase.n);
    const double dt = config.dt > 0 ? config.dt : default_dt(eig.lambda1);
    const double ito = (1.0 - 1.0 / n) / beta;
    const double noise_coef = std::sqrt(2.0 * dt / (beta * n));

    GaussianStream g(derive_seed(config.seed, {3}));
    std::vector<LevelTracker> trackers;
    for (const auto& [label, level] : levels) trackers.push_back({label, level});

    ScalarTrajectory out;
    const auto steps = static_cast<std::int64_t>(std::ceil(config.t_max / dt));
    double m = m0, t = 0;
    out.times.push_back(0);
    out.values.push_back(m);
    for (std::int64_t k = 1; k <= steps; ++k) {
        const double h = eig.lambda1 * m * m + eig.lambda2 * (1.0 - m * m);
        const double drift = ((eig.lambda1 - h) - ito) * m;
        const double m_new = m + drift * dt + noise_coef * std::sqrt(1.0 - m * m) * g();
        const double t_new = t + dt;
        double clamped = m_new;
        if (std::abs(m_new) >= 1.0) {
            clamped = std::copysign(1.0 - 1e-12, m_new);
            if (++out.clamp_count > 100)
                throw numerical_error("reduced_m_simulate: repeated clamps; reduce dt");
        }
        update_trackers(trackers, t, m, t_new, clamped);
        m = clamped;
        t = t_new;
        if (k % config.record_stride == 0 || k == steps) {
            out.times.push_back(t);
            out.values.push_back(m);
        }
    }
    for (const auto& tr : trackers)
        out.hitting_events.push_back({tr.label, tr.hit ? tr.time : config.t_max, !tr.hit});
    return out;
}

ScalarTrajectory ou_simulate(int n, double y0, const IntegratorConfig& config,
                             const std::vector<std::pair<std::string, double>>& levels,
                             bool track_abs) {
    if (n < 1) throw domain_error("ou_simulate: need n >= 1");
    if (!(config.t_max > 0)) throw domain_error("ou_simulate: need t_max > 0");
    const double dt = config.dt > 0 ? config.dt : 1e-3;
    // Exact transition: Y_{t+dt} = Y_t e^{dt} + N(0, (e^{2 dt}-1)/(2N)).
    const double decay = std::exp(dt);
    const double sd = std::sqrt((std::exp(2.0 * dt) - 1.0) / (2.0 * static_cast<double>(n)));

    GaussianStream g(derive_seed(config.seed, {4}));
    struct Tracker {
        std::string label;
        double level;
        bool above;
        bool hit = false;
        double time = 0;
    };
    std::vector<Tracker> trackers;
    for (const auto& [label, level] : levels) trackers.push_back({label, level, level >= y0});

    ScalarTrajectory out;
    const auto steps = static_cast<std::int64_t>(std::ceil(config.t_max / dt));
    double y = y0, t = 0;
    out.times.push_back(0);
    out.values.push_back(y);
    for (std::int64_t k = 1; k <= steps; ++k) {
        const double y_new = y * decay + sd * g();
        const double t_new = t + dt;
        for (auto& tr : trackers) {
            if (tr.hit) continue;
            bool crossed;
            double from, to;
            if (track_abs) {
                from = std::abs(y);
                to = std::abs(y_new);
                crossed = to >= tr.level;
            } else {
                from = y;
                to = y_new;
                crossed = tr.above ? to >= tr.level : to <= tr.level;
            }
            if (crossed) {
                const double frac = (to == from) ? 1.0 : (tr.level - from) / (to - from);
                tr.hit = true;
                tr.time = t + std::clamp(frac, 0.0, 1.0) * dt;
            }
        }
        y = y_new;
        t = t_new;
        if (k % config.record_stride == 0 || k == steps) {
            out.times.push_back(t);
            out.values.push_back(y);
        }
    }
    for (const auto& tr : trackers)
        out.hitting_events.push_back({tr.label, tr.hit ? tr.time : config.t_max, !tr.hit});
    return out;
}

double arcsin_overlap(double m, double beta, double c_e) {
    if (!(std::abs(m) < 1)) throw domain_error("arcsin_overlap: need |m| < 1");
    return std::sqrt(0.5 * beta * c_e) * std::asin(m);
}

}  // namespace slab
