#include "slab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace slab {

void parallel_for(int n_tasks, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1 || n_tasks <= 1) {
        for (int i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int count = std::min(workers, n_tasks);
    pool.reserve(count);
    for (int w = 0; w < count; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

namespace {

std::uint64_t kind_id(ExperimentSpec::Kind kind) { return static_cast<std::uint64_t>(kind) + 10; }

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - std::floor(pos);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, 0.5);
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0;
    const double mu = mean_of(v);
    double acc = 0;
    for (double x : v) acc += (x - mu) * (x - mu);
    return std::sqrt(acc / (static_cast<double>(v.size()) - 1.0));
}

}  // namespace

std::uint64_t replica_seed(const ExperimentSpec& spec, std::uint64_t cell,
                           std::uint64_t replica) {
    return derive_seed(spec.seed, {kind_id(spec.kind), cell, 2, replica});
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw domain_error("fit_line: need >= 2 points");
    const double n = static_cast<double>(x.size());
    const double mx = mean_of(x), my = mean_of(y);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    (void)n;
    return fit;
}

// ---- histogram machinery ----------------------------------------------------

double freedman_diaconis_width(std::vector<double> sample) {
    if (sample.size() < 2) return 1e-3;
    std::sort(sample.begin(), sample.end());
    const double iqr = quantile_sorted(sample, 0.75) - quantile_sorted(sample, 0.25);
    const double n13 = std::cbrt(static_cast<double>(sample.size()));
    double width = 2.0 * iqr / n13;
    if (!(width > 0)) {
        const double range = sample.back() - sample.front();
        width = range > 0 ? range / 50.0 : 1e-3;
    }
    return width;
}

std::vector<double> bin_reference(const VectorXd& grid, const VectorXd& rho, double lo,
                                  double width, int bins) {
    // cumulative trapezoid CDF on the fine grid, then differences at bin edges
    const Eigen::Index g = grid.size();
    VectorXd cdf(g);
    cdf[0] = 0;
    for (Eigen::Index i = 1; i < g; ++i)
        cdf[i] = cdf[i - 1] + 0.5 * (rho[i] + rho[i - 1]) * (grid[i] - grid[i - 1]);
    const double total = cdf[g - 1];

    auto cdf_at = [&](double x) {
        if (x <= grid[0]) return 0.0;
        if (x >= grid[g - 1]) return total;
        const auto it = std::lower_bound(grid.data(), grid.data() + g, x);
        const Eigen::Index hi = it - grid.data();
        const Eigen::Index lo_i = hi - 1;
        const double frac = (x - grid[lo_i]) / (grid[hi] - grid[lo_i]);
        return cdf[lo_i] + frac * (cdf[hi] - cdf[lo_i]);
    };

    std::vector<double> probs(bins);
    for (int b = 0; b < bins; ++b)
        probs[b] = (cdf_at(lo + (b + 1) * width) - cdf_at(lo + b * width)) / total;
    return probs;
}

TvEstimate projected_tv(const std::vector<double>& sample, const VectorXd& grid,
                        const VectorXd& rho) {
    const double width = freedman_diaconis_width(sample);
    const double lo = -1.0;
    const int bins = std::max(1, static_cast<int>(std::ceil(2.0 / width)));
    std::vector<double> counts(bins, 0.0);
    for (double m : sample) {
        int b = static_cast<int>((m - lo) / width);
        b = std::clamp(b, 0, bins - 1);
        counts[b] += 1.0;
    }
    const auto probs = bin_reference(grid, rho, lo, width, bins);
    const double r = static_cast<double>(sample.size());
    TvEstimate est;
    est.tv = 0;
    double low_expectation_mass = 0;
    for (int b = 0; b < bins; ++b) {
        est.tv += std::abs(counts[b] / r - probs[b]);
        // empty off-support bins are not evidence of undersampling; what is,
        // is sample mass sitting where the reference expects < 5 counts
        if (probs[b] * r < 5.0) low_expectation_mass += counts[b];
    }
    est.tv *= 0.5;
    est.undersampled = low_expectation_mass / r > 0.01;
    return est;
}

double empirical_tv_1d(const std::vector<double>& a, const std::vector<double>& b, double lo,
                       double hi, int bins) {
    const double w = (hi - lo) / bins;
    std::vector<double> pa(bins, 0.0), pb(bins, 0.0);
    for (double x : a) pa[std::clamp(static_cast<int>((x - lo) / w), 0, bins - 1)] += 1.0;
    for (double x : b) pb[std::clamp(static_cast<int>((x - lo) / w), 0, bins - 1)] += 1.0;
    double tv = 0;
    for (int i = 0; i < bins; ++i)
        tv += std::abs(pa[i] / static_cast<double>(a.size()) - pb[i] / static_cast<double>(b.size()));
    return 0.5 * tv;
}

double empirical_tv_2d(const std::vector<std::pair<double, double>>& a,
                       const std::vector<std::pair<double, double>>& b, double lo, double hi,
                       int bins, double lo2, double hi2, int bins2) {
    const double w = (hi - lo) / bins;
    const double w2 = (hi2 - lo2) / bins2;
    std::vector<double> pa(static_cast<std::size_t>(bins) * bins2, 0.0), pb(pa);
    auto idx = [&](const std::pair<double, double>& xy) {
        const int i = std::clamp(static_cast<int>((xy.first - lo) / w), 0, bins - 1);
        const int j = std::clamp(static_cast<int>((xy.second - lo2) / w2), 0, bins2 - 1);
        return static_cast<std::size_t>(i) * bins2 + j;
    };
    for (const auto& xy : a) pa[idx(xy)] += 1.0;
    for (const auto& xy : b) pb[idx(xy)] += 1.0;
    double tv = 0;
    for (std::size_t k = 0; k < pa.size(); ++k)
        tv += std::abs(pa[k] / static_cast<double>(a.size()) - pb[k] / static_cast<double>(b.size()));
    return 0.5 * tv;
}

// ---- hitting / retention ----------------------------------------------------

namespace {

struct ReplicaHit {
    double tau = 0;
    bool censored = true;
    bool escaped = false;
};

ReplicaHit run_hit_replica(const VectorXd& lambdas, double beta, double dt,
                           const ThresholdSet& thr, double retention_time,
                           std::uint64_t rep_seed) {
    LangevinStepper stepper(lambdas, beta, dt, derive_seed(rep_seed, {2}));
    GaussianStream init_stream(derive_seed(rep_seed, {1}));
    stepper.set_state(
        make_initial_state(Initialization::uniform(), static_cast<int>(lambdas.size()),
                           init_stream));

    ReplicaHit out;
    double m_prev = std::abs(stepper.m1());
    while (stepper.t() < thr.t_hit) {
        stepper.step();
        const double m = std::abs(stepper.m1());
        if (m >= thr.m3) {
            const double frac = (m == m_prev) ? 1.0 : (thr.m3 - m_prev) / (m - m_prev);
            out.tau = stepper.t() - dt + std::clamp(frac, 0.0, 1.0) * dt;
            out.censored = false;
            break;
        }
        m_prev = m;
    }
    if (out.censored) {
        out.tau = thr.t_hit;
        return out;
    }
    if (retention_time > 0) {
        const double t_end = out.tau + retention_time;
        while (stepper.t() < t_end) {
            stepper.step();
            if (std::abs(stepper.m1()) < thr.m2) {
                out.escaped = true;
                break;
            }
        }
    }
    return out;
}

HittingResult run_hitting(const ExperimentSpec& spec, double retention_time) {
    if (spec.n_list.empty()) throw domain_error("hitting: empty N list");
    if (!(spec.alpha > 1)) throw domain_error("hitting: requires alpha > 1");
    HittingResult result;
    GaussianStream boot_rng(derive_seed(spec.seed, {kind_id(spec.kind), 99}));

    for (std::size_t ci = 0; ci < spec.n_list.size(); ++ci) {
        const int n = spec.n_list[ci];
        const PhasePoint phase(spec.theta, spec.alpha, n);
        const Spectrum spec_lam = sample_spectrum_values_only(
            n, spec.theta, derive_seed(spec.seed, {kind_id(spec.kind), ci, 1}));
        const ThresholdSet thr =
            compute_thresholds(phase, EigenTriple::from_spectrum(spec_lam));
        if (!thr.valid)
            throw domain_error("hitting: thresholds invalid at this phase point (theta below "
                               "theta_0L)");
        const double dt = spec.dt > 0 ? spec.dt : default_dt(spec_lam.lambda1());

        HittingCell cell;
        cell.n = n;
        cell.thresholds = thr;
        cell.t_hit_budget = thr.t_hit;
        cell.tau.resize(spec.replicas);
        cell.censored.resize(spec.replicas);
        cell.escaped.resize(spec.replicas);

        std::vector<ReplicaHit> hits(spec.replicas);
        parallel_for(spec.replicas, spec.workers, [&](int r) {
            hits[r] = run_hit_replica(spec_lam.lambdas, phase.beta(), dt, thr, retention_time,
                                      replica_seed(spec, ci, r));
        });
        int escapes = 0, hits_total = 0;
        for (int r = 0; r < spec.replicas; ++r) {
            cell.tau[r] = hits[r].tau;
            cell.censored[r] = hits[r].censored;
            cell.escaped[r] = hits[r].escaped;
            if (hits[r].censored) ++cell.over_budget;
            if (!hits[r].censored) {
                ++hits_total;
                if (hits[r].escaped) ++escapes;
            }
        }
        cell.median_tau = median_of(cell.tau);
        cell.escape_fraction = hits_total > 0 ? static_cast<double>(escapes) / hits_total : 0.0;

        // bootstrap CI for the median
        std::vector<double> boot(400);
        std::vector<double> resample(cell.tau.size());
        for (auto& bmed : boot) {
            for (auto& v : resample)
                v = cell.tau[static_cast<std::size_t>(boot_rng.uniform() * cell.tau.size())];
            bmed = median_of(resample);
        }
        std::sort(boot.begin(), boot.end());
        cell.median_ci_lo = quantile_sorted(boot, 0.025);
        cell.median_ci_hi = quantile_sorted(boot, 0.975);
        result.cells.push_back(std::move(cell));
    }

    std::vector<double> logn, med;
    for (const auto& cell : result.cells) {
        logn.push_back(std::log(static_cast<double>(cell.n)));
        med.push_back(cell.median_tau);
    }
    if (logn.size() >= 2) {
        const LineFit fit = fit_line(logn, med);
        result.slope = fit.slope;
        result.intercept = fit.intercept;
        result.r_squared = fit.r_squared;
    }
    return result;
}

}  // namespace

HittingResult hitting_scaling(const ExperimentSpec& spec) { return run_hitting(spec, 0.0); }

HittingResult retention(const ExperimentSpec& spec, double retention_time) {
    return run_hitting(spec, retention_time);
}

// ---- stationary overlap -----------------------------------------------------

OverlapResult stationary_overlap(const ExperimentSpec& spec) {
    if (spec.n_list.empty()) throw domain_error("stationary_overlap: empty N list");
    OverlapResult result;
    for (std::size_t ci = 0; ci < spec.n_list.size(); ++ci) {
        const int n = spec.n_list[ci];
        const PhasePoint phase(spec.theta, spec.alpha, n);
        if (!(phase.beta() * phase.theta > 1))
            throw domain_error("stationary_overlap: requires beta*theta > 1");
        const Spectrum spec_lam = sample_spectrum_values_only(
            n, spec.theta, derive_seed(spec.seed, {kind_id(spec.kind), ci, 1}));
        const double dt = spec.dt > 0 ? spec.dt : default_dt(spec_lam.lambda1());
        const double burn_in = spec.burn_in > 0 ? spec.burn_in : 40.0;
        const double horizon = spec.horizon > 0 ? spec.horizon : burn_in + 100.0;
        const double thin = 1.0;

        std::vector<std::vector<double>> per_replica(spec.replicas);
        parallel_for(spec.replicas, spec.workers, [&](int r) {
            LangevinStepper stepper(spec_lam.lambdas, phase.beta(), dt,
                                    derive_seed(replica_seed(spec, ci, r), {2}));
            GaussianStream init_stream(derive_seed(replica_seed(spec, ci, r), {1}));
            stepper.set_state(make_initial_state(Initialization::uniform(), n, init_stream));
            double next_sample = burn_in;
            while (stepper.t() < horizon) {
                stepper.step();
                if (stepper.t() >= next_sample) {
                    const double m = stepper.m1();
                    per_replica[r].push_back(m * m);
                    next_sample += thin;
                }
            }
        });

        OverlapCell cell;
        cell.n = n;
        std::vector<double> all;
        std::vector<double> rep_means;
        for (const auto& v : per_replica) {
            all.insert(all.end(), v.begin(), v.end());
            rep_means.push_back(mean_of(v));
        }
        cell.samples = static_cast<std::int64_t>(all.size());
        cell.mean_r = mean_of(all);
        cell.mean_r_se = sd_of(rep_means) / std::sqrt(static_cast<double>(rep_means.size()));
        const double sd = sd_of(all);
        cell.var_r = sd * sd;
        const auto pred = stationary_overlap_prediction(phase);
        cell.predicted_mean = pred.mean_r;
        cell.predicted_var = pred.var_r;
        result.cells.push_back(std::move(cell));
    }
    return result;
}

// ---- projected-TV mixing ----------------------------------------------------

namespace {

Initialization init_by_label(const std::string& label, int n) {
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    if (label == "uniform") return Initialization::uniform();
    if (label == "equator") return Initialization::equator();
    if (label == "plus_u1" || label == "minus_u1") {
        VectorXd x = VectorXd::Zero(n);
        x[0] = (label == "plus_u1") ? sqrt_n : -sqrt_n;
        return Initialization::point(std::move(x));
    }
    throw domain_error("projected_tv_mixing: unknown initialization '" + label + "'");
}

}  // namespace

MixingResult projected_tv_mixing(const ExperimentSpec& spec,
                                 const std::vector<std::string>& inits) {
    if (spec.n_list.empty()) throw domain_error("projected_tv_mixing: empty N list");
    const int n = spec.n_list[0];
    const PhasePoint phase(spec.theta, spec.alpha, n);
    const Spectrum spec_lam = sample_spectrum_values_only(
        n, spec.theta, derive_seed(spec.seed, {kind_id(spec.kind), 0, 1}));
    const double dt = spec.dt > 0 ? spec.dt : default_dt(spec_lam.lambda1());
    const double horizon = spec.horizon > 0 ? spec.horizon : 4.0 * 3.0 * std::log(n);

    MixingResult result;
    result.n = n;
    {
        const int g = 8001;
        result.marginal_grid.resize(g);
        for (int i = 0; i < g; ++i)
            result.marginal_grid[i] = -0.9995 + 1.999 * i / (g - 1.0);
        result.marginal_density =
            exact_m_marginal(spec_lam.lambdas, phase.beta(), result.marginal_grid);
    }
    const VectorXd& grid = result.marginal_grid;
    const VectorXd& rho = result.marginal_density;

    // half-restricted marginal (m >= 0), for one-sided initializations
    VectorXd rho_half = rho;
    for (Eigen::Index i = 0; i < grid.size(); ++i)
        if (grid[i] < 0) rho_half[i] = 0;
    {
        double z = 0;
        for (Eigen::Index i = 0; i + 1 < grid.size(); ++i)
            z += 0.5 * (rho_half[i] + rho_half[i + 1]) * (grid[i + 1] - grid[i]);
        rho_half /= z;
    }

    const int record_every = std::max(1, static_cast<int>(std::round(0.05 / dt)));
    const auto steps = static_cast<std::int64_t>(std::ceil(horizon / dt));
    const int t_records = static_cast<int>(steps / record_every) + 1;

    for (std::size_t ii = 0; ii < inits.size(); ++ii) {
        const auto& label = inits[ii];
        const Initialization init = init_by_label(label, n);
        const bool one_sided = label == "plus_u1" || label == "minus_u1";

        MatrixXd m_at(spec.replicas, t_records);
        std::vector<double> rec_times(t_records);
        parallel_for(spec.replicas, spec.workers, [&](int r) {
            const std::uint64_t rs = replica_seed(spec, ii, r);
            LangevinStepper stepper(spec_lam.lambdas, phase.beta(), dt, derive_seed(rs, {2}));
            GaussianStream init_stream(derive_seed(rs, {1}));
            stepper.set_state(make_initial_state(init, n, init_stream));
            int col = 0;
            m_at(r, col) = stepper.m1();
            if (r == 0) rec_times[col] = 0;
            ++col;
            for (std::int64_t k = 1; k <= steps; ++k) {
                stepper.step();
                if (k % record_every == 0 && col < t_records) {
                    m_at(r, col) = stepper.m1();
                    if (r == 0) rec_times[col] = stepper.t();
                    ++col;
                }
            }
            for (; col < t_records; ++col) {
                m_at(r, col) = stepper.m1();
                if (r == 0) rec_times[col] = stepper.t();
            }
        });

        MixingEstimate est;
        est.init_label = label;
        est.times = rec_times;
        est.dhat.resize(t_records);
        est.dhat_half.assign(t_records, std::numeric_limits<double>::quiet_NaN());
        std::vector<double> sample(spec.replicas);
        for (int c = 0; c < t_records; ++c) {
            for (int r = 0; r < spec.replicas; ++r) sample[r] = m_at(r, c);
            const TvEstimate tv = projected_tv(sample, grid, rho);
            est.dhat[c] = tv.tv;
            // transient histograms are naturally off-support; the flag that
            // matters is whether the final histogram is resolvable
            if (c == t_records - 1) est.undersampled = tv.undersampled;
            if (one_sided) est.dhat_half[c] = projected_tv(sample, grid, rho_half).tv;
        }
        est.censored = true;
        for (int c = 0; c < t_records; ++c) {
            if (est.dhat[c] <= 0.25) {
                est.t_mix_est = est.times[c];
                est.censored = false;
                break;
            }
        }
        if (est.censored) est.t_mix_est = horizon;
        result.estimates.push_back(std::move(est));
    }
    return result;
}

// ---- equator transit --------------------------------------------------------

TransitResult transit_rate(const ExperimentSpec& spec) {
    if (spec.n_list.empty()) throw domain_error("transit_rate: empty N list");
    if (!(spec.alpha > 1)) throw domain_error("transit requires alpha > 1");
    TransitResult result;
    result.delta = delta_rate(PhasePoint(spec.theta, spec.alpha, spec.n_list[0]));

    std::vector<std::vector<double>> cell_taus(spec.n_list.size());
    for (std::size_t ci = 0; ci < spec.n_list.size(); ++ci) {
        const int n = spec.n_list[ci];
        const PhasePoint phase(spec.theta, spec.alpha, n);
        const int instances = std::max(1, spec.instances);
        std::vector<VectorXd> lams(instances);
        for (int k = 0; k < instances; ++k)
            lams[k] = sample_spectrum_values_only(
                          n, spec.theta, derive_seed(spec.seed, {kind_id(spec.kind), ci, 1,
                                                                 static_cast<std::uint64_t>(k)}))
                          .lambdas;
        const double burn_in = spec.burn_in > 0 ? spec.burn_in : 10.0 * 3.0 * std::log(n);
        const double horizon = spec.horizon > 0
                                   ? spec.horizon
                                   : 200.0 * std::exp(result.delta * n) + 10.0 * burn_in;

        TransitCell cell;
        cell.n = n;
        std::vector<double> taus(spec.replicas, -1.0);
        parallel_for(spec.replicas, spec.workers, [&](int r) {
            const VectorXd& lam = lams[r % instances];
            const double dt = spec.dt > 0 ? spec.dt : default_dt(lam.maxCoeff());
            const std::uint64_t rs = replica_seed(spec, ci, r);
            LangevinStepper stepper(lam, phase.beta(), dt, derive_seed(rs, {2}));
            GaussianStream init_stream(derive_seed(rs, {1}));
            VectorXd x0 = make_initial_state(Initialization::uniform(), n, init_stream);
            if (x0[0] < 0) x0[0] = -x0[0];
            stepper.set_state(x0);
            // approximate pi^+ by reflected relaxation, then release
            while (stepper.t() < burn_in) stepper.step_reflected();
            const double t0 = stepper.t();
            double m_prev = stepper.m1();
            while (stepper.t() - t0 < horizon) {
                stepper.step();
                const double m = stepper.m1();
                if (m <= 0) {
                    const double frac = (m == m_prev) ? 1.0 : m_prev / (m_prev - m);
                    taus[r] = stepper.t() - dt + std::clamp(frac, 0.0, 1.0) * dt - t0;
                    break;
                }
                m_prev = m;
            }
        });
        std::vector<double> ok;
        for (double t : taus)
            if (t >= 0)
                ok.push_back(t);
            else
                ++cell.censored;
        cell.transits = static_cast<int>(ok.size());
        cell.mean_tau = ok.empty() ? std::numeric_limits<double>::quiet_NaN() : mean_of(ok);
        cell.mean_tau_se =
            ok.size() > 1 ? sd_of(ok) / std::sqrt(static_cast<double>(ok.size())) : 0.0;
        cell_taus[ci] = std::move(ok);
        result.cells.push_back(cell);
    }

    // slope of log(mean tau) against N over cells without censoring
    std::vector<double> xs, ys;
    std::vector<std::size_t> used;
    for (std::size_t ci = 0; ci < result.cells.size(); ++ci) {
        const auto& cell = result.cells[ci];
        if (cell.censored > 0 || cell.transits == 0) {
            result.excluded_n.push_back(cell.n);
            continue;
        }
        xs.push_back(static_cast<double>(cell.n));
        ys.push_back(std::log(cell.mean_tau));
        used.push_back(ci);
    }
    if (xs.size() >= 2) {
        result.slope = fit_line(xs, ys).slope;
        // bootstrap over replicas within each used cell
        GaussianStream boot_rng(derive_seed(spec.seed, {kind_id(spec.kind), 98}));
        std::vector<double> slopes(400);
        for (auto& s : slopes) {
            std::vector<double> by(xs.size());
            for (std::size_t j = 0; j < used.size(); ++j) {
                const auto& taus = cell_taus[used[j]];
                double acc = 0;
                for (std::size_t k = 0; k < taus.size(); ++k)
                    acc += taus[static_cast<std::size_t>(boot_rng.uniform() * taus.size())];
                by[j] = std::log(acc / static_cast<double>(taus.size()));
            }
            s = fit_line(xs, by).slope;
        }
        std::sort(slopes.begin(), slopes.end());
        result.slope_ci_lo = quantile_sorted(slopes, 0.025);
        result.slope_ci_hi = quantile_sorted(slopes, 0.975);
    }
    return result;
}

// ---- equator hit ------------------------------------------------------------

EquatorHitResult equator_hit(const ExperimentSpec& spec) {
    if (spec.n_list.empty()) throw domain_error("equator_hit: empty N list");
    const int n = spec.n_list[0];
    if (n > 32) throw domain_error("equator_hit: intended for N <= 32");
    if (!(spec.epsilon > 0) || spec.epsilon > 0.1)
        throw domain_error("equator_hit: need 0 < epsilon <= 0.1");
    const PhasePoint phase(spec.theta, spec.alpha, n);
    const Spectrum spec_lam = sample_spectrum_values_only(
        n, spec.theta, derive_seed(spec.seed, {kind_id(spec.kind), 0, 1}));
    const double dt = spec.dt > 0 ? spec.dt : default_dt(spec_lam.lambda1());
    const double beta = phase.beta();

    std::vector<int> hit(spec.replicas, 0);
    parallel_for(spec.replicas, spec.workers, [&](int r) {
        const std::uint64_t rs = replica_seed(spec, 0, r);
        LangevinStepper stepper(spec_lam.lambdas, beta, dt, derive_seed(rs, {2}));
        GaussianStream init_stream(derive_seed(rs, {1}));
        stepper.set_state(
            make_initial_state(Initialization::plus_cap(spec.epsilon), n, init_stream));
        while (stepper.t() < 1.0) {
            stepper.step();
            if (stepper.m1() <= 0) {
                hit[r] = 1;
                break;
            }
        }
    });

    EquatorHitResult result;
    result.n = n;
    result.epsilon = spec.epsilon;
    result.replicas = spec.replicas;
    result.hits = std::accumulate(hit.begin(), hit.end(), 0);
    result.empirical_p = static_cast<double>(result.hits) / spec.replicas;
    const double c = spec_lam.lambda1() - spec_lam.lambdaN() -
                     (1.0 - 2.0 / static_cast<double>(n)) / beta;
    result.lower_bound = std::exp(-5.0 * beta * c * n * spec.epsilon);
    return result;
}

// ---- phase diagram ----------------------------------------------------------

std::vector<PhaseCell> phase_diagram(const ExperimentSpec& spec) {
    if (spec.alpha_grid.empty() || spec.theta_grid.empty())
        throw domain_error("phase_diagram: empty grid");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<PhaseCell> cells;
    for (double alpha : spec.alpha_grid) {
        for (double theta : spec.theta_grid) {
            PhaseCell cell;
            cell.alpha = alpha;
            cell.theta = theta;
            cell.m_e = cell.m_be = cell.m_pi = nan;
            cell.theta_0l = nan;
            cell.delta = nan;
            if (theta > 1) {
                try {
                    const ThresholdSet thr = compute_thresholds(PhasePoint(theta, alpha, 1000),
                                                                EigenTriple::limiting(theta));
                    cell.m_e = thr.m_e;
                    cell.m_be = thr.m_be;
                    cell.m_pi = thr.m_pi;
                    cell.valid = thr.valid;
                } catch (const domain_error&) {
                }
            }
            if (alpha > 1) cell.theta_0l = theta_0L(alpha);
            if (alpha > 1 && theta > 1) cell.delta = delta_rate(PhasePoint(theta, alpha, 1000));
            if (alpha < 1 && alpha > 0 && theta > theta_0H(alpha))
                cell.label = "high_T_fast";
            else if (alpha > 1 && theta > 1 && theta > cell.theta_0l)
                cell.label = "low_T_symmetric_fast";
            else
                cell.label = "unresolved";
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

}  // namespace slab
