#pragma once

#include "slab/dynamics.hpp"
#include "slab/free_energy.hpp"
#include "slab/matrix_model.hpp"
#include "slab/thresholds.hpp"
#include "slab/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace slab {

// Round-robin task map over a small thread pool. Tasks write only to their
// own slots; aggregation stays in index order so results are identical for
// any worker count.
void parallel_for(int n_tasks, int workers, const std::function<void(int)>& fn);

struct ExperimentSpec {
    enum class Kind {
        hitting_scaling,
        retention,
        stationary_overlap,
        projected_tv,
        transit_rate,
        phase_diagram,
        equator_hit
    };
    Kind kind = Kind::hitting_scaling;
    double alpha = 0;
    double theta = 0;
    std::vector<int> n_list;
    int replicas = 100;
    double horizon = 0;     // 0 -> per-experiment default
    double dt = 0;          // 0 -> default_dt(lambda1)
    std::uint64_t seed = 1;
    int workers = 1;

    // kind-specific knobs
    double burn_in = 0;         // stationary_overlap / transit_rate (0 -> default)
    double epsilon = 0.05;      // equator_hit cap overlap
    int instances = 1;          // transit_rate instances per N
    std::vector<double> alpha_grid, theta_grid;  // phase_diagram
};

std::uint64_t replica_seed(const ExperimentSpec& spec, std::uint64_t cell,
                           std::uint64_t replica);

// ---- histogram / projected-TV machinery -----------------------------------

// Freedman-Diaconis bin width: 2 IQR / n^(1/3). Falls back to a range-based
// width for degenerate samples.
double freedman_diaconis_width(std::vector<double> sample);

// Reference bin probabilities by integrating the density's trapezoid CDF.
std::vector<double> bin_reference(const VectorXd& grid, const VectorXd& rho, double lo,
                                  double width, int bins);

struct TvEstimate {
    double tv = 1.0;
    bool undersampled = false;  // some bin had expected count < 5
};

// Projected TV between the sample's histogram (FD bins spanning [-1,1]) and
// an exact density on a fine grid.
TvEstimate projected_tv(const std::vector<double>& sample, const VectorXd& grid,
                        const VectorXd& rho);

// Empirical-vs-empirical TV on shared binnings; the pair version refines the
// m-binning, so tv_1d <= tv_2d holds exactly (projection inequality).
double empirical_tv_1d(const std::vector<double>& a, const std::vector<double>& b, double lo,
                       double hi, int bins);
double empirical_tv_2d(const std::vector<std::pair<double, double>>& a,
                       const std::vector<std::pair<double, double>>& b, double lo, double hi,
                       int bins, double lo2, double hi2, int bins2);

// ---- hitting / retention ----------------------------------------------------

struct HittingCell {
    int n = 0;
    double t_hit_budget = 0;
    std::vector<double> tau;        // per replica, horizon value when censored
    std::vector<bool> censored;
    std::vector<bool> escaped;      // |m| dropped below m2 within retention window
    double median_tau = 0;
    double median_ci_lo = 0, median_ci_hi = 0;
    int over_budget = 0;
    double escape_fraction = 0;
    ThresholdSet thresholds;
};

struct HittingResult {
    std::vector<HittingCell> cells;
    double slope = 0, intercept = 0, r_squared = 0;  // median tau vs log N
};

// Uniform-at-random start; per replica the first time |m| >= m3, budgeted by
// t_hit. retention_time > 0 keeps each replica running after its hit and
// reports drops below m2.
HittingResult hitting_scaling(const ExperimentSpec& spec);
HittingResult retention(const ExperimentSpec& spec, double retention_time = 100.0);

// ---- stationary overlap -----------------------------------------------------

struct OverlapCell {
    int n = 0;
    double mean_r = 0;
    double mean_r_se = 0;
    double var_r = 0;
    double predicted_mean = 0;
    double predicted_var = 0;
    std::int64_t samples = 0;
};

struct OverlapResult {
    std::vector<OverlapCell> cells;
};

OverlapResult stationary_overlap(const ExperimentSpec& spec);

// ---- projected-TV mixing ----------------------------------------------------

struct MixingEstimate {
    std::string init_label;
    std::vector<double> times;
    std::vector<double> dhat;       // vs full stationary marginal
    std::vector<double> dhat_half;  // vs half-restricted marginal (one-sided inits)
    double t_mix_est = 0;
    bool censored = true;
    bool undersampled = false;
};

struct MixingResult {
    int n = 0;
    std::vector<MixingEstimate> estimates;
    VectorXd marginal_grid;
    VectorXd marginal_density;
};

// One estimate per initialization label: "uniform", "equator", "plus_u1",
// "minus_u1" (subset configurable).
MixingResult projected_tv_mixing(const ExperimentSpec& spec,
                                 const std::vector<std::string>& inits);

// ---- equator transit --------------------------------------------------------

struct TransitCell {
    int n = 0;
    double mean_tau = 0;
    double mean_tau_se = 0;
    int transits = 0;
    int censored = 0;
};

struct TransitResult {
    std::vector<TransitCell> cells;
    double slope = 0;             // of log(mean tau) against N
    double slope_ci_lo = 0, slope_ci_hi = 0;
    double delta = 0;             // closed-form rate for comparison
    std::vector<int> excluded_n;  // cells dropped from the fit (censoring)
};

TransitResult transit_rate(const ExperimentSpec& spec);

// ---- equator hit lower bound ------------------------------------------------

struct EquatorHitResult {
    int n = 0;
    double epsilon = 0;
    double empirical_p = 0;
    double lower_bound = 0;  // e^{-5 beta C N eps}, C = lambda1-lambdaN-(1-2/N)/beta
    int hits = 0;
    int replicas = 0;
};

EquatorHitResult equator_hit(const ExperimentSpec& spec);

// ---- phase diagram ----------------------------------------------------------

struct PhaseCell {
    double alpha = 0, theta = 0;
    double m_e = 0, m_be = 0, m_pi = 0;
    bool valid = false;
    double theta_0l = 0;  // NaN outside alpha > 1
    double delta = 0;     // NaN outside alpha > 1, theta > 1
    std::string label;    // high_T_fast / low_T_symmetric_fast / unresolved
};

std::vector<PhaseCell> phase_diagram(const ExperimentSpec& spec);

// Least-squares line fit with R^2.
struct LineFit {
    double slope = 0, intercept = 0, r_squared = 0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace slab
