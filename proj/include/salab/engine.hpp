#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "salab/linalg.hpp"
#include "salab/noise.hpp"
#include "salab/schedule.hpp"

namespace salab {

// The SA instance: the noisy operator f, its mean field, and the target root.
// Callables receive the chain-state payload for the current step.
struct ProblemSpec {
    int dim = 0;
    std::function<Vector(const Vector&, const StateData&)> f;
    // optional allocation-free variant used by the inner loop; must agree with f
    std::function<void(const Vector&, const StateData&, Vector&)> f_into;
    std::function<Vector(const Vector&)> f_bar;
    Matrix grad_f_bar_at_star;
    Vector x_star;

    // f(x*, xi) per state, rows per state; used for the Poisson equation
    Matrix f_at_star(const MarkovChainSpec& chain) const;
    void validate(const MarkovChainSpec& chain) const;
};

struct Snapshot {
    std::int64_t k;
    Matrix x;      // n_traj x d
    Matrix y;      // gamma_k^{-1/2} (x_k - x*)
    Matrix xbar;   // running PR average of x_1..x_k
    Matrix ybar;   // sqrt(k) (xbar - x*)
    bool pre_burn_in = false;
};

// Full per-step record for one trajectory; only kept when retain_paths is on.
struct RetainedPath {
    std::vector<int> xi_prev;
    std::vector<int> xi;
    Matrix x;  // x_k before the step-k update, rows 0..n-1 for k = 1..n
    Matrix w;
    Matrix m;
};

struct TrajectoryEnsemble {
    std::vector<Snapshot> snapshots;
    std::vector<RetainedPath> paths;
    std::int64_t horizon = 0;
    int n_traj = 0;
};

struct RunOptions {
    int n_traj = 1;
    Vector x1;
    bool retain_paths = false;
    int threads = 1;
    double blowup_threshold = 1e12;
    std::int64_t burn_in = 0;  // snapshots before this index are flagged, not dropped
};

// x_{k+1} = x_k - gamma_k (f(x_k, xi_k) + W_k); deterministic per seed and
// identical for any thread count.
TrajectoryEnsemble run_sa(const ProblemSpec& problem, const MarkovChainSpec& chain,
                          const MdsSpec& mds, const PoissonSolution& poisson,
                          const StepSchedule& schedule, std::int64_t horizon,
                          std::uint64_t seed, const std::vector<std::int64_t>& checkpoints,
                          const RunOptions& options);

Vector scaled_error(const StepSchedule& schedule, const Vector& x_k, std::int64_t k,
                    const Vector& x_star);

// Default burn-in: 0 for a < 1; for a = 1 the first index where the step is
// inside the guaranteed-contraction region.
std::int64_t default_burn_in(const StepSchedule& schedule, double lambda_dt);

struct BlockSums {
    // [block][trajectory]
    std::vector<std::vector<Vector>> z_hat;
    std::vector<std::vector<Vector>> s;
};

BlockSums block_sums(const TrajectoryEnsemble& ensemble, const StepSchedule& schedule,
                     const Partition& partition, const Matrix& gamma_mat);

// Per-step terms (a)-(e) of the scaled-error recursion plus the per-block
// term (f); sums are exact algebra over the stored path.
struct RemainderDecomposition {
    // [block][trajectory]: block sums of each per-step term
    std::vector<std::vector<Vector>> term_a, term_b, term_c, term_d, term_e;
    std::vector<std::vector<Vector>> term_f;
    std::vector<std::vector<Vector>> r_tilde;       // sum of (a)-(e) over block + (f)
    double max_step_identity_error = 0.0;           // relative, over all steps checked
    double max_telescope_error = 0.0;               // relative, per block reconstruction
};

RemainderDecomposition decompose_remainder(const TrajectoryEnsemble& ensemble,
                                           const ProblemSpec& problem,
                                           const MarkovChainSpec& chain,
                                           const PoissonSolution& poisson,
                                           const StepSchedule& schedule,
                                           const Partition& partition,
                                           const DriftMatrix& a_bar,
                                           const Matrix& gamma_mat);

struct CovarianceTrack {
    std::vector<std::int64_t> ks;
    std::vector<Matrix> sigma_y;     // empirical second moment of y_k
    std::vector<Matrix> se;          // jackknife standard errors, entrywise
};

CovarianceTrack track_scaled_covariance(const TrajectoryEnsemble& ensemble);

}  // namespace salab
