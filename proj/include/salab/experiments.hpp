#pragma once

#include <string>

#include "salab/config.hpp"
#include "salab/stats.hpp"

namespace salab {

struct ExperimentResult {
    Json summary;
    bool assertions_ok = true;  // only meaningful when the caller requested assertions
};

// Dispatches on config.experiment:
//   simulate | last_iterate_rate | covariance_rate | pr_average_rate |
//   coupling_rate | confidence_intervals | lsa_tail_transition | sgd_markov |
//   recursion_lemma
// Writes CSV streams and a summary JSON under config.output_dir; pure
// function of (config, seed) including the emitted bytes.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Cloud-vs-cloud distance to the N(0, Sigma) limit with a matched-size
// same-law baseline, as used by the rate experiments.
struct DistanceReport {
    double value;          // raw estimate
    double baseline;       // same-law estimate at the same n
    double adjusted;       // value - baseline
    std::string method;
    std::int64_t n = 0;    // samples per cloud
};

// reps > 1 averages the estimate over independent reference clouds.
DistanceReport distance_to_gaussian_limit(const Matrix& cloud, const Matrix& sigma, double p,
                                          std::uint64_t seed, int reps = 1);

// Deterministic covariance recursion for linear SA with additive iid noise:
// E x x' propagated exactly, reported as the scaled Sigma_k^y track.
std::vector<Matrix> exact_covariance_recursion(const Matrix& a_mean, const Matrix& gamma_w,
                                               const StepSchedule& schedule,
                                               const Matrix& x1_outer,
                                               const std::vector<std::int64_t>& checkpoints);

}  // namespace salab
