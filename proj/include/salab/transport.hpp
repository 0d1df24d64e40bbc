#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "salab/linalg.hpp"

namespace salab {

// Equal-weight sample cloud. Rows are samples.
struct EmpiricalMeasure {
    Matrix samples;
    std::optional<Matrix> weight_matrix;  // SPD Q for weighted cost

    int dim() const { return static_cast<int>(samples.cols()); }
    std::int64_t size() const { return samples.rows(); }

    void validate() const;
};

enum class WassersteinMethod { exact_1d, exact_assignment, sliced, gaussian_closed_form };

struct WassersteinEstimate {
    double p;
    double value;
    WassersteinMethod method;
    std::int64_t n_used;
    std::optional<double> se;
};

const char* method_name(WassersteinMethod m);

// Exact optimal transport in 1D: sorted (monotone) coupling.
WassersteinEstimate wasserstein_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                   double p);

// Exact empirical OT for any dimension via the assignment problem,
// shortest-augmenting-path solver; n limited to 4096.
WassersteinEstimate wasserstein_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                      double p,
                                      const std::optional<Matrix>& q = std::nullopt);

// Sliced surrogate: mean of 1D W_p^p over random unit directions. A
// lower-bound-style proxy; never a substitute for the exact metric in
// acceptance checks.
WassersteinEstimate wasserstein_sliced(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                       double p, int n_directions, std::uint64_t seed);

// Bures / Gaussian closed form for W2.
double gaussian_w2(const Vector& mean1, const Matrix& cov1, const Vector& mean2,
                   const Matrix& cov2);

struct MomentProfile {
    std::vector<double> orders;
    std::vector<double> values;    // L_p norms of |.|_Q over the cloud
    Vector kurtosis;               // excess kurtosis per component
};

MomentProfile moment_profile(const EmpiricalMeasure& mu, const std::vector<double>& orders,
                             const std::optional<Matrix>& q = std::nullopt);

// Minimum-cost perfect matching on a dense double cost matrix
// (Jonker-Volgenant style shortest augmenting paths). Returns assignment
// row -> column and fills total_cost.
std::vector<int> solve_assignment(const Matrix& cost, double& total_cost);

}  // namespace salab
