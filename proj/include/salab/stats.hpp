#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "salab/linalg.hpp"

namespace salab {

struct RateFit {
    std::vector<double> xs;
    std::vector<double> ys;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double slope_ci_lo = 0.0;  // bootstrap 95%
    double slope_ci_hi = 0.0;
    bool no_signal = false;    // set when ys carry no usable positive values
};

// OLS on (log x, log y); pairs with y <= 0 are dropped (baseline-subtracted
// distances can dip below zero inside noise).
RateFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys,
                   int bootstrap_reps = 2000, std::uint64_t seed = 1234);

// Plain OLS slope through (x, y).
std::pair<double, double> ols(const std::vector<double>& xs, const std::vector<double>& ys);

struct WilsonInterval {
    double lo;
    double hi;
};

// 95% by default (z = 1.959964)
WilsonInterval wilson_interval(std::int64_t successes, std::int64_t trials, double z = 1.959964);

double sample_mean(const std::vector<double>& v);
double sample_sd(const std::vector<double>& v);

// Jackknife standard error of the mean of a matrix-valued statistic, returned
// entrywise for the empirical second-moment matrix of rows of y.
Matrix second_moment(const Matrix& rows);
Matrix second_moment_jackknife_se(const Matrix& rows);

}  // namespace salab
