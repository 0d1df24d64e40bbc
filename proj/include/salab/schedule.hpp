#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "salab/errors.hpp"
#include "salab/linalg.hpp"

namespace salab {

// gamma_k = gamma1 * k^{-a}, a in (0, 1]
struct StepSchedule {
    double gamma1;
    double a;

    StepSchedule(double g1, double exponent) : gamma1(g1), a(exponent) {
        if (!(gamma1 > 0.0)) throw ConfigError("schedule: gamma1 must be positive");
        if (!(a > 0.0 && a <= 1.0)) throw ConfigError("schedule: a must lie in (0, 1]");
    }

    double gamma(std::int64_t k) const { return gamma1 * std::pow(static_cast<double>(k), -a); }

    // direct summation, no closed-form approximation
    double block_step_sum(std::int64_t k_begin, std::int64_t k_end) const {
        double h = 0.0;
        for (std::int64_t k = k_begin; k < k_end; ++k) h += gamma(k);
        return h;
    }
};

struct Partition {
    std::vector<std::int64_t> boundaries;  // k_1 < ... < k_{N+1} = n
    std::vector<std::int64_t> lengths;     // I_m
    std::vector<double> block_steps;       // H_m

    int num_blocks() const { return static_cast<int>(lengths.size()); }
};

// Greedy blocks with I_m = max(1, ceil(c * gamma_{k_m}^{-2/3})), mirroring the
// optimal block-length scaling of the theory.
Partition make_partition(const StepSchedule& schedule, std::int64_t n, double c);

// E_k^a = | sqrt(g_k/g_{k+1}) (I - g_k J) - (I - g_k A_a) |_Q
double compute_eka(const StepSchedule& schedule, const Matrix& grad_f_bar_at_star,
                   const DriftMatrix& a_bar, const Matrix& q, std::int64_t k);

}  // namespace salab
