#include "salab/schedule.hpp"

namespace salab {

Partition make_partition(const StepSchedule& schedule, std::int64_t n, double c) {
    if (n < 4) throw DegeneratePartition("make_partition: n must be at least 4");
    if (!(c > 0.0)) throw ConfigError("make_partition: c must be positive");

    Partition p;
    std::int64_t k = 1;
    while (k < n) {
        const double g = schedule.gamma(k);
        std::int64_t len =
            std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(c * std::pow(g, -2.0 / 3.0))));
        if (k + len > n) len = n - k;  // clamp the last block
        p.boundaries.push_back(k);
        p.lengths.push_back(len);
        p.block_steps.push_back(schedule.block_step_sum(k, k + len));
        k += len;
    }
    p.boundaries.push_back(n);
    if (p.num_blocks() < 2) {
        throw DegeneratePartition("make_partition: horizon too small to fit two blocks");
    }
    return p;
}

double compute_eka(const StepSchedule& schedule, const Matrix& grad_f_bar_at_star,
                   const DriftMatrix& a_bar, const Matrix& q, std::int64_t k) {
    const int d = a_bar.dim;
    const double gk = schedule.gamma(k);
    const double gk1 = schedule.gamma(k + 1);
    const Matrix id = Matrix::Identity(d, d);
    const Matrix m = std::sqrt(gk / gk1) * (id - gk * grad_f_bar_at_star) - (id - gk * a_bar.entries);
    return weighted_operator_norm(q, m);
}

}  // namespace salab
