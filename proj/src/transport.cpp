#include "salab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "salab/rng.hpp"

namespace salab {

void EmpiricalMeasure::validate() const {
    if (size() < 2) throw ConfigError("empirical measure: need at least 2 samples");
    if (!samples.allFinite()) throw ConfigError("empirical measure: non-finite sample");
    if (weight_matrix) require_spd(*weight_matrix, "empirical measure Q");
}

const char* method_name(WassersteinMethod m) {
    switch (m) {
        case WassersteinMethod::exact_1d: return "exact_1d";
        case WassersteinMethod::exact_assignment: return "exact_assignment";
        case WassersteinMethod::sliced: return "sliced";
        case WassersteinMethod::gaussian_closed_form: return "gaussian_closed_form";
    }
    return "?";
}

namespace {

void check_pair(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    mu.validate();
    nu.validate();
    if (mu.size() != nu.size()) throw UnequalSizes("wasserstein: sample counts differ");
    if (mu.dim() != nu.dim()) throw DimensionMismatch("wasserstein: dimensions differ");
}

double sorted_1d_wp_pow(std::vector<double> a, std::vector<double> b, double p) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::pow(std::abs(a[i] - b[i]), p);
    return acc / static_cast<double>(a.size());
}

}  // namespace

WassersteinEstimate wasserstein_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                   double p) {
    check_pair(mu, nu);
    if (mu.dim() != 1) throw DimensionMismatch("wasserstein_1d: d must be 1");
    if (p < 1.0) throw ConfigError("wasserstein_1d: p must be >= 1");
    std::vector<double> a(mu.samples.data(), mu.samples.data() + mu.size());
    std::vector<double> b(nu.samples.data(), nu.samples.data() + nu.size());
    const double v = std::pow(sorted_1d_wp_pow(std::move(a), std::move(b), p), 1.0 / p);
    return {p, v, WassersteinMethod::exact_1d, mu.size(), std::nullopt};
}

std::vector<int> solve_assignment(const Matrix& cost, double& total_cost) {
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    // shortest augmenting path with dual potentials, 1-based internal arrays
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> rowsol(n, -1);
    total_cost = 0.0;
    for (int j = 1; j <= n; ++j) {
        if (p[j]) {
            rowsol[p[j] - 1] = j - 1;
            total_cost += cost(p[j] - 1, j - 1);
        }
    }
    return rowsol;
}

WassersteinEstimate wasserstein_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                      double p, const std::optional<Matrix>& q) {
    check_pair(mu, nu);
    if (p < 1.0) throw ConfigError("wasserstein_exact: p must be >= 1");
    const std::int64_t n = mu.size();
    if (n > 4096) throw SizeLimit("wasserstein_exact: n limited to 4096");

    const std::optional<Matrix>& weight = q ? q : mu.weight_matrix;
    Matrix q_half;
    if (weight) {
        require_spd(*weight, "wasserstein_exact Q");
        q_half = psd_sqrt(*weight);
    }
    Matrix cost(n, n);
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < n; ++j) {
            Vector diff = (mu.samples.row(i) - nu.samples.row(j)).transpose();
            if (weight) diff = q_half * diff;
            cost(i, j) = std::pow(diff.norm(), p);
        }
    }
    double total = 0.0;
    solve_assignment(cost, total);
    const double v = std::pow(std::max(total, 0.0) / static_cast<double>(n), 1.0 / p);
    return {p, v, WassersteinMethod::exact_assignment, n, std::nullopt};
}

WassersteinEstimate wasserstein_sliced(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                       double p, int n_directions, std::uint64_t seed) {
    check_pair(mu, nu);
    if (p < 1.0) throw ConfigError("wasserstein_sliced: p must be >= 1");
    if (n_directions < 1) throw ConfigError("wasserstein_sliced: need at least one direction");
    const int d = mu.dim();
    CounterRng rng(seed, /*stream=*/0x5C1CEDULL);
    double acc = 0.0, acc2 = 0.0;
    for (int k = 0; k < n_directions; ++k) {
        Vector dir = rng.gaussian_vector(d);
        const double norm = dir.norm();
        dir = (norm > 0.0) ? Vector(dir / norm) : Vector::Unit(d, 0);
        std::vector<double> a(mu.size()), b(nu.size());
        for (std::int64_t i = 0; i < mu.size(); ++i) a[i] = mu.samples.row(i).dot(dir);
        for (std::int64_t i = 0; i < nu.size(); ++i) b[i] = nu.samples.row(i).dot(dir);
        const double wpp = sorted_1d_wp_pow(std::move(a), std::move(b), p);
        acc += wpp;
        acc2 += wpp * wpp;
    }
    const double mean_pow = acc / n_directions;
    const double v = std::pow(mean_pow, 1.0 / p);
    std::optional<double> se;
    if (n_directions > 1 && mean_pow > 0.0) {
        const double var = std::max(0.0, acc2 / n_directions - mean_pow * mean_pow);
        // delta method through x -> x^{1/p}
        se = std::pow(mean_pow, 1.0 / p - 1.0) / p *
             std::sqrt(var / (n_directions - 1));
    }
    return {p, v, WassersteinMethod::sliced, mu.size(), se};
}

double gaussian_w2(const Vector& mean1, const Matrix& cov1, const Vector& mean2,
                   const Matrix& cov2) {
    require_psd(cov1, "gaussian_w2 cov1");
    require_psd(cov2, "gaussian_w2 cov2");
    const Matrix c2_half = psd_sqrt(cov2);
    const Matrix cross = psd_sqrt(Matrix(c2_half * cov1 * c2_half));
    const double bures = (cov1 + cov2 - 2.0 * cross).trace();
    const double sq = (mean1 - mean2).squaredNorm() + std::max(bures, 0.0);
    return std::sqrt(sq);
}

MomentProfile moment_profile(const EmpiricalMeasure& mu, const std::vector<double>& orders,
                             const std::optional<Matrix>& q) {
    mu.validate();
    const std::int64_t n = mu.size();
    const int d = mu.dim();
    const std::optional<Matrix>& weight = q ? q : mu.weight_matrix;
    Matrix q_half;
    if (weight) {
        require_spd(*weight, "moment_profile Q");
        q_half = psd_sqrt(*weight);
    }

    Vector norms(n);
    for (std::int64_t i = 0; i < n; ++i) {
        Vector v = mu.samples.row(i).transpose();
        if (weight) v = q_half * v;
        norms(i) = v.norm();
    }

    MomentProfile out;
    out.orders = orders;
    for (double p : orders) {
        if (p < 1.0) throw ConfigError("moment_profile: orders must be >= 1");
        double acc = 0.0;
        for (std::int64_t i = 0; i < n; ++i) acc += std::pow(norms(i), p);
        out.values.push_back(std::pow(acc / static_cast<double>(n), 1.0 / p));
    }

    out.kurtosis.resize(d);
    for (int c = 0; c < d; ++c) {
        const double mean = mu.samples.col(c).mean();
        double m2 = 0.0, m4 = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            const double x = mu.samples(i, c) - mean;
            m2 += x * x;
            m4 += x * x * x * x;
        }
        m2 /= static_cast<double>(n);
        m4 /= static_cast<double>(n);
        out.kurtosis(c) = (m2 > 0.0) ? m4 / (m2 * m2) - 3.0 : 0.0;
    }
    return out;
}

}  // namespace salab
