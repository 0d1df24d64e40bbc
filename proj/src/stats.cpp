#include "salab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "salab/rng.hpp"

namespace salab {

std::pair<double, double> ols(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    const double slope = (sxx > 0.0) ? sxy / sxx : 0.0;
    return {slope, my - slope * mx};
}

RateFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys,
                   int bootstrap_reps, std::uint64_t seed) {
    RateFit fit;
    fit.xs = xs;
    fit.ys = ys;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] > 0.0 && ys[i] > 0.0) {
            lx.push_back(std::log(xs[i]));
            ly.push_back(std::log(ys[i]));
        }
    }
    if (lx.size() < 2) {
        fit.no_signal = true;
        return fit;
    }
    auto [slope, intercept] = ols(lx, ly);
    fit.slope = slope;
    fit.intercept = intercept;

    double ss_res = 0.0, ss_tot = 0.0;
    const double my = sample_mean(ly);
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double pred = intercept + slope * lx[i];
        ss_res += (ly[i] - pred) * (ly[i] - pred);
        ss_tot += (ly[i] - my) * (ly[i] - my);
    }
    fit.r2 = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;

    if (lx.size() >= 4 && bootstrap_reps > 0) {
        // resample points with replacement
        CounterRng rng(seed, 0xB007ULL);
        std::vector<double> slopes;
        slopes.reserve(bootstrap_reps);
        const std::size_t m = lx.size();
        std::vector<double> bx(m), by(m);
        for (int rep = 0; rep < bootstrap_reps; ++rep) {
            for (std::size_t i = 0; i < m; ++i) {
                const std::size_t j = rng.next_u64() % m;
                bx[i] = lx[j];
                by[i] = ly[j];
            }
            slopes.push_back(ols(bx, by).first);
        }
        std::sort(slopes.begin(), slopes.end());
        fit.slope_ci_lo = slopes[static_cast<std::size_t>(0.025 * bootstrap_reps)];
        fit.slope_ci_hi = slopes[static_cast<std::size_t>(0.975 * bootstrap_reps)];
    } else {
        fit.slope_ci_lo = fit.slope_ci_hi = fit.slope;
    }
    return fit;
}

WilsonInterval wilson_interval(std::int64_t successes, std::int64_t trials, double z) {
    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = phat + z2 / (2.0 * n);
    const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n));
    return {(center - half) / denom, (center + half) / denom};
}

double sample_mean(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    const double m = sample_mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

Matrix second_moment(const Matrix& rows) {
    return rows.transpose() * rows / static_cast<double>(rows.rows());
}

Matrix second_moment_jackknife_se(const Matrix& rows) {
    const std::int64_t n = rows.rows();
    const int d = static_cast<int>(rows.cols());
    const Matrix total = rows.transpose() * rows;
    const Matrix full = total / static_cast<double>(n);
    Matrix mean_loo = Matrix::Zero(d, d);
    std::vector<Matrix> loo(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const Vector r = rows.row(i).transpose();
        loo[i] = (total - r * r.transpose()) / static_cast<double>(n - 1);
        mean_loo += loo[i];
    }
    mean_loo /= static_cast<double>(n);
    Matrix var = Matrix::Zero(d, d);
    for (std::int64_t i = 0; i < n; ++i) {
        const Matrix diff = loo[i] - mean_loo;
        var += diff.cwiseProduct(diff);
    }
    var *= static_cast<double>(n - 1) / static_cast<double>(n);
    return var.cwiseSqrt();
}

}  // namespace salab
