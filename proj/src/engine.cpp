#include "salab/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace salab {

Matrix ProblemSpec::f_at_star(const MarkovChainSpec& chain) const {
    Matrix g(chain.n_states, dim);
    for (int s = 0; s < chain.n_states; ++s) {
        g.row(s) = f(x_star, chain.state_values[s]).transpose();
    }
    return g;
}

void ProblemSpec::validate(const MarkovChainSpec& chain) const {
    if (dim < 1) throw ConfigError("problem: dim must be positive");
    if (x_star.size() != dim) throw ConfigError("problem: x_star size mismatch");
    const Vector fb = f_bar(x_star);
    if (fb.lpNorm<Eigen::Infinity>() > 1e-10)
        throw ConfigError("problem: f_bar(x_star) is not zero");
    const Vector pi = stationary_distribution(chain);
    const Vector mean_f = f_at_star(chain).transpose() * pi;
    if (mean_f.lpNorm<Eigen::Infinity>() > 1e-10)
        throw ConfigError("problem: pi-mean of f(x_star, .) is not zero");
}

Vector scaled_error(const StepSchedule& schedule, const Vector& x_k, std::int64_t k,
                    const Vector& x_star) {
    if (k < 1) throw ConfigError("scaled_error: k must be >= 1");
    return (x_k - x_star) / std::sqrt(schedule.gamma(k));
}

std::int64_t default_burn_in(const StepSchedule& schedule, double lambda_dt) {
    if (schedule.a < 1.0) return 0;
    std::int64_t n = 1;
    while (schedule.gamma(n) * lambda_dt >= 1.0 && n < (std::int64_t{1} << 40)) n *= 2;
    // binary refine down to the first index inside the contraction region
    std::int64_t lo = n / 2, hi = n;
    if (schedule.gamma(1) * lambda_dt < 1.0) return 0;
    while (lo + 1 < hi) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (schedule.gamma(mid) * lambda_dt < 1.0)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

TrajectoryEnsemble run_sa(const ProblemSpec& problem, const MarkovChainSpec& chain,
                          const MdsSpec& mds, const PoissonSolution& poisson,
                          const StepSchedule& schedule, std::int64_t horizon,
                          std::uint64_t seed, const std::vector<std::int64_t>& checkpoints,
                          const RunOptions& options) {
    problem.validate(chain);
    mds.validate();
    if (options.n_traj < 1) throw ConfigError("run_sa: n_traj must be positive");
    if (options.x1.size() != problem.dim) throw ConfigError("run_sa: x1 size mismatch");
    std::vector<std::int64_t> cps = checkpoints;
    std::sort(cps.begin(), cps.end());
    if (!cps.empty() && cps.back() > horizon)
        throw ConfigError("run_sa: checkpoint beyond horizon");

    const int d = problem.dim;
    TrajectoryEnsemble out;
    out.horizon = horizon;
    out.n_traj = options.n_traj;
    out.snapshots.resize(cps.size());
    for (std::size_t c = 0; c < cps.size(); ++c) {
        Snapshot& s = out.snapshots[c];
        s.k = cps[c];
        s.pre_burn_in = cps[c] < options.burn_in;
        s.x.resize(options.n_traj, d);
        s.y.resize(options.n_traj, d);
        s.xbar.resize(options.n_traj, d);
        s.ybar.resize(options.n_traj, d);
    }
    if (options.retain_paths) out.paths.resize(options.n_traj);

    // one shared step table instead of a pow() per step per trajectory
    std::vector<double> gamma_tab(static_cast<std::size_t>(horizon));
    for (std::int64_t k = 1; k <= horizon; ++k)
        gamma_tab[static_cast<std::size_t>(k - 1)] = schedule.gamma(k);

    std::atomic<std::int64_t> blown{-1};
    std::atomic<int> next{0};

    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= options.n_traj) return;
            NoisePathSampler sampler(chain, mds, poisson, d,
                                     CounterRng(seed, static_cast<std::uint64_t>(i)));
            Vector x = options.x1;
            Vector mean = Vector::Zero(d);
            Vector mean_comp = Vector::Zero(d);  // Kahan compensation
            Vector kdelta(d), kyv(d), kt(d), fx(d);
            NoiseRealization nr;
            nr.w.resize(d);
            nr.m.resize(d);
            RetainedPath* rp = options.retain_paths ? &out.paths[i] : nullptr;
            if (rp) {
                rp->x.resize(horizon, d);          // x_k for k = 1..horizon
                rp->w.resize(horizon - 1, d);      // noise of steps 1..horizon-1
                rp->m.resize(horizon - 1, d);
                rp->xi_prev.resize(horizon - 1);
                rp->xi.resize(horizon - 1);
            }
            std::size_t cp = 0;
            for (std::int64_t k = 1; k <= horizon; ++k) {
                if (rp) rp->x.row(k - 1) = x.transpose();
                // compensated running mean of x_1..x_k
                kdelta = (x - mean) / static_cast<double>(k);
                kyv = kdelta - mean_comp;
                kt = mean + kyv;
                mean_comp = (kt - mean) - kyv;
                mean = kt;

                while (cp < cps.size() && cps[cp] == k) {
                    Snapshot& s = out.snapshots[cp];
                    s.x.row(i) = x.transpose();
                    s.y.row(i) = ((x - problem.x_star) / std::sqrt(schedule.gamma(k))).transpose();
                    s.xbar.row(i) = mean.transpose();
                    s.ybar.row(i) =
                        (std::sqrt(static_cast<double>(k)) * (mean - problem.x_star)).transpose();
                    ++cp;
                }
                if (k == horizon) break;

                sampler.step_inplace(nr, rp != nullptr);
                if (rp) {
                    rp->w.row(k - 1) = nr.w.transpose();
                    rp->m.row(k - 1) = nr.m.transpose();
                    rp->xi_prev[k - 1] = nr.xi_prev;
                    rp->xi[k - 1] = nr.xi;
                }
                const double g = gamma_tab[static_cast<std::size_t>(k - 1)];
                if (problem.f_into) {
                    problem.f_into(x, chain.state_values[nr.xi], fx);
                    x -= g * (fx + nr.w);
                } else {
                    x -= g * (problem.f(x, chain.state_values[nr.xi]) + nr.w);
                }
                if (!(x.lpNorm<Eigen::Infinity>() < options.blowup_threshold)) {
                    blown.store(i);
                    return;
                }
            }
        }
    };

    const int n_threads = std::max(1, options.threads);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (blown.load() >= 0) {
        throw NumericalBlowup("run_sa: trajectory " + std::to_string(blown.load()) +
                              " exceeded blowup threshold (step size likely unstable)");
    }
    return out;
}

BlockSums block_sums(const TrajectoryEnsemble& ensemble, const StepSchedule& schedule,
                     const Partition& partition, const Matrix& gamma_mat) {
    if (ensemble.paths.empty()) throw MissingPath("block_sums: noise paths were not retained");
    Eigen::SelfAdjointEigenSolver<Matrix> es(gamma_mat);
    if (es.eigenvalues().minCoeff() < 1e-12)
        throw SingularGamma("block_sums: Gamma is numerically singular");
    const Matrix gamma_inv_sqrt = spd_inverse_sqrt(gamma_mat);

    const int n_blocks = partition.num_blocks();
    BlockSums out;
    out.z_hat.resize(n_blocks);
    out.s.resize(n_blocks);
    for (int m = 0; m < n_blocks; ++m) {
        const std::int64_t k_begin = partition.boundaries[m];
        const std::int64_t k_end = partition.boundaries[m + 1];
        const double h = partition.block_steps[m];
        const double len = static_cast<double>(partition.lengths[m]);
        for (const RetainedPath& path : ensemble.paths) {
            Vector weighted = Vector::Zero(gamma_mat.rows());
            Vector plain = Vector::Zero(gamma_mat.rows());
            for (std::int64_t k = k_begin; k < k_end; ++k) {
                const Vector mk = path.m.row(k - 1).transpose();
                weighted += std::sqrt(schedule.gamma(k)) * mk;
                plain += mk;
            }
            out.z_hat[m].push_back(gamma_inv_sqrt * weighted / std::sqrt(h));
            out.s[m].push_back(gamma_inv_sqrt * plain / std::sqrt(len));
        }
    }
    return out;
}

RemainderDecomposition decompose_remainder(const TrajectoryEnsemble& ensemble,
                                           const ProblemSpec& problem,
                                           const MarkovChainSpec& chain,
                                           const PoissonSolution& poisson,
                                           const StepSchedule& schedule,
                                           const Partition& partition,
                                           const DriftMatrix& a_bar,
                                           const Matrix& gamma_mat) {
    if (ensemble.paths.empty())
        throw MissingPath("decompose_remainder: noise paths were not retained");
    const int d = problem.dim;
    const Matrix id = Matrix::Identity(d, d);
    (void)gamma_mat;
    const int n_blocks = partition.num_blocks();
    const int n_traj = static_cast<int>(ensemble.paths.size());

    RemainderDecomposition out;
    auto init = [&](std::vector<std::vector<Vector>>& v) {
        v.assign(n_blocks, std::vector<Vector>(n_traj, Vector::Zero(d)));
    };
    init(out.term_a);
    init(out.term_b);
    init(out.term_c);
    init(out.term_d);
    init(out.term_e);
    init(out.term_f);
    init(out.r_tilde);

    for (int i = 0; i < n_traj; ++i) {
        const RetainedPath& path = ensemble.paths[i];
        for (int m = 0; m < n_blocks; ++m) {
            const std::int64_t k_begin = partition.boundaries[m];
            const std::int64_t k_end = partition.boundaries[m + 1];
            const double h = partition.block_steps[m];
            Vector sum_gamma_ay = Vector::Zero(d);
            const Vector y_begin =
                (path.x.row(k_begin - 1).transpose() - problem.x_star) /
                std::sqrt(schedule.gamma(k_begin));
            for (std::int64_t k = k_begin; k < k_end; ++k) {
                const double gk = schedule.gamma(k);
                const double gk1 = schedule.gamma(k + 1);
                const double ratio = std::sqrt(gk / gk1);
                const Vector xk = path.x.row(k - 1).transpose();
                const Vector yk = (xk - problem.x_star) / std::sqrt(gk);
                const Vector mk = path.m.row(k - 1).transpose();
                const StateData& sd = chain.state_values[path.xi[k - 1]];

                const Vector a_term =
                    (ratio * (id - gk * problem.grad_f_bar_at_star) - (id - gk * a_bar.entries)) *
                    yk;
                const Vector b_term = (gk / std::sqrt(gk1)) *
                                      (problem.f_bar(xk) -
                                       problem.grad_f_bar_at_star * (xk - problem.x_star));
                const Vector c_term = std::sqrt(gk) * (ratio - 1.0) * mk;
                const Vector p_phi_prev = poisson.p_phi.row(path.xi_prev[k - 1]).transpose();
                const Vector p_phi_cur = poisson.p_phi.row(path.xi[k - 1]).transpose();
                const Vector d_term = (gk / std::sqrt(gk1)) * (p_phi_prev - p_phi_cur);
                const Vector g_diff = (problem.f(xk, sd) - problem.f_bar(xk)) -
                                      (problem.f(problem.x_star, sd) - problem.f_bar(problem.x_star));
                const Vector e_term = (gk / std::sqrt(gk1)) * g_diff;

                out.term_a[m][i] += a_term;
                out.term_b[m][i] += b_term;
                out.term_c[m][i] += c_term;
                out.term_d[m][i] += d_term;
                out.term_e[m][i] += e_term;
                sum_gamma_ay += gk * (a_bar.entries * yk);

                // per-step identity: y_{k+1} - (y_k - g A y_k + sqrt(g) M_k)
                // equals (a) - (b) + (c) - (d) - (e)
                if (k + 1 <= ensemble.horizon) {
                    const Vector x_next = path.x.row(k).transpose();
                    const Vector y_next = (x_next - problem.x_star) / std::sqrt(gk1);
                    const Vector lhs =
                        y_next - (yk - gk * (a_bar.entries * yk) + std::sqrt(gk) * mk);
                    const Vector rhs = a_term - b_term + c_term - d_term - e_term;
                    const double scale = std::max(1.0, yk.norm());
                    out.max_step_identity_error =
                        std::max(out.max_step_identity_error, (lhs - rhs).norm() / scale);
                }
            }
            out.term_f[m][i] = h * (a_bar.entries * y_begin) - sum_gamma_ay;
            out.r_tilde[m][i] = out.term_a[m][i] - out.term_b[m][i] + out.term_c[m][i] -
                                out.term_d[m][i] - out.term_e[m][i] + out.term_f[m][i];

            // telescoping reconstruction over the block
            if (k_end <= ensemble.horizon) {
                const Vector y_end = (path.x.row(k_end - 1).transpose() - problem.x_star) /
                                     std::sqrt(schedule.gamma(k_end));
                Vector weighted = Vector::Zero(d);
                for (std::int64_t k = k_begin; k < k_end; ++k) {
                    weighted += std::sqrt(schedule.gamma(k)) * path.m.row(k - 1).transpose();
                }
                const Vector reconstructed =
                    y_begin - h * (a_bar.entries * y_begin) + weighted + out.r_tilde[m][i];
                const double scale = std::max(1.0, y_end.norm());
                out.max_telescope_error =
                    std::max(out.max_telescope_error, (y_end - reconstructed).norm() / scale);
            }
        }
    }
    return out;
}

CovarianceTrack track_scaled_covariance(const TrajectoryEnsemble& ensemble) {
    CovarianceTrack out;
    for (const Snapshot& s : ensemble.snapshots) {
        out.ks.push_back(s.k);
        out.sigma_y.push_back(s.y.transpose() * s.y / static_cast<double>(s.y.rows()));
        Matrix se = Matrix::Zero(s.y.cols(), s.y.cols());
        // jackknife over trajectories
        const std::int64_t n = s.y.rows();
        const Matrix total = s.y.transpose() * s.y;
        Matrix mean_loo = Matrix::Zero(s.y.cols(), s.y.cols());
        std::vector<Matrix> loo;
        loo.reserve(n);
        for (std::int64_t i = 0; i < n; ++i) {
            const Vector r = s.y.row(i).transpose();
            loo.push_back((total - r * r.transpose()) / static_cast<double>(n - 1));
            mean_loo += loo.back();
        }
        mean_loo /= static_cast<double>(n);
        for (std::int64_t i = 0; i < n; ++i) {
            const Matrix diff = loo[i] - mean_loo;
            se += diff.cwiseProduct(diff);
        }
        se *= static_cast<double>(n - 1) / static_cast<double>(n);
        out.se.push_back(se.cwiseSqrt());
    }
    return out;
}

}  // namespace salab
