#include "salab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "salab/ou.hpp"
#include "salab/transport.hpp"

namespace salab {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt(std::int64_t v) { return std::to_string(v); }

struct CsvWriter {
    std::string body;

    explicit CsvWriter(const std::string& header) { body = header + "\n"; }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) body += ',';
            body += cells[i];
        }
        body += '\n';
    }

    void save(const std::filesystem::path& path) const { write_file_atomic(path, body); }
};

Matrix gaussian_cloud(const Matrix& sigma, std::int64_t n, std::uint64_t seed,
                      std::uint64_t stream) {
    const int d = static_cast<int>(sigma.rows());
    const Matrix root = psd_sqrt(sigma);
    Matrix out(n, d);
    CounterRng rng(seed, stream);
    for (std::int64_t i = 0; i < n; ++i) out.row(i) = (root * rng.gaussian_vector(d)).transpose();
    return out;
}

double cloud_distance(const Matrix& a, const Matrix& b, double p, std::uint64_t seed,
                      std::string* method_out) {
    EmpiricalMeasure mu{a, std::nullopt};
    EmpiricalMeasure nu{b, std::nullopt};
    WassersteinEstimate est;
    if (a.cols() == 1) {
        est = wasserstein_1d(mu, nu, p);
    } else if (a.rows() <= 2048) {
        est = wasserstein_exact(mu, nu, p);
    } else {
        est = wasserstein_sliced(mu, nu, p, 64, seed);
    }
    if (method_out) *method_out = method_name(est.method);
    return est.value;
}

std::int64_t resolve_burn_in(const ExperimentConfig& cfg, const Instance& inst) {
    if (cfg.burn_in) return *cfg.burn_in;
    return default_burn_in(inst.schedule, inst.lyap.lambda_dt);
}

TrajectoryEnsemble run_instance(const ExperimentConfig& cfg, const Instance& inst,
                                std::uint64_t seed, int n_traj, bool retain) {
    RunOptions opt;
    opt.n_traj = n_traj;
    opt.x1 = cfg.x1.size() ? cfg.x1 : Vector::Zero(inst.problem.dim);
    opt.retain_paths = retain;
    opt.threads = cfg.threads;
    opt.burn_in = resolve_burn_in(cfg, inst);
    return run_sa(inst.problem, inst.chain, inst.mds, inst.poisson, inst.schedule, cfg.horizon,
                  seed, cfg.checkpoints, opt);
}

void write_manifest(const ExperimentConfig& cfg) {
    Json m;
    m["config_hash"] = cfg.hash;
    m["seed"] = cfg.seed;
    m["experiment"] = cfg.experiment;
    m["provenance"] = "salab:" + cfg.hash + ":" + std::to_string(cfg.seed);
    write_file_atomic(std::filesystem::path(cfg.output_dir) / "manifest.json", m.dump(2) + "\n");
}

Json fit_to_json(const RateFit& f) {
    Json j;
    j["slope"] = f.slope;
    j["intercept"] = f.intercept;
    j["r2"] = f.r2;
    j["slope_ci"] = {f.slope_ci_lo, f.slope_ci_hi};
    j["no_signal"] = f.no_signal;
    j["xs"] = f.xs;
    j["ys"] = f.ys;
    return j;
}

// Per-group strictly-decreasing analysis between consecutive checkpoints:
// how many of the disjoint sub-ensembles saw the distance shrink.
Json decrease_analysis(const std::vector<std::vector<double>>& group_values,
                       const std::vector<std::int64_t>& ks, std::size_t stride = 1) {
    Json out = Json::array();
    if (group_values.empty() || stride < 1) return out;
    const std::size_t n_cp = group_values.size();
    const std::size_t n_groups = group_values[0].size();
    for (std::size_t c = 0; c + stride < n_cp; c += stride) {
        std::int64_t down = 0;
        for (std::size_t g = 0; g < n_groups; ++g) {
            if (group_values[c + stride][g] < group_values[c][g]) ++down;
        }
        const WilsonInterval wi =
            wilson_interval(down, static_cast<std::int64_t>(n_groups));
        Json rec;
        rec["from_k"] = ks[c];
        rec["to_k"] = ks[c + stride];
        rec["groups_down"] = down;
        rec["groups"] = n_groups;
        rec["wilson_lo"] = wi.lo;
        rec["wilson_hi"] = wi.hi;
        rec["significant"] = wi.lo > 0.5;
        out.push_back(rec);
    }
    return out;
}

struct CheckpointDistances {
    std::vector<std::int64_t> ks;
    std::vector<double> predictor;  // gamma_n or n
    std::vector<DistanceReport> reports;
    std::vector<std::vector<double>> group_adjusted;  // [checkpoint][group]
};

// Shared pipeline for the rate experiments: per checkpoint, cloud-vs-limit
// distance with matched-n baseline, full ensemble and per-group.
CheckpointDistances distance_track(const TrajectoryEnsemble& ens, const Matrix& limit_cov,
                                   double p, std::uint64_t seed, int n_groups,
                                   bool use_ybar, const Matrix& pre_map,
                                   const StepSchedule& schedule, bool predictor_is_gamma) {
    CheckpointDistances out;
    int ci = 0;
    for (const Snapshot& s : ens.snapshots) {
        if (s.pre_burn_in) {
            ++ci;
            continue;
        }
        Matrix cloud = use_ybar ? s.ybar : s.y;
        if (pre_map.size()) cloud = cloud * pre_map.transpose();
        const int d = static_cast<int>(cloud.cols());
        const int reps = d == 1 ? 8 : (cloud.rows() <= 2048 ? 1 : 2);
        CounterRng derive(seed, 0xD157C0DE, static_cast<std::uint64_t>(ci));
        out.reports.push_back(
            distance_to_gaussian_limit(cloud, limit_cov, p, derive.next_u64(), reps));
        out.ks.push_back(s.k);
        out.predictor.push_back(predictor_is_gamma ? schedule.gamma(s.k)
                                                   : static_cast<double>(s.k));
        if (n_groups > 1) {
            const std::int64_t gs = cloud.rows() / n_groups;
            std::vector<double> vals;
            for (int g = 0; g < n_groups && gs >= 8; ++g) {
                const Matrix sub = cloud.middleRows(g * gs, gs);
                // reference seed depends on the group only, so the comparison
                // across checkpoints shares its reference clouds and the
                // finite-sample baseline error cancels in the paired test
                CounterRng gseed(seed, 0x6E0557, static_cast<std::uint64_t>(g));
                DistanceReport r = distance_to_gaussian_limit(sub, limit_cov, p,
                                                              gseed.next_u64(), d == 1 ? 4 : 1);
                vals.push_back(r.adjusted);
            }
            out.group_adjusted.push_back(std::move(vals));
        }
        ++ci;
    }
    return out;
}

void write_distance_csv(const std::filesystem::path& path, const std::string& metric, double p,
                        const CheckpointDistances& track) {
    CsvWriter csv("metric,p,method,value,se,n,baseline_value");
    for (std::size_t i = 0; i < track.reports.size(); ++i) {
        const DistanceReport& r = track.reports[i];
        csv.row({metric + "@" + std::to_string(track.ks[i]), fmt(p), r.method, fmt(r.value), "",
                 fmt(r.n), fmt(r.baseline)});
    }
    csv.save(path);
}

std::vector<double> adjusted_values(const CheckpointDistances& t) {
    std::vector<double> v;
    for (const DistanceReport& r : t.reports) v.push_back(r.adjusted);
    return v;
}

// fit restricted to checkpoints with k >= min_k (transient exclusion)
RateFit fit_track(const CheckpointDistances& t, double min_k) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < t.reports.size(); ++i) {
        if (static_cast<double>(t.ks[i]) < min_k) continue;
        xs.push_back(t.predictor[i]);
        ys.push_back(t.reports[i].adjusted);
    }
    return fit_loglog(xs, ys);
}

void require_checkpoint_span(const ExperimentConfig& cfg, const StepSchedule& schedule) {
    if (cfg.checkpoints.size() < 2)
        throw InsufficientCheckpoints("config: checkpoints must list at least two indices");
    const double g_first = schedule.gamma(cfg.checkpoints.front());
    const double g_last = schedule.gamma(cfg.checkpoints.back());
    if (std::log10(g_first / g_last) < 1.5)
        throw InsufficientCheckpoints(
            "config: checkpoints span < 1.5 decades in the step size");
}

double lp_norm_of_rows(const Matrix& rows, double p) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < rows.rows(); ++i)
        acc += std::pow(rows.row(i).norm(), p);
    return std::pow(acc / static_cast<double>(rows.rows()), 1.0 / p);
}

// --------------------------------------------------------------------------
// simulate

Json exp_simulate(const ExperimentConfig& cfg) {
    Instance inst = cfg.build_instance();
    TrajectoryEnsemble ens = run_instance(cfg, inst, cfg.seed, cfg.ensemble, cfg.retain_paths);

    std::string header = "k";
    for (int j = 0; j < inst.problem.dim; ++j) header += ",x" + std::to_string(j);
    for (int j = 0; j < inst.problem.dim; ++j) header += ",y" + std::to_string(j);
    CsvWriter csv(header);
    for (const Snapshot& s : ens.snapshots) {
        for (int i = 0; i < ens.n_traj; ++i) {
            std::vector<std::string> cells{fmt(s.k)};
            for (int j = 0; j < inst.problem.dim; ++j) cells.push_back(fmt(s.x(i, j)));
            for (int j = 0; j < inst.problem.dim; ++j) cells.push_back(fmt(s.y(i, j)));
            csv.row(cells);
        }
    }
    csv.save(std::filesystem::path(cfg.output_dir) / "checkpoints.csv");

    Json summary;
    summary["n_traj"] = ens.n_traj;
    summary["horizon"] = ens.horizon;
    summary["burn_in"] = resolve_burn_in(cfg, inst);
    summary["x_star"] = std::vector<double>(inst.problem.x_star.data(),
                                            inst.problem.x_star.data() + inst.problem.dim);
    return summary;
}

// --------------------------------------------------------------------------
// last_iterate_rate

Json exp_last_iterate_rate(const ExperimentConfig& cfg) {
    Instance inst = cfg.build_instance();
    require_checkpoint_span(cfg, inst.schedule);
    const double p = cfg.extra.value("p", 1.0);
    const int n_groups = cfg.extra.value("groups", 20);

    TrajectoryEnsemble ens = run_instance(cfg, inst, cfg.seed, cfg.ensemble, false);
    CheckpointDistances track = distance_track(ens, inst.sigma_a, p, cfg.seed, n_groups, false,
                                               Matrix(), inst.schedule, true);
    write_distance_csv(std::filesystem::path(cfg.output_dir) / "last_iterate.csv", "w_last", p,
                       track);

    RateFit fit = fit_track(track, cfg.extra.value("fit_min_k", 0.0));
    Json summary;
    summary["fit"] = fit_to_json(fit);
    summary["decreases"] =
        decrease_analysis(track.group_adjusted, track.ks,
                          static_cast<std::size_t>(cfg.extra.value("decrease_stride", 1)));
    summary["p"] = p;
    return summary;
}

// --------------------------------------------------------------------------
// covariance_rate

Json exp_covariance_rate(const ExperimentConfig& cfg) {
    Instance inst = cfg.build_instance();
    if (cfg.problem_kind != "lsa" || !inst.chain.is_iid())
        throw ConfigError("covariance_rate: needs an lsa problem with iid chain states");
    for (const StateData& sd : inst.chain.state_values) {
        if ((sd.mat - inst.chain.state_values[0].mat).norm() > 0)
            throw ConfigError("covariance_rate: exact recursion requires additive noise only");
    }

    TrajectoryEnsemble ens = run_instance(cfg, inst, cfg.seed, cfg.ensemble, false);
    CovarianceTrack track = track_scaled_covariance(ens);

    const Vector x1 = cfg.x1.size() ? cfg.x1 : Vector::Zero(inst.problem.dim);
    const Vector dev0 = x1 - inst.problem.x_star;
    std::vector<Matrix> oracle =
        exact_covariance_recursion(inst.problem.grad_f_bar_at_star, inst.gamma.gamma_mat,
                                   inst.schedule, dev0 * dev0.transpose(), track.ks);

    CsvWriter csv("k,empirical_dev,se_dev,oracle_dev");
    std::vector<double> ns, oracle_devs;
    for (std::size_t i = 0; i < track.ks.size(); ++i) {
        const double emp = (track.sigma_y[i] - inst.sigma_a).norm();
        const double se = track.se[i].norm();
        const double ora = (oracle[i] - inst.sigma_a).norm();
        csv.row({fmt(track.ks[i]), fmt(emp), fmt(se), fmt(ora)});
        ns.push_back(static_cast<double>(track.ks[i]));
        oracle_devs.push_back(ora);
    }
    csv.save(std::filesystem::path(cfg.output_dir) / "covariance_rate.csv");

    RateFit fit = fit_loglog(ns, oracle_devs);
    Json summary;
    summary["oracle_fit"] = fit_to_json(fit);
    summary["expected_exponent"] = -std::min(cfg.a, 1.0 - cfg.a);
    return summary;
}

// --------------------------------------------------------------------------
// pr_average_rate

Json exp_pr_average_rate(const ExperimentConfig& cfg) {
    if (!(cfg.a > 0.5 && cfg.a < 1.0))
        throw BadExponent("config: schedule.a must lie in (1/2, 1) for the averaged iterate");
    Instance inst = cfg.build_instance();
    const double p = cfg.extra.value("p", 1.0);
    const int n_groups = cfg.extra.value("groups", 20);

    TrajectoryEnsemble ens = run_instance(cfg, inst, cfg.seed, cfg.ensemble, false);
    // map ybar through the mean-field Jacobian; its limit covariance is Gamma
    const Matrix jac = inst.problem.grad_f_bar_at_star;
    CheckpointDistances track = distance_track(ens, inst.gamma.gamma_mat, p, cfg.seed, n_groups,
                                               true, jac, inst.schedule, false);
    write_distance_csv(std::filesystem::path(cfg.output_dir) / "pr_average.csv", "w_pr", p,
                       track);

    const Matrix sigma_bar =
        jac.partialPivLu().solve(inst.gamma.gamma_mat * jac.inverse().transpose());
    CsvWriter cov_csv("k,frobenius_rel_dev");
    Json cov_track = Json::array();
    for (const Snapshot& s : ens.snapshots) {
        if (s.pre_burn_in) continue;
        const Matrix emp = second_moment(s.ybar);
        const double rel = (emp - sigma_bar).norm() / sigma_bar.norm();
        cov_csv.row({fmt(s.k), fmt(rel)});
        cov_track.push_back({{"k", s.k}, {"rel_dev", rel}});
    }
    cov_csv.save(std::filesystem::path(cfg.output_dir) / "pr_covariance.csv");

    RateFit fit = fit_track(track, cfg.extra.value("fit_min_k", 0.0));
    Json summary;
    summary["fit"] = fit_to_json(fit);
    summary["decreases"] =
        decrease_analysis(track.group_adjusted, track.ks,
                          static_cast<std::size_t>(cfg.extra.value("decrease_stride", 1)));
    summary["covariance_rel_dev"] = cov_track;
    summary["p"] = p;
    return summary;
}

// --------------------------------------------------------------------------
// coupling_rate

Json exp_coupling_rate(const ExperimentConfig& cfg) {
    Instance inst = cfg.build_instance();
    const OUSpec& ou = inst.ou;
    const double total_time = cfg.extra.value("total_time", 5.0);
    std::vector<double> hs;
    if (cfg.extra.contains("h_values")) {
        for (const Json& h : cfg.extra["h_values"]) hs.push_back(h.get<double>());
    } else {
        const double h_max = 0.5 / ou.lambda_dt;
        const double h_min = h_max / std::pow(10.0, 1.6);
        const int n_h = 12;
        for (int i = 0; i < n_h; ++i)
            hs.push_back(h_min * std::pow(h_max / h_min, i / double(n_h - 1)));
    }

    CsvWriter csv("h,terminal_gap_l2,n_traj");
    std::vector<double> gaps;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        const double h = hs[i];
        const int blocks = std::max<int>(2, static_cast<int>(std::ceil(total_time / h)));
        Partition part;
        part.boundaries.resize(blocks + 1);
        part.lengths.assign(blocks, 1);
        part.block_steps.assign(blocks, h);
        CounterRng derive(cfg.seed, 0xC0B1ED, static_cast<std::uint64_t>(i));
        CoupledEnsemble ce = coupled_paths(ou, part, cfg.ensemble, derive.next_u64());
        gaps.push_back(ce.terminal_gap_l2);
        csv.row({fmt(h), fmt(ce.terminal_gap_l2), fmt(static_cast<std::int64_t>(cfg.ensemble))});
    }
    csv.save(std::filesystem::path(cfg.output_dir) / "coupling_rate.csv");

    RateFit fit = fit_loglog(hs, gaps);
    Json summary;
    summary["fit_vs_h"] = fit_to_json(fit);
    summary["slope_vs_sqrt_h"] = 2.0 * fit.slope;
    return summary;
}

// --------------------------------------------------------------------------
// confidence_intervals

Json exp_confidence_intervals(const ExperimentConfig& cfg) {
    if (cfg.ensemble < 10000)
        throw EnsembleTooSmall("config: ensemble below minimum (10000) for coverage studies");
    Instance inst = cfg.build_instance();
    const double p = cfg.extra.value("p", 2.0);
    std::vector<double> deltas{0.1, 0.05, 0.01};
    if (cfg.extra.contains("deltas")) {
        deltas.clear();
        for (const Json& d : cfg.extra["deltas"]) deltas.push_back(d.get<double>());
    }

    TrajectoryEnsemble main_ens = run_instance(cfg, inst, cfg.seed, cfg.ensemble, false);
    // disjoint calibration ensemble: fresh master seed, never reused for coverage
    CounterRng derive(cfg.seed, 0xCA11B, 0);
    const std::uint64_t calib_seed = derive.next_u64();
    const int calib_n = cfg.extra.value("calibration_ensemble", cfg.ensemble);
    TrajectoryEnsemble calib_ens = run_instance(cfg, inst, calib_seed, calib_n, false);

    // Gaussian radius pieces
    const Matrix root = psd_sqrt(inst.sigma_a);
    double e_norm = 0.0;
    {
        CounterRng rng(cfg.seed, 0x6A055, 1);
        const std::int64_t draws = 1000000;
        for (std::int64_t i = 0; i < draws; ++i)
            e_norm += (root * rng.gaussian_vector(inst.problem.dim)).norm();
        e_norm /= static_cast<double>(draws);
    }
    const double sigma_op =
        Eigen::SelfAdjointEigenSolver<Matrix>(inst.sigma_a).eigenvalues().maxCoeff();

    // C-hat: largest measured (baseline-subtracted) distance / gamma^{1/6} on
    // the calibration ensemble
    double c_hat = 0.0;
    {
        int ci = 0;
        for (const Snapshot& s : calib_ens.snapshots) {
            CounterRng d2(calib_seed, 0xD157C0DE, static_cast<std::uint64_t>(ci++));
            if (s.pre_burn_in) continue;
            DistanceReport r = distance_to_gaussian_limit(s.y, inst.sigma_a, p, d2.next_u64());
            const double g = inst.schedule.gamma(s.k);
            c_hat = std::max(c_hat, std::max(r.adjusted, 0.0) / std::pow(g, 1.0 / 6.0));
        }
    }

    // empirical L_p of |x - x*| on the calibration ensemble, per checkpoint
    std::vector<double> lp_calib;
    for (const Snapshot& s : calib_ens.snapshots) {
        Matrix dev = s.x;
        dev.rowwise() -= inst.problem.x_star.transpose();
        lp_calib.push_back(lp_norm_of_rows(dev, p));
    }

    CsvWriter csv("delta,nominal,method,k,coverage,wilson_lo,wilson_hi,width");
    Json reports = Json::array();
    for (std::size_t si = 0; si < main_ens.snapshots.size(); ++si) {
        const Snapshot& s = main_ens.snapshots[si];
        const double g = inst.schedule.gamma(s.k);
        Matrix dev = s.x;
        dev.rowwise() -= inst.problem.x_star.transpose();
        std::vector<double> err(dev.rows());
        for (std::int64_t i = 0; i < dev.rows(); ++i) err[i] = dev.row(i).norm();

        for (double delta : deltas) {
            const double r_markov = lp_calib[si] * std::pow(delta, -1.0 / p);
            const double r_gauss =
                std::sqrt(g) * (e_norm + std::sqrt(2.0 * sigma_op * std::log(2.0 / delta)));
            const double r_wass =
                r_gauss + c_hat * std::pow(g, 2.0 / 3.0) * std::pow(2.0 / delta, 1.0 / p);
            const struct {
                const char* name;
                double radius;
            } methods[] = {{"markov_moment", r_markov},
                           {"gaussian_approx", r_gauss},
                           {"wasserstein_corrected", r_wass}};
            for (const auto& m : methods) {
                std::int64_t covered = 0;
                for (double e : err)
                    if (e <= m.radius) ++covered;
                const double cov = static_cast<double>(covered) / err.size();
                const WilsonInterval wi =
                    wilson_interval(covered, static_cast<std::int64_t>(err.size()));
                csv.row({fmt(delta), fmt(1.0 - delta), m.name, fmt(s.k), fmt(cov), fmt(wi.lo),
                         fmt(wi.hi), fmt(m.radius)});
                Json rec;
                rec["delta"] = delta;
                rec["nominal"] = 1.0 - delta;
                rec["method"] = m.name;
                rec["k"] = s.k;
                rec["coverage"] = cov;
                rec["wilson_lo"] = wi.lo;
                rec["wilson_hi"] = wi.hi;
                rec["width"] = m.radius;
                rec["pre_burn_in"] = s.pre_burn_in;
                reports.push_back(rec);
            }
        }
    }
    csv.save(std::filesystem::path(cfg.output_dir) / "coverage.csv");

    Json summary;
    summary["reports"] = reports;
    summary["c_hat"] = c_hat;
    summary["expected_norm"] = e_norm;
    summary["p"] = p;
    return summary;
}

// --------------------------------------------------------------------------
// lsa_tail_transition

Json exp_lsa_tail_transition(const ExperimentConfig& cfg) {
    Instance inst = cfg.build_instance();
    bool multiplicative = false;
    for (const StateData& sd : inst.chain.state_values) {
        if ((sd.mat - inst.chain.state_values[0].mat).norm() > 0) multiplicative = true;
    }
    if (!multiplicative)
        throw WrongNoiseKind("config: tail study needs multiplicative noise (state-dependent A)");

    TrajectoryEnsemble ens = run_instance(cfg, inst, cfg.seed, cfg.ensemble, false);

    std::vector<double> orders{2, 3, 4, 5, 6};
    if (cfg.extra.contains("orders")) {
        orders.clear();
        for (const Json& o : cfg.extra["orders"]) orders.push_back(o.get<double>());
    }

    // Gaussian reference moments of |N(0, Sigma_a)| by a fixed large draw
    std::vector<double> gauss_lp(orders.size(), 0.0);
    {
        const Matrix root = psd_sqrt(inst.sigma_a);
        CounterRng rng(cfg.seed, 0x6A055, 2);
        const std::int64_t draws = 400000;
        std::vector<double> acc(orders.size(), 0.0);
        for (std::int64_t i = 0; i < draws; ++i) {
            const double nrm = (root * rng.gaussian_vector(inst.problem.dim)).norm();
            for (std::size_t j = 0; j < orders.size(); ++j) acc[j] += std::pow(nrm, orders[j]);
        }
        for (std::size_t j = 0; j < orders.size(); ++j)
            gauss_lp[j] = std::pow(acc[j] / draws, 1.0 / orders[j]);
    }

    std::string header = "k";
    for (int j = 0; j < inst.problem.dim; ++j) header += ",kurtosis" + std::to_string(j);
    header += ",kurtosis_se";
    for (double o : orders) header += ",lp_ratio_" + fmt(o);
    CsvWriter csv(header);

    Json per_checkpoint = Json::array();
    std::int64_t crossover_k = -1;
    std::vector<double> first_ratios;
    for (const Snapshot& s : ens.snapshots) {
        const std::int64_t n = s.y.rows();
        const double se = std::sqrt(24.0 / static_cast<double>(n));
        Vector kurt(inst.problem.dim);
        for (int j = 0; j < inst.problem.dim; ++j) {
            const Vector col = s.y.col(j);
            const double mean = col.mean();
            double m2 = 0.0, m4 = 0.0;
            for (std::int64_t i = 0; i < n; ++i) {
                const double d = col(i) - mean;
                m2 += d * d;
                m4 += d * d * d * d;
            }
            m2 /= n;
            m4 /= n;
            kurt(j) = m4 / (m2 * m2) - 3.0;
        }
        std::vector<double> ratios;
        for (std::size_t j = 0; j < orders.size(); ++j)
            ratios.push_back(lp_norm_of_rows(s.y, orders[j]) / gauss_lp[j]);
        if (first_ratios.empty() && !s.pre_burn_in) first_ratios = ratios;

        std::vector<std::string> cells{fmt(s.k)};
        for (int j = 0; j < inst.problem.dim; ++j) cells.push_back(fmt(kurt(j)));
        cells.push_back(fmt(se));
        for (double r : ratios) cells.push_back(fmt(r));
        csv.row(cells);

        const bool in_band = kurt.cwiseAbs().maxCoeff() <= 3.0 * se;
        if (crossover_k < 0 && !s.pre_burn_in && in_band) crossover_k = s.k;

        Json rec;
        rec["k"] = s.k;
        rec["kurtosis"] = std::vector<double>(kurt.data(), kurt.data() + kurt.size());
        rec["kurtosis_se"] = se;
        rec["lp_ratios"] = ratios;
        rec["pre_burn_in"] = s.pre_burn_in;
        per_checkpoint.push_back(rec);
    }
    csv.save(std::filesystem::path(cfg.output_dir) / "tail_transition.csv");

    // fit the order-growth envelope gamma(alpha p/2 + 1)^{1/p} to the earliest
    // post-burn-in ratio profile
    double best_alpha = 1.0, best_sse = 1e300;
    if (!first_ratios.empty()) {
        for (double alpha = 0.05; alpha <= 6.0; alpha += 0.005) {
            double resid_mean = 0.0;
            std::vector<double> resid(orders.size());
            for (std::size_t j = 0; j < orders.size(); ++j) {
                resid[j] = std::log(std::max(first_ratios[j], 1e-300)) -
                           std::lgamma(alpha * orders[j] / 2.0 + 1.0) / orders[j];
                resid_mean += resid[j];
            }
            resid_mean /= resid.size();
            double sse = 0.0;
            for (double r : resid) sse += (r - resid_mean) * (r - resid_mean);
            if (sse < best_sse) {
                best_sse = sse;
                best_alpha = alpha;
            }
        }
    }

    Json summary;
    summary["checkpoints"] = per_checkpoint;
    summary["crossover_k"] = crossover_k;
    summary["envelope_alpha"] = best_alpha;
    summary["orders"] = orders;
    return summary;
}

// --------------------------------------------------------------------------
// sgd_markov

Json exp_sgd_markov(const ExperimentConfig& cfg) {
    if (cfg.problem_kind != "logcosh")
        throw ConfigError("config: sgd_markov expects problem.kind = logcosh");
    if (!(cfg.mu > 0.0))
        throw NotStronglyConvex("config: problem.mu must be positive");
    if (!(cfg.a > 0.5 && cfg.a <= 1.0))
        throw BadExponent("config: schedule.a must lie in (1/2, 1] here");
    Instance inst = cfg.build_instance();
    const double p = cfg.extra.value("p", 1.0);
    const int n_groups = cfg.extra.value("groups", 20);

    TrajectoryEnsemble ens = run_instance(cfg, inst, cfg.seed, cfg.ensemble, false);

    CheckpointDistances last = distance_track(ens, inst.sigma_a, p, cfg.seed, n_groups, false,
                                              Matrix(), inst.schedule, true);
    write_distance_csv(std::filesystem::path(cfg.output_dir) / "sgd_last_iterate.csv", "w_last",
                       p, last);
    const Matrix jac = inst.problem.grad_f_bar_at_star;
    CheckpointDistances pr = distance_track(ens, inst.gamma.gamma_mat, p, cfg.seed, n_groups,
                                            true, jac, inst.schedule, false);
    write_distance_csv(std::filesystem::path(cfg.output_dir) / "sgd_pr_average.csv", "w_pr", p,
                       pr);

    const double fit_min_k = cfg.extra.value("fit_min_k", 0.0);
    const auto stride = static_cast<std::size_t>(cfg.extra.value("decrease_stride", 1));
    Json summary;
    summary["last_iterate_fit"] = fit_to_json(fit_track(last, fit_min_k));
    summary["pr_fit"] = fit_to_json(fit_track(pr, fit_min_k));
    summary["last_decreases"] = decrease_analysis(last.group_adjusted, last.ks, stride);
    summary["pr_decreases"] = decrease_analysis(pr.group_adjusted, pr.ks, stride);
    {
        const Matrix& g = inst.gamma.gamma_mat;
        std::vector<std::vector<double>> rows;
        for (int i = 0; i < g.rows(); ++i)
            rows.emplace_back(g.row(i).data(), g.row(i).data() + g.cols());
        summary["gamma"] = rows;
        summary["gamma_markov_part"] = inst.gamma.gamma_xi.norm();
    }
    return summary;
}

// --------------------------------------------------------------------------
// recursion_lemma

Json exp_recursion_lemma(const ExperimentConfig& cfg) {
    const double lambda = cfg.extra.value("lambda", 0.5);
    const double b = cfg.extra.value("b", 1.0);
    const double x1 = cfg.extra.value("x1", 1.0);
    const StepSchedule& sched = cfg.schedule();
    if (!(sched.a < 1.0)) throw BadParameters("config: recursion check needs a < 1");
    if (!(b > sched.a)) throw BadParameters("config: need b > a");
    if (!(lambda * sched.gamma1 > 0.0 && lambda * sched.gamma1 < 1.0))
        throw BadParameters("config: need lambda * gamma1 in (0, 1)");
    const std::int64_t horizon = cfg.horizon > 0 ? cfg.horizon : 1000000;

    const double c_transient = 2.0 / lambda;
    double x = x1;
    std::int64_t first_ok = -1;     // first index from which the bound held to the horizon
    double final_ratio = 0.0;
    CsvWriter csv("k,x,bound,ratio");
    std::int64_t next_dump = 1;
    for (std::int64_t k = 1; k <= horizon; ++k) {
        const double gk = sched.gamma(k);
        const double alpha = std::pow(static_cast<double>(k), -b);
        const double bound =
            (1.0 / lambda) * (alpha / gk) * (1.0 + c_transient / (gk * static_cast<double>(k)));
        if (x <= bound) {
            if (first_ok < 0) first_ok = k;
        } else {
            first_ok = -1;
        }
        final_ratio = x / ((1.0 / lambda) * (alpha / gk));
        if (k == next_dump || k == horizon) {
            csv.row({fmt(k), fmt(x), fmt(bound), fmt(final_ratio)});
            next_dump = std::max(next_dump + 1, static_cast<std::int64_t>(next_dump * 1.2));
        }
        x = (1.0 - lambda * gk) * x + alpha;
    }
    csv.save(std::filesystem::path(cfg.output_dir) / "recursion_lemma.csv");

    Json summary;
    summary["lambda"] = lambda;
    summary["b"] = b;
    summary["first_index_bound_holds"] = first_ok;
    summary["final_ratio"] = final_ratio;
    summary["bound_holds_at_horizon"] = first_ok > 0;
    return summary;
}

}  // namespace

DistanceReport distance_to_gaussian_limit(const Matrix& cloud, const Matrix& sigma, double p,
                                          std::uint64_t seed, int reps) {
    const std::int64_t n = cloud.rows();
    DistanceReport out;
    out.n = n;
    out.value = 0.0;
    out.baseline = 0.0;
    for (int r = 0; r < reps; ++r) {
        const std::uint64_t base = 16 * static_cast<std::uint64_t>(r);
        const Matrix ref = gaussian_cloud(sigma, n, seed, base + 1);
        const Matrix base_a = gaussian_cloud(sigma, n, seed, base + 2);
        const Matrix base_b = gaussian_cloud(sigma, n, seed, base + 3);
        out.value += cloud_distance(cloud, ref, p, seed + r, &out.method);
        out.baseline += cloud_distance(base_a, base_b, p, seed + r + 1, nullptr);
    }
    out.value /= reps;
    out.baseline /= reps;
    out.adjusted = out.value - out.baseline;
    return out;
}

std::vector<Matrix> exact_covariance_recursion(const Matrix& a_mean, const Matrix& gamma_w,
                                               const StepSchedule& schedule,
                                               const Matrix& x1_outer,
                                               const std::vector<std::int64_t>& checkpoints) {
    std::vector<std::int64_t> cps = checkpoints;
    std::sort(cps.begin(), cps.end());
    std::vector<Matrix> out;
    const int d = static_cast<int>(a_mean.rows());
    const Matrix eye = Matrix::Identity(d, d);
    Matrix sigma_x = x1_outer;  // E (x_k - x*)(x_k - x*)' at k = 1
    std::size_t ci = 0;
    const std::int64_t last = cps.empty() ? 0 : cps.back();
    for (std::int64_t k = 1; k <= last; ++k) {
        while (ci < cps.size() && cps[ci] == k) {
            out.push_back(sigma_x / schedule.gamma(k));
            ++ci;
        }
        const double g = schedule.gamma(k);
        const Matrix step = eye - g * a_mean;
        sigma_x = step * sigma_x * step.transpose() + g * g * gamma_w;
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    if (config.experiment != "recursion_lemma" && config.ensemble < 100)
        throw EnsembleTooSmall("config: ensemble below minimum (100)");
    std::filesystem::create_directories(config.output_dir);
    write_manifest(config);

    Json summary;
    if (config.experiment == "simulate")
        summary = exp_simulate(config);
    else if (config.experiment == "last_iterate_rate")
        summary = exp_last_iterate_rate(config);
    else if (config.experiment == "covariance_rate")
        summary = exp_covariance_rate(config);
    else if (config.experiment == "pr_average_rate")
        summary = exp_pr_average_rate(config);
    else if (config.experiment == "coupling_rate")
        summary = exp_coupling_rate(config);
    else if (config.experiment == "confidence_intervals")
        summary = exp_confidence_intervals(config);
    else if (config.experiment == "lsa_tail_transition")
        summary = exp_lsa_tail_transition(config);
    else if (config.experiment == "sgd_markov")
        summary = exp_sgd_markov(config);
    else if (config.experiment == "recursion_lemma")
        summary = exp_recursion_lemma(config);
    else
        throw ConfigError("config: unknown experiment '" + config.experiment + "'");

    const auto t1 = std::chrono::steady_clock::now();
    summary["experiment"] = config.experiment;
    summary["config_hash"] = config.hash;
    summary["seed"] = config.seed;
    summary["wall_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    write_file_atomic(std::filesystem::path(config.output_dir) / "summary.json",
                      summary.dump(2) + "\n");

    ExperimentResult res;
    res.summary = std::move(summary);
    return res;
}

}  // namespace salab
