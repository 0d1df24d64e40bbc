// Acceptance battery: one line per criterion, exit code = number of failures.
// argv: acceptance <salab binary> <fixtures dir>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "salab/config.hpp"
#include "salab/experiments.hpp"
#include "salab/problems.hpp"
#include "salab/stats.hpp"
#include "salab/transport.hpp"

namespace {

namespace fs = std::filesystem;
using salab::CounterRng;
using salab::DriftMatrix;
using salab::EmpiricalMeasure;
using salab::ExperimentConfig;
using salab::Json;
using salab::MarkovChainSpec;
using salab::Matrix;
using salab::MdsSpec;
using salab::StateData;
using salab::Vector;

std::string cli_path;
std::string fixtures_dir;
const fs::path work_root = "/tmp/salab_acceptance";

struct CmdResult {
    int exit_code;
    std::string out;
};

CmdResult run_cli(const std::string& args) {
    const std::string cmd = cli_path + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return {-1, "popen failed"};
    std::string out;
    std::array<char, 4096> buf;
    while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
    return {WEXITSTATUS(pclose(pipe)), out};
}

Json load_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    Json j;
    in >> j;
    return j;
}

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int col(const std::string& name) const {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw std::runtime_error("missing column " + name);
        return static_cast<int>(it - header.begin());
    }
    double num(std::size_t r, const std::string& name) const {
        return std::stod(rows[r][col(name)]);
    }
};

Csv read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    Csv out;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        return cells;
    };
    if (std::getline(in, line)) out.header = split(line);
    while (std::getline(in, line))
        if (!line.empty()) out.rows.push_back(split(line));
    return out;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Run an experiment fixture through the CLI into work_root/<tag>; returns the
// parsed summary. Reuses an existing summary so a rerun of the battery after a
// partial failure does not repeat finished long runs.
Json run_fixture(const std::string& fixture, const std::string& tag,
                 const std::string& extra_args = "") {
    const fs::path dir = work_root / tag;
    if (!fs::exists(dir / "summary.json")) {
        CmdResult r = run_cli("experiment " + fixtures_dir + "/" + fixture + " --output-dir " +
                              dir.string() + (extra_args.empty() ? "" : " " + extra_args));
        if (r.exit_code != 0)
            throw std::runtime_error(fixture + " exited " + std::to_string(r.exit_code) + ": " +
                                     r.out);
    }
    return load_json(dir / "summary.json");
}

std::string fmtd(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// criterion bodies: return "" on pass, otherwise the failure reason

std::string criterion_lyapunov() {
    const auto t0 = std::chrono::steady_clock::now();
    CounterRng rng(8571, 1);
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + trial % 8;
        Matrix r(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) r(i, j) = rng.next_gaussian();
        Eigen::EigenSolver<Matrix> es(r);
        const double min_re = es.eigenvalues().real().minCoeff();
        const Matrix jac = r + (0.4 - std::min(0.0, min_re)) * Matrix::Identity(d, d);
        const DriftMatrix a_bar = DriftMatrix::from_jacobian(jac, 0.8, 1.0);

        const salab::LyapunovSolution lyap = salab::solve_lyapunov(a_bar);
        const double res_q =
            (a_bar.entries * lyap.Q + lyap.Q * a_bar.entries.transpose() -
             Matrix::Identity(d, d))
                .norm();
        if (res_q > 1e-10 * d)
            return "Lyapunov residual " + fmtd(res_q) + " at trial " + std::to_string(trial);

        Matrix g(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) g(i, j) = rng.next_gaussian();
        const Matrix gamma = g * g.transpose() + 0.1 * Matrix::Identity(d, d);
        const salab::StationaryCovariance sc =
            salab::solve_stationary_covariance(a_bar, gamma);
        const double res_s =
            (a_bar.entries * sc.sigma_a + sc.sigma_a * a_bar.entries.transpose() - gamma)
                .norm();
        if (res_s > 1e-10 * d * gamma.norm())
            return "covariance residual " + fmtd(res_s) + " at trial " + std::to_string(trial);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                            .count();
    if (secs > 5.0) return "runtime " + fmtd(secs) + " s over budget";
    return "";
}

MarkovChainSpec random_chain(CounterRng& rng, int n_states) {
    MarkovChainSpec chain;
    chain.n_states = n_states;
    chain.transition.resize(n_states, n_states);
    for (int i = 0; i < n_states; ++i) {
        double sum = 0.0;
        for (int j = 0; j < n_states; ++j) {
            chain.transition(i, j) = 0.05 + rng.next_uniform();
            sum += chain.transition(i, j);
        }
        chain.transition.row(i) /= sum;
    }
    chain.initial = Vector::Constant(n_states, 1.0 / n_states);
    chain.state_values.assign(n_states, StateData{Matrix::Zero(1, 1), Vector::Zero(1)});
    return chain;
}

std::string criterion_poisson() {
    const auto t0 = std::chrono::steady_clock::now();
    CounterRng rng(9257, 2);
    const int m = 2;
    for (int trial = 0; trial < 100; ++trial) {
        const int s = 2 + trial % 19;
        MarkovChainSpec chain = random_chain(rng, s);
        const Vector pi = salab::stationary_distribution(chain);
        Matrix g(s, m);
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < m; ++j) g(i, j) = rng.next_gaussian();
        g.rowwise() -= (pi.transpose() * g).eval();

        const salab::PoissonSolution sol = salab::solve_poisson(chain, g);
        const double res =
            ((Matrix::Identity(s, s) - chain.transition) * sol.phi - g).cwiseAbs().maxCoeff();
        if (res > 1e-9)
            return "Poisson residual " + fmtd(res) + " at trial " + std::to_string(trial);

        if (trial >= 2) continue;

        // exact asymptotic covariance vs Monte Carlo partial sums
        MdsSpec mds;
        mds.covariance = Matrix::Zero(m, m);
        const Matrix gamma = salab::asymptotic_gamma(chain, sol, mds).gamma_mat;

        const std::int64_t i_m = 10000;
        const int replicas = 10000;
        Vector cum_pi(s);
        double acc = 0.0;
        for (int i = 0; i < s; ++i) cum_pi(i) = (acc += pi(i));
        Matrix cum_rows(s, s);
        for (int i = 0; i < s; ++i) {
            acc = 0.0;
            for (int j = 0; j < s; ++j) cum_rows(i, j) = (acc += chain.transition(i, j));
        }
        Matrix mean_outer = Matrix::Zero(m, m);
        Matrix mean_sq = Matrix::Zero(m, m);
        for (int r = 0; r < replicas; ++r) {
            CounterRng path(77000 + trial, static_cast<std::uint64_t>(r));
            int state = path.next_categorical(cum_pi);
            Vector sum = Vector::Zero(m);
            for (std::int64_t t = 0; t < i_m; ++t) {
                sum += g.row(state);
                state = path.next_categorical(cum_rows.row(state));
            }
            sum /= std::sqrt(static_cast<double>(i_m));
            const Matrix outer = sum * sum.transpose();
            mean_outer += outer;
            mean_sq += outer.cwiseProduct(outer);
        }
        mean_outer /= replicas;
        mean_sq /= replicas;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                const double var =
                    (mean_sq(i, j) - mean_outer(i, j) * mean_outer(i, j)) / (replicas - 1);
                const double se = std::sqrt(std::max(var, 0.0));
                if (std::abs(mean_outer(i, j) - gamma(i, j)) > 3.0 * se)
                    return "Gamma(" + std::to_string(i) + "," + std::to_string(j) +
                           ") off by " + fmtd(std::abs(mean_outer(i, j) - gamma(i, j))) +
                           " > 3 se " + fmtd(se) + " at trial " + std::to_string(trial);
            }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                            .count();
    if (secs > 120.0) return "runtime " + fmtd(secs) + " s over budget";
    return "";
}

std::string criterion_telescoping() {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg = ExperimentConfig::load(fixtures_dir + "/lsa_d3.json");
    salab::Instance inst = cfg.build_instance();

    salab::RunOptions options;
    options.n_traj = cfg.ensemble;
    options.x1 = cfg.x1;
    options.retain_paths = true;
    salab::TrajectoryEnsemble ens =
        salab::run_sa(inst.problem, inst.chain, inst.mds, inst.poisson, inst.schedule,
                      cfg.horizon, cfg.seed, cfg.checkpoints, options);

    const salab::Partition part =
        salab::make_partition(inst.schedule, cfg.horizon, cfg.partition_c);
    const salab::RemainderDecomposition dec =
        salab::decompose_remainder(ens, inst.problem, inst.chain, inst.poisson, inst.schedule,
                                   part, inst.a_bar, inst.gamma.gamma_mat);
    if (dec.max_step_identity_error > 1e-9)
        return "step identity error " + fmtd(dec.max_step_identity_error);
    if (dec.max_telescope_error > 1e-9)
        return "telescope error " + fmtd(dec.max_telescope_error);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                            .count();
    if (secs > 60.0) return "runtime " + fmtd(secs) + " s over budget";
    return "";
}

std::string criterion_coupling() {
    const Json summary = run_fixture("coupling.json", "coupling");
    const Json& fit = summary.at("fit_vs_h");
    const double slope = fit.at("slope").get<double>();
    const double lo = fit.at("slope_ci")[0].get<double>();
    const double hi = fit.at("slope_ci")[1].get<double>();
    if (!(slope >= 0.45 && slope <= 0.75))
        return "slope " + fmtd(slope) + " outside [0.45, 0.75]";
    if (hi - lo > 0.2) return "slope CI width " + fmtd(hi - lo) + " > 0.2";
    return "";
}

std::string criterion_last_iterate() {
    const Json summary = run_fixture("lsa_scalar.json", "last_iterate");

    // strictly decreasing adjusted distance over the full ensemble
    const Csv track = read_csv(work_root / "last_iterate" / "last_iterate.csv");
    std::vector<std::int64_t> ks;
    std::vector<double> adjusted;
    for (std::size_t r = 0; r < track.rows.size(); ++r) {
        const std::string& tag = track.rows[r][track.col("metric")];
        ks.push_back(std::stoll(tag.substr(tag.find('@') + 1)));
        adjusted.push_back(track.num(r, "value") - track.num(r, "baseline_value"));
    }

    std::map<std::int64_t, bool> significant;
    for (const Json& rec : summary.at("decreases"))
        significant[rec.at("from_k").get<std::int64_t>()] = rec.at("significant").get<bool>();

    int best_run = 0, run = 0;
    for (std::size_t i = 0; i + 1 < ks.size(); ++i) {
        const bool good = adjusted[i + 1] < adjusted[i] && significant.count(ks[i]) &&
                          significant[ks[i]];
        run = good ? run + 1 : 0;
        best_run = std::max(best_run, run);
    }
    if (best_run < 4)
        return "longest significant strictly-decreasing stretch spans " +
               std::to_string(best_run + 1) + " checkpoints, need 5";

    const Json& fit = summary.at("fit");
    const double lo = fit.at("slope_ci")[0].get<double>();
    const double hi = fit.at("slope_ci")[1].get<double>();
    if (!(lo >= 1.0 / 6.0 && hi <= 0.5))
        return "slope CI [" + fmtd(lo) + ", " + fmtd(hi) + "] not inside [1/6, 1/2]";
    return "";
}

std::string criterion_covariance_rate() {
    const Json summary = run_fixture("covariance_rate.json", "covariance_rate");
    const Csv csv = read_csv(work_root / "covariance_rate" / "covariance_rate.csv");
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const double gap = std::abs(csv.num(r, "empirical_dev") - csv.num(r, "oracle_dev"));
        if (gap > 3.0 * csv.num(r, "se_dev"))
            return "deviation gap " + fmtd(gap) + " > 3 se at k " + csv.rows[r][csv.col("k")];
    }
    const double slope = summary.at("oracle_fit").at("slope").get<double>();
    const double expected = summary.at("expected_exponent").get<double>();
    if (std::abs(slope - expected) > 0.1)
        return "oracle slope " + fmtd(slope) + " not within 0.1 of " + fmtd(expected);
    return "";
}

std::string criterion_pr_average() {
    const Json summary = run_fixture("pr_average.json", "pr_average");
    const Json& track = summary.at("covariance_rel_dev");
    if (track.empty()) return "empty covariance track";
    const Json& last = track.back();
    const double rel = last.at("rel_dev").get<double>();
    if (rel > 0.05)
        return "relative Frobenius deviation " + fmtd(rel) + " > 0.05 at k " +
               std::to_string(last.at("k").get<std::int64_t>());
    return "";
}

std::string criterion_coverage() {
    const Json summary = run_fixture("ci_multiplicative.json", "coverage");

    // reports keyed by (delta, method, k); skip pre-burn-in checkpoints
    struct Rec {
        double coverage, lo, hi, width, nominal;
    };
    std::map<double, std::map<std::string, std::map<std::int64_t, Rec>>> table;
    for (const Json& rec : summary.at("reports")) {
        if (rec.at("pre_burn_in").get<bool>()) continue;
        table[rec.at("delta").get<double>()][rec.at("method").get<std::string>()]
             [rec.at("k").get<std::int64_t>()] = {
                 rec.at("coverage").get<double>(), rec.at("wilson_lo").get<double>(),
                 rec.at("wilson_hi").get<double>(), rec.at("width").get<double>(),
                 rec.at("nominal").get<double>()};
    }
    if (table.empty()) return "no post-burn-in coverage records";

    for (const auto& [delta, methods] : table) {
        const auto& markov = methods.at("markov_moment");
        const auto& gauss = methods.at("gaussian_approx");
        const auto& wass = methods.at("wasserstein_corrected");
        const std::int64_t final_k = markov.rbegin()->first;

        // (i) the guaranteed constructions cover at every checkpoint
        for (const auto& [k, rec] : markov)
            if (rec.lo < rec.nominal)
                return "markov_moment under-covers at delta " + fmtd(delta) + ", k " +
                       std::to_string(k) + " (wilson lo " + fmtd(rec.lo) + ")";
        for (const auto& [k, rec] : wass)
            if (rec.lo < rec.nominal)
                return "wasserstein_corrected under-covers at delta " + fmtd(delta) + ", k " +
                       std::to_string(k) + " (wilson lo " + fmtd(rec.lo) + ")";

        // (ii) some early checkpoint separates gaussian_approx from the corrected radius
        bool separated = false;
        for (const auto& [k, rec] : gauss) {
            if (k == final_k) continue;
            if (rec.hi < rec.nominal && wass.at(k).hi >= rec.nominal) separated = true;
        }
        if (!separated)
            return "no early checkpoint where gaussian_approx alone under-covers at delta " +
                   fmtd(delta);

        // (iii) at the horizon everything covers and the plain Gaussian radius is tightest
        const Rec& gf = gauss.at(final_k);
        if (gf.hi < gf.nominal)
            return "gaussian_approx under-covers at the final checkpoint, delta " + fmtd(delta);
        if (!(gf.width < markov.at(final_k).width && gf.width < wass.at(final_k).width))
            return "gaussian_approx is not the narrowest interval at the final checkpoint, "
                   "delta " + fmtd(delta);
    }
    return "";
}

std::string criterion_tail_transition() {
    const Json summary = run_fixture("lsa_multiplicative.json", "tail_transition");
    const Json* first = nullptr;
    const Json* last = nullptr;
    for (const Json& rec : summary.at("checkpoints")) {
        if (rec.at("pre_burn_in").get<bool>()) continue;
        if (!first) first = &rec;
        last = &rec;
    }
    if (!first || first == last) return "need at least two post-burn-in checkpoints";

    auto max_abs = [](const Json& rec) {
        double m = 0.0;
        for (const Json& v : rec.at("kurtosis")) m = std::max(m, std::abs(v.get<double>()));
        return m;
    };
    auto max_val = [](const Json& rec) {
        double m = -1e300;
        for (const Json& v : rec.at("kurtosis")) m = std::max(m, v.get<double>());
        return m;
    };
    const double se_first = first->at("kurtosis_se").get<double>();
    if (max_val(*first) <= 3.0 * se_first)
        return "early kurtosis " + fmtd(max_val(*first)) + " not significantly positive (se " +
               fmtd(se_first) + ")";
    const double se_last = last->at("kurtosis_se").get<double>();
    if (max_abs(*last) > 3.0 * se_last)
        return "final kurtosis " + fmtd(max_abs(*last)) + " outside 3 se band (se " +
               fmtd(se_last) + ")";
    return "";
}

// exhaustive n <= 6 assignment search
double factorial_w(const Matrix& a, const Matrix& b, double p) {
    const int n = static_cast<int>(a.rows());
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
        double cost = 0.0;
        for (int i = 0; i < n; ++i)
            cost += std::pow((a.row(i) - b.row(perm[i])).norm(), p);
        best = std::min(best, cost);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::pow(best / n, 1.0 / p);
}

Matrix read_samples(const fs::path& path) {
    const Csv csv = read_csv(path);
    Matrix m(csv.rows.size(), csv.header.size());
    for (std::size_t i = 0; i < csv.rows.size(); ++i)
        for (std::size_t j = 0; j < csv.header.size(); ++j)
            m(i, j) = std::stod(csv.rows[i][j]);
    return m;
}

std::string criterion_transport() {
    const auto t0 = std::chrono::steady_clock::now();

    const Matrix sa = read_samples(fs::path(fixtures_dir) / "samples_a.csv");
    const Matrix sb = read_samples(fs::path(fixtures_dir) / "samples_b.csv");
    for (double p : {1.0, 2.0, 3.0}) {
        const double want = factorial_w(sa, sb, p);
        const double got =
            salab::wasserstein_exact({sa, std::nullopt}, {sb, std::nullopt}, p).value;
        if (std::abs(got - want) > 1e-12)
            return "assignment vs enumeration gap " + fmtd(std::abs(got - want)) + " at p " +
                   fmtd(p);
    }

    CounterRng rng(31415, 9);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_uniform() * 49);
        Matrix a(n, 1), b(n, 1);
        for (int i = 0; i < n; ++i) {
            a(i, 0) = rng.next_gaussian();
            b(i, 0) = 0.5 + 1.5 * rng.next_gaussian();
        }
        const double p = std::vector<double>{1.0, 1.5, 2.0, 3.0}[trial % 4];
        std::vector<double> xs(a.data(), a.data() + n), ys(b.data(), b.data() + n);
        std::sort(xs.begin(), xs.end());
        std::sort(ys.begin(), ys.end());
        double cost = 0.0;
        for (int i = 0; i < n; ++i) cost += std::pow(std::abs(xs[i] - ys[i]), p);
        const double want = std::pow(cost / n, 1.0 / p);
        const double got =
            salab::wasserstein_1d({a, std::nullopt}, {b, std::nullopt}, p).value;
        if (std::abs(got - want) > 1e-12)
            return "1d estimator gap " + fmtd(std::abs(got - want)) + " at trial " +
                   std::to_string(trial);
    }

    // Gaussian closed form vs exact empirical transport at n = 2048
    const Vector m1 = Vector::Zero(2);
    Vector m2(2);
    m2 << 3.0, 1.0;
    const Matrix c1 = Matrix::Identity(2, 2);
    Matrix c2(2, 2);
    c2 << 2.0, 0.5, 0.5, 1.0;
    const double closed = salab::gaussian_w2(m1, c1, m2, c2);
    const Matrix l1 = c1.llt().matrixL();
    const Matrix l2 = c2.llt().matrixL();
    std::vector<double> values;
    for (int rep = 0; rep < 6; ++rep) {
        CounterRng draw(62831, static_cast<std::uint64_t>(rep));
        Matrix xa(2048, 2), xb(2048, 2);
        for (int i = 0; i < 2048; ++i) {
            xa.row(i) = (m1 + l1 * draw.gaussian_vector(2)).transpose();
            xb.row(i) = (m2 + l2 * draw.gaussian_vector(2)).transpose();
        }
        values.push_back(
            salab::wasserstein_exact({xa, std::nullopt}, {xb, std::nullopt}, 2.0).value);
    }
    const double mean = salab::sample_mean(values);
    const double se = salab::sample_sd(values) / std::sqrt(static_cast<double>(values.size()));
    if (std::abs(mean - closed) > 3.0 * se)
        return "gaussian w2 " + fmtd(closed) + " vs sampled " + fmtd(mean) + " beyond 3 se " +
               fmtd(se);

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                            .count();
    if (secs > 180.0) return "runtime " + fmtd(secs) + " s over budget";
    return "";
}

std::string criterion_determinism() {
    const struct {
        std::string fixture, verb;
    } cases[] = {{"lsa_d3.json", "simulate"}, {"coupling.json", "experiment"}};
    for (const auto& c : cases) {
        const fs::path d1 = work_root / ("det1_" + c.fixture);
        const fs::path d3 = work_root / ("det3_" + c.fixture);
        for (const auto& [dir, threads] : {std::pair{d1, "1"}, std::pair{d3, "3"}}) {
            fs::remove_all(dir);
            CmdResult r = run_cli(c.verb + " " + fixtures_dir + "/" + c.fixture +
                                  " --threads " + threads + " --output-dir " + dir.string());
            if (r.exit_code != 0)
                return c.fixture + " exited " + std::to_string(r.exit_code) + ": " + r.out;
        }
        std::vector<std::string> names;
        for (const auto& e : fs::directory_iterator(d1))
            if (e.path().extension() == ".csv") names.push_back(e.path().filename());
        if (names.empty()) return c.fixture + ": no CSV outputs to compare";
        std::sort(names.begin(), names.end());
        for (const std::string& name : names) {
            if (!fs::exists(d3 / name)) return c.fixture + ": " + name + " missing at threads 3";
            if (slurp(d1 / name) != slurp(d3 / name))
                return c.fixture + ": " + name + " differs between thread counts";
        }
    }
    return "";
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: acceptance <salab binary> <fixtures dir>\n");
        return 64;
    }
    cli_path = argv[1];
    fixtures_dir = argv[2];
    std::filesystem::create_directories(work_root);

    const std::vector<std::pair<int, std::function<std::string()>>> criteria = {
        {1, criterion_lyapunov},        {2, criterion_poisson},
        {3, criterion_telescoping},     {4, criterion_coupling},
        {5, criterion_last_iterate},    {6, criterion_covariance_rate},
        {7, criterion_pr_average},      {8, criterion_coverage},
        {9, criterion_tail_transition}, {10, criterion_transport},
        {11, criterion_determinism},
    };

    int failures = 0;
    for (const auto& [number, body] : criteria) {
        std::string why;
        try {
            why = body();
        } catch (const std::exception& e) {
            why = e.what();
        }
        if (why.empty()) {
            std::printf("criterion %d: pass\n", number);
        } else {
            std::printf("criterion %d: FAIL (%s)\n", number, why.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }
    return failures;
}
