#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "salab/experiments.hpp"
#include "salab/transport.hpp"

namespace {

using salab::ConfigError;
using salab::ExperimentConfig;
using salab::Json;
using salab::Matrix;

int resolve_threads(std::optional<int> cli_threads, int config_threads) {
    if (cli_threads) return *cli_threads;
    if (const char* env = std::getenv("SA_LAB_THREADS")) {
        try {
            return std::max(1, std::stoi(env));
        } catch (...) {
            throw ConfigError("SA_LAB_THREADS is not an integer: " + std::string(env));
        }
    }
    return config_threads;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides,
                             std::optional<std::uint64_t> seed, std::optional<int> threads,
                             const std::string& output_dir) {
    ExperimentConfig cfg = ExperimentConfig::load(path, overrides);
    if (seed) cfg.seed = *seed;
    cfg.threads = resolve_threads(threads, cfg.threads);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    return cfg;
}

// Sample files: header row x0,x1,..., one sample per line, LF endings.
Matrix read_samples_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open sample file " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
    if (!line.empty() && line.back() == '\r')
        throw ConfigError(path + ": expected LF line endings");
    int cols = 1;
    for (char c : line)
        if (c == ',') ++cols;
    if (line.rfind("x0", 0) != 0) throw ConfigError(path + ": header must start with x0");
    std::vector<double> vals;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        int got = 0;
        while (std::getline(ss, cell, ',')) {
            vals.push_back(std::stod(cell));
            ++got;
        }
        if (got != cols) throw ConfigError(path + ": ragged row");
    }
    const std::int64_t rows = static_cast<std::int64_t>(vals.size()) / cols;
    Matrix m(rows, cols);
    for (std::int64_t i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = vals[i * cols + j];
    return m;
}

// With --assert, fail (exit 3) when a configured slope bracket does not
// contain the bootstrap CI, or when a boolean check in the summary is false.
bool summary_assertions_pass(const ExperimentConfig& cfg, const Json& summary,
                             std::string& why) {
    if (cfg.extra.contains("slope_bracket")) {
        const double lo = cfg.extra["slope_bracket"][0].get<double>();
        const double hi = cfg.extra["slope_bracket"][1].get<double>();
        const Json* fit = nullptr;
        for (const char* key : {"fit", "fit_vs_h", "oracle_fit", "last_iterate_fit"}) {
            if (summary.contains(key)) {
                fit = &summary[key];
                break;
            }
        }
        if (!fit) {
            why = "no rate fit in summary to assert on";
            return false;
        }
        const double ci_lo = (*fit)["slope_ci"][0].get<double>();
        const double ci_hi = (*fit)["slope_ci"][1].get<double>();
        if (!(ci_lo >= lo && ci_hi <= hi)) {
            why = "slope CI [" + std::to_string(ci_lo) + ", " + std::to_string(ci_hi) +
                  "] not inside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
            return false;
        }
    }
    if (summary.contains("bound_holds_at_horizon") &&
        !summary["bound_holds_at_horizon"].get<bool>()) {
        why = "recursion bound does not hold at the horizon";
        return false;
    }
    return true;
}

int run_report(const std::string& dir) {
    std::ifstream in(dir + "/summary.json");
    if (!in) throw salab::MissingPath("no summary.json under " + dir);
    Json s;
    in >> s;
    std::cout << "experiment: " << s.value("experiment", std::string("?")) << "\n";
    std::cout << "config hash: " << s.value("config_hash", std::string("?")) << "\n";
    std::cout << "wall ms: " << s.value("wall_ms", 0) << "\n";
    for (const char* key : {"fit", "fit_vs_h", "oracle_fit", "last_iterate_fit", "pr_fit"}) {
        if (!s.contains(key)) continue;
        const Json& f = s[key];
        std::cout << key << ": slope " << f["slope"].get<double>() << " ci ["
                  << f["slope_ci"][0].get<double>() << ", " << f["slope_ci"][1].get<double>()
                  << "] r2 " << f["r2"].get<double>() << "\n";
    }
    if (s.contains("crossover_k")) std::cout << "crossover k: " << s["crossover_k"] << "\n";
    if (s.contains("c_hat")) std::cout << "c_hat: " << s["c_hat"].get<double>() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic approximation laboratory"};
    app.name("salab");
    app.require_subcommand(1);

    std::string config_path, output_dir, op, file_a, file_b, report_dir;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    double p = 2.0;
    bool with_assert = false;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        if (needs_config)
            cmd->add_option("config", config_path, "JSON config file")->required();
        cmd->add_option("--overrides", overrides, "key=value config overrides");
        cmd->add_option("--seed", seed, "master seed (overrides config)");
        cmd->add_option("--threads", threads, "worker count (default: SA_LAB_THREADS or config)");
        cmd->add_option("--output-dir", output_dir, "output directory (overrides config)");
    };

    CLI::App* validate = app.add_subcommand("validate", "check a config and print its hash");
    add_common(validate, true);

    CLI::App* simulate = app.add_subcommand("simulate", "run the recursion, write checkpoints");
    add_common(simulate, true);

    CLI::App* experiment = app.add_subcommand("experiment", "run the configured experiment");
    add_common(experiment, true);
    experiment->add_flag("--assert", with_assert,
                         "exit 3 when configured bracket assertions fail");

    CLI::App* metric = app.add_subcommand("metric", "standalone distance between sample files");
    metric->add_option("--op", op, "wasserstein_exact | wasserstein_1d | wasserstein_sliced")
        ->required();
    metric->add_option("--a", file_a, "first sample CSV")->required();
    metric->add_option("--b", file_b, "second sample CSV")->required();
    metric->add_option("--p", p, "transport order");
    metric->add_option("--seed", seed, "seed for randomized estimators");

    CLI::App* report = app.add_subcommand("report", "print a digest of an output directory");
    report->add_option("dir", report_dir, "experiment output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*validate) {
            ExperimentConfig cfg =
                load_config(config_path, overrides, seed, threads, output_dir);
            std::cout << cfg.hash << "\n";
            return 0;
        }
        if (*simulate || *experiment) {
            ExperimentConfig cfg =
                load_config(config_path, overrides, seed, threads, output_dir);
            if (*simulate) cfg.experiment = "simulate";
            salab::ExperimentResult res = salab::run_experiment(cfg);
            if (*experiment && with_assert) {
                std::string why;
                if (!summary_assertions_pass(cfg, res.summary, why)) {
                    std::cerr << config_path << ": assertion failed: " << why << "\n";
                    return 3;
                }
            }
            return 0;
        }
        if (*metric) {
            const Matrix a = read_samples_csv(file_a);
            const Matrix b = read_samples_csv(file_b);
            salab::EmpiricalMeasure mu{a, std::nullopt};
            salab::EmpiricalMeasure nu{b, std::nullopt};
            salab::WassersteinEstimate est;
            if (op == "wasserstein_exact")
                est = salab::wasserstein_exact(mu, nu, p);
            else if (op == "wasserstein_1d")
                est = salab::wasserstein_1d(mu, nu, p);
            else if (op == "wasserstein_sliced")
                est = salab::wasserstein_sliced(mu, nu, p, 64, seed.value_or(0));
            else
                throw ConfigError("metric: unknown --op '" + op + "'");
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.12g", est.value);
            std::cout << buf << "\n";
            return 0;
        }
        if (*report) return run_report(report_dir);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
