#include "salab/config.hpp"

#include <fstream>
#include <set>

namespace salab {

namespace {

void reject_unknown_keys(const Json& obj, const std::set<std::string>& allowed,
                         const std::string& section) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ConfigError("config: unknown key '" + it.key() + "' in " + section);
        }
    }
}

}  // namespace

Matrix json_to_matrix(const Json& j, const char* what) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw ConfigError(std::string("config: ") + what + " must be a row-major array of arrays");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        if (static_cast<int>(j[i].size()) != cols)
            throw ConfigError(std::string("config: ") + what + " has ragged rows");
        for (int k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

Vector json_to_vector(const Json& j, const char* what) {
    if (!j.is_array()) throw ConfigError(std::string("config: ") + what + " must be an array");
    Vector v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<int>(i)) = j[i].get<double>();
    return v;
}

std::string config_hash(const Json& doc) {
    // FNV-1a over the canonical (sorted-key) dump
    const std::string s = doc.dump();
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path,
                                        const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    Json doc;
    try {
        in >> doc;
    } catch (const Json::exception& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
    }
    // parse first so override keys are checked against a valid schema
    ExperimentConfig base = from_json(doc);
    (void)base;
    for (const std::string& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: override '" + ov + "' is not key=value");
        const std::string key = ov.substr(0, eq);
        const std::string val = ov.substr(eq + 1);
        if (!doc.contains(key))
            throw ConfigError("config: override key '" + key + "' not present in " +
                              path.string());
        Json parsed;
        try {
            parsed = Json::parse(val);
        } catch (const Json::exception&) {
            parsed = val;  // treat as plain string
        }
        doc[key] = parsed;
    }
    return from_json(doc);
}

ExperimentConfig ExperimentConfig::from_json(Json doc) {
    static const std::set<std::string> top_keys = {
        "experiment", "problem",  "chain",    "mds",          "schedule", "horizon",
        "checkpoints", "ensemble", "partition_c", "x1",       "metrics",  "seed",
        "burn_in",     "retain_paths", "output_dir", "threads", "extra"};
    reject_unknown_keys(doc, top_keys, "top level");

    ExperimentConfig cfg;
    cfg.raw = doc;
    // runtime-only knobs do not change what is computed
    Json hash_doc = doc;
    hash_doc.erase("threads");
    hash_doc.erase("output_dir");
    cfg.hash = config_hash(hash_doc);

    if (!doc.contains("experiment")) throw ConfigError("config: missing 'experiment'");
    cfg.experiment = doc["experiment"].get<std::string>();

    // problem
    if (!doc.contains("problem")) throw ConfigError("config: missing 'problem'");
    const Json& pj = doc["problem"];
    reject_unknown_keys(pj, {"kind", "dim", "mu", "c", "x_star"}, "problem");
    cfg.problem_kind = pj.value("kind", "lsa");
    cfg.dim = pj.value("dim", 1);
    cfg.mu = pj.value("mu", 0.0);
    cfg.c_nonlin = pj.value("c", 0.0);
    if (pj.contains("x_star")) cfg.x_star = json_to_vector(pj["x_star"], "problem.x_star");
    if (cfg.problem_kind != "lsa" && cfg.problem_kind != "logcosh")
        throw ConfigError("config: problem.kind must be 'lsa' or 'logcosh'");

    // chain
    if (!doc.contains("chain")) throw ConfigError("config: missing 'chain'");
    const Json& cj = doc["chain"];
    reject_unknown_keys(cj, {"transition", "initial", "states"}, "chain");
    cfg.chain.transition = json_to_matrix(cj.at("transition"), "chain.transition");
    cfg.chain.n_states = static_cast<int>(cfg.chain.transition.rows());
    if (cj.contains("initial")) {
        cfg.chain.initial = json_to_vector(cj["initial"], "chain.initial");
    }
    for (const Json& sj : cj.at("states")) {
        reject_unknown_keys(sj, {"A", "b", "scale", "shift"}, "chain.states[]");
        StateData sd;
        if (sj.contains("A")) sd.mat = json_to_matrix(sj["A"], "state A");
        if (sj.contains("b")) sd.vec = json_to_vector(sj["b"], "state b");
        if (sj.contains("scale")) {
            // logcosh payload: vec = [scale, shift...]
            Vector shift = sj.contains("shift") ? json_to_vector(sj["shift"], "state shift")
                                                : Vector::Zero(cfg.dim);
            sd.vec.resize(1 + shift.size());
            sd.vec(0) = sj["scale"].get<double>();
            sd.vec.tail(shift.size()) = shift;
        }
        cfg.chain.state_values.push_back(std::move(sd));
    }
    if (cfg.chain.initial.size() == 0) {
        // default to the stationary distribution
        MarkovChainSpec probe = cfg.chain;
        probe.initial = Vector::Constant(cfg.chain.n_states, 1.0 / cfg.chain.n_states);
        cfg.chain.initial = stationary_distribution(probe);
    }
    cfg.chain.validate();

    // mds
    const Json mj = doc.value("mds", Json::object());
    reject_unknown_keys(mj, {"kind", "covariance", "moment_order", "student_nu"}, "mds");
    const std::string mkind = mj.value("kind", "gaussian_iid");
    if (mkind == "gaussian_iid")
        cfg.mds.kind = MdsKind::gaussian_iid;
    else if (mkind == "bounded_iid")
        cfg.mds.kind = MdsKind::bounded_iid;
    else if (mkind == "scaled_student_t")
        cfg.mds.kind = MdsKind::scaled_student_t;
    else
        throw ConfigError("config: mds.kind '" + mkind + "' unknown");
    if (mj.contains("covariance"))
        cfg.mds.covariance = json_to_matrix(mj["covariance"], "mds.covariance");
    else
        cfg.mds.covariance = Matrix::Zero(cfg.dim, cfg.dim);
    cfg.mds.moment_order = mj.value("moment_order", 2);
    cfg.mds.student_nu = mj.value("student_nu", 0);
    cfg.mds.validate();

    // schedule
    if (!doc.contains("schedule")) throw ConfigError("config: missing 'schedule'");
    const Json& sj = doc["schedule"];
    reject_unknown_keys(sj, {"gamma1", "a"}, "schedule");
    cfg.gamma1 = sj.value("gamma1", 1.0);
    cfg.a = sj.value("a", 0.8);
    (void)StepSchedule(cfg.gamma1, cfg.a);  // validates

    cfg.horizon = doc.value("horizon", std::int64_t{0});
    if (doc.contains("checkpoints"))
        for (const Json& k : doc["checkpoints"]) cfg.checkpoints.push_back(k.get<std::int64_t>());
    cfg.ensemble = doc.value("ensemble", 10000);
    cfg.partition_c = doc.value("partition_c", 1.0);
    cfg.x1 = doc.contains("x1") ? json_to_vector(doc["x1"], "x1") : Vector::Zero(cfg.dim);
    if (doc.contains("metrics"))
        for (const Json& m : doc["metrics"]) cfg.metrics.push_back(m.get<std::string>());
    cfg.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("burn_in") && !doc["burn_in"].is_null())
        cfg.burn_in = doc["burn_in"].get<std::int64_t>();
    cfg.retain_paths = doc.value("retain_paths", false);
    cfg.output_dir = doc.value("output_dir", "out");
    cfg.threads = doc.value("threads", 1);
    cfg.extra = doc.value("extra", Json::object());
    return cfg;
}

Instance ExperimentConfig::build_instance() const {
    ProblemSpec problem;
    if (problem_kind == "lsa") {
        problem = make_lsa_problem(chain, dim);
    } else {
        if (!x_star) throw ConfigError("config: logcosh problem requires x_star");
        problem = make_logcosh_problem(chain, dim, mu, c_nonlin, *x_star);
    }
    return Instance::build(std::move(problem), chain, mds, schedule());
}

}  // namespace salab
