#include "salab/noise.hpp"

#include <cmath>

namespace salab {

void MarkovChainSpec::validate() const {
    if (n_states < 1) throw ConfigError("chain: n_states must be positive");
    if (transition.rows() != n_states || transition.cols() != n_states)
        throw ConfigError("chain: transition must be S x S");
    if (initial.size() != n_states) throw ConfigError("chain: initial must have S entries");
    if ((transition.array() < 0.0).any()) throw ConfigError("chain: negative transition entry");
    for (int i = 0; i < n_states; ++i) {
        if (std::abs(transition.row(i).sum() - 1.0) > 1e-12)
            throw ConfigError("chain: row " + std::to_string(i) + " does not sum to 1");
    }
    if (std::abs(initial.sum() - 1.0) > 1e-12 || (initial.array() < 0.0).any())
        throw ConfigError("chain: initial is not a probability vector");
    // P^S > 0 entrywise is sufficient for irreducibility + aperiodicity here
    Matrix p_pow = Matrix::Identity(n_states, n_states);
    for (int i = 0; i < n_states; ++i) p_pow = p_pow * transition;
    if ((p_pow.array() <= 0.0).any())
        throw Reducible("chain: P^S has a zero entry; chain not irreducible aperiodic");
}

bool MarkovChainSpec::is_iid() const {
    for (int i = 1; i < n_states; ++i) {
        if (!transition.row(i).isApprox(transition.row(0), 1e-14)) return false;
    }
    return true;
}

MarkovChainSpec MarkovChainSpec::single_state() {
    MarkovChainSpec c;
    c.n_states = 1;
    c.transition = Matrix::Ones(1, 1);
    c.initial = Vector::Ones(1);
    c.state_values.resize(1);
    return c;
}

Vector stationary_distribution(const MarkovChainSpec& chain) {
    chain.validate();
    const int s = chain.n_states;
    // (P' - I) pi = 0 with the last equation replaced by sum(pi) = 1
    Matrix sys = chain.transition.transpose() - Matrix::Identity(s, s);
    sys.row(s - 1).setOnes();
    Vector rhs = Vector::Zero(s);
    rhs(s - 1) = 1.0;
    Vector pi = sys.partialPivLu().solve(rhs);
    if ((pi.array() <= 0.0).any())
        throw Reducible("stationary_distribution: nonpositive stationary mass");
    const double residual = (chain.transition.transpose() * pi - pi).lpNorm<Eigen::Infinity>();
    if (residual > 1e-12) throw SolverDivergence("stationary_distribution: residual too large");
    return pi;
}

void MdsSpec::validate() const {
    if (covariance.size() > 0) require_psd(covariance, "mds covariance", 1e-12);
    if (moment_order < 1) throw ConfigError("mds: moment_order must be >= 1");
    if (kind == MdsKind::scaled_student_t) {
        if (student_nu <= 2 * moment_order + 2)
            throw ConfigError("mds: student_nu must exceed 2 * moment_order + 2");
    }
}

PoissonSolution solve_poisson(const MarkovChainSpec& chain, const Matrix& g) {
    chain.validate();
    const int s = chain.n_states;
    if (g.rows() != s) throw DimensionMismatch("solve_poisson: g must have one row per state");
    const Vector pi = stationary_distribution(chain);

    const Vector pi_mean = g.transpose() * pi;
    if (pi_mean.lpNorm<Eigen::Infinity>() > abs_rel_tol(1e-10, g.norm()))
        throw NotCentered("solve_poisson: g is not pi-centered");

    // fundamental matrix: Phi = (I - P + 1 pi')^{-1} g gives the centered solution
    const Matrix sys =
        Matrix::Identity(s, s) - chain.transition + Vector::Ones(s) * pi.transpose();
    Eigen::PartialPivLU<Matrix> lu(sys);
    if (std::abs(lu.determinant()) < 1e-14)
        throw SingularSystem("solve_poisson: (I - P) singular on centered subspace");
    PoissonSolution sol;
    sol.phi = lu.solve(g);
    const Matrix residual = (Matrix::Identity(s, s) - chain.transition) * sol.phi - g;
    if (residual.lpNorm<Eigen::Infinity>() > abs_rel_tol(1e-10, g.norm()))
        throw SingularSystem("solve_poisson: residual exceeds tolerance");
    sol.p_phi = chain.transition * sol.phi;
    return sol;
}

AsymptoticCovariance asymptotic_gamma(const MarkovChainSpec& chain,
                                      const PoissonSolution& poisson, const MdsSpec& mds) {
    const int s = chain.n_states;
    const int d = static_cast<int>(poisson.phi.cols());
    const Vector pi = stationary_distribution(chain);

    AsymptoticCovariance out;
    out.gamma_xi = Matrix::Zero(d, d);
    for (int i = 0; i < s; ++i) {
        for (int j = 0; j < s; ++j) {
            const double w = pi(i) * chain.transition(i, j);
            if (w == 0.0) continue;
            const Vector diff = poisson.phi.row(j).transpose() - poisson.p_phi.row(i).transpose();
            out.gamma_xi += w * diff * diff.transpose();
        }
    }
    out.gamma_w = mds.is_zero() ? Matrix::Zero(d, d) : mds.covariance;
    out.gamma_mat = out.gamma_xi + out.gamma_w;
    require_psd(out.gamma_mat, "asymptotic_gamma");
    return out;
}

NoisePathSampler::NoisePathSampler(const MarkovChainSpec& chain, const MdsSpec& mds,
                                   const PoissonSolution& poisson, int dim, CounterRng rng)
    : chain_(chain), mds_(mds), poisson_(poisson), dim_(dim), rng_(rng) {
    cum_rows_.resize(chain.n_states, chain.n_states);
    for (int i = 0; i < chain.n_states; ++i) {
        double acc = 0.0;
        for (int j = 0; j < chain.n_states; ++j) {
            acc += chain.transition(i, j);
            cum_rows_(i, j) = acc;
        }
    }
    cum_initial_.resize(chain.n_states);
    double acc = 0.0;
    for (int j = 0; j < chain.n_states; ++j) {
        acc += chain.initial(j);
        cum_initial_(j) = acc;
    }
    if (!mds_.is_zero()) w_sqrt_ = psd_sqrt(mds_.covariance);
    if (mds_.kind == MdsKind::scaled_student_t) {
        t_scale_ = std::sqrt((mds_.student_nu - 2.0) / mds_.student_nu);
    }
    state_ = rng_.next_categorical(cum_initial_);
    z_.resize(dim_);
}

void NoisePathSampler::sample_w_into(Vector& w) {
    if (mds_.is_zero()) {
        w.setZero();
        return;
    }
    switch (mds_.kind) {
        case MdsKind::gaussian_iid:
            for (int i = 0; i < dim_; ++i) z_(i) = rng_.next_gaussian();
            break;
        case MdsKind::bounded_iid:
            // uniform on [-sqrt(3), sqrt(3)] per component: unit variance, bounded
            for (int i = 0; i < dim_; ++i)
                z_(i) = (2.0 * rng_.next_uniform() - 1.0) * 1.7320508075688772;
            break;
        case MdsKind::scaled_student_t:
            for (int i = 0; i < dim_; ++i) {
                double chi2 = 0.0;
                for (int j = 0; j < mds_.student_nu; ++j) {
                    const double z = rng_.next_gaussian();
                    chi2 += z * z;
                }
                z_(i) = t_scale_ * rng_.next_gaussian() / std::sqrt(chi2 / mds_.student_nu);
            }
            break;
    }
    w.noalias() = w_sqrt_ * z_;
}

void NoisePathSampler::step_inplace(NoiseRealization& r, bool want_m) {
    r.xi_prev = state_;
    if (chain_.n_states == 1) {
        r.xi = 0;
    } else {
        double acc = rng_.next_uniform();
        const int s = chain_.n_states;
        int j = 0;
        while (j < s - 1 && acc >= cum_rows_(r.xi_prev, j)) ++j;
        r.xi = j;
    }
    state_ = r.xi;
    sample_w_into(r.w);
    if (want_m) {
        r.m = -(poisson_.phi.row(r.xi).transpose() -
                poisson_.p_phi.row(r.xi_prev).transpose()) -
              r.w;
    }
}

NoiseRealization NoisePathSampler::step() {
    NoiseRealization r;
    r.w.resize(dim_);
    r.m.resize(dim_);
    step_inplace(r, true);
    return r;
}

std::vector<NoiseRealization> sample_path(const MarkovChainSpec& chain, const MdsSpec& mds,
                                          const PoissonSolution& poisson, int dim,
                                          std::int64_t length, std::uint64_t master_seed,
                                          std::uint64_t stream) {
    if (length < 1) throw ConfigError("sample_path: length must be >= 1");
    NoisePathSampler sampler(chain, mds, poisson, dim, CounterRng(master_seed, stream));
    std::vector<NoiseRealization> path;
    path.reserve(static_cast<std::size_t>(length));
    for (std::int64_t k = 0; k < length; ++k) path.push_back(sampler.step());
    return path;
}

DriftConditionReport verify_drift_condition(const MarkovChainSpec& chain, const Vector& v) {
    chain.validate();
    if ((v.array() < 1.0).any())
        throw ConfigError("verify_drift_condition: V must be >= 1 statewise");
    const Vector pv = chain.transition * v;

    DriftConditionReport best{0.0, pv.maxCoeff()};
    double best_score = best.c_v / (1.0 - best.rho_v);
    for (double rho = 0.001; rho < 1.0; rho += 0.001) {
        const double c = (pv - rho * v).maxCoeff();
        const double penalty = std::max(c, 0.0);
        const double score = penalty / (1.0 - rho);
        if (score < best_score) {
            best_score = score;
            best = {rho, c};
        }
    }
    return best;
}

}  // namespace salab
