#include "salab/problems.hpp"

#include <cmath>

namespace salab {

Instance Instance::build(ProblemSpec problem, MarkovChainSpec chain, MdsSpec mds,
                         StepSchedule schedule) {
    chain.validate();
    mds.validate();
    problem.validate(chain);

    PoissonSolution poisson = solve_poisson(chain, problem.f_at_star(chain));
    AsymptoticCovariance gamma = asymptotic_gamma(chain, poisson, mds);
    DriftMatrix a_bar =
        DriftMatrix::from_jacobian(problem.grad_f_bar_at_star, schedule.a, schedule.gamma1);
    LyapunovSolution lyap = solve_lyapunov(a_bar);
    Matrix sigma_a = solve_stationary_covariance(a_bar, gamma.gamma_mat).sigma_a;
    OUSpec ou = OUSpec::make(a_bar, gamma.gamma_mat);
    return Instance{std::move(problem), std::move(chain), std::move(mds), schedule,
                    std::move(poisson), std::move(gamma), std::move(a_bar), std::move(lyap),
                    std::move(sigma_a), std::move(ou)};
}

ProblemSpec make_lsa_problem(const MarkovChainSpec& chain, int dim) {
    chain.validate();
    const Vector pi = stationary_distribution(chain);
    Matrix a_mean = Matrix::Zero(dim, dim);
    Vector b_mean = Vector::Zero(dim);
    for (int s = 0; s < chain.n_states; ++s) {
        const StateData& sd = chain.state_values[s];
        if (sd.mat.rows() != dim || sd.mat.cols() != dim || sd.vec.size() != dim)
            throw ConfigError("lsa: state payload must carry A (d x d) and b (d)");
        a_mean += pi(s) * sd.mat;
        b_mean += pi(s) * sd.vec;
    }
    require_hurwitz(a_mean, "lsa mean matrix");

    ProblemSpec p;
    p.dim = dim;
    p.x_star = a_mean.partialPivLu().solve(b_mean);
    p.grad_f_bar_at_star = a_mean;
    p.f = [](const Vector& x, const StateData& sd) -> Vector { return sd.mat * x - sd.vec; };
    p.f_into = [](const Vector& x, const StateData& sd, Vector& out) {
        out.noalias() = sd.mat * x;
        out -= sd.vec;
    };
    p.f_bar = [a_mean, b_mean](const Vector& x) -> Vector { return a_mean * x - b_mean; };
    return p;
}

ProblemSpec make_logcosh_problem(const MarkovChainSpec& chain, int dim, double mu, double c,
                                 const Vector& x_star) {
    chain.validate();
    if (!(mu > 0.0)) throw ConfigError("logcosh: mu must be positive (strong convexity)");
    if (c < 0.0) throw ConfigError("logcosh: c must be nonnegative");
    const Vector pi = stationary_distribution(chain);
    double scale_mean = 0.0;
    Vector shift_mean = Vector::Zero(dim);
    for (int s = 0; s < chain.n_states; ++s) {
        const StateData& sd = chain.state_values[s];
        if (sd.vec.size() != dim + 1)
            throw ConfigError("logcosh: state payload vec must be [scale, shift...]");
        scale_mean += pi(s) * sd.vec(0);
        shift_mean += pi(s) * sd.vec.tail(dim);
    }
    if (shift_mean.lpNorm<Eigen::Infinity>() > 1e-12)
        throw ConfigError("logcosh: pi-mean of shifts must be zero");
    if (!(scale_mean > 0.0)) throw ConfigError("logcosh: mean scale must be positive");

    ProblemSpec p;
    p.dim = dim;
    p.x_star = x_star;
    p.grad_f_bar_at_star = scale_mean * (mu + c) * Matrix::Identity(dim, dim);
    auto eval = [mu, c, x_star, dim](const Vector& x, const StateData& sd, Vector& out) {
        const double scale = sd.vec(0);
        for (int i = 0; i < dim; ++i) {
            const double delta = x(i) - x_star(i);
            out(i) = scale * (mu * delta + c * std::tanh(delta)) + sd.vec(1 + i);
        }
    };
    p.f_into = eval;
    p.f = [eval, dim](const Vector& x, const StateData& sd) -> Vector {
        Vector out(dim);
        eval(x, sd, out);
        return out;
    };
    p.f_bar = [mu, c, x_star, scale_mean, dim](const Vector& x) -> Vector {
        Vector out(dim);
        for (int i = 0; i < dim; ++i) {
            const double delta = x(i) - x_star(i);
            out(i) = scale_mean * (mu * delta + c * std::tanh(delta));
        }
        return out;
    };
    return p;
}

MarkovChainSpec iid_chain_from_states(const std::vector<StateData>& states,
                                      const Vector& probs) {
    MarkovChainSpec c;
    c.n_states = static_cast<int>(states.size());
    c.transition = probs.transpose().replicate(c.n_states, 1);
    c.initial = probs;
    c.state_values = states;
    c.validate();
    return c;
}

}  // namespace salab
