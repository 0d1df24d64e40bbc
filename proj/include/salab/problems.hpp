#pragma once

#include <string>

#include "salab/engine.hpp"
#include "salab/ou.hpp"

namespace salab {

// Everything derived from a configured SA instance: the chain's Poisson
// solution at the root, the asymptotic covariance, the drift matrix and its
// Lyapunov data, and the limiting OU process.
struct Instance {
    ProblemSpec problem;
    MarkovChainSpec chain;
    MdsSpec mds;
    StepSchedule schedule;
    PoissonSolution poisson;       // for f(x*, .)
    AsymptoticCovariance gamma;
    DriftMatrix a_bar;
    LyapunovSolution lyap;
    Matrix sigma_a;
    OUSpec ou;

    static Instance build(ProblemSpec problem, MarkovChainSpec chain, MdsSpec mds,
                          StepSchedule schedule);
};

// Linear SA: f(x, xi) = A(xi) x - b(xi); payloads are (mat, vec) = (A_s, b_s).
// x* is derived from the mean system unless supplied.
ProblemSpec make_lsa_problem(const MarkovChainSpec& chain, int dim);

// Strongly convex scalar-per-component SGD operator:
// f(x, xi) = scale(xi) .* (mu (x - x*) + c tanh(x - x*)) + shift(xi),
// payload vec = [scale, shift_0..shift_{d-1}].
ProblemSpec make_logcosh_problem(const MarkovChainSpec& chain, int dim, double mu, double c,
                                 const Vector& x_star);

// Canonical fixtures used across experiments and tests.
MarkovChainSpec iid_chain_from_states(const std::vector<StateData>& states,
                                      const Vector& probs);

}  // namespace salab
