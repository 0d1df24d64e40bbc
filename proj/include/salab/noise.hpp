#pragma once

#include <cstdint>
#include <vector>

#include "salab/linalg.hpp"
#include "salab/rng.hpp"

namespace salab {

// Per-state data payload. Linear problems read (mat, vec) as (A(xi), b(xi));
// nonlinear problems read scalar knobs out of vec.
struct StateData {
    Matrix mat;
    Vector vec;
};

struct MarkovChainSpec {
    int n_states = 0;
    Matrix transition;   // row-stochastic
    Vector initial;      // distribution of the pre-step state
    std::vector<StateData> state_values;

    void validate() const;
    bool is_iid() const;  // all rows equal

    static MarkovChainSpec single_state();  // degenerate one-state chain
};

Vector stationary_distribution(const MarkovChainSpec& chain);

enum class MdsKind { gaussian_iid, bounded_iid, scaled_student_t };

struct MdsSpec {
    MdsKind kind = MdsKind::gaussian_iid;
    Matrix covariance;   // Gamma^W, PSD (zero allowed)
    int moment_order = 2;
    int student_nu = 0;  // degrees of freedom; integer, > 2p + 2

    void validate() const;
    bool is_zero() const { return covariance.size() == 0 || covariance.norm() == 0.0; }
};

// Centered solutions to (I - P) Phi = g on a finite chain, one column per
// component of g. Rows index states.
struct PoissonSolution {
    Matrix phi;      // S x m
    Matrix p_phi;    // (P Phi), cached for the MDS construction
    bool centered = true;
};

// g rows must have pi-mean zero (verified to 1e-10); the returned solution is
// the unique one with pi-mean zero.
PoissonSolution solve_poisson(const MarkovChainSpec& chain, const Matrix& g);

struct AsymptoticCovariance {
    Matrix gamma_mat;  // gamma_xi + gamma_w
    Matrix gamma_xi;
    Matrix gamma_w;
};

// Exact finite sum over (s, s') of the Markov component, plus Gamma^W.
// poisson must be the solution for f(x*, .) (d columns).
AsymptoticCovariance asymptotic_gamma(const MarkovChainSpec& chain,
                                      const PoissonSolution& poisson,
                                      const MdsSpec& mds);

struct NoiseRealization {
    int xi_prev;  // state entering step k
    int xi;       // state used at step k
    Vector w;
    Vector m;     // -M_k = [Phi(xi_k) - (P Phi)(xi_{k-1})] + W_k
};

// Streams one trajectory's noise; deterministic given the rng stream.
class NoisePathSampler {
public:
    NoisePathSampler(const MarkovChainSpec& chain, const MdsSpec& mds,
                     const PoissonSolution& poisson, int dim, CounterRng rng);

    NoiseRealization step();
    // Allocation-free variant: r.w and r.m must be sized to dim. When want_m
    // is false, r.m is left untouched (the Poisson lookup is skipped).
    void step_inplace(NoiseRealization& r, bool want_m);
    int current_state() const { return state_; }

private:
    void sample_w_into(Vector& w);

    const MarkovChainSpec& chain_;
    const MdsSpec& mds_;
    const PoissonSolution& poisson_;
    int dim_;
    CounterRng rng_;
    int state_;
    Matrix cum_rows_;    // per-state cumulative transition rows
    Vector cum_initial_;
    Matrix w_sqrt_;      // Gamma^W^{1/2}
    double t_scale_ = 1.0;
    Vector z_;           // scratch draw
};

std::vector<NoiseRealization> sample_path(const MarkovChainSpec& chain, const MdsSpec& mds,
                                          const PoissonSolution& poisson, int dim,
                                          std::int64_t length, std::uint64_t master_seed,
                                          std::uint64_t stream);

struct DriftConditionReport {
    double rho_v;
    double c_v;
};

// Smallest-penalty (rho, C) with P V <= rho V + C statewise; rho swept on a
// grid of step 1e-3 minimizing C / (1 - rho).
DriftConditionReport verify_drift_condition(const MarkovChainSpec& chain, const Vector& v);

}  // namespace salab
