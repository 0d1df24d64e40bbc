#pragma once

#include <cstdint>
#include <vector>

#include "salab/linalg.hpp"
#include "salab/schedule.hpp"
#include "salab/transport.hpp"

namespace salab {

// The limiting diffusion dU = -A_a U dt + sqrt(Gamma) dB. Exact transitions
// avoid quadrature: the step covariance C_h solves
// A C_h + C_h A' = Gamma - e^{-A h} Gamma e^{-A' h}.
struct OUSpec {
    DriftMatrix a_bar;
    Matrix gamma_mat;
    Matrix sigma_a;      // stationary covariance
    double lambda_dt;    // carried over from the Lyapunov solve

    static OUSpec make(const DriftMatrix& a_bar, const Matrix& gamma_mat);
};

// Transition data for a fixed step h, reusable across samples.
struct OUTransition {
    Matrix mean_factor;    // e^{-A h}
    Matrix noise_sqrt;     // C_h^{1/2}
    Matrix noise_cov;      // C_h
    double h;
};

OUTransition ou_transition(const OUSpec& spec, double h);

Vector ou_exact_step(const OUSpec& spec, const Vector& u, double h, const Vector& z);
Vector ou_discrete_step(const OUSpec& spec, const Vector& u, double h, const Vector& z);

struct CoupledPair {
    Vector u;        // Euler-Maruyama value u_m
    Vector u_exact;  // exact solution at the same interpolation time
    double tau;
};

// Synchronized coupling over a partition's block times. Both processes are
// driven by the same Brownian path: the discrete step consumes the endpoint
// increment, the exact step conditions its time-weighted stochastic integral
// on that increment and adds the independent residual. Gap statistics are
// therefore measurable with respect to the shared noise.
struct CoupledEnsemble {
    std::vector<std::vector<CoupledPair>> paths;  // [trajectory][block]
    double terminal_gap_l2;                       // sqrt(mean |u - u_exact|^2) at the horizon
};

CoupledEnsemble coupled_paths(const OUSpec& spec, const Partition& partition, int n_traj,
                              std::uint64_t seed, bool keep_paths = false);

EmpiricalMeasure sample_stationary(const OUSpec& spec, std::int64_t n_samples,
                                   std::uint64_t seed);

}  // namespace salab
