#include "salab/ou.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "salab/rng.hpp"

namespace salab {

OUSpec OUSpec::make(const DriftMatrix& a_bar, const Matrix& gamma_mat) {
    OUSpec spec{a_bar, gamma_mat, Matrix(), 0.0};
    spec.sigma_a = solve_stationary_covariance(a_bar, gamma_mat).sigma_a;
    spec.lambda_dt = solve_lyapunov(a_bar).lambda_dt;
    return spec;
}

OUTransition ou_transition(const OUSpec& spec, double h) {
    if (!(h > 0.0)) throw ConfigError("ou_transition: h must be positive");
    OUTransition t;
    t.h = h;
    t.mean_factor = (Matrix(-spec.a_bar.entries * h)).exp();
    const Matrix rhs =
        spec.gamma_mat - t.mean_factor * spec.gamma_mat * t.mean_factor.transpose();
    Matrix c = solve_sylvester_kron(spec.a_bar.entries, rhs);
    c = 0.5 * (c + c.transpose());
    t.noise_cov = c;
    t.noise_sqrt = psd_sqrt(c);
    return t;
}

Vector ou_exact_step(const OUSpec& spec, const Vector& u, double h, const Vector& z) {
    const OUTransition t = ou_transition(spec, h);
    return t.mean_factor * u + t.noise_sqrt * z;
}

Vector ou_discrete_step(const OUSpec& spec, const Vector& u, double h, const Vector& z) {
    if (!(h > 0.0)) throw ConfigError("ou_discrete_step: h must be positive");
    if (h * spec.lambda_dt >= 1.0)
        throw StepTooLarge("ou_discrete_step: h * lambda_dt must stay below 1");
    const Matrix noise = psd_sqrt(Matrix(h * spec.gamma_mat));
    return u - h * spec.a_bar.entries * u + noise * z;
}

CoupledEnsemble coupled_paths(const OUSpec& spec, const Partition& partition, int n_traj,
                              std::uint64_t seed, bool keep_paths) {
    const int d = spec.a_bar.dim;
    const int n_blocks = partition.num_blocks();

    // Precompute per-block transition data. With the Brownian increment
    // dB over a block of length h, the exact stochastic integral
    // int e^{-A(h-s)} sqrt(Gamma) dB_s decomposes as L dB + residual where
    // L = A^{-1}(I - e^{-A h}) sqrt(Gamma) / h and the residual covariance is
    // C_h - h L L'.
    struct Block {
        Matrix euler_noise;    // sqrt(h Gamma)
        Matrix exact_mean;     // e^{-A h}
        Matrix shared_map;     // L * sqrt(h): image of the standard normal driving Euler
        Matrix residual_sqrt;  // (C_h - h L L')^{1/2}
        double h;
        double tau_end;
    };
    std::vector<Block> blocks(n_blocks);
    const Matrix gamma_sqrt = psd_sqrt(spec.gamma_mat);
    const Matrix a_inv = spec.a_bar.entries.partialPivLu().inverse();
    double tau = 0.0;
    for (int m = 0; m < n_blocks; ++m) {
        const double h = partition.block_steps[m];
        tau += h;
        Block& b = blocks[m];
        b.h = h;
        b.tau_end = tau;
        b.euler_noise = psd_sqrt(Matrix(h * spec.gamma_mat));
        const OUTransition t = ou_transition(spec, h);
        b.exact_mean = t.mean_factor;
        const Matrix l = a_inv * (Matrix::Identity(d, d) - t.mean_factor) * gamma_sqrt / h;
        b.shared_map = l * std::sqrt(h);
        Matrix resid = t.noise_cov - h * l * l.transpose();
        resid = 0.5 * (resid + resid.transpose());
        b.residual_sqrt = psd_sqrt(resid);
    }

    CoupledEnsemble out;
    if (keep_paths) out.paths.resize(n_traj);
    double gap_sq = 0.0;
    for (int i = 0; i < n_traj; ++i) {
        CounterRng rng(seed, static_cast<std::uint64_t>(i));
        Vector u = Vector::Zero(d);
        Vector u_exact = Vector::Zero(d);
        for (int m = 0; m < n_blocks; ++m) {
            const Block& b = blocks[m];
            const Vector z = rng.gaussian_vector(d);   // endpoint increment, shared
            const Vector v = rng.gaussian_vector(d);   // residual of the exact integral
            u = u - b.h * spec.a_bar.entries * u + b.euler_noise * z;
            u_exact = b.exact_mean * u_exact + b.shared_map * z + b.residual_sqrt * v;
            if (keep_paths) out.paths[i].push_back({u, u_exact, b.tau_end});
        }
        gap_sq += (u - u_exact).squaredNorm();
    }
    out.terminal_gap_l2 = std::sqrt(gap_sq / n_traj);
    return out;
}

EmpiricalMeasure sample_stationary(const OUSpec& spec, std::int64_t n_samples,
                                   std::uint64_t seed) {
    const int d = spec.a_bar.dim;
    const Matrix sqrt_sigma = psd_sqrt(spec.sigma_a);
    EmpiricalMeasure mu;
    mu.samples.resize(n_samples, d);
    CounterRng rng(seed, 0x57A7ULL);
    for (std::int64_t i = 0; i < n_samples; ++i) {
        mu.samples.row(i) = (sqrt_sigma * rng.gaussian_vector(d)).transpose();
    }
    return mu;
}

}  // namespace salab
