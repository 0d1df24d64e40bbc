#pragma once

#include <Eigen/Dense>

#include "salab/errors.hpp"

namespace salab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class DriftMode { a_lt_1, a_eq_1 };

// The drift matrix of the linearized recursion. For step exponent a < 1 this
// is the mean-field Jacobian at the root; for a = 1 it carries the
// -1/(2*gamma1) identity correction and the caller must pick gamma1 large
// enough that the result stays Hurwitz.
struct DriftMatrix {
    int dim;
    Matrix entries;
    DriftMode mode;

    static DriftMatrix from_jacobian(const Matrix& jac, double a, double gamma1);
};

// Throws NotHurwitz unless every eigenvalue of m has strictly positive real part.
void require_hurwitz(const Matrix& m, const char* what);
bool is_hurwitz(const Matrix& m);

struct LyapunovSolution {
    Matrix Q;           // A Q + Q A' = I
    double lambda_dt;   // 1 / (2 |Q|^2)
    double lambda_ct;   // 1 / (2 |Q|)
    double K;           // numerically estimated prefactor of |e^{-At}|_Q <= K e^{-lambda_ct t}
    double gamma_max;   // largest step with guaranteed contraction
};

struct StationaryCovariance {
    Matrix sigma_a;    // A S + S A' = Gamma
    Matrix gamma_mat;
};

LyapunovSolution solve_lyapunov(const DriftMatrix& a_bar);

StationaryCovariance solve_stationary_covariance(const DriftMatrix& a_bar,
                                                 const Matrix& gamma_mat);

// Solves A X + X A' = C for general (not necessarily symmetric) C via the
// d^2 x d^2 Kronecker system. Intended for d <= 16.
Matrix solve_sylvester_kron(const Matrix& a, const Matrix& c);

double weighted_norm(const Matrix& q, const Vector& x);
double weighted_operator_norm(const Matrix& q, const Matrix& a);

// e^{-A t} v
Vector matrix_exponential_action(const DriftMatrix& a_bar, double t, const Vector& v);
Matrix matrix_exponential(const Matrix& m);

// Symmetric PSD square root; eigenvalues in [-1e-12, 0) are clamped to zero,
// anything more negative raises NotPsd.
Matrix psd_sqrt(const Matrix& m);
Matrix spd_inverse_sqrt(const Matrix& m);

void require_spd(const Matrix& m, const char* what);
void require_psd(const Matrix& m, const char* what, double tol = 1e-10);

inline double abs_rel_tol(double base, double scale) {
    return base * std::max(1.0, scale);
}

}  // namespace salab
