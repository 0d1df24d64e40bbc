#include "salab/linalg.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace salab {

DriftMatrix DriftMatrix::from_jacobian(const Matrix& jac, double a, double gamma1) {
    DriftMatrix d;
    d.dim = static_cast<int>(jac.rows());
    if (a < 1.0) {
        d.entries = jac;
        d.mode = DriftMode::a_lt_1;
    } else {
        d.entries = jac - Matrix::Identity(d.dim, d.dim) / (2.0 * gamma1);
        d.mode = DriftMode::a_eq_1;
    }
    require_hurwitz(d.entries, "drift matrix");
    return d;
}

bool is_hurwitz(const Matrix& m) {
    Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
    return (es.eigenvalues().real().array() > 0.0).all();
}

void require_hurwitz(const Matrix& m, const char* what) {
    if (!is_hurwitz(m)) {
        throw NotHurwitz(std::string(what) + ": -A is not Hurwitz (eigenvalue with nonpositive real part)");
    }
}

void require_spd(const Matrix& m, const char* what) {
    if (m.rows() != m.cols()) throw DimensionMismatch(std::string(what) + ": not square");
    if (!m.isApprox(m.transpose(), 1e-10)) throw NotSpd(std::string(what) + ": not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.eigenvalues().minCoeff() <= 0.0) throw NotSpd(std::string(what) + ": not positive definite");
}

void require_psd(const Matrix& m, const char* what, double tol) {
    if (m.rows() != m.cols()) throw DimensionMismatch(std::string(what) + ": not square");
    if (!m.isApprox(m.transpose(), 1e-8)) throw NotPsd(std::string(what) + ": not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.eigenvalues().minCoeff() < -tol) throw NotPsd(std::string(what) + ": negative eigenvalue");
}

Matrix solve_sylvester_kron(const Matrix& a, const Matrix& c) {
    const int d = static_cast<int>(a.rows());
    // vec(A X + X A') = (I (x) A + A (x) I) vec(X) with column-stacked vec
    Matrix big = Matrix::Zero(d * d, d * d);
    const Matrix id = Matrix::Identity(d, d);
    for (int j = 0; j < d; ++j) big.block(j * d, j * d, d, d) = a;  // kron(I, A)
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) big.block(i * d, j * d, d, d) += a(i, j) * id;  // kron(A, I)

    Eigen::VectorXd vc(d * d);
    for (int j = 0; j < d; ++j) vc.segment(j * d, d) = c.col(j);
    Eigen::VectorXd vx = big.partialPivLu().solve(vc);
    Matrix x(d, d);
    for (int j = 0; j < d; ++j) x.col(j) = vx.segment(j * d, d);
    return x;
}

double weighted_norm(const Matrix& q, const Vector& x) {
    require_spd(q, "weighted_norm Q");
    return std::sqrt(x.dot(q * x));
}

double weighted_operator_norm(const Matrix& q, const Matrix& a) {
    require_spd(q, "weighted_operator_norm Q");
    Eigen::SelfAdjointEigenSolver<Matrix> es(q);
    const Vector ev = es.eigenvalues();
    const Matrix v = es.eigenvectors();
    const Matrix q_half = v * ev.cwiseSqrt().asDiagonal() * v.transpose();
    const Matrix q_inv_half = v * ev.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
    return (q_half * a * q_inv_half).jacobiSvd().singularValues()(0);
}

Matrix matrix_exponential(const Matrix& m) {
    return m.exp();
}

Vector matrix_exponential_action(const DriftMatrix& a_bar, double t, const Vector& v) {
    if (t < 0.0) throw Error("matrix_exponential_action: t must be nonnegative");
    if (v.size() != a_bar.dim) throw DimensionMismatch("matrix_exponential_action: vector size");
    if (t == 0.0) return v;
    return (Matrix(-a_bar.entries * t)).exp() * v;
}

Matrix psd_sqrt(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    Vector ev = es.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    for (int i = 0; i < ev.size(); ++i) {
        if (ev(i) < 0.0) {
            if (ev(i) < -1e-12 * scale) throw NotPsd("psd_sqrt: negative eigenvalue");
            ev(i) = 0.0;
        }
    }
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

Matrix spd_inverse_sqrt(const Matrix& m) {
    require_spd(m, "spd_inverse_sqrt");
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
           es.eigenvectors().transpose();
}

LyapunovSolution solve_lyapunov(const DriftMatrix& a_bar) {
    const int d = a_bar.dim;
    require_hurwitz(a_bar.entries, "solve_lyapunov");
    Matrix q = solve_sylvester_kron(a_bar.entries, Matrix::Identity(d, d));
    q = 0.5 * (q + q.transpose());

    const Matrix residual =
        a_bar.entries * q + q * a_bar.entries.transpose() - Matrix::Identity(d, d);
    if (residual.norm() > 1e-10 * d) {
        throw SolverDivergence("solve_lyapunov: residual exceeds tolerance");
    }

    LyapunovSolution sol;
    sol.Q = q;
    const double q_norm = q.operatorNorm();
    sol.lambda_dt = 1.0 / (2.0 * q_norm * q_norm);
    sol.lambda_ct = 1.0 / (2.0 * q_norm);
    const double a_norm_q = weighted_operator_norm(q, a_bar.entries);
    sol.gamma_max = 1.0 / (2.0 * q_norm * q_norm * a_norm_q * a_norm_q);

    // K is existential in the theory; estimate it on a log grid of times.
    const int grid = 512;
    const double t_lo = 1e-3 / sol.lambda_ct;
    const double t_hi = 50.0 / sol.lambda_ct;
    double k_est = 1.0;
    for (int i = 0; i < grid; ++i) {
        const double t = t_lo * std::pow(t_hi / t_lo, static_cast<double>(i) / (grid - 1));
        const Matrix e = (Matrix(-a_bar.entries * t)).exp();
        k_est = std::max(k_est, weighted_operator_norm(q, e) * std::exp(sol.lambda_ct * t));
    }
    sol.K = k_est;
    return sol;
}

StationaryCovariance solve_stationary_covariance(const DriftMatrix& a_bar,
                                                 const Matrix& gamma_mat) {
    require_hurwitz(a_bar.entries, "solve_stationary_covariance");
    require_psd(gamma_mat, "solve_stationary_covariance Gamma");
    Matrix s = solve_sylvester_kron(a_bar.entries, gamma_mat);
    s = 0.5 * (s + s.transpose());
    const Matrix residual = a_bar.entries * s + s * a_bar.entries.transpose() - gamma_mat;
    if (residual.norm() > abs_rel_tol(1e-10 * a_bar.dim, gamma_mat.norm())) {
        throw SolverDivergence("solve_stationary_covariance: residual exceeds tolerance");
    }
    require_psd(s, "solve_stationary_covariance Sigma_a");
    return StationaryCovariance{s, gamma_mat};
}

}  // namespace salab
