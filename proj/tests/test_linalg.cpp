#include <doctest.h>

#include <cmath>
#include <vector>

#include "salab/linalg.hpp"
#include "salab/rng.hpp"

using namespace salab;

namespace {

// Independent oracle: assemble the d^2 x d^2 system (I (x) A + A (x) I) vec(X)
// = vec(C) in plain arrays and run naive partial-pivot elimination.
Matrix kron_oracle(const Matrix& a, const Matrix& c) {
    const int d = static_cast<int>(a.rows());
    const int n = d * d;
    std::vector<std::vector<double>> sys(n, std::vector<double>(n + 1, 0.0));
    // column-stacked vec: entry (i, j) of X sits at index j * d + i
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            const int row = j * d + i;
            for (int k = 0; k < d; ++k) {
                sys[row][j * d + k] += a(i, k);  // A X
                sys[row][k * d + i] += a(j, k);  // X A'
            }
            sys[row][n] = c(i, j);
        }
    }
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(sys[r][col]) > std::abs(sys[piv][col])) piv = r;
        std::swap(sys[col], sys[piv]);
        REQUIRE(std::abs(sys[col][col]) > 1e-14);
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double factor = sys[r][col] / sys[col][col];
            for (int cc = col; cc <= n; ++cc) sys[r][cc] -= factor * sys[col][cc];
        }
    }
    Matrix x(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = sys[j * d + i][n] / sys[j * d + i][j * d + i];
    return x;
}

Matrix random_hurwitz(CounterRng& rng, int d) {
    Matrix b(d, d), s(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            b(i, j) = 2.0 * rng.next_uniform() - 1.0;
            s(i, j) = 2.0 * rng.next_uniform() - 1.0;
        }
    // SPD part plus a skew part: real parts of the spectrum stay positive
    return b * b.transpose() + 0.05 * Matrix::Identity(d, d) + (s - s.transpose());
}

// Taylor-with-scaling oracle for e^{-A t} v, independent of the library path
Vector expm_oracle(const Matrix& a, double t, const Vector& v) {
    const int squarings = 10;
    const Matrix m = -a * (t / std::pow(2.0, squarings));
    Matrix e = Matrix::Identity(a.rows(), a.cols());
    Matrix term = e;
    for (int k = 1; k <= 30; ++k) {
        term = term * m / static_cast<double>(k);
        e += term;
    }
    for (int i = 0; i < squarings; ++i) e = e * e;
    return e * v;
}

}  // namespace

TEST_CASE("lyapunov identity cases") {
    DriftMatrix a{2, Matrix::Identity(2, 2), DriftMode::a_lt_1};
    LyapunovSolution sol = solve_lyapunov(a);
    CHECK((sol.Q - 0.5 * Matrix::Identity(2, 2)).norm() < 1e-12);
    CHECK(sol.lambda_dt == doctest::Approx(2.0));
    CHECK(sol.lambda_ct == doctest::Approx(1.0));

    Matrix diag = Matrix::Zero(2, 2);
    diag(0, 0) = 1.0;
    diag(1, 1) = 2.0;
    LyapunovSolution sol2 = solve_lyapunov({2, diag, DriftMode::a_lt_1});
    CHECK(sol2.Q(0, 0) == doctest::Approx(0.5));
    CHECK(sol2.Q(1, 1) == doctest::Approx(0.25));
    CHECK(sol2.lambda_dt == doctest::Approx(2.0));
}

TEST_CASE("lyapunov vs elimination oracle") {
    Matrix a(2, 2);
    a << 1.0, 0.5, 0.0, 1.0;
    LyapunovSolution sol = solve_lyapunov({2, a, DriftMode::a_lt_1});
    const Matrix q_oracle = kron_oracle(a, Matrix::Identity(2, 2));
    CHECK((sol.Q - q_oracle).norm() < 1e-10);
    CHECK((a * sol.Q + sol.Q * a.transpose() - Matrix::Identity(2, 2)).norm() < 1e-10 * 2);
}

TEST_CASE("stationary covariance cases and oracle") {
    Matrix a1 = Matrix::Ones(1, 1);
    Matrix g1 = 2.0 * Matrix::Ones(1, 1);
    CHECK(solve_stationary_covariance({1, a1, DriftMode::a_lt_1}, g1).sigma_a(0, 0) ==
          doctest::Approx(1.0));

    Matrix c(3, 3);
    c << 2, 1, 0, 1, 3, 0.5, 0, 0.5, 1;
    StationaryCovariance sc =
        solve_stationary_covariance({3, Matrix::Identity(3, 3), DriftMode::a_lt_1}, c);
    CHECK((sc.sigma_a - 0.5 * c).norm() < 1e-12);

    Matrix a2(2, 2);
    a2 << 2, 1, 0, 3;
    StationaryCovariance sc2 =
        solve_stationary_covariance({2, a2, DriftMode::a_lt_1}, Matrix::Identity(2, 2));
    CHECK((sc2.sigma_a - kron_oracle(a2, Matrix::Identity(2, 2))).norm() < 1e-10);
}

TEST_CASE("weighted norms") {
    Vector x(2);
    x << 3, 4;
    CHECK(weighted_norm(Matrix::Identity(2, 2), x) == doctest::Approx(5.0));
    Vector e1(2);
    e1 << 1, 0;
    CHECK(weighted_norm(4.0 * Matrix::Identity(2, 2), e1) == doctest::Approx(2.0));

    Matrix q = Matrix::Zero(2, 2);
    q(0, 0) = 1.0;
    q(1, 1) = 4.0;
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = 2.0;
    a(1, 1) = 3.0;
    CHECK(weighted_operator_norm(q, a) == doctest::Approx(3.0));
}

TEST_CASE("random hurwitz systems: residuals and contraction") {
    CounterRng rng(99, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + static_cast<int>(rng.next_u64() % 8);
        const Matrix a = random_hurwitz(rng, d);
        DriftMatrix dm{d, a, DriftMode::a_lt_1};
        LyapunovSolution sol = solve_lyapunov(dm);
        CHECK((a * sol.Q + sol.Q * a.transpose() - Matrix::Identity(d, d)).norm() <= 1e-10 * d);
        Eigen::SelfAdjointEigenSolver<Matrix> es(sol.Q);
        CHECK(es.eigenvalues().minCoeff() > 0.0);
        // contraction on a step grid, in the transposed-Lyapunov norm where the
        // squared bound |I - g A|^2 <= 1 - g / (2 |Qt|) is provable
        const Matrix qt = solve_sylvester_kron(a.transpose(), Matrix::Identity(d, d));
        const double qt_norm = Eigen::SelfAdjointEigenSolver<Matrix>(qt).eigenvalues().maxCoeff();
        const double a_qt = weighted_operator_norm(qt, a);
        const double g_max = 1.0 / (2.0 * qt_norm * a_qt * a_qt);
        for (double frac : {0.25, 0.5, 1.0}) {
            const double g = frac * g_max;
            const double lhs = weighted_operator_norm(qt, Matrix::Identity(d, d) - g * a);
            CHECK(lhs * lhs <= 1.0 - g / (2.0 * qt_norm) + 1e-9);
        }

        Matrix spd = a * a.transpose() + 0.1 * Matrix::Identity(d, d);
        StationaryCovariance sc = solve_stationary_covariance(dm, spd);
        CHECK((a * sc.sigma_a + sc.sigma_a * a.transpose() - spd).norm() <= 1e-10 * d);
        Eigen::SelfAdjointEigenSolver<Matrix> es2(sc.sigma_a);
        CHECK(es2.eigenvalues().minCoeff() >= -1e-10);
    }
}

TEST_CASE("hurwitz check errors") {
    CHECK_THROWS_AS(solve_lyapunov({1, -Matrix::Ones(1, 1), DriftMode::a_lt_1}), NotHurwitz);
    Matrix rot(2, 2);
    rot << 0, 1, -1, 0;  // purely imaginary spectrum
    CHECK_THROWS_AS(require_hurwitz(rot, "rotation"), NotHurwitz);
    CHECK(is_hurwitz(Matrix::Identity(3, 3)));
}

TEST_CASE("drift matrix mode for a = 1") {
    Matrix jac = Matrix::Ones(1, 1);
    DriftMatrix d1 = DriftMatrix::from_jacobian(jac, 1.0, 2.0);
    CHECK(d1.mode == DriftMode::a_eq_1);
    CHECK(d1.entries(0, 0) == doctest::Approx(1.0 - 1.0 / 4.0));
    DriftMatrix d2 = DriftMatrix::from_jacobian(jac, 0.8, 2.0);
    CHECK(d2.mode == DriftMode::a_lt_1);
    CHECK(d2.entries(0, 0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(DriftMatrix::from_jacobian(jac, 1.0, 0.4), NotHurwitz);
}

TEST_CASE("exponential action vs taylor oracle") {
    CounterRng rng(7, 1);
    for (int trial = 0; trial < 10; ++trial) {
        const int d = 1 + static_cast<int>(rng.next_u64() % 5);
        const Matrix a = random_hurwitz(rng, d);
        Vector v(d);
        for (int i = 0; i < d; ++i) v(i) = 2.0 * rng.next_uniform() - 1.0;
        for (double t : {0.0, 0.3, 2.0}) {
            const Vector got = matrix_exponential_action({d, a, DriftMode::a_lt_1}, t, v);
            const Vector want = expm_oracle(a, t, v);
            CHECK((got - want).norm() < 1e-9 * std::max(1.0, want.norm()));
        }
    }
}

TEST_CASE("exponential stability prefactor") {
    // normal case: |e^{-t}|_Q = e^{-t} exactly, so K is 1
    LyapunovSolution sol = solve_lyapunov({2, Matrix::Identity(2, 2), DriftMode::a_lt_1});
    CHECK(sol.K == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sol.gamma_max > 0.0);

    Matrix nonnormal(2, 2);
    nonnormal << 1, 5, 0, 1;
    LyapunovSolution sol2 = solve_lyapunov({2, nonnormal, DriftMode::a_lt_1});
    CHECK(sol2.K >= 1.0 - 1e-9);
}

TEST_CASE("psd square roots") {
    Matrix m(2, 2);
    m << 4, 0, 0, 9;
    CHECK((psd_sqrt(m) * psd_sqrt(m) - m).norm() < 1e-12);
    const Matrix inv_sqrt = spd_inverse_sqrt(m);
    CHECK((inv_sqrt * m * inv_sqrt - Matrix::Identity(2, 2)).norm() < 1e-12);

    Matrix indef(2, 2);
    indef << 1, 0, 0, -1;
    CHECK_THROWS_AS(psd_sqrt(indef), NotPsd);
    CHECK_THROWS_AS(require_spd(indef, "m"), NotSpd);
    CHECK_NOTHROW(require_psd(Matrix::Zero(2, 2), "zero"));
}

TEST_CASE("sylvester solver on nonsymmetric rhs") {
    CounterRng rng(3, 2);
    const Matrix a = random_hurwitz(rng, 4);
    Matrix c(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) c(i, j) = 2.0 * rng.next_uniform() - 1.0;
    const Matrix x = solve_sylvester_kron(a, c);
    CHECK((a * x + x * a.transpose() - c).norm() < 1e-9);
    CHECK((x - kron_oracle(a, c)).norm() < 1e-8);
}
