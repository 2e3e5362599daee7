#pragma once

// Brute-force reference solvers. Nothing here may include the spectral
// headers: these are the independent side of every cross-check.

#include "gramspec/core.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <string>

namespace gramspec::oracle {

enum class Method { kron, rk4, quadrature, pade_exp };

inline std::string to_string(Method m) {
    switch (m) {
    case Method::kron: return "kron";
    case Method::rk4: return "rk4";
    case Method::quadrature: return "quadrature";
    case Method::pade_exp: return "pade-exp";
    }
    return "unknown";
}

struct OracleResult {
    Matrix value;
    Method method = Method::kron;
    double residual = 0.0;
    long steps = 0;
};

inline constexpr int kDenseCap = 32;

// ||A P + P A^T + Q||_F / (2 ||A||_F ||P||_F + ||Q||_F)
inline double residual_lyapunov(const Matrix& a, const Matrix& q, const Matrix& p) {
    const double scale = 2.0 * a.norm() * p.norm() + q.norm();
    const double r = (a * p + p * a.transpose() + q).norm();
    return scale > 0.0 ? r / scale : r;
}

// Residual of P^{-1} A + A^T P^{-1} + P^{-1} b b^T P^{-1} = 0, scaled by
// 2 ||A|| ||P^{-1}|| + ||P^{-1} b||².
inline double residual_riccati(const Matrix& a, const Matrix& b, const Matrix& pinv) {
    const Matrix pb = pinv * b;
    const double scale = 2.0 * a.norm() * pinv.norm() + pb.squaredNorm();
    const double r = (pinv * a + a.transpose() * pinv + pb * pb.transpose()).norm();
    return scale > 0.0 ? r / scale : r;
}

// A P + P A^T = -Q through the n² x n² Kronecker system
//   (I ⊗ A + A ⊗ I) vec(P) = -vec(Q)
// with column-stacking vec. For n = 2, vec(P) = (p11, p21, p12, p22) and the
// first row of I ⊗ A + A ⊗ I is (2 a11, a12, a12, 0), which reproduces
// (A P + P A^T)_11 = 2 a11 p11 + a12 p21 + a12 p12.
inline OracleResult solve_lyapunov_dense(const Matrix& a, const Matrix& q) {
    const auto n = a.rows();
    if (a.cols() != n || q.rows() != n || q.cols() != n) {
        throw DimensionError("solve_lyapunov_dense: A and Q must be square and of equal size");
    }
    if (n > kDenseCap) {
        throw DimensionError("solve_lyapunov_dense: dimension exceeds the dense oracle cap of " +
                             std::to_string(kDenseCap));
    }
    const auto nn = n * n;
    Matrix op = Matrix::Zero(nn, nn);
    for (Eigen::Index col = 0; col < n; ++col) {
        // I ⊗ A: block-diagonal copies of A
        op.block(col * n, col * n, n, n) += a;
        // A ⊗ I: a_ij I in block (i, j)
        for (Eigen::Index row = 0; row < n; ++row) {
            op.block(row * n, col * n, n, n).diagonal().array() += a(row, col);
        }
    }
    Eigen::FullPivLU<Matrix> lu(op);
    if (!lu.isInvertible() || lu.rcond() < 1e-14) {
        throw SolvabilityError("solve_lyapunov_dense: Kronecker operator is singular (some lambda_i + lambda_j = 0)");
    }
    const Vector rhs = -Eigen::Map<const Vector>(q.data(), nn);
    const Vector sol = lu.solve(rhs);
    Matrix p = Eigen::Map<const Matrix>(sol.data(), n, n);
    p = 0.5 * (p + p.transpose()).eval();
    OracleResult out{p, Method::kron, residual_lyapunov(a, q, p), 1};
    return out;
}

// Classical RK4 on dP/dt = A P + P A^T + Q from P(0) = P_0.
inline OracleResult integrate_lyapunov(const Matrix& a, const Matrix& q, const Matrix& p0, double t, long steps) {
    if (t < 0.0) throw DimensionError("integrate_lyapunov: t must be non-negative");
    if (steps < 1) throw DimensionError("integrate_lyapunov: steps must be positive");
    const double h = t / static_cast<double>(steps);
    auto f = [&](const Matrix& p) -> Matrix { return a * p + p * a.transpose() + q; };
    Matrix p = p0;
    if (t > 0.0) {
        for (long k = 0; k < steps; ++k) {
            const Matrix k1 = f(p);
            const Matrix k2 = f(p + 0.5 * h * k1);
            const Matrix k3 = f(p + 0.5 * h * k2);
            const Matrix k4 = f(p + h * k3);
            p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
    OracleResult out{p, Method::rk4, 0.0, steps};
    // residual of the differential equation is not meaningful here; report asymmetry
    out.residual = (p - p.transpose()).norm() / std::max(p.norm(), 1e-300);
    return out;
}

// exp(M t) by scaling and squaring with Padé approximants (up to order 13).
inline Matrix matrix_exp_reference(const Matrix& m, double t = 1.0) {
    const Matrix scaled = m * t;
    return scaled.exp();
}

// ∫_0^t e^{Aτ} B B^T e^{A^T τ} dτ by composite Simpson on `intervals` (even) panels.
inline OracleResult gramian_quadrature(const Matrix& a, const Matrix& b, double t, long intervals = 2000) {
    if (t < 0.0) throw DimensionError("gramian_quadrature: t must be non-negative");
    if (intervals < 2) intervals = 2;
    if (intervals % 2 != 0) ++intervals;
    const auto n = a.rows();
    OracleResult out{Matrix::Zero(n, n), Method::quadrature, 0.0, intervals + 1};
    if (t == 0.0) return out;

    const double h = t / static_cast<double>(intervals);
    const Matrix step = matrix_exp_reference(a, h);
    Matrix e = Matrix::Identity(n, n);
    Matrix acc = Matrix::Zero(n, n);
    for (long k = 0; k <= intervals; ++k) {
        const Matrix eb = e * b;
        const double w = (k == 0 || k == intervals) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        acc += w * (eb * eb.transpose());
        e = e * step;
    }
    out.value = (h / 3.0) * acc;
    out.value = 0.5 * (out.value + out.value.transpose()).eval();
    const Matrix eat = matrix_exp_reference(a, t);
    const Matrix q = b * b.transpose();
    // d/dt P = A P + P A^T + B B^T = e^{At} B B^T e^{A^T t}
    out.residual = (a * out.value + out.value * a.transpose() + q - eat * q * eat.transpose()).norm() /
                   std::max(2.0 * a.norm() * out.value.norm() + q.norm(), 1e-300);
    return out;
}

} // namespace gramspec::oracle
