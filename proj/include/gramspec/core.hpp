#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gramspec {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// ============================================================================
// Errors
// ============================================================================
// Every failure the toolkit reports derives from Error. The CLI maps the
// categories onto its exit codes (usage/schema 1, solvability 2, conditioning 3).

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    SchemaError(std::string path, const std::string& what)
        : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
    [[nodiscard]] const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

// λ_i + λ_j = 0 for some pair, or a spectrum the requested path cannot handle.
class SolvabilityError : public Error {
public:
    SolvabilityError(const std::string& what, std::vector<std::pair<int, int>> pairs = {})
        : Error(what), pairs_(std::move(pairs)) {}
    [[nodiscard]] const std::vector<std::pair<int, int>>& violating_pairs() const noexcept { return pairs_; }

private:
    std::vector<std::pair<int, int>> pairs_;
};

class MultipleEigenvalueError : public SolvabilityError {
public:
    using SolvabilityError::SolvabilityError;
};

class StabilityError : public SolvabilityError {
public:
    using SolvabilityError::SolvabilityError;
};

// Numerically singular objects: controllability matrix, Jordan chains, G^{-1}(t).
class ConditioningError : public Error {
public:
    ConditioningError(const std::string& what, double condition)
        : Error(what), condition_(condition) {}
    [[nodiscard]] double condition() const noexcept { return condition_; }

private:
    double condition_;
};

class ControllabilityError : public ConditioningError {
public:
    using ConditioningError::ConditioningError;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double worst_residual)
        : Error(what), worst_residual_(worst_residual) {}
    [[nodiscard]] double worst_residual() const noexcept { return worst_residual_; }

private:
    double worst_residual_;
};

// ============================================================================
// Configuration
// ============================================================================

struct Tolerances {
    double root = 1e-12;     // relative polynomial residual accepted by find_roots
    double cluster = 1e-8;   // relative root separation below which roots merge
    double solve = 1e-10;    // relative bound on |λ_i + λ_j|
    double condition = 1e12; // largest accepted condition number
    int max_sweeps = 200;
};

// ============================================================================
// Domain types
// ============================================================================

// Monic polynomial a_0 + a_1 s + ... + s^n, ascending coefficients.
class Polynomial {
public:
    Polynomial() = default;

    explicit Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
        if (coeffs_.size() < 2) {
            throw DimensionError("polynomial degree must be at least 1");
        }
        if (coeffs_.back() != 1.0) {
            throw DimensionError("polynomial must be monic (leading coefficient exactly 1)");
        }
    }

    [[nodiscard]] int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
    [[nodiscard]] const std::vector<double>& coeffs() const noexcept { return coeffs_; }
    [[nodiscard]] double operator[](std::size_t k) const { return coeffs_.at(k); }
    [[nodiscard]] double max_abs_coeff() const noexcept {
        double m = 0.0;
        for (double c : coeffs_) m = std::max(m, std::abs(c));
        return m;
    }

    friend bool operator==(const Polynomial&, const Polynomial&) = default;

private:
    std::vector<double> coeffs_{0.0, 1.0};
};

struct SpectrumEntry {
    Complex value;
    int multiplicity = 1;
};

// Distinct eigenvalues with multiplicities; Σ multiplicities = n.
struct Spectrum {
    std::vector<SpectrumEntry> entries;

    [[nodiscard]] int size() const noexcept { return static_cast<int>(entries.size()); }
    [[nodiscard]] int total_multiplicity() const noexcept {
        int n = 0;
        for (const auto& e : entries) n += e.multiplicity;
        return n;
    }
    [[nodiscard]] bool is_simple() const noexcept {
        for (const auto& e : entries) {
            if (e.multiplicity != 1) return false;
        }
        return true;
    }
    [[nodiscard]] double spectral_radius() const noexcept {
        double r = 0.0;
        for (const auto& e : entries) r = std::max(r, std::abs(e.value));
        return r;
    }
    [[nodiscard]] bool is_stable() const noexcept {
        for (const auto& e : entries) {
            if (!(e.value.real() < 0.0)) return false;
        }
        return true;
    }
    [[nodiscard]] std::vector<Complex> values() const {
        std::vector<Complex> v;
        v.reserve(entries.size());
        for (const auto& e : entries) v.push_back(e.value);
        return v;
    }
};

struct SolvabilityReport {
    bool ok = true;
    std::vector<std::pair<int, int>> violating_pairs; // 0-based indices into the spectrum, i <= j
    double min_pair_magnitude = 0.0;
};

// dx/dt = A x + B u.
struct LtiSystem {
    Matrix A;
    Matrix B;

    LtiSystem() = default;
    LtiSystem(Matrix a, Matrix b) : A(std::move(a)), B(std::move(b)) {
        if (A.rows() != A.cols()) throw DimensionError("dynamics matrix A must be square");
        if (A.rows() < 1) throw DimensionError("system dimension must be at least 1");
        if (B.rows() != A.rows()) throw DimensionError("input matrix B must have as many rows as A");
        if (B.cols() < 1) throw DimensionError("input matrix B must have at least one column");
    }

    [[nodiscard]] int states() const noexcept { return static_cast<int>(A.rows()); }
    [[nodiscard]] int inputs() const noexcept { return static_cast<int>(B.cols()); }
};

// ============================================================================
// Small helpers shared by the spectral modules
// ============================================================================

// {M}_H = (M + M^*) / 2
inline CMatrix hermitian_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

// J = diag(-1, +1, -1, ...), i.e. J_kk = (-1)^k for 1-based k.
inline Vector alternating_signs(int n) {
    Vector j(n);
    for (int k = 0; k < n; ++k) j(k) = (k % 2 == 0) ? -1.0 : 1.0;
    return j;
}

inline double relative_difference(const CMatrix& a, const CMatrix& b) {
    const double scale = std::max({a.norm(), b.norm(), 1e-300});
    return (a - b).norm() / scale;
}

inline double relative_difference(const Matrix& a, const Matrix& b) {
    return relative_difference(CMatrix(a.cast<Complex>()), CMatrix(b.cast<Complex>()));
}

inline double condition_number(const Eigen::Ref<const CMatrix>& m) {
    Eigen::JacobiSVD<CMatrix> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0) return 1.0;
    const double smin = s(s.size() - 1);
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / smin;
}

inline double condition_number(const Eigen::Ref<const Matrix>& m) {
    return condition_number(CMatrix(m.cast<Complex>()));
}

inline std::string format_complex(Complex z) {
    std::ostringstream os;
    os.precision(6);
    os << z.real();
    if (z.imag() != 0.0) os << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
    return os.str();
}

} // namespace gramspec
