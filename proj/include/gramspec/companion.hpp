#pragma once

#include "gramspec/core.hpp"
#include "gramspec/spectrum.hpp"

#include <boost/multiprecision/cpp_complex.hpp>

#include <cmath>
#include <complex>
#include <utility>
#include <vector>

namespace gramspec {

// Controllability canonical form: superdiagonal identity, last row -a_0 ... -a_{n-1},
// b_C = e_n.
struct CompanionRealization {
    Polynomial poly;
    Matrix A;
    Vector b;

    [[nodiscard]] int n() const noexcept { return poly.degree(); }
    [[nodiscard]] LtiSystem system() const { return {A, Matrix(b)}; }
};

inline CompanionRealization build_companion(const Polynomial& p) {
    const int n = p.degree();
    CompanionRealization cr;
    cr.poly = p;
    cr.A = Matrix::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) cr.A(i, i + 1) = 1.0;
    for (int j = 0; j < n; ++j) cr.A(n - 1, j) = -p[j];
    cr.b = Vector::Zero(n);
    cr.b(n - 1) = 1.0;
    return cr;
}

// Upper Hankel of (a_1, ..., a_{n-1}, 1): (H_u)_{ij} = a_{i+j+1}, zero past the anti-diagonal.
inline Matrix hankel_upper(const Polynomial& p) {
    const int n = p.degree();
    Matrix h = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; i + j + 1 <= n; ++j) h(i, j) = p[i + j + 1];
    }
    return h;
}

// Lower Hankel of (a_0, ..., a_{n-1}): (H_l)_{ij} = a_{i+j-n+1}, zero above the anti-diagonal.
inline Matrix hankel_lower(const Polynomial& p) {
    const int n = p.degree();
    Matrix h = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = n - 1 - i; j < n; ++j) h(i, j) = p[i + j - n + 1];
    }
    return h;
}

// [B, AB, ..., A^{n-1}B], n x nm.
inline Matrix controllability_matrix(const Matrix& a, const Matrix& b) {
    const auto n = a.rows();
    const auto m = b.cols();
    Matrix c(n, n * m);
    Matrix block = b;
    for (Eigen::Index k = 0; k < n; ++k) {
        c.middleCols(k * m, m) = block;
        block = a * block;
    }
    return c;
}

struct SimilarityTransform {
    Matrix T;                       // x = T x_c
    Matrix hankel;                  // H_u
    Matrix controllability;         // C
    double condition = 1.0;         // cond(C)
    double dynamics_residual = 0.0; // ||A T - T A_C|| / (||A|| ||T||)
    double input_residual = 0.0;    // ||b - T b_C|| / ||b||
};

// T = C H_u for a controllable single-input system.
inline std::pair<SimilarityTransform, CompanionRealization> to_companion(const LtiSystem& sys,
                                                                         const Tolerances& tol = {}) {
    if (sys.inputs() != 1) throw DimensionError("to_companion: system must be single-input");
    SimilarityTransform st;
    st.controllability = controllability_matrix(sys.A, sys.B);
    st.condition = condition_number(st.controllability);
    if (!(st.condition < tol.condition)) {
        std::ostringstream os;
        os << "system is not controllable: controllability matrix condition estimate " << st.condition;
        throw ControllabilityError(os.str(), st.condition);
    }
    auto cr = build_companion(char_poly(sys.A));
    st.hankel = hankel_upper(cr.poly);
    st.T = st.controllability * st.hankel;
    const double scale = std::max(sys.A.norm() * st.T.norm(), 1e-300);
    st.dynamics_residual = (sys.A * st.T - st.T * cr.A).norm() / scale;
    st.input_residual = (sys.B.col(0) - st.T * cr.b).norm() / std::max(sys.B.norm(), 1e-300);
    return {std::move(st), std::move(cr)};
}

// ============================================================================
// Eigenvectors and residues of A_C (simple eigenvalues)
// ============================================================================

// x = (1, λ, λ², ..., λ^{n-1})
inline CVector right_eigenvector(Complex lambda, int n) {
    CVector x(n);
    Complex pw = 1.0;
    for (int k = 0; k < n; ++k) {
        x(k) = pw;
        pw *= lambda;
    }
    return x;
}

// y = H_l x / λ^n, normalised so that y_n = -1 and x^T y = -N'(λ).
inline CVector left_eigenvector(Complex lambda, const Polynomial& p) {
    const int n = p.degree();
    if (std::abs(lambda) <= 1e-14 * (1.0 + p.max_abs_coeff())) {
        throw SolvabilityError("left eigenvector undefined for a zero eigenvalue");
    }
    const CVector x = right_eigenvector(lambda, n);
    return (hankel_lower(p).cast<Complex>() * x) / std::pow(lambda, n);
}

// Same vector via the O(n) recursion y_n = -1, y_k = λ y_{k+1} - a_k.
inline CVector left_eigenvector_recursive(Complex lambda, const Polynomial& p) {
    const int n = p.degree();
    CVector y(n);
    y(n - 1) = -1.0;
    for (int k = n - 2; k >= 0; --k) y(k) = lambda * y(k + 1) - p[k + 1];
    return y;
}

namespace detail {

inline void require_simple_root(const Polynomial& p, Complex lambda, Complex derivative) {
    double scale = 0.0;
    const double r = std::abs(lambda);
    for (int k = p.degree(); k >= 1; --k) scale = scale * r + k * std::abs(p[k]);
    if (std::abs(derivative) <= 1e-10 * scale) {
        throw MultipleEigenvalueError("N'(" + format_complex(lambda) +
                                      ") vanishes: eigenvalue is (nearly) multiple; use the Jordan-chain path");
    }
}

// Closed-form components divide powers of λ by N'(λ) and N(-λ); close roots
// make them large and cancelling, so the scalar kernel runs in quad precision
// on a root polished against the stored coefficients.
using ExtComplex = boost::multiprecision::cpp_complex_quad;
using ExtVector = std::vector<ExtComplex>;

struct ExtPolyValue {
    ExtComplex value;
    ExtComplex derivative;
};

inline ExtPolyValue eval_ext(const Polynomial& p, const ExtComplex& s) {
    const int n = p.degree();
    ExtComplex v(p[n]);
    ExtComplex d(0.0);
    for (int k = n - 1; k >= 0; --k) {
        d = d * s + v;
        v = v * s + p[k];
    }
    return {v, d};
}

inline ExtComplex polish_root(const Polynomial& p, Complex lambda) {
    ExtComplex z(lambda.real(), lambda.imag());
    auto cur = eval_ext(p, z);
    for (int it = 0; it < 8 && abs(cur.derivative) > 0; ++it) {
        const ExtComplex next = z - cur.value / cur.derivative;
        const auto val = eval_ext(p, next);
        if (!(abs(val.value) < abs(cur.value))) break;
        z = next;
        cur = val;
    }
    if (lambda.imag() == 0.0) z = ExtComplex(z.real(), 0.0);
    return z;
}

inline ExtVector right_eigenvector_ext(const ExtComplex& lambda, int n) {
    ExtVector x(static_cast<std::size_t>(n));
    ExtComplex pw(1.0);
    for (auto& v : x) {
        v = pw;
        pw *= lambda;
    }
    return x;
}

inline ExtVector left_eigenvector_ext(const ExtComplex& lambda, const Polynomial& p) {
    const int n = p.degree();
    ExtVector y(static_cast<std::size_t>(n));
    y[n - 1] = ExtComplex(-1.0);
    for (int k = n - 2; k >= 0; --k) y[k] = lambda * y[k + 1] - p[k + 1];
    return y;
}

inline Complex to_double(const ExtComplex& z) {
    return {static_cast<double>(z.real()), static_cast<double>(z.imag())};
}

inline double alternating_sign_ext(int k) { return k % 2 == 0 ? -1.0 : 1.0; }

// polished root with N'(λ), after the simple-root check
struct ExtRoot {
    ExtComplex lambda;
    ExtComplex derivative;
};

inline ExtRoot simple_root_ext(const Polynomial& p, Complex lambda) {
    const ExtComplex z = polish_root(p, lambda);
    const ExtComplex d = eval_ext(p, z).derivative;
    require_simple_root(p, lambda, to_double(d));
    return {z, d};
}

} // namespace detail

// R_i = x_i y_i^T / (-N'(λ_i))
inline CMatrix residue_companion(Complex lambda, const Polynomial& p) {
    const auto r = detail::simple_root_ext(p, lambda);
    const int n = p.degree();
    const detail::ExtVector x = detail::right_eigenvector_ext(r.lambda, n);
    const detail::ExtVector y = detail::left_eigenvector_ext(r.lambda, p);
    CMatrix out(n, n);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) out(a, b) = detail::to_double(x[a] * y[b] / (-r.derivative));
    }
    return out;
}

// Lagrange form R_i = Π_{j≠i} (A - λ_j I) / (λ_i - λ_j) for a simple spectrum of any A.
inline std::vector<CMatrix> residues_general(const Matrix& a, const Spectrum& spec, double cluster_tol = 1e-8) {
    require_simple(spec);
    const auto n = a.rows();
    if (spec.size() != n) throw DimensionError("residues_general: spectrum size does not match matrix");
    const double min_sep = cluster_tol * (1.0 + spec.spectral_radius());
    const CMatrix ac = a.cast<Complex>();
    const CMatrix eye = CMatrix::Identity(n, n);
    std::vector<CMatrix> residues;
    residues.reserve(spec.entries.size());
    for (int i = 0; i < spec.size(); ++i) {
        CMatrix r = eye;
        for (int j = 0; j < spec.size(); ++j) {
            if (j == i) continue;
            const Complex gap = spec.entries[i].value - spec.entries[j].value;
            if (std::abs(gap) <= min_sep) {
                throw MultipleEigenvalueError("residues_general: eigenvalues " + std::to_string(i + 1) + " and " +
                                              std::to_string(j + 1) + " are not separated");
            }
            r = r * (ac - spec.entries[j].value * eye) / gap;
        }
        residues.push_back(std::move(r));
    }
    return residues;
}

// Right/left eigenvectors and residues of A_C for every simple eigenvalue.
struct EigenStructure {
    std::vector<CVector> right;
    std::vector<CVector> left;
    std::vector<CMatrix> residues;
    std::vector<Complex> derivative; // N'(λ_i)
};

inline EigenStructure eigen_structure(const Polynomial& p, const Spectrum& spec) {
    require_simple(spec);
    EigenStructure es;
    for (const auto& e : spec.entries) {
        const auto [value, derivative] = eval_with_derivative(p, e.value);
        detail::require_simple_root(p, e.value, derivative);
        es.right.push_back(right_eigenvector(e.value, p.degree()));
        es.left.push_back(left_eigenvector(e.value, p));
        es.derivative.push_back(derivative);
        es.residues.push_back(es.right.back() * es.left.back().transpose() / (-derivative));
    }
    return es;
}

// ============================================================================
// Jordan chains in companion coordinates
// ============================================================================

// k-th vector (1-based) of the Jordan chain of A_C at λ:
//   x_k[j] = λ^{j+1-k} Σ_{r<k} C(j, r),  j = 0..n-1,
// i.e. x_k = Σ_{r<k} λ^{r+1-k} (d/dλ)^r x_1 / r!. Satisfies (A_C - λI) x_{k+1} = x_k
// whenever λ is a root of multiplicity > k.
inline CVector chain_vector(Complex lambda, int k, int n) {
    CVector x(n);
    for (int j = 0; j < n; ++j) {
        double binom_sum = 0.0;
        double binom = 1.0; // C(j, r)
        for (int r = 0; r < k && r <= j; ++r) {
            binom_sum += binom;
            binom = binom * (j - r) / (r + 1);
        }
        x(j) = binom_sum * std::pow(lambda, j + 1 - k);
    }
    return x;
}

struct JordanBlock {
    Complex lambda;
    int multiplicity = 1;
    int offset = 0;   // first column of this block inside M
    CMatrix right;    // M_i, n x n_i
    CMatrix left;     // M_i^{(-1)}, n_i x n
    CMatrix toeplitz; // T_i, lower triangular Toeplitz of c^T x_k
    CMatrix hankel;   // H_i, upper anti-triangular Hankel of e_n^T y_k
};

struct JordanChainSet {
    Polynomial poly;
    std::vector<JordanBlock> blocks;
    CMatrix M;
    CMatrix M_inverse;
    Vector c; // c^T = a^T ((-1)^n I + J)
    double condition = 1.0;
};

// c_k = a_k ((-1)^n + J_kk)
inline Vector chain_weight_vector(const Polynomial& p) {
    const int n = p.degree();
    const Vector j = alternating_signs(n);
    const double sign_n = (n % 2 == 0) ? 1.0 : -1.0;
    Vector c(n);
    for (int k = 0; k < n; ++k) c(k) = p[k] * (sign_n + j(k));
    return c;
}

inline JordanChainSet jordan_chains_companion(const Spectrum& spec, const Polynomial& p, const Tolerances& tol = {}) {
    const int n = p.degree();
    if (spec.total_multiplicity() != n) {
        throw DimensionError("jordan_chains_companion: multiplicities do not add up to the polynomial degree");
    }
    JordanChainSet set;
    set.poly = p;
    set.M = CMatrix(n, n);
    int col = 0;
    for (const auto& e : spec.entries) {
        if (std::abs(e.value) <= 1e-14 * (1.0 + p.max_abs_coeff())) {
            throw SolvabilityError("Jordan chains undefined for a zero eigenvalue");
        }
        JordanBlock blk;
        blk.lambda = e.value;
        blk.multiplicity = e.multiplicity;
        blk.offset = col;
        blk.right = CMatrix(n, e.multiplicity);
        for (int k = 1; k <= e.multiplicity; ++k) blk.right.col(k - 1) = chain_vector(e.value, k, n);
        set.M.middleCols(col, e.multiplicity) = blk.right;
        col += e.multiplicity;
        set.blocks.push_back(std::move(blk));
    }

    set.condition = condition_number(set.M);
    if (!(set.condition < tol.condition)) {
        std::ostringstream os;
        os << "Jordan chain matrix is ill-conditioned (condition estimate " << set.condition << ")";
        throw ConditioningError(os.str(), set.condition);
    }
    set.M_inverse = set.M.partialPivLu().inverse();
    set.c = chain_weight_vector(p);
    const CVector cc = set.c.cast<Complex>();

    for (auto& blk : set.blocks) {
        const int ni = blk.multiplicity;
        blk.left = set.M_inverse.middleRows(blk.offset, ni);
        blk.toeplitz = CMatrix::Zero(ni, ni);
        blk.hankel = CMatrix::Zero(ni, ni);
        for (int r = 0; r < ni; ++r) {
            for (int q = 0; q <= r; ++q) blk.toeplitz(r, q) = (cc.transpose() * blk.right.col(r - q)).value();
            for (int q = 0; r + q < ni; ++q) blk.hankel(r, q) = blk.left(r + q, n - 1);
        }
    }
    return set;
}

} // namespace gramspec
