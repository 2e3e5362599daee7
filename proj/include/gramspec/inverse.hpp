#pragma once

#include "gramspec/companion.hpp"
#include "gramspec/core.hpp"
#include "gramspec/gramian.hpp"
#include "gramspec/spectrum.hpp"

#include <cmath>
#include <complex>
#include <memory>
#include <optional>
#include <vector>

namespace gramspec {

// Eigen-indexed and pair-indexed parts of the inverse Gramian.
// raw parts preserve orthogonality with the raw Gramian parts; the
// symmetrized parts are {.}_H of them.
struct InverseComponentSet {
    Coordinates coordinates = Coordinates::companion;
    std::vector<Complex> eigenvalues;
    SpectralComponentSet raw;               // P̂_j^{-C}
    SpectralComponentSet symmetrized;       // P̃_j^{-C}
    SpectralComponentSet pair_raw;          // P̂_ij^{-C}
    SpectralComponentSet pair_symmetrized;  // P_ij^{-C}

    // Rank-one factors of the simple-spectrum parts in quad precision:
    //   P̂_j^{-C} = w_j J y_j y_j^T,  P̂_ij^{-C} = w_ij conj(y_i) y_j^T.
    // Quadratic forms are evaluated from them; to_companion maps a target
    // x_0 in original coordinates to T^{-1} x_0.
    struct Factors {
        std::vector<detail::ExtVector> y;
        std::vector<detail::ExtComplex> eigen_weight;
        std::vector<std::vector<detail::ExtComplex>> pair_weight;
        std::optional<Matrix> to_companion;
    };
    std::shared_ptr<const Factors> factors;

    [[nodiscard]] bool has_pairs() const noexcept { return !pair_raw.empty(); }

    // Σ_j P̃_j^{-C}
    [[nodiscard]] CMatrix sum() const { return symmetrized.sum(); }
    [[nodiscard]] Matrix real_sum() const { return sum().real(); }
};

namespace detail {

inline InverseComponentSet make_inverse_set(Coordinates coords, std::vector<Complex> eigenvalues) {
    InverseComponentSet s;
    s.coordinates = coords;
    s.eigenvalues = eigenvalues;
    for (auto* set : {&s.raw, &s.pair_raw}) {
        set->flavor = Flavor::raw;
        set->coordinates = coords;
        set->eigenvalues = eigenvalues;
    }
    for (auto* set : {&s.symmetrized, &s.pair_symmetrized}) {
        set->flavor = Flavor::symmetrized;
        set->coordinates = coords;
        set->eigenvalues = eigenvalues;
    }
    return s;
}

inline void push_eigen(InverseComponentSet& s, int j, CMatrix raw) {
    s.symmetrized.components.push_back({{j}, hermitian_part(raw)});
    s.raw.components.push_back({{j}, std::move(raw)});
}

// N(-λ) / (-N'(λ))
struct InverseFactor {
    ExtComplex lambda;
    ExtComplex derivative;
    ExtComplex mirrored;
    ExtVector y;
};

inline InverseFactor inverse_factor(const Polynomial& p, Complex lambda) {
    const auto r = simple_root_ext(p, lambda);
    return {r.lambda, r.derivative, eval_ext(p, -r.lambda).value, left_eigenvector_ext(r.lambda, p)};
}

// N(-λ) / (-N'(λ))
inline ExtComplex eigen_weight(const InverseFactor& f) { return f.mirrored / (-f.derivative); }

// N(-λ_i^*) N(-λ_j) / (-N'(λ_i^*) N'(λ_j) (λ_i^* + λ_j))
inline ExtComplex pair_weight(const InverseFactor& fi, const InverseFactor& fj) {
    return conj(fi.mirrored) * fj.mirrored / (-conj(fi.derivative) * fj.derivative * (conj(fi.lambda) + fj.lambda));
}

inline CMatrix eigen_matrix(const InverseFactor& f) {
    const auto n = static_cast<int>(f.y.size());
    const ExtComplex w = eigen_weight(f);
    CMatrix out(n, n);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) out(a, b) = to_double(w * alternating_sign_ext(a) * f.y[a] * f.y[b]);
    }
    return out;
}

inline CMatrix raw_inverse_eigenpart(const Polynomial& p, Complex lambda) {
    return eigen_matrix(inverse_factor(p, lambda));
}

} // namespace detail

// P̂_j^{-C} = N(-λ_j) / (-N'(λ_j)) · J y_j y_j^T,   P̃_j^{-C} = {P̂_j^{-C}}_H
inline InverseComponentSet inverse_eigenparts(const CompanionRealization& cr, const Spectrum& spec,
                                              const Tolerances& tol = {}) {
    detail::check_simple_path(cr, spec, tol);
    auto s = detail::make_inverse_set(Coordinates::companion, spec.values());
    auto factors = std::make_shared<InverseComponentSet::Factors>();
    for (int j = 0; j < spec.size(); ++j) {
        const auto f = detail::inverse_factor(cr.poly, spec.entries[j].value);
        detail::push_eigen(s, j, detail::eigen_matrix(f));
        factors->y.push_back(f.y);
        factors->eigen_weight.push_back(detail::eigen_weight(f));
    }
    s.factors = std::move(factors);
    return s;
}

// Eigen parts plus
//   P̂_ij^{-C} = N(-λ_i^*) N(-λ_j) / (-N'(λ_i^*) N'(λ_j)) · conj(y_i) y_j^T / (λ_i^* + λ_j)
// which equals R_i^* P̂_j^{-C}; Σ_i P̂_ij^{-C} = P̂_j^{-C}.
inline InverseComponentSet inverse_pair_parts(const CompanionRealization& cr, const Spectrum& spec,
                                              const Tolerances& tol = {}) {
    auto s = inverse_eigenparts(cr, spec, tol);
    const int n = cr.n();
    std::vector<detail::InverseFactor> f;
    for (const auto& e : spec.entries) f.push_back(detail::inverse_factor(cr.poly, e.value));
    auto factors = std::make_shared<InverseComponentSet::Factors>(*s.factors);
    factors->pair_weight.assign(f.size(), {});
    for (int i = 0; i < spec.size(); ++i) {
        for (int j = 0; j < spec.size(); ++j) {
            const detail::ExtComplex w = detail::pair_weight(f[i], f[j]);
            factors->pair_weight[i].push_back(w);
            CMatrix raw(n, n);
            for (int a = 0; a < n; ++a) {
                for (int b = 0; b < n; ++b) raw(a, b) = detail::to_double(w * conj(f[i].y[a]) * f[j].y[b]);
            }
            s.pair_symmetrized.components.push_back({{i, j}, hermitian_part(raw)});
            s.pair_raw.components.push_back({{i, j}, std::move(raw)});
        }
    }
    s.factors = std::move(factors);
    return s;
}

// Elementwise P̂_j^{-C} with a multiplication counter; one part costs O(n²).
inline CMatrix inverse_eigenpart_counted(const Polynomial& p, Complex lambda, long& ops) {
    const int n = p.degree();
    CVector y(n);
    y(n - 1) = -1.0;
    for (int k = n - 2; k >= 0; --k) {
        y(k) = lambda * y(k + 1) - p[k + 1];
        ++ops;
    }
    Complex value = 1.0, derivative = 0.0, mirrored = 1.0;
    for (int k = n - 1; k >= 0; --k) {
        derivative = derivative * lambda + value;
        value = value * lambda + p[k];
        mirrored = mirrored * (-lambda) + p[k];
        ops += 3;
    }
    const Complex w = mirrored / (-derivative);
    ++ops;
    CMatrix out(n, n);
    for (int r = 0; r < n; ++r) {
        const Complex row = (r % 2 == 0 ? -w : w) * y(r);
        ++ops;
        for (int c = 0; c < n; ++c) {
            out(r, c) = row * y(c);
            ++ops;
        }
    }
    return out;
}

// ============================================================================
// Orthogonality
// ============================================================================

struct OrthogonalityReport {
    double max_violation = 0.0;
    double max_off_diagonal = 0.0;
    double max_diagonal = 0.0;
    bool ok = true;
};

// P̂_i^C P̂_j^{-C} = δ_ij E_i, element-wise, with E_i the spectral projectors.
inline OrthogonalityReport orthogonality_certificate(const SpectralComponentSet& gram, const SpectralComponentSet& inv,
                                                     const std::vector<CMatrix>& projectors, double tol = 1e-8) {
    if (gram.components.size() != projectors.size() || inv.components.size() != projectors.size()) {
        throw DimensionError("orthogonality_certificate: component counts differ");
    }
    OrthogonalityReport r;
    for (std::size_t i = 0; i < projectors.size(); ++i) {
        const double scale = std::max(1.0, projectors[i].cwiseAbs().maxCoeff());
        for (std::size_t j = 0; j < projectors.size(); ++j) {
            const CMatrix prod = gram.components[i].value * inv.components[j].value;
            const double v = (i == j ? (prod - projectors[i]) : prod).cwiseAbs().maxCoeff() / scale;
            if (i == j) r.max_diagonal = std::max(r.max_diagonal, v);
            else r.max_off_diagonal = std::max(r.max_off_diagonal, v);
        }
    }
    r.max_violation = std::max(r.max_diagonal, r.max_off_diagonal);
    r.ok = r.max_violation <= tol;
    return r;
}

inline OrthogonalityReport orthogonality_certificate(const SpectralComponentSet& gram, const InverseComponentSet& inv,
                                                     const Polynomial& p, double tol = 1e-8) {
    std::vector<CMatrix> residues;
    for (Complex l : gram.eigenvalues) residues.push_back(residue_companion(l, p));
    return orthogonality_certificate(gram, inv.raw, residues, tol);
}

// ============================================================================
// General single-input systems
// ============================================================================

// X -> T^{-T} X T^{-1}, T = C H_u.
inline CMatrix lower_inverse_matrix(const CMatrix& x, const Matrix& tinv) {
    const CMatrix ti = tinv.cast<Complex>();
    return ti.transpose() * x * ti;
}

inline InverseComponentSet riccati_general(const LtiSystem& sys, const Spectrum& spec, const Tolerances& tol = {}) {
    auto [st, cr] = to_companion(sys, tol);
    auto s = inverse_pair_parts(cr, spec, tol);
    const Matrix tinv = st.T.partialPivLu().inverse();
    for (auto* set : {&s.raw, &s.symmetrized, &s.pair_raw, &s.pair_symmetrized}) {
        set->coordinates = Coordinates::original;
        for (auto& c : set->components) c.value = lower_inverse_matrix(c.value, tinv);
    }
    auto factors = std::make_shared<InverseComponentSet::Factors>(*s.factors);
    factors->to_companion = tinv;
    s.factors = std::move(factors);
    s.coordinates = Coordinates::original;
    return s;
}

inline InverseComponentSet riccati_general(const LtiSystem& sys, const Tolerances& tol = {}) {
    return riccati_general(sys, spectrum_of(char_poly(sys.A), tol), tol);
}

// ============================================================================
// Differential Riccati equation
// ============================================================================

struct NormalizationState {
    double t = 0.0;
    CMatrix G_inverse;
    CMatrix G;
    double condition = 1.0;
};

// G^{-1}(t) = I - Σ_i J R_i^T J e^{(λ_i I + A_C^T) t} + Σ_i P̂_i^{-C} P_0 e^{(λ_i I + A_C^T) t}
// P_C^{-1}(t) = G(t) Σ_j P̂_j^{-C}
inline NormalizationState normalization(const CompanionRealization& cr, const Spectrum& spec, const Matrix& p0,
                                        double t, const Tolerances& tol = {}) {
    const int n = cr.n();
    if (p0.rows() != n || p0.cols() != n) throw DimensionError("initial condition has wrong dimensions");
    if ((p0 - p0.transpose()).norm() > 1e-12 * std::max(1.0, p0.norm())) {
        throw DimensionError("initial condition must be symmetric");
    }
    detail::check_simple_path(cr, spec, tol);
    std::vector<CMatrix> rt;
    for (const auto& e : spec.entries) rt.push_back(residue_companion(e.value, cr.poly).transpose());
    const CMatrix j = alternating_signs(n).cast<Complex>().asDiagonal();
    const CMatrix p0c = p0.cast<Complex>();

    NormalizationState st;
    st.t = t;
    st.G_inverse = CMatrix::Identity(n, n);
    for (int i = 0; i < spec.size(); ++i) {
        const Complex li = spec.entries[i].value;
        CMatrix e = CMatrix::Zero(n, n);
        for (int k = 0; k < spec.size(); ++k) e += std::exp((li + spec.entries[k].value) * t) * rt[k];
        const CMatrix pinv_i = detail::raw_inverse_eigenpart(cr.poly, li);
        st.G_inverse += (pinv_i * p0c - j * rt[i] * j) * e;
    }
    st.condition = condition_number(st.G_inverse);
    if (!(st.condition < tol.condition)) {
        std::ostringstream os;
        os << "normalization matrix is singular at t = " << t << " (condition estimate " << st.condition << ")";
        throw ConditioningError(os.str(), st.condition);
    }
    st.G = st.G_inverse.partialPivLu().inverse();
    return st;
}

inline std::pair<NormalizationState, InverseComponentSet> finite_inverse(const CompanionRealization& cr,
                                                                         const Spectrum& spec, const Matrix& p0,
                                                                         double t, const Tolerances& tol = {}) {
    auto st = normalization(cr, spec, p0, t, tol);
    auto base = inverse_eigenparts(cr, spec, tol);
    auto s = detail::make_inverse_set(Coordinates::companion, spec.values());
    for (const auto& c : base.raw.components) detail::push_eigen(s, c.index.i, st.G * c.value);
    return {std::move(st), std::move(s)};
}

// ============================================================================
// Multiple eigenvalues
// ============================================================================

// H^{-1} for an upper anti-triangular Hankel block: reversing the rows gives a
// lower-triangular matrix, then forward substitution.
inline CMatrix anti_triangular_inverse(const CMatrix& h, double tol = 1e-14) {
    const auto k = h.rows();
    const CMatrix flipped = h.colwise().reverse();
    double scale = h.cwiseAbs().maxCoeff();
    for (Eigen::Index r = 0; r < k; ++r) {
        if (std::abs(flipped(r, r)) <= tol * std::max(scale, 1e-300)) {
            throw ConditioningError("degenerate Jordan chain: zero anti-diagonal in the Hankel block",
                                    std::numeric_limits<double>::infinity());
        }
    }
    // (P H)^{-1} P with P the reversal permutation
    const CMatrix perm = CMatrix::Identity(k, k).colwise().reverse();
    return flipped.triangularView<Eigen::Lower>().solve(perm);
}

// P̂_j^{-C} = J (M_j^{(-1)})^T T_j H_j^{-1} M_j^{(-1)}
inline InverseComponentSet inverse_multiple_eig(const CompanionRealization& cr, const JordanChainSet& chains) {
    const int n = cr.n();
    if (chains.poly.degree() != n) throw DimensionError("chain set does not match the realization");
    std::vector<Complex> eig;
    for (const auto& b : chains.blocks) eig.push_back(b.lambda);
    auto s = detail::make_inverse_set(Coordinates::companion, eig);
    const CMatrix j = alternating_signs(n).cast<Complex>().asDiagonal();
    for (std::size_t i = 0; i < chains.blocks.size(); ++i) {
        const auto& blk = chains.blocks[i];
        CMatrix raw = j * blk.left.transpose() * blk.toeplitz * anti_triangular_inverse(blk.hankel) * blk.left;
        detail::push_eigen(s, static_cast<int>(i), std::move(raw));
    }
    return s;
}

// M_i M_i^{(-1)} for each block.
inline std::vector<CMatrix> chain_projectors(const JordanChainSet& chains) {
    std::vector<CMatrix> out;
    for (const auto& b : chains.blocks) out.push_back(b.right * b.left);
    return out;
}

} // namespace gramspec
