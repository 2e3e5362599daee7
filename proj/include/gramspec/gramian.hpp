#pragma once

#include "gramspec/companion.hpp"
#include "gramspec/core.hpp"
#include "gramspec/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <optional>
#include <vector>

namespace gramspec {

// ============================================================================
// Component containers
// ============================================================================

enum class Flavor { symmetrized, raw };
enum class Coordinates { companion, original };

// Eigen-index i, or pair (i, j). 0-based positions in the spectrum.
struct ComponentIndex {
    int i = 0;
    int j = -1;

    [[nodiscard]] bool is_pair() const noexcept { return j >= 0; }
    friend bool operator==(const ComponentIndex&, const ComponentIndex&) = default;
};

struct SpectralComponent {
    ComponentIndex index;
    CMatrix value;
};

struct SpectralComponentSet {
    Flavor flavor = Flavor::symmetrized;
    Coordinates coordinates = Coordinates::companion;
    std::vector<Complex> eigenvalues;
    std::vector<SpectralComponent> components;

    [[nodiscard]] bool empty() const noexcept { return components.empty(); }
    [[nodiscard]] bool pair_indexed() const noexcept { return !components.empty() && components.front().index.is_pair(); }

    [[nodiscard]] CMatrix sum() const {
        if (components.empty()) return {};
        CMatrix s = CMatrix::Zero(components.front().value.rows(), components.front().value.cols());
        for (const auto& c : components) s += c.value;
        return s;
    }

    [[nodiscard]] const CMatrix& at(int i, int j = -1) const {
        for (const auto& c : components) {
            if (c.index.i == i && c.index.j == j) return c.value;
        }
        throw DimensionError("component index not present in set");
    }

    // Σ_j P_ij for a pair-indexed set.
    [[nodiscard]] CMatrix row_sum(int i) const {
        CMatrix s;
        for (const auto& c : components) {
            if (c.index.i != i) continue;
            if (s.size() == 0) s = CMatrix::Zero(c.value.rows(), c.value.cols());
            s += c.value;
        }
        return s;
    }

    [[nodiscard]] SpectralComponentSet symmetrized() const {
        SpectralComponentSet out = *this;
        out.flavor = Flavor::symmetrized;
        for (auto& c : out.components) c.value = hermitian_part(c.value);
        return out;
    }
};

// coeff * t^power * e^{rate t}
struct ExponentialTerm {
    Complex rate;
    int power = 0;
    CMatrix coeff;
};

// Quad-precision copy of a constant-plus-exponentials expansion (power 0
// terms only). Coefficients of neighbouring eigenvalues are large and cancel
// at small t, so evaluation sums them before rounding.
struct ExtExpansion {
    struct Term {
        detail::ExtComplex rate;
        std::vector<detail::ExtComplex> coeff; // column-major rows x cols
    };
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    std::vector<detail::ExtComplex> constant;
    std::vector<Term> terms;

    void accumulate(double t, std::vector<detail::ExtComplex>& acc) const {
        for (std::size_t k = 0; k < constant.size(); ++k) acc[k] += constant[k];
        for (const auto& term : terms) {
            const detail::ExtComplex w = exp(term.rate * t);
            for (std::size_t k = 0; k < term.coeff.size(); ++k) acc[k] += w * term.coeff[k];
        }
    }

    [[nodiscard]] static CMatrix round(const std::vector<detail::ExtComplex>& acc, Eigen::Index rows,
                                       Eigen::Index cols) {
        CMatrix out(rows, cols);
        for (Eigen::Index k = 0; k < rows * cols; ++k) out(k % rows, k / rows) = detail::to_double(acc[k]);
        return out;
    }
};

struct ComponentExpansion {
    ComponentIndex index;
    CMatrix constant;
    std::vector<ExponentialTerm> terms;
    std::shared_ptr<const ExtExpansion> ext; // optional, mirrors constant and terms

    [[nodiscard]] CMatrix raw_at(double t) const {
        if (ext) {
            std::vector<detail::ExtComplex> acc(ext->constant.size(), detail::ExtComplex(0.0));
            ext->accumulate(t, acc);
            return ExtExpansion::round(acc, ext->rows, ext->cols);
        }
        CMatrix v = constant;
        for (const auto& term : terms) {
            const Complex w = std::exp(term.rate * t) * (term.power == 0 ? 1.0 : std::pow(t, term.power));
            v += w * term.coeff;
        }
        return v;
    }
};

// Time-dependent components: each raw component is a constant plus
// polynomial-exponential terms; the symmetrized flavor applies {.}_H after
// evaluation.
struct FiniteGramianDecomposition {
    Coordinates coordinates = Coordinates::companion;
    std::vector<Complex> eigenvalues;
    std::vector<ComponentExpansion> parts;
    std::optional<double> horizon;

    [[nodiscard]] SpectralComponentSet evaluate(double t, Flavor flavor = Flavor::symmetrized) const {
        SpectralComponentSet set;
        set.flavor = flavor;
        set.coordinates = coordinates;
        set.eigenvalues = eigenvalues;
        for (const auto& p : parts) {
            CMatrix v = p.raw_at(t);
            if (flavor == Flavor::symmetrized) v = hermitian_part(v);
            set.components.push_back({p.index, std::move(v)});
        }
        return set;
    }

    [[nodiscard]] SpectralComponentSet evaluate(Flavor flavor = Flavor::symmetrized) const {
        if (!horizon) return static_part(flavor);
        return evaluate(*horizon, flavor);
    }

    // Constant parts only: the infinite-horizon limit for stable spectra.
    [[nodiscard]] SpectralComponentSet static_part(Flavor flavor = Flavor::symmetrized) const {
        SpectralComponentSet set;
        set.flavor = flavor;
        set.coordinates = coordinates;
        set.eigenvalues = eigenvalues;
        for (const auto& p : parts) {
            set.components.push_back({p.index, flavor == Flavor::symmetrized ? hermitian_part(p.constant) : p.constant});
        }
        return set;
    }

    [[nodiscard]] CMatrix sum_at(double t) const {
        const bool extended = !parts.empty() && std::all_of(parts.begin(), parts.end(),
                                                              [](const auto& p) { return p.ext != nullptr; });
        if (extended) {
            const auto& first = *parts.front().ext;
            std::vector<detail::ExtComplex> acc(first.constant.size(), detail::ExtComplex(0.0));
            for (const auto& p : parts) p.ext->accumulate(t, acc);
            return hermitian_part(ExtExpansion::round(acc, first.rows, first.cols));
        }
        CMatrix s;
        for (const auto& p : parts) {
            if (s.size() == 0) s = CMatrix::Zero(p.constant.rows(), p.constant.cols());
            s += p.raw_at(t);
        }
        return hermitian_part(s);
    }
};

// ============================================================================
// Simple spectrum, companion coordinates
// ============================================================================

namespace detail {

inline void check_simple_path(const CompanionRealization& cr, const Spectrum& spec, const Tolerances& tol) {
    if (spec.total_multiplicity() != cr.n()) throw DimensionError("spectrum does not match the system dimension");
    require_solvable(spec, tol.solve);
    require_simple(spec);
}

using ExtFlat = std::vector<ExtComplex>; // column-major n x n

// u v^T · w, flattened column-major
inline ExtFlat outer_ext(const ExtVector& u, const ExtVector& v, const ExtComplex& w) {
    const auto n = u.size();
    ExtFlat out(n * n);
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t a = 0; a < n; ++a) out[b * n + a] = u[a] * v[b] * w;
    }
    return out;
}

inline CMatrix round_flat(const ExtFlat& f, int n) { return ExtExpansion::round(f, n, n); }

// P̂_i = x_i x_i^T J / (-N'(λ_i) N(-λ_i))
inline ExtFlat raw_subgramian_ext(const Polynomial& p, Complex lambda) {
    const int n = p.degree();
    const auto r = simple_root_ext(p, lambda);
    const ExtComplex weight = -r.derivative * eval_ext(p, -r.lambda).value;
    const ExtVector x = right_eigenvector_ext(r.lambda, n);
    ExtVector xj = x;
    for (int k = 0; k < n; ++k) xj[k] *= alternating_sign_ext(k);
    return outer_ext(x, xj, ExtComplex(1.0) / weight);
}

inline CMatrix raw_subgramian(const Polynomial& p, Complex lambda) {
    return round_flat(raw_subgramian_ext(p, lambda), p.degree());
}

// P̂_i R_j^T = x_i x_j^T · (x_i^T J y_j) / (-N'(λ_i) N(-λ_i) · -N'(λ_j))
inline ExtFlat subgramian_residue_product_ext(const Polynomial& p, Complex li, Complex lj) {
    const int n = p.degree();
    const auto ri = simple_root_ext(p, li);
    const auto rj = simple_root_ext(p, lj);
    const ExtVector xi = right_eigenvector_ext(ri.lambda, n);
    const ExtVector xj = right_eigenvector_ext(rj.lambda, n);
    const ExtVector yj = left_eigenvector_ext(rj.lambda, p);
    ExtComplex inner(0.0);
    for (int k = 0; k < n; ++k) inner += xi[k] * alternating_sign_ext(k) * yj[k];
    return outer_ext(xi, xj, inner / (-ri.derivative * eval_ext(p, -ri.lambda).value * -rj.derivative));
}

// x_i x_j^* / (N'(λ_i) N'(λ_j^*))
inline ExtFlat pair_kernel_ext(const Polynomial& p, Complex li, Complex lj) {
    const int n = p.degree();
    const auto ri = simple_root_ext(p, li);
    const auto rj = simple_root_ext(p, std::conj(lj));
    return outer_ext(right_eigenvector_ext(ri.lambda, n), right_eigenvector_ext(rj.lambda, n),
                     ExtComplex(1.0) / (ri.derivative * rj.derivative));
}

inline CMatrix pair_kernel(const Polynomial& p, Complex li, Complex lj) {
    return round_flat(pair_kernel_ext(p, li, lj), p.degree());
}

inline ExtComplex polished_sum(const Polynomial& p, Complex a, Complex b) {
    return polish_root(p, a) + polish_root(p, b);
}

inline SpectralComponentSet make_set(Flavor flavor, Coordinates coords, const Spectrum& spec) {
    SpectralComponentSet set;
    set.flavor = flavor;
    set.coordinates = coords;
    set.eigenvalues = spec.values();
    return set;
}

} // namespace detail

// Sub-Gramians of the algebraic Lyapunov solution A_C P + P A_C^T = -b_C b_C^T.
//   raw:          P̂_i = x_i x_i^T J / (-N'(λ_i) N(-λ_i))
//   symmetrized:  P̃_i = {P̂_i}_H
// The minus sign in the denominator is required for Σ P̂_i to solve the
// Lyapunov equation (n = 1, N = s + 1 gives P = 1/2).
inline SpectralComponentSet infinite_subgramians(const CompanionRealization& cr, const Spectrum& spec,
                                                 Flavor flavor = Flavor::symmetrized, const Tolerances& tol = {}) {
    detail::check_simple_path(cr, spec, tol);
    auto set = detail::make_set(flavor, Coordinates::companion, spec);
    for (int i = 0; i < spec.size(); ++i) {
        CMatrix v = detail::raw_subgramian(cr.poly, spec.entries[i].value);
        if (flavor == Flavor::symmetrized) v = hermitian_part(v);
        set.components.push_back({{i}, std::move(v)});
    }
    return set;
}

// P_ij = {-1/(λ_i + λ_j^*) · x_i x_j^* / (N'(λ_i) N'(λ_j^*))}_H
inline SpectralComponentSet infinite_pair_subgramians(const CompanionRealization& cr, const Spectrum& spec,
                                                      Flavor flavor = Flavor::symmetrized,
                                                      const Tolerances& tol = {}) {
    detail::check_simple_path(cr, spec, tol);
    auto set = detail::make_set(flavor, Coordinates::companion, spec);
    for (int i = 0; i < spec.size(); ++i) {
        for (int j = 0; j < spec.size(); ++j) {
            const Complex li = spec.entries[i].value;
            const Complex lj = spec.entries[j].value;
            CMatrix v = (-1.0 / (li + std::conj(lj))) * detail::pair_kernel(cr.poly, li, lj);
            if (flavor == Flavor::symmetrized) v = hermitian_part(v);
            set.components.push_back({{i, j}, std::move(v)});
        }
    }
    return set;
}

// P̃_i(t) = {P̂_i (I - e^{(λ_i I + A_C^T) t})}_H with zero initial condition.
// e^{A_C^T t} is expanded over residues, so each component becomes
// P̂_i - Σ_j P̂_i R_j^T e^{(λ_i + λ_j) t}.
inline FiniteGramianDecomposition finite_subgramians(const CompanionRealization& cr, const Spectrum& spec,
                                                     std::optional<double> t = std::nullopt,
                                                     const Tolerances& tol = {}) {
    detail::check_simple_path(cr, spec, tol);
    if (t && !(*t >= 0.0 && std::isfinite(*t))) throw DimensionError("finite horizon must be finite and non-negative");
    FiniteGramianDecomposition d;
    d.coordinates = Coordinates::companion;
    d.eigenvalues = spec.values();
    d.horizon = t;
    const int n = cr.n();
    for (int i = 0; i < spec.size(); ++i) {
        const Complex li = spec.entries[i].value;
        auto ext = std::make_shared<ExtExpansion>();
        ext->rows = ext->cols = n;
        ext->constant = detail::raw_subgramian_ext(cr.poly, li);
        ComponentExpansion part;
        part.index = {i};
        part.constant = detail::round_flat(ext->constant, n);
        for (int j = 0; j < spec.size(); ++j) {
            const Complex lj = spec.entries[j].value;
            auto coeff = detail::subgramian_residue_product_ext(cr.poly, li, lj);
            for (auto& c : coeff) c = -c;
            part.terms.push_back({li + lj, 0, detail::round_flat(coeff, n)});
            ext->terms.push_back({detail::polished_sum(cr.poly, li, lj), std::move(coeff)});
        }
        part.ext = std::move(ext);
        d.parts.push_back(std::move(part));
    }
    return d;
}

// P_ij(t) = {(e^{(λ_i + λ_j^*) t} - 1) / (λ_i + λ_j^*) · x_i x_j^* / (N'(λ_i) N'(λ_j^*))}_H
inline FiniteGramianDecomposition finite_pair_subgramians(const CompanionRealization& cr, const Spectrum& spec,
                                                          std::optional<double> t = std::nullopt,
                                                          const Tolerances& tol = {}) {
    detail::check_simple_path(cr, spec, tol);
    if (t && !(*t >= 0.0 && std::isfinite(*t))) throw DimensionError("finite horizon must be finite and non-negative");
    FiniteGramianDecomposition d;
    d.coordinates = Coordinates::companion;
    d.eigenvalues = spec.values();
    d.horizon = t;
    for (int i = 0; i < spec.size(); ++i) {
        for (int j = 0; j < spec.size(); ++j) {
            const Complex li = spec.entries[i].value;
            const Complex lj = spec.entries[j].value;
            const Complex rate = li + std::conj(lj);
            const detail::ExtComplex rate_ext = detail::polished_sum(cr.poly, li, std::conj(lj));
            auto k = detail::pair_kernel_ext(cr.poly, li, lj);
            for (auto& c : k) c /= rate_ext;
            auto ext = std::make_shared<ExtExpansion>();
            ext->rows = ext->cols = cr.n();
            ext->constant = k;
            for (auto& c : ext->constant) c = -c;
            ComponentExpansion part;
            part.index = {i, j};
            part.constant = detail::round_flat(ext->constant, cr.n());
            part.terms.push_back({rate, 0, detail::round_flat(k, cr.n())});
            ext->terms.push_back({rate_ext, std::move(k)});
            part.ext = std::move(ext);
            d.parts.push_back(std::move(part));
        }
    }
    return d;
}

struct HomogeneousDecomposition {
    FiniteGramianDecomposition eigen; // {R_i P_0 e^{(λ_i I + A_C^T) t}}_H
    FiniteGramianDecomposition pairs; // {R_i P_0 R_j^* e^{(λ_i + λ_j^*) t}}_H
};

// Part of the differential Lyapunov solution driven by a non-zero P(0) = P_0.
inline HomogeneousDecomposition homogeneous_decomposition(const CompanionRealization& cr, const Spectrum& spec,
                                                          const Matrix& p0, std::optional<double> t = std::nullopt,
                                                          const Tolerances& tol = {}) {
    const int n = cr.n();
    if (p0.rows() != n || p0.cols() != n) throw DimensionError("initial condition has wrong dimensions");
    if ((p0 - p0.transpose()).norm() > 1e-12 * std::max(1.0, p0.norm())) {
        throw DimensionError("initial condition must be symmetric");
    }
    detail::check_simple_path(cr, spec, tol);
    std::vector<CMatrix> r;
    for (const auto& e : spec.entries) r.push_back(residue_companion(e.value, cr.poly));
    const CMatrix p0c = p0.cast<Complex>();

    HomogeneousDecomposition h;
    for (auto* d : {&h.eigen, &h.pairs}) {
        d->coordinates = Coordinates::companion;
        d->eigenvalues = spec.values();
        d->horizon = t;
    }
    for (int i = 0; i < spec.size(); ++i) {
        const Complex li = spec.entries[i].value;
        ComponentExpansion eig;
        eig.index = {i};
        eig.constant = CMatrix::Zero(n, n);
        for (int j = 0; j < spec.size(); ++j) {
            const Complex lj = spec.entries[j].value;
            eig.terms.push_back({li + lj, 0, r[i] * p0c * r[j].transpose()});
            ComponentExpansion pair;
            pair.index = {i, j};
            pair.constant = CMatrix::Zero(n, n);
            pair.terms.push_back({li + std::conj(lj), 0, r[i] * p0c * r[j].adjoint()});
            h.pairs.parts.push_back(std::move(pair));
        }
        h.eigen.parts.push_back(std::move(eig));
    }
    return h;
}

// ============================================================================
// Original coordinates
// ============================================================================

// X -> C (H_u X H_u ⊗ I_m) C^T; for m = 1 this is T X T^T with T = C H_u.
inline CMatrix lift_matrix(const CMatrix& x, const Matrix& controllability, const Matrix& hankel, int inputs) {
    const CMatrix core = hankel.cast<Complex>() * x * hankel.cast<Complex>();
    const auto n = core.rows();
    CMatrix kron = CMatrix::Zero(n * inputs, n * inputs);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) {
            kron.block(r * inputs, c * inputs, inputs, inputs).diagonal().setConstant(core(r, c));
        }
    }
    const CMatrix cc = controllability.cast<Complex>();
    return cc * kron * cc.transpose();
}

struct LiftingData {
    Matrix controllability;
    Matrix hankel;
    int inputs = 1;
};

inline LiftingData lifting_data(const LtiSystem& sys, const Tolerances& tol = {}) {
    LiftingData ld;
    ld.controllability = controllability_matrix(sys.A, sys.B);
    Eigen::JacobiSVD<Matrix> svd(ld.controllability);
    const auto& s = svd.singularValues();
    const double cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
    if (!(cond < tol.condition)) {
        std::ostringstream os;
        os << "controllability matrix is rank deficient (condition estimate " << cond << ")";
        throw ControllabilityError(os.str(), cond);
    }
    ld.hankel = hankel_upper(char_poly(sys.A));
    ld.inputs = sys.inputs();
    return ld;
}

inline SpectralComponentSet lift_to_original(const SpectralComponentSet& set, const LtiSystem& sys,
                                             const Tolerances& tol = {}) {
    if (set.coordinates != Coordinates::companion) throw DimensionError("component set is not in companion coordinates");
    const auto ld = lifting_data(sys, tol);
    SpectralComponentSet out = set;
    out.coordinates = Coordinates::original;
    for (auto& c : out.components) c.value = lift_matrix(c.value, ld.controllability, ld.hankel, ld.inputs);
    return out;
}

inline FiniteGramianDecomposition lift_to_original(const FiniteGramianDecomposition& d, const LtiSystem& sys,
                                                   const Tolerances& tol = {}) {
    if (d.coordinates != Coordinates::companion) throw DimensionError("decomposition is not in companion coordinates");
    const auto ld = lifting_data(sys, tol);
    FiniteGramianDecomposition out = d;
    out.coordinates = Coordinates::original;
    for (auto& p : out.parts) {
        p.ext.reset();
        p.constant = lift_matrix(p.constant, ld.controllability, ld.hankel, ld.inputs);
        for (auto& term : p.terms) term.coeff = lift_matrix(term.coeff, ld.controllability, ld.hankel, ld.inputs);
    }
    return out;
}

// ============================================================================
// Multiple eigenvalues
// ============================================================================

// Â_k^(i) of the resolvent expansion (sI - A)^{-1} = Σ_i Σ_k Â_k^(i) / (s - λ_i)^k,
// built from companion Jordan chains: Â_k = Σ_{l=1}^{n_i+1-k} x_l y_{k-1+l}^T.
struct ResolventCoefficients {
    // coefficients[i][k-1] = Â_k^(i)
    std::vector<std::vector<CMatrix>> coefficients;
    double transform_condition = 1.0;
};

inline std::vector<std::vector<CMatrix>> companion_resolvent_coefficients(const JordanChainSet& chains) {
    std::vector<std::vector<CMatrix>> out;
    for (const auto& blk : chains.blocks) {
        const int ni = blk.multiplicity;
        std::vector<CMatrix> ak;
        for (int k = 1; k <= ni; ++k) {
            CMatrix a = CMatrix::Zero(blk.right.rows(), blk.right.rows());
            for (int l = 1; l <= ni + 1 - k; ++l) a += blk.right.col(l - 1) * blk.left.row(k - 2 + l);
            ak.push_back(std::move(a));
        }
        out.push_back(std::move(ak));
    }
    return out;
}

namespace detail {

// A similarity T with A T = T A_C, taken from the first well-conditioned
// cyclic vector among B's columns, their sum, or the unit vectors.
inline Matrix cyclic_transform(const Matrix& a, const Matrix& b, const Polynomial& p, double max_condition,
                               double& condition) {
    const auto n = a.rows();
    std::vector<Vector> candidates;
    for (Eigen::Index c = 0; c < b.cols(); ++c) candidates.emplace_back(b.col(c));
    candidates.emplace_back(b.rowwise().sum());
    for (Eigen::Index k = 0; k < n; ++k) candidates.emplace_back(Vector::Unit(n, k));
    candidates.emplace_back(Vector::LinSpaced(n, 1.0, 2.0));
    const Matrix hu = hankel_upper(p);
    condition = std::numeric_limits<double>::infinity();
    for (const auto& v : candidates) {
        const Matrix c = controllability_matrix(a, v);
        const double cond = condition_number(c);
        if (cond < max_condition) {
            condition = cond;
            return c * hu;
        }
    }
    throw ConditioningError("dynamics matrix has no well-conditioned cyclic vector (derogatory or nearly so)",
                            condition);
}

} // namespace detail

inline ResolventCoefficients resolvent_coefficients(const Matrix& a, const Matrix& b, const Spectrum& spec,
                                                    const Tolerances& tol = {}) {
    const auto p = char_poly(a);
    const auto chains = jordan_chains_companion(spec, p, tol);
    ResolventCoefficients rc;
    auto companion = companion_resolvent_coefficients(chains);
    const Matrix t = detail::cyclic_transform(a, b, p, tol.condition, rc.transform_condition);
    const CMatrix tc = t.cast<Complex>();
    const CMatrix tinv = t.partialPivLu().inverse().cast<Complex>();
    for (auto& block : companion) {
        for (auto& ak : block) ak = tc * ak * tinv;
    }
    rc.coefficients = std::move(companion);
    return rc;
}

// Gramian components for a spectrum with multiplicities, one per distinct
// eigenvalue:
//   P_i(∞) = Σ_k Â_k BB^T W_i^k,   W_i = (-λ_i I - A^T)^{-1}
//   P_i(t) = P_i(∞) - Σ_k Σ_{l<=k} Â_k BB^T W_i^l t^{k-l}/(k-l)! e^{(λ_i I + A^T) t}
// with e^{A^T t} = Σ_j Σ_q (Â_q^(j))^T t^{q-1}/(q-1)! e^{λ_j t}.
inline FiniteGramianDecomposition multiple_eig_gramian(const Matrix& a, const Matrix& b, const Spectrum& spec,
                                                       std::optional<double> t = std::nullopt,
                                                       const Tolerances& tol = {}) {
    if (a.rows() != a.cols() || b.rows() != a.rows()) throw DimensionError("multiple_eig_gramian: bad dimensions");
    if (spec.total_multiplicity() != a.rows()) throw DimensionError("spectrum does not match the system dimension");
    require_solvable(spec, tol.solve);
    if (t && !(*t >= 0.0 && std::isfinite(*t))) throw DimensionError("finite horizon must be finite and non-negative");

    const auto rc = resolvent_coefficients(a, b, spec, tol);
    const auto n = a.rows();
    const CMatrix bbt = (b * b.transpose()).cast<Complex>();
    const CMatrix at = a.transpose().cast<Complex>();
    const CMatrix eye = CMatrix::Identity(n, n);

    auto factorial = [](int k) {
        double f = 1.0;
        for (int q = 2; q <= k; ++q) f *= q;
        return f;
    };

    FiniteGramianDecomposition d;
    d.coordinates = Coordinates::original;
    d.eigenvalues = spec.values();
    d.horizon = t;
    for (int i = 0; i < spec.size(); ++i) {
        const Complex li = spec.entries[i].value;
        const int ni = spec.entries[i].multiplicity;
        const CMatrix w = (-li * eye - at).partialPivLu().inverse();
        std::vector<CMatrix> wpow{eye};
        for (int k = 1; k <= ni; ++k) wpow.push_back(wpow.back() * w);

        ComponentExpansion part;
        part.index = {i};
        part.constant = CMatrix::Zero(n, n);
        for (int k = 1; k <= ni; ++k) part.constant += rc.coefficients[i][k - 1] * bbt * wpow[k];

        for (int k = 1; k <= ni; ++k) {
            for (int l = 1; l <= k; ++l) {
                const CMatrix left = rc.coefficients[i][k - 1] * bbt * wpow[l] / factorial(k - l);
                for (int j = 0; j < spec.size(); ++j) {
                    for (int q = 1; q <= spec.entries[j].multiplicity; ++q) {
                        part.terms.push_back({li + spec.entries[j].value, (k - l) + (q - 1),
                                              -left * rc.coefficients[j][q - 1].transpose() / factorial(q - 1)});
                    }
                }
            }
        }
        d.parts.push_back(std::move(part));
    }
    return d;
}

// Companion-coordinate eigenparts from chains: P̂_i = M_i H_i T_i^{-1} M_i^T J.
inline SpectralComponentSet multiple_eig_subgramians_companion(const JordanChainSet& chains,
                                                               Flavor flavor = Flavor::symmetrized) {
    SpectralComponentSet set;
    set.flavor = flavor;
    set.coordinates = Coordinates::companion;
    const int n = chains.poly.degree();
    const CMatrix j = alternating_signs(n).cast<Complex>().asDiagonal();
    for (std::size_t i = 0; i < chains.blocks.size(); ++i) {
        const auto& blk = chains.blocks[i];
        set.eigenvalues.push_back(blk.lambda);
        const CMatrix tinv = blk.toeplitz.triangularView<Eigen::Lower>().solve(
            CMatrix::Identity(blk.multiplicity, blk.multiplicity));
        CMatrix v = blk.right * blk.hankel * tinv * blk.right.transpose() * j;
        if (flavor == Flavor::symmetrized) v = hermitian_part(v);
        set.components.push_back({{static_cast<int>(i)}, std::move(v)});
    }
    return set;
}

// Largest |λ_i + λ_j^* - (λ_k + λ_l^*)| collision among distinct index pairs;
// pair components are unique only when there are none.
inline std::vector<std::pair<ComponentIndex, ComponentIndex>> pair_rate_collisions(const Spectrum& spec,
                                                                                   double tol = 1e-10) {
    std::vector<std::pair<ComponentIndex, ComponentIndex>> out;
    const double scale = 1.0 + spec.spectral_radius();
    std::vector<std::pair<ComponentIndex, Complex>> rates;
    for (int i = 0; i < spec.size(); ++i) {
        for (int j = 0; j < spec.size(); ++j) {
            rates.push_back({{i, j}, spec.entries[i].value + std::conj(spec.entries[j].value)});
        }
    }
    for (std::size_t a = 0; a < rates.size(); ++a) {
        for (std::size_t b = a + 1; b < rates.size(); ++b) {
            const auto& [ia, ra] = rates[a];
            const auto& [ib, rb] = rates[b];
            // (i, j) and (j, i) share a rate by construction only when the pair is real; skip the mirror
            if (ia.i == ib.j && ia.j == ib.i) continue;
            if (std::abs(ra - rb) <= tol * scale) out.emplace_back(ia, ib);
        }
    }
    return out;
}

} // namespace gramspec
