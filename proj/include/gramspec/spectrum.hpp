#pragma once

#include "gramspec/core.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <vector>

namespace gramspec {

namespace detail {

// Compensated accumulator for long sums of mixed-sign products.
class KahanSum {
public:
    void add(double x) noexcept {
        const double y = x - carry_;
        const double t = sum_ + y;
        carry_ = (t - sum_) - y;
        sum_ = t;
    }
    [[nodiscard]] double value() const noexcept { return sum_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

// tr(A * M) without forming the product.
inline double trace_of_product(const Matrix& a, const Matrix& m) {
    KahanSum s;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) s.add(a(i, j) * m(j, i));
    }
    return s.value();
}

// Σ |a_k| |s|^k, the magnitude scale of Horner's rounding error at s.
inline double evaluation_scale(const Polynomial& p, double modulus) {
    double acc = 0.0;
    for (int k = p.degree(); k >= 0; --k) acc = acc * modulus + std::abs(p[k]);
    return acc;
}

inline double residual_bound(const Polynomial& p, Complex z, double tol) {
    return tol * p.max_abs_coeff() * std::pow(std::max(1.0, std::abs(z)), p.degree());
}

inline bool lexicographic_less(Complex a, Complex b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
}

} // namespace detail

// ============================================================================
// Characteristic polynomial
// ============================================================================

// det(sI - A) by Faddeev-LeVerrier:
//   M_1 = I,  c_{n-1} = -tr(A),  M_k = A M_{k-1} + c_{n-k+1} I,  c_{n-k} = -tr(A M_k) / k.
inline Polynomial char_poly(const Matrix& a) {
    if (a.rows() != a.cols()) throw DimensionError("char_poly: matrix must be square");
    const auto n = static_cast<int>(a.rows());
    if (n < 1) throw DimensionError("char_poly: matrix must be non-empty");
    if (!a.allFinite()) throw DimensionError("char_poly: matrix has non-finite entries");

    std::vector<double> c(n + 1, 0.0);
    c[n] = 1.0;
    Matrix m = Matrix::Zero(n, n);
    const Matrix eye = Matrix::Identity(n, n);
    for (int k = 1; k <= n; ++k) {
        m = a * m + c[n - k + 1] * eye;
        c[n - k] = -detail::trace_of_product(a, m) / k;
    }
    return Polynomial(std::move(c));
}

// ============================================================================
// Evaluation
// ============================================================================

struct PolyValue {
    Complex value;
    Complex derivative;
};

inline PolyValue eval_with_derivative(const Polynomial& p, Complex s) {
    const int n = p.degree();
    Complex v = p[n];
    Complex d = 0.0;
    for (int k = n - 1; k >= 0; --k) {
        d = d * s + v;
        v = v * s + p[k];
    }
    return {v, d};
}

inline Complex eval(const Polynomial& p, Complex s) { return eval_with_derivative(p, s).value; }

// ============================================================================
// Root finding
// ============================================================================

namespace detail {

// Pairs every non-real root with its nearest conjugate partner, closest pairs
// first, and makes each pair exactly conjugate. Roots with negligible imaginary
// part and roots left without a partner become real.
inline void enforce_conjugate_closure(std::vector<Complex>& roots) {
    constexpr double real_threshold = 1e-12;
    std::vector<std::size_t> upper;
    std::vector<std::size_t> lower;
    for (std::size_t k = 0; k < roots.size(); ++k) {
        auto& z = roots[k];
        if (std::abs(z.imag()) <= real_threshold * (1.0 + std::abs(z))) {
            z = Complex(z.real(), 0.0);
        } else if (z.imag() > 0) {
            upper.push_back(k);
        } else {
            lower.push_back(k);
        }
    }
    // closest pairs first; a pair further apart than its distance to the real
    // axis is not a conjugate pair
    struct Candidate {
        double dist;
        std::size_t u;
        std::size_t l;
    };
    std::vector<Candidate> candidates;
    for (std::size_t u = 0; u < upper.size(); ++u) {
        for (std::size_t l = 0; l < lower.size(); ++l) {
            const Complex zu = roots[upper[u]];
            const Complex zl = roots[lower[l]];
            const double d = std::abs(zu - std::conj(zl));
            if (d <= std::abs(zu.imag()) + std::abs(zl.imag())) candidates.push_back({d, u, l});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) { return a.dist < b.dist; });
    std::vector<bool> used_upper(upper.size(), false);
    std::vector<bool> used_lower(lower.size(), false);
    for (const auto& c : candidates) {
        if (used_upper[c.u] || used_lower[c.l]) continue;
        used_upper[c.u] = used_lower[c.l] = true;
        const Complex mid = 0.5 * (roots[upper[c.u]] + std::conj(roots[lower[c.l]]));
        roots[upper[c.u]] = mid;
        roots[lower[c.l]] = std::conj(mid);
    }
    std::vector<std::size_t> unmatched;
    for (std::size_t u = 0; u < upper.size(); ++u) {
        if (!used_upper[u]) unmatched.push_back(upper[u]);
    }
    for (std::size_t l = 0; l < lower.size(); ++l) {
        if (!used_lower[l]) unmatched.push_back(lower[l]);
    }
    for (std::size_t k : unmatched) roots[k] = Complex(roots[k].real(), 0.0);
}

// true once |N(z)| is at the level of Horner's rounding noise or the update is negligible.
inline bool settled(const Polynomial& p, Complex z, Complex value, Complex step) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const double noise = 4.0 * eps * (p.degree() + 1) * evaluation_scale(p, std::abs(z));
    return std::abs(value) <= noise || std::abs(step) <= 2.0 * eps * std::abs(z);
}

inline double worst_residual_ratio(const Polynomial& p, const std::vector<Complex>& z, double tol) {
    double worst = 0.0;
    for (Complex r : z) {
        worst = std::max(worst, std::abs(eval(p, r)) / residual_bound(p, r, 1.0));
    }
    return worst / tol;
}

// Aberth-Ehrlich sweeps in Gauss-Seidel order. Returns true once every root has settled.
inline bool aberth(const Polynomial& p, std::vector<Complex>& z, int max_sweeps) {
    const std::size_t n = z.size();
    std::vector<bool> done(n, false);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool all = true;
        for (std::size_t k = 0; k < n; ++k) {
            if (done[k]) continue;
            const auto [v, d] = eval_with_derivative(p, z[k]);
            if (v == Complex(0.0)) {
                done[k] = true;
                continue;
            }
            Complex repulsion = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != k) repulsion += 1.0 / (z[k] - z[j]);
            }
            const Complex newton = v / d;
            Complex step = newton / (1.0 - newton * repulsion);
            if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) step = newton;
            if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) step = 0.0;
            z[k] -= step;
            if (settled(p, z[k], v, step)) {
                done[k] = true;
            } else {
                all = false;
            }
        }
        if (all) return true;
    }
    return false;
}

// Weierstrass (Durand-Kerner) iteration, used when Aberth stalls.
inline bool durand_kerner(const Polynomial& p, std::vector<Complex>& z, int max_sweeps) {
    const std::size_t n = z.size();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool all = true;
        for (std::size_t k = 0; k < n; ++k) {
            const Complex v = eval(p, z[k]);
            Complex denom = 1.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != k) denom *= (z[k] - z[j]);
            }
            Complex step = (denom == Complex(0.0)) ? Complex(0.0) : v / denom;
            z[k] -= step;
            if (!settled(p, z[k], v, step)) all = false;
        }
        if (all) return true;
    }
    return false;
}

} // namespace detail

// All n roots of a monic polynomial, conjugate-closed and sorted by (Re, Im).
// Throws ConvergenceError when the residual bound
//   |N(λ_k)| <= tol * max|a_i| * max(1, |λ_k|)^n
// is not met after the sweep cap.
inline std::vector<Complex> find_roots(const Polynomial& p, double tol = 1e-12, int max_sweeps = 200) {
    const int n = p.degree();
    if (n == 1) return {Complex(-p[0], 0.0)};

    double radius = 0.0;
    for (int k = 0; k < n; ++k) radius = std::max(radius, std::abs(p[k]));
    radius += 1.0;

    std::vector<Complex> z(n);
    for (int k = 0; k < n; ++k) {
        // offset angle keeps the initial circle off the real axis
        const double angle = 2.0 * std::numbers::pi * k / n + 0.4;
        z[k] = std::polar(radius, angle);
    }

    bool converged = detail::aberth(p, z, max_sweeps);
    if (!converged && detail::worst_residual_ratio(p, z, tol) > 1.0) {
        converged = detail::durand_kerner(p, z, max_sweeps);
    }
    detail::enforce_conjugate_closure(z);

    const double worst = detail::worst_residual_ratio(p, z, tol);
    if (worst > 1.0) {
        std::ostringstream os;
        os << "find_roots: no convergence after " << max_sweeps << " sweeps; worst residual is " << worst
           << " times the accepted bound";
        throw ConvergenceError(os.str(), worst * tol);
    }
    std::sort(z.begin(), z.end(), detail::lexicographic_less);
    return z;
}

// ============================================================================
// Clustering
// ============================================================================

// Merges nearby roots into eigenvalues with multiplicity. A group of k roots
// is accepted as one k-fold eigenvalue when its diameter is at most
// tol^(1/k) * (1 + spectral radius): a k-fold root computed in floating point
// scatters by O(eps^(1/k)). Representatives are cluster centroids.
inline Spectrum cluster(const std::vector<Complex>& roots, double tol = 1e-8) {
    double rho = 0.0;
    for (Complex r : roots) rho = std::max(rho, std::abs(r));
    const double scale = 1.0 + rho;

    std::vector<std::vector<Complex>> groups;
    groups.reserve(roots.size());
    for (Complex r : roots) groups.push_back({r});

    auto diameter = [](const std::vector<Complex>& a, const std::vector<Complex>& b) {
        double d = 0.0;
        auto update = [&d](const std::vector<Complex>& x, const std::vector<Complex>& y) {
            for (Complex u : x) {
                for (Complex v : y) d = std::max(d, std::abs(u - v));
            }
        };
        update(a, a);
        update(a, b);
        update(b, b);
        return d;
    };

    for (;;) {
        double best_ratio = std::numeric_limits<double>::infinity();
        std::size_t bi = 0;
        std::size_t bj = 0;
        for (std::size_t i = 0; i < groups.size(); ++i) {
            for (std::size_t j = i + 1; j < groups.size(); ++j) {
                const auto k = static_cast<double>(groups[i].size() + groups[j].size());
                const double limit = std::pow(tol, 1.0 / k) * scale;
                const double ratio = diameter(groups[i], groups[j]) / limit;
                if (ratio <= 1.0 && ratio < best_ratio) {
                    best_ratio = ratio;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (!std::isfinite(best_ratio)) break;
        groups[bi].insert(groups[bi].end(), groups[bj].begin(), groups[bj].end());
        groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bj));
    }

    Spectrum spec;
    for (const auto& g : groups) {
        Complex c = std::accumulate(g.begin(), g.end(), Complex(0.0)) / static_cast<double>(g.size());
        if (std::abs(c.imag()) <= tol * scale) c = Complex(c.real(), 0.0);
        spec.entries.push_back({c, static_cast<int>(g.size())});
    }
    std::sort(spec.entries.begin(), spec.entries.end(),
              [](const SpectrumEntry& a, const SpectrumEntry& b) { return detail::lexicographic_less(a.value, b.value); });
    return spec;
}

// ============================================================================
// Solvability
// ============================================================================

// ok iff |λ_i + λ_j| > tol * (1 + ρ) for every i <= j.
inline SolvabilityReport check_solvability(const Spectrum& spec, double tol = 1e-10) {
    SolvabilityReport report;
    const double limit = tol * (1.0 + spec.spectral_radius());
    report.min_pair_magnitude = std::numeric_limits<double>::infinity();
    for (int i = 0; i < spec.size(); ++i) {
        for (int j = i; j < spec.size(); ++j) {
            const double m = std::abs(spec.entries[i].value + spec.entries[j].value);
            report.min_pair_magnitude = std::min(report.min_pair_magnitude, m);
            if (m <= limit) report.violating_pairs.emplace_back(i, j);
        }
    }
    if (spec.size() == 0) report.min_pair_magnitude = 0.0;
    report.ok = report.violating_pairs.empty();
    return report;
}

inline void require_solvable(const Spectrum& spec, double tol) {
    const auto report = check_solvability(spec, tol);
    if (!report.ok) {
        std::ostringstream os;
        os << "spectrum violates lambda_i + lambda_j != 0 for pair(s)";
        for (auto [i, j] : report.violating_pairs) os << " (" << i + 1 << "," << j + 1 << ")";
        throw SolvabilityError(os.str(), report.violating_pairs);
    }
}

inline void require_simple(const Spectrum& spec) {
    for (int i = 0; i < spec.size(); ++i) {
        if (spec.entries[i].multiplicity != 1) {
            throw MultipleEigenvalueError("eigenvalue " + format_complex(spec.entries[i].value) + " has multiplicity " +
                                          std::to_string(spec.entries[i].multiplicity) +
                                          "; use the multiple-eigenvalue path");
        }
    }
}

// ============================================================================
// Helpers for building polynomials from known spectra
// ============================================================================

// Ascending coefficients of Π (s - r_k).
inline std::vector<Complex> expand_roots(const std::vector<Complex>& roots) {
    std::vector<Complex> c{1.0};
    for (Complex r : roots) {
        std::vector<Complex> next(c.size() + 1, 0.0);
        for (std::size_t k = 0; k < c.size(); ++k) {
            next[k + 1] += c[k];
            next[k] -= r * c[k];
        }
        c = std::move(next);
    }
    return c;
}

// Real monic polynomial with the given spectrum. The spectrum must be closed
// under conjugation.
inline Polynomial polynomial_from_spectrum(const Spectrum& spec) {
    std::vector<Complex> roots;
    for (const auto& e : spec.entries) {
        if (e.multiplicity < 1) throw DimensionError("eigenvalue multiplicity must be positive");
        for (int k = 0; k < e.multiplicity; ++k) roots.push_back(e.value);
    }
    if (roots.empty()) throw DimensionError("spectrum is empty");
    const auto c = expand_roots(roots);
    std::vector<double> real(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
        if (std::abs(c[k].imag()) > 1e-9 * (1.0 + std::abs(c[k]))) {
            throw DimensionError("spectrum is not closed under complex conjugation");
        }
        real[k] = c[k].real();
    }
    real.back() = 1.0;
    return Polynomial(std::move(real));
}

namespace detail {

// A k-fold root of N is a simple root of N^(k-1); Newton there refines the
// cluster centroid. Steps larger than the cluster scale are rejected.
inline Complex refine_multiple_root(const Polynomial& p, Complex z, int k, double scale) {
    std::vector<double> c(p.coeffs());
    for (int d = 1; d < k; ++d) {
        for (std::size_t j = 1; j < c.size(); ++j) c[j - 1] = static_cast<double>(j) * c[j];
        c.pop_back();
    }
    auto eval_d = [&c](Complex s) {
        Complex v = 0.0, dv = 0.0;
        for (std::size_t j = c.size(); j-- > 0;) {
            dv = dv * s + v;
            v = v * s + c[j];
        }
        return std::pair{v, dv};
    };
    const Complex start = z;
    for (int it = 0; it < 8; ++it) {
        const auto [v, dv] = eval_d(z);
        if (dv == Complex(0.0)) break;
        const Complex next = z - v / dv;
        if (!std::isfinite(next.real()) || !std::isfinite(next.imag()) || std::abs(next - start) > scale) break;
        if (std::abs(eval_d(next).first) >= std::abs(v)) break;
        z = next;
    }
    if (start.imag() == 0.0) z = Complex(z.real(), 0.0);
    return z;
}

} // namespace detail

// Full pipeline: roots of p, clustered; multiple eigenvalues are refined.
inline Spectrum spectrum_of(const Polynomial& p, const Tolerances& tol = {}) {
    auto spec = cluster(find_roots(p, tol.root, tol.max_sweeps), tol.cluster);
    const double rho = spec.spectral_radius();
    for (auto& e : spec.entries) {
        if (e.multiplicity == 1) continue;
        const double scale = std::pow(tol.cluster, 1.0 / e.multiplicity) * (1.0 + rho);
        e.value = detail::refine_multiple_root(p, e.value, e.multiplicity, scale);
    }
    return spec;
}

} // namespace gramspec
