#pragma once

#include "gramspec/companion.hpp"
#include "gramspec/core.hpp"
#include "gramspec/gramian.hpp"
#include "gramspec/inverse.hpp"
#include "gramspec/spectrum.hpp"

#include <cmath>
#include <complex>
#include <vector>

namespace gramspec {

inline bool all_stable(const std::vector<Complex>& eigenvalues) {
    for (Complex l : eigenvalues) {
        if (!(l.real() < 0.0)) return false;
    }
    return !eigenvalues.empty();
}

namespace detail {

inline double real_form(const Vector& x, const CMatrix& m) {
    const CVector xc = x.cast<Complex>();
    return (xc.transpose() * m * xc).value().real();
}

inline double imag_form(const Vector& x, const CMatrix& m) {
    const CVector xc = x.cast<Complex>();
    return std::abs((xc.transpose() * m * xc).value().imag());
}

inline void check_target(const Vector& x0, Eigen::Index n) {
    if (x0.size() != n) throw DimensionError("target state has wrong length");
}

// Quadratic forms from the rank-one factors, accumulated in quad precision.
struct FactorForms {
    double total = 0.0;
    std::vector<double> linear;
    Matrix quadratic;
};

inline FactorForms factor_forms(const Vector& x0, const InverseComponentSet::Factors& f) {
    const Vector xc = f.to_companion ? Vector(*f.to_companion * x0) : x0;
    const auto k = f.y.size();
    std::vector<ExtComplex> plain(k), signed_(k);
    for (std::size_t j = 0; j < k; ++j) {
        ExtComplex s(0.0), t(0.0);
        for (Eigen::Index a = 0; a < xc.size(); ++a) {
            s += f.y[j][a] * xc(a);
            t += f.y[j][a] * (alternating_sign_ext(static_cast<int>(a)) * xc(a));
        }
        plain[j] = s;
        signed_[j] = t;
    }
    FactorForms out;
    ExtComplex total(0.0);
    for (std::size_t j = 0; j < k; ++j) {
        const ExtComplex e = f.eigen_weight[j] * signed_[j] * plain[j];
        total += e;
        out.linear.push_back(static_cast<double>(e.real()));
    }
    out.total = static_cast<double>(total.real());
    if (!f.pair_weight.empty()) {
        out.quadratic = Matrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                const ExtComplex e = f.pair_weight[i][j] * conj(plain[i]) * plain[j];
                out.quadratic(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = static_cast<double>(e.real());
            }
        }
    }
    return out;
}

} // namespace detail

struct MinEnergy {
    double value = 0.0;
    bool interpretation_valid = false; // quadratic form is a control energy only for stable spectra
};

// x_0^T (Σ P̃_j^{-C}) x_0
inline MinEnergy min_energy(const Vector& x0, const InverseComponentSet& inv) {
    const CMatrix s = inv.sum();
    detail::check_target(x0, s.rows());
    if (inv.factors) return {detail::factor_forms(x0, *inv.factors).total, all_stable(inv.eigenvalues)};
    return {detail::real_form(x0, s), all_stable(inv.eigenvalues)};
}

struct EnergyPartition {
    double total = 0.0;
    std::vector<double> linear; // E_i
    Matrix quadratic;           // Ê_ij
    Vector target;
    bool interpretation_valid = false;
    double max_imaginary = 0.0;

    [[nodiscard]] double linear_sum() const {
        double s = 0.0;
        for (double e : linear) s += e;
        return s;
    }
    [[nodiscard]] double quadratic_sum() const { return quadratic.size() ? quadratic.sum() : 0.0; }
};

// E_i = x_0^T P̃_i^{-C} x_0,  Ê_ij = x_0^T P_ij^{-C} x_0
inline EnergyPartition energy_partition(const Vector& x0, const InverseComponentSet& inv) {
    EnergyPartition e;
    e.target = x0;
    e.interpretation_valid = all_stable(inv.eigenvalues);
    const CMatrix s = inv.sum();
    detail::check_target(x0, s.rows());
    e.total = detail::real_form(x0, s);
    for (const auto& c : inv.symmetrized.components) {
        e.linear.push_back(detail::real_form(x0, c.value));
        e.max_imaginary = std::max(e.max_imaginary, detail::imag_form(x0, c.value));
    }
    const auto k = static_cast<Eigen::Index>(inv.eigenvalues.size());
    if (inv.has_pairs()) {
        e.quadratic = Matrix::Zero(k, k);
        for (const auto& c : inv.pair_symmetrized.components) {
            e.quadratic(c.index.i, c.index.j) = detail::real_form(x0, c.value);
            e.max_imaginary = std::max(e.max_imaginary, detail::imag_form(x0, c.value));
        }
    }
    if (inv.factors) {
        auto f = detail::factor_forms(x0, *inv.factors);
        e.total = f.total;
        e.linear = std::move(f.linear);
        if (inv.has_pairs()) e.quadratic = std::move(f.quadratic);
    }
    return e;
}

// û(t) = e_n^T e^{-A_C^T t} P_C^{-1} x_0 for t <= 0, split as
// û_i(t) = e_n^T R_i^* e^{-λ_i^* t} P_C^{-1} x_0.
class OptimalControlSignal {
public:
    OptimalControlSignal(const CompanionRealization& cr, const Spectrum& spec, const Vector& x0,
                         const Tolerances& tol = {}) {
        if (!spec.is_stable()) {
            throw StabilityError("optimal control requires a stable spectrum (all Re(lambda) < 0)");
        }
        detail::check_target(x0, cr.n());
        const auto inv = inverse_eigenparts(cr, spec, tol);
        weights_ = inv.sum().real() * x0;
        eigenvalues_ = spec.values();
        const int n = cr.n();
        for (Complex l : eigenvalues_) {
            // e_n^T R_i^* as a row
            const CMatrix r = residue_companion(l, cr.poly);
            rows_.push_back(r.adjoint().row(n - 1));
        }
        double slowest = std::numeric_limits<double>::infinity();
        for (Complex l : eigenvalues_) slowest = std::min(slowest, std::abs(l.real()));
        horizon_ = 40.0 / slowest;
    }

    [[nodiscard]] std::vector<Complex> modes(double t) const {
        if (t > 0.0) throw DimensionError("optimal control is defined for t <= 0");
        std::vector<Complex> out;
        const CVector w = weights_.cast<Complex>();
        for (std::size_t i = 0; i < eigenvalues_.size(); ++i) {
            out.push_back(std::exp(-std::conj(eigenvalues_[i]) * t) * (rows_[i].transpose() * w).value());
        }
        return out;
    }

    [[nodiscard]] double value(double t) const {
        Complex s = 0.0;
        for (Complex m : modes(t)) s += m;
        return s.real();
    }

    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] const std::vector<Complex>& eigenvalues() const noexcept { return eigenvalues_; }
    [[nodiscard]] const Vector& costate() const noexcept { return weights_; }

private:
    Vector weights_;
    std::vector<Complex> eigenvalues_;
    std::vector<CVector> rows_;
    double horizon_ = 0.0;
};

inline OptimalControlSignal optimal_control(const Vector& x0, const CompanionRealization& cr, const Spectrum& spec,
                                            const Tolerances& tol = {}) {
    return OptimalControlSignal(cr, spec, x0, tol);
}

// Trapezoid grid on (-T, 0): at least 4e4 points, refined so that the step
// resolves the fastest mode (h·ρ <= 0.005).
inline long quadrature_points(double horizon, double spectral_radius) {
    const double needed = std::ceil(horizon * std::max(spectral_radius, 1e-12) / 0.005) + 1.0;
    return static_cast<long>(std::max(40000.0, std::min(needed, 4.0e6)));
}

// ∫_{-T}^0 û(t)² dt by the trapezoid rule.
inline double control_energy_quadrature(const OptimalControlSignal& u, long points = 0) {
    double rho = 0.0;
    for (Complex l : u.eigenvalues()) rho = std::max(rho, std::abs(l));
    const double t = u.horizon();
    if (points < 2) points = quadrature_points(t, rho);
    const double h = t / static_cast<double>(points - 1);
    double acc = 0.0;
    for (long k = 0; k < points; ++k) {
        const double v = u.value(std::min(0.0, -t + h * static_cast<double>(k)));
        acc += (k == 0 || k == points - 1 ? 0.5 : 1.0) * v * v;
    }
    return acc * h;
}

struct OverlapReport {
    Matrix closed_form; // x_0^T P^{-T} P_ij P^{-1} x_0
    Matrix quadrature;  // (1/2)∫(û_i^* û_j + û_j^* û_i) dt over (-T, 0)
    double horizon = 0.0;
    long points = 0;
    double max_difference = 0.0; // relative to max |closed form|
};

inline OverlapReport modal_overlap_integrals(const Vector& x0, const SpectralComponentSet& gram,
                                             const CompanionRealization& cr, const Spectrum& spec,
                                             const Tolerances& tol = {}) {
    if (!gram.pair_indexed()) throw DimensionError("modal_overlap_integrals needs pair-indexed components");
    const OptimalControlSignal u(cr, spec, x0, tol);
    const auto k = static_cast<Eigen::Index>(spec.size());
    const CVector w = u.costate().cast<Complex>();

    OverlapReport rep;
    rep.closed_form = Matrix::Zero(k, k);
    for (const auto& c : gram.components) {
        rep.closed_form(c.index.i, c.index.j) = (w.transpose() * hermitian_part(c.value) * w).value().real();
    }

    rep.horizon = u.horizon();
    rep.points = quadrature_points(rep.horizon, spec.spectral_radius());
    const double h = rep.horizon / static_cast<double>(rep.points - 1);
    CMatrix acc = CMatrix::Zero(k, k);
    for (long s = 0; s < rep.points; ++s) {
        const auto m = u.modes(std::min(0.0, -rep.horizon + h * static_cast<double>(s)));
        const double wt = (s == 0 || s == rep.points - 1) ? 0.5 : 1.0;
        for (Eigen::Index i = 0; i < k; ++i) {
            for (Eigen::Index j = 0; j < k; ++j) acc(i, j) += wt * std::conj(m[i]) * m[j];
        }
    }
    acc *= h;
    rep.quadrature = (0.5 * (acc + acc.transpose())).real();
    const double scale = std::max(rep.closed_form.cwiseAbs().maxCoeff(), 1e-300);
    rep.max_difference = (rep.closed_form - rep.quadrature).cwiseAbs().maxCoeff() / scale;
    return rep;
}

} // namespace gramspec
