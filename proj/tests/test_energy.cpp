// energy_analysis

#include "fixtures.hpp"
#include "gramspec/gramspec.hpp"
#include "gramspec/oracle.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace gramspec;

namespace {

struct Stable3 {
    Spectrum spec{{{Complex(-3.0), 1}, {Complex(-2.0), 1}, {Complex(-1.0), 1}}};
    CompanionRealization cr = build_companion(polynomial_from_spectrum(spec));
    Spectrum s = spectrum_of(cr.poly);
};

} // namespace

TEST(MinEnergy, ScalarSystem) {
    const Polynomial p({1.0, 1.0});
    const auto cr = build_companion(p);
    const auto spec = spectrum_of(p);
    const Vector x0 = Vector::Ones(1);
    const auto e = min_energy(x0, inverse_eigenparts(cr, spec));
    EXPECT_NEAR(e.value, 2.0, 1e-14);
    EXPECT_TRUE(e.interpretation_valid);
    const auto u = optimal_control(x0, cr, spec);
    for (double t : {0.0, -0.5, -3.0}) EXPECT_NEAR(u.value(t), 2.0 * std::exp(t), 1e-13);
    EXPECT_THROW(u.value(0.5), DimensionError);
    EXPECT_NEAR(control_energy_quadrature(u), 2.0, 1e-6);
}

TEST(EnergyPartition, UnstableExampleHasNoEnergyMeaning) {
    const auto p = fx::poly3();
    const auto inv = inverse_pair_parts(build_companion(p), spectrum_of(p));
    const Vector x0 = Vector::Unit(3, 2);
    const auto e = energy_partition(x0, inv);
    EXPECT_NEAR(e.total, -12.0, 1e-10);
    ASSERT_EQ(e.linear.size(), 3u);
    EXPECT_NEAR(e.linear[0], -12.0, 1e-10);
    EXPECT_NEAR(e.linear[1], 60.0, 1e-10);
    EXPECT_NEAR(e.linear[2], -60.0, 1e-10);
    EXPECT_FALSE(e.interpretation_valid);
    EXPECT_FALSE(min_energy(x0, inv).interpretation_valid);
    EXPECT_NEAR(e.quadratic_sum(), -12.0, 1e-9);
}

TEST(EnergyPartition, StableSystemMatchesQuadrature) {
    Stable3 f;
    const Vector x0 = Vector::Unit(3, 0);
    const auto inv = inverse_pair_parts(f.cr, f.s);
    const auto e = energy_partition(x0, inv);
    EXPECT_NEAR(e.total, 132.0, 1e-9);
    EXPECT_TRUE(e.interpretation_valid);
    EXPECT_NEAR(e.linear_sum(), e.total, 1e-9);
    EXPECT_NEAR(e.quadratic_sum(), e.total, 1e-9);
    const double quad = control_energy_quadrature(optimal_control(x0, f.cr, f.s));
    EXPECT_LT(std::abs(quad - 132.0) / 132.0, 1e-4);
}

TEST(EnergyPartition, DimensionMismatchRaises) {
    Stable3 f;
    EXPECT_THROW(min_energy(Vector::Ones(2), inverse_eigenparts(f.cr, f.s)), DimensionError);
}

TEST(OptimalControl, UnstableSpectrumRaises) {
    const auto p = fx::poly3();
    EXPECT_THROW(optimal_control(Vector::Ones(3), build_companion(p), spectrum_of(p)), StabilityError);
}

TEST(OptimalControl, ModesSumToSignalAndReachTarget) {
    // x(0) = ∫_{-T}^0 e^{-A s} b u(s) ds must equal x0
    Stable3 f;
    const Vector x0(Vector::Unit(3, 1));
    const auto u = optimal_control(x0, f.cr, f.s);
    const long points = 100001;
    const double h = u.horizon() / static_cast<double>(points - 1);
    Vector acc = Vector::Zero(3);
    for (long k = 0; k < points; ++k) {
        const double t = std::min(0.0, -u.horizon() + h * static_cast<double>(k));
        const double w = (k == 0 || k == points - 1) ? 0.5 : 1.0;
        acc += w * oracle::matrix_exp_reference(f.cr.A, -t) * f.cr.b * u.value(t);
    }
    acc *= h;
    EXPECT_LT((acc - x0).norm(), 1e-5);
    Complex sum = 0.0;
    for (Complex m : u.modes(-0.3)) sum += m;
    EXPECT_NEAR(sum.real(), u.value(-0.3), 1e-12);
    EXPECT_NEAR(sum.imag(), 0.0, 1e-10);
}

TEST(ModalOverlap, ClosedFormMatchesQuadratureAndSumsToEnergy) {
    Stable3 f;
    const Vector x0 = Vector::Unit(3, 0);
    const auto rep = modal_overlap_integrals(x0, infinite_pair_subgramians(f.cr, f.s), f.cr, f.s);
    EXPECT_LT(rep.max_difference, 1e-4);
    EXPECT_NEAR(rep.closed_form.sum(), 132.0, 1e-8);
    EXPECT_THROW(modal_overlap_integrals(x0, infinite_subgramians(f.cr, f.s), f.cr, f.s), DimensionError);
}

TEST(EnergyProperty, ClosureOnRandomStableSpectra) {
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<int> dim(1, 7);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = dim(rng);
        const auto spec = fx::simple_spectrum(fx::random_spectrum(rng, n));
        const auto cr = build_companion(polynomial_from_spectrum(spec));
        const auto s = spectrum_of(cr.poly);
        const Vector x0 = fx::random_matrix(rng, n, 1);
        const auto inv = inverse_pair_parts(cr, s);
        const auto e = energy_partition(x0, inv);
        const Matrix po = oracle::solve_lyapunov_dense(cr.A, cr.b * cr.b.transpose()).value;
        const double dense = x0.dot(po.ldlt().solve(x0));
        EXPECT_GT(e.total, 0.0);
        EXPECT_LT(std::abs(e.total - dense) / dense, 1e-7);
        // each part is exact before rounding; the sums then cancel
        double linear_size = 0.0;
        for (double v : e.linear) linear_size += std::abs(v);
        EXPECT_LT(std::abs(e.linear_sum() - e.total), 1e-14 * linear_size + 1e-15 * e.total);
        EXPECT_LT(std::abs(e.quadratic_sum() - e.total), 1e-14 * e.quadratic.cwiseAbs().sum() + 1e-15 * e.total);
        EXPECT_LT(e.max_imaginary, 1e-6 * std::max(1.0, e.total));
        for (int i = 0; i < n; ++i) EXPECT_GE(e.quadratic(i, i), -1e-10 * e.total);
    }
}

TEST(EnergyProperty, OriginalCoordinatesMatchDenseInverse) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        const auto values = fx::random_spectrum(rng, 4, -3.0, -0.3, 2.0, 0.3);
        const LtiSystem sys(fx::matrix_with_spectrum(rng, values), fx::random_matrix(rng, 4, 1));
        const Vector x0 = fx::random_matrix(rng, 4, 1);
        const auto inv = riccati_general(sys);
        const Matrix po = oracle::solve_lyapunov_dense(sys.A, sys.B * sys.B.transpose()).value;
        const double dense = x0.dot(po.ldlt().solve(x0));
        const auto e = energy_partition(x0, inv);
        EXPECT_LT(std::abs(e.total - dense) / dense, 1e-6);
        EXPECT_LT(std::abs(e.linear_sum() - e.total) / e.total, 1e-12);
    }
}
