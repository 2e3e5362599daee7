#pragma once

// Exact fixtures for the 3x3 system with eigenvalues {1, 2, 3} and the 5x5
// system with eigenvalues 1 (x2) and 2 (x3), plus seeded random generators.

#include "gramspec/gramspec.hpp"

#include <initializer_list>
#include <random>
#include <vector>

namespace fx {

using gramspec::Complex;
using gramspec::CMatrix;
using gramspec::Matrix;
using gramspec::Polynomial;
using gramspec::Spectrum;

inline Matrix mat(double scale, std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index r = 0;
    for (const auto& row : rows) {
        Eigen::Index c = 0;
        for (double v : row) m(r, c++) = scale * v;
        ++r;
    }
    return m;
}

inline CMatrix cm(const Matrix& m) { return m.cast<Complex>(); }

inline double rel(const CMatrix& a, const CMatrix& b) { return gramspec::relative_difference(a, b); }
inline double rel(const Matrix& a, const Matrix& b) { return gramspec::relative_difference(a, b); }

// ---------------------------------------------------------------- 3x3 system

inline Polynomial poly3() { return Polynomial({-6.0, 11.0, -6.0, 1.0}); }

inline Matrix sub1() { return mat(-1.0 / 48, {{1, 0, 1}, {0, -1, 0}, {1, 0, 1}}); }
inline Matrix sub2() { return mat(1.0 / 60, {{1, 0, 4}, {0, -4, 0}, {4, 0, 16}}); }
inline Matrix sub3() { return mat(-1.0 / 240, {{1, 0, 9}, {0, -9, 0}, {9, 0, 81}}); }
inline Matrix gramian3() { return mat(-1.0 / 120, {{1, 0, -1}, {0, 1, 0}, {-1, 0, 11}}); }

inline Matrix pair11() { return mat(-1.0 / 8, {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}); }
inline Matrix pair12() { return mat(1.0 / 12, {{2, 3, 5}, {3, 4, 6}, {5, 6, 8}}); }
inline Matrix pair22() { return mat(-1.0 / 4, {{1, 2, 4}, {2, 4, 8}, {4, 8, 16}}); }
inline Matrix pair23() { return mat(1.0 / 20, {{2, 5, 13}, {5, 12, 30}, {13, 30, 72}}); }
inline Matrix pair33() { return mat(-1.0 / 24, {{1, 3, 9}, {3, 9, 27}, {9, 27, 81}}); }
// the published (2,1) entry reads 5; the symmetric matrix with row sums
// matching the eigen parts has 2 there
inline Matrix pair13() { return mat(-1.0 / 16, {{1, 2, 5}, {2, 3, 6}, {5, 6, 9}}); }

inline Matrix pair(int i, int j) {
    if (i > j) std::swap(i, j);
    if (i == 0 && j == 0) return pair11();
    if (i == 0 && j == 1) return pair12();
    if (i == 0 && j == 2) return pair13();
    if (i == 1 && j == 1) return pair22();
    if (i == 1 && j == 2) return pair23();
    return pair33();
}

inline Matrix residue1() { return mat(0.5, {{6, -5, 1}, {6, -5, 1}, {6, -5, 1}}); }
inline Matrix residue2() { return mat(1.0, {{-3, 4, -1}, {-6, 8, -2}, {-12, 16, -4}}); }
inline Matrix residue3() { return mat(0.5, {{2, -3, 1}, {6, -9, 3}, {18, -27, 9}}); }

inline Matrix inverse3() { return mat(-12.0, {{11, 0, 1}, {0, 10, 0}, {1, 0, 1}}); }
inline Matrix inv_sub1() { return mat(12.0, {{-36, 0, -6}, {0, 25, 0}, {-6, 0, -1}}); }
inline Matrix inv_sub2() { return mat(60.0, {{9, 0, 3}, {0, -16, 0}, {3, 0, 1}}); }
inline Matrix inv_sub3() { return mat(60.0, {{-4, 0, -2}, {0, 9, 0}, {-2, 0, -1}}); }

inline Matrix inv_pair(int i, int j) {
    if (i > j) std::swap(i, j);
    if (i == 0 && j == 0) return mat(-72.0, {{36, -30, 6}, {-30, 25, -5}, {6, -5, 1}});
    if (i == 0 && j == 1) return mat(120.0, {{36, -39, 9}, {-39, 40, -9}, {9, -9, 2}});
    if (i == 0 && j == 2) return mat(-180.0, {{12, -14, 4}, {-14, 15, -4}, {4, -4, 1}});
    if (i == 1 && j == 1) return mat(-900.0, {{9, -12, 3}, {-12, 16, -4}, {3, -4, 1}});
    if (i == 1 && j == 2) return mat(360.0, {{12, -17, 5}, {-17, 24, -7}, {5, -7, 2}});
    return mat(-600.0, {{4, -6, 2}, {-6, 9, -3}, {2, -3, 1}});
}

inline Matrix raw1() { return mat(1.0 / 48, {{-1, 1, -1}, {-1, 1, -1}, {-1, 1, -1}}); }
inline Matrix raw2() { return mat(1.0 / 60, {{1, -2, 4}, {2, -4, 8}, {4, -8, 16}}); }
inline Matrix raw3() { return mat(1.0 / 240, {{-1, 3, -9}, {-3, 9, -27}, {-9, 27, -81}}); }
inline Matrix raw_inv1() { return mat(12.0, {{-36, 30, -6}, {-30, 25, -5}, {-6, 5, -1}}); }
inline Matrix raw_inv2() { return mat(60.0, {{9, -12, 3}, {12, -16, 4}, {3, -4, 1}}); }
inline Matrix raw_inv3() { return mat(60.0, {{-4, 6, -2}, {-6, 9, -3}, {-2, 3, -1}}); }

// ---------------------------------------------------------------- 5x5 system

inline Spectrum spectrum5() { return Spectrum{{{1.0, 2}, {2.0, 3}}}; }
inline Polynomial poly5() { return Polynomial({-8.0, 28.0, -38.0, 25.0, -8.0, 1.0}); }

inline Matrix chains5() {
    return mat(1.0, {{1, 1, 1, 0.5, 0.25}, {1, 2, 2, 2, 1}, {1, 3, 4, 6, 4}, {1, 4, 8, 16, 14}, {1, 5, 16, 40, 44}});
}
inline Matrix chains5_inverse() {
    return mat(1.0, {{-8, 28, -30, 13, -2},
                     {-8, 20, -18, 7, -1},
                     {22, -62.5, 63, -26.5, 4},
                     {-12, 35, -36.5, 16, -2.5},
                     {4, -12, 13, -6, 1}});
}
inline Matrix toeplitz1() { return mat(1.0, {{108, 0}, {324, 108}}); }
inline Matrix hankel1() { return mat(1.0, {{-2, -1}, {-1, 0}}); }
inline Matrix toeplitz2() { return mat(1.0, {{576, 0, 0}, {1104, 576, 0}, {1012, 1104, 576}}); }
inline Matrix hankel2() { return mat(1.0, {{4, -2.5, 1}, {-2.5, 1, 0}, {1, 0, 0}}); }

inline Matrix sub5_1() {
    return mat(1.0 / 108, {{1, 0, 3, 0, 5}, {0, -3, 0, -5, 0}, {3, 0, 5, 0, 7}, {0, -5, 0, -7, 0}, {5, 0, 7, 0, 9}});
}
inline Matrix sub5_2() {
    return mat(1.0 / (128 * 108), {{-169, 0, -372, 0, -656},
                                   {0, 372, 0, 656, 0},
                                   {-372, 0, -656, 0, -832},
                                   {0, 656, 0, 832, 0},
                                   {-656, 0, -832, 0, -2304}});
}
// published without the 1/13824 factor and with +1152 at (5,5); this is the
// exact solution, equal to sub5_1() + sub5_2()
inline Matrix gramian5() {
    return mat(1.0 / 13824, {{-41, 0, 12, 0, -16},
                             {0, -12, 0, 16, 0},
                             {12, 0, -16, 0, 64},
                             {0, 16, 0, -64, 0},
                             {-16, 0, 64, 0, -1152}});
}
inline Matrix inv5_1() {
    return mat(108.0, {{192, 0, 528, 0, 32},
                       {0, -1520, 0, -596, 0},
                       {528, 0, 1404, 0, 84},
                       {0, -596, 0, -231, 0},
                       {32, 0, 84, 0, 5}});
}
inline Matrix inv5_2() {
    return mat(4.0, {{-5296, 0, -14356, 0, -868},
                     {0, 40608, 0, 15984, 0},
                     {-14356, 0, -38275, 0, -2287},
                     {0, 15984, 0, 6156, 0},
                     {-868, 0, -2287, 0, -139}});
}

// ---------------------------------------------------------------- generators

// Conjugate-closed spectrum of size n in [lo_re, hi_re] x [-im, im] i with
// pairwise separation >= sep (a pair and its conjugate included).
inline std::vector<Complex> random_spectrum(std::mt19937_64& rng, int n, double lo_re = -5.0, double hi_re = -0.1,
                                            double im = 3.0, double sep = 0.1) {
    std::uniform_real_distribution<double> re(lo_re, hi_re), ii(0.0, im);
    std::uniform_int_distribution<int> pairs_dist(0, n / 2);
    for (;;) {
        const int pairs = pairs_dist(rng);
        std::vector<Complex> out;
        for (int k = 0; k < pairs; ++k) {
            const Complex z{re(rng), ii(rng)};
            out.push_back(z);
            out.push_back(std::conj(z));
        }
        while (static_cast<int>(out.size()) < n) out.emplace_back(re(rng), 0.0);
        bool ok = true;
        for (std::size_t a = 0; a < out.size() && ok; ++a) {
            for (std::size_t b = a + 1; b < out.size() && ok; ++b) ok = std::abs(out[a] - out[b]) >= sep;
        }
        if (ok) return out;
    }
}

inline Spectrum simple_spectrum(const std::vector<Complex>& values) {
    Spectrum s;
    for (Complex z : values) s.entries.push_back({z, 1});
    std::sort(s.entries.begin(), s.entries.end(), [](const auto& a, const auto& b) {
        return gramspec::detail::lexicographic_less(a.value, b.value);
    });
    return s;
}

// Distinct stable eigenvalues with multiplicities <= max_mult, total n.
inline Spectrum random_jordan_spectrum(std::mt19937_64& rng, int n, int max_mult = 3) {
    std::uniform_real_distribution<double> re(-3.0, -0.3), ii(0.3, 2.0);
    std::uniform_int_distribution<int> mult(1, max_mult);
    std::bernoulli_distribution complex_pair(0.35);
    for (;;) {
        Spectrum s;
        int left = n;
        bool has_multiple = false;
        while (left > 0) {
            const int m = std::min(mult(rng), left);
            if (left >= 2 * m && complex_pair(rng)) {
                const Complex z{re(rng), ii(rng)};
                s.entries.push_back({z, m});
                s.entries.push_back({std::conj(z), m});
                left -= 2 * m;
            } else {
                s.entries.push_back({Complex(re(rng), 0.0), m});
                left -= m;
            }
            has_multiple = has_multiple || m > 1;
        }
        bool ok = has_multiple;
        for (std::size_t a = 0; a < s.entries.size() && ok; ++a) {
            for (std::size_t b = a + 1; b < s.entries.size() && ok; ++b) {
                ok = std::abs(s.entries[a].value - s.entries[b].value) >= 0.3;
            }
        }
        if (!ok) continue;
        std::sort(s.entries.begin(), s.entries.end(), [](const auto& a, const auto& b) {
            return gramspec::detail::lexicographic_less(a.value, b.value);
        });
        return s;
    }
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> nd;
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = nd(rng);
    }
    return m;
}

// Real A = V D V^{-1} with a prescribed conjugate-closed spectrum.
inline Matrix matrix_with_spectrum(std::mt19937_64& rng, const std::vector<Complex>& values) {
    const auto n = static_cast<Eigen::Index>(values.size());
    Matrix d = Matrix::Zero(n, n);
    Eigen::Index k = 0;
    std::vector<bool> used(values.size(), false);
    for (std::size_t a = 0; a < values.size(); ++a) {
        if (used[a]) continue;
        used[a] = true;
        if (values[a].imag() == 0.0) {
            d(k, k) = values[a].real();
            ++k;
            continue;
        }
        for (std::size_t b = a + 1; b < values.size(); ++b) {
            if (!used[b] && values[b] == std::conj(values[a])) {
                used[b] = true;
                break;
            }
        }
        d(k, k) = d(k + 1, k + 1) = values[a].real();
        d(k, k + 1) = values[a].imag();
        d(k + 1, k) = -values[a].imag();
        k += 2;
    }
    Matrix v;
    do {
        v = random_matrix(rng, n, n);
    } while (gramspec::condition_number(v) > 50.0);
    return v * d * v.inverse();
}

} // namespace fx
