// io_cli (library side) and verification_oracle

#include "fixtures.hpp"
#include "gramspec/gramspec.hpp"
#include "gramspec/io.hpp"
#include "gramspec/oracle.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace gramspec;
using io::json;

namespace {

io::SystemDocument doc_from(const char* text) { return io::parse_system(std::string(text)); }

void expect_schema_error(const char* text, const std::string& pointer) {
    try {
        (void)doc_from(text);
        FAIL() << "expected a schema error for " << text;
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.path(), pointer) << text;
    }
}

} // namespace

TEST(Parse, CharPolyDocument) {
    const auto doc = doc_from(R"({"schema": 1, "label": "x", "char_poly": [-6, 11, -6, 1]})");
    EXPECT_EQ(doc.kind, io::SystemDocument::Kind::char_poly);
    EXPECT_EQ(doc.n(), 3);
    EXPECT_EQ(doc.inputs(), 1);
    EXPECT_EQ(*doc.label, "x");
}

TEST(Parse, EigenvalueDocumentWithMultiplicity) {
    const auto doc = doc_from(R"({"eigenvalues": [{"re": 1, "multiplicity": 2}, {"re": 2, "im": 0, "multiplicity": 3}]})");
    EXPECT_EQ(doc.n(), 5);
    const auto rs = io::resolve(doc);
    for (int k = 0; k <= 5; ++k) EXPECT_NEAR(rs.poly[k], fx::poly5()[k], 1e-12);
}

TEST(Parse, MatricesDocumentWithToleranceOverrides) {
    const auto doc = doc_from(
        R"({"matrices": {"A": [[0, 1], [-2, -3]], "B": [[0, 1], [1, 0]]}, "tolerances": {"solve": 1e-8}})");
    EXPECT_EQ(doc.inputs(), 2);
    EXPECT_DOUBLE_EQ(doc.tolerances.solve, 1e-8);
    EXPECT_DOUBLE_EQ(doc.tolerances.root, Tolerances{}.root);
}

TEST(Parse, RoundTripThroughEmit) {
    const char* docs[] = {
        R"({"schema": 1, "label": "a", "char_poly": [2, 3, 1]})",
        R"({"eigenvalues": [{"re": -1, "im": 2}, {"re": -1, "im": -2}, {"re": -3, "multiplicity": 2}]})",
        R"({"matrices": {"A": [[0, 1], [-2, -3]], "B": [[0], [1]]}, "initial_condition": [[1, 0.5], [0.5, 2]],
            "tolerances": {"cluster": 1e-6, "condition": 1e10}})",
    };
    for (const char* text : docs) {
        const auto doc = doc_from(text);
        const auto again = io::parse_system(io::emit_system(doc));
        EXPECT_TRUE(doc == again) << text;
        EXPECT_EQ(io::emit_system(again), io::emit_system(doc));
    }
}

TEST(Parse, SchemaErrorsCarryPointers) {
    expect_schema_error(R"({"char_poly": [1, 2], "extra": 1})", "/extra");
    expect_schema_error(R"({"char_poly": [1, 2, 3]})", "/char_poly/2");
    expect_schema_error(R"({"eigenvalues": [{"re": -1}, {"re": -1}]})", "/eigenvalues/1");
    expect_schema_error(R"({"eigenvalues": [{"re": -1, "im": 1}]})", "/eigenvalues/0");
    expect_schema_error(R"({"char_poly": [1, 1], "eigenvalues": [{"re": -1}]})", "");
    expect_schema_error(R"({"char_poly": [1, 0, 1], "initial_condition": [[1, 2], [0, 1]]})", "/initial_condition");
    expect_schema_error(R"({"schema": 2, "char_poly": [1, 1]})", "/schema");
    expect_schema_error(R"({"char_poly": [1, "x"]})", "/char_poly/1");
    expect_schema_error(R"({"matrices": {"A": [[0, 1], [1]], "B": [[1], [0]]}})", "/matrices/A/1");
    expect_schema_error(R"({"char_poly": [1, 1], "tolerances": {"root": -1}})", "/tolerances/root");
    expect_schema_error("{not json", "");
}

// ----------------------------------------------------------------------------

TEST(Analyze, ReportLayoutForSimpleSpectrum) {
    io::AnalyzeOptions opt;
    opt.pairs = true;
    opt.inverse = true;
    opt.finite_t = 1.0;
    const auto rep = io::analyze_report(doc_from(R"({"char_poly": [-6, 11, -6, 1]})"), opt);
    for (const char* key : {"schema", "n", "inputs", "characteristic_polynomial", "spectrum", "solvability", "path",
                            "gramian", "pairs", "inverse", "finite", "warnings"}) {
        EXPECT_TRUE(rep.contains(key)) << key;
    }
    EXPECT_EQ(rep["path"], "simple");
    EXPECT_EQ(rep["n"], 3);
    EXPECT_GE(rep["warnings"].size(), 2u); // sign convention and instability
}

TEST(Analyze, MultipleSpectrumPath) {
    io::AnalyzeOptions opt;
    opt.inverse = true;
    const auto rep = io::analyze_report(doc_from(R"({"eigenvalues": [{"re": 1, "multiplicity": 2}, {"re": 2, "multiplicity": 3}]})"), opt);
    EXPECT_EQ(rep["path"], "multiple");
    EXPECT_TRUE(rep.contains("inverse"));
}

TEST(Analyze, OriginalCoordinatesForMatrixInput) {
    const auto rep = io::analyze_report(doc_from(R"({"matrices": {"A": [[0, 1], [-2, -3]], "B": [[0], [1]]}})"));
    EXPECT_TRUE(rep.contains("original"));
}

TEST(Analyze, ImaginaryPairIsNotSolvable) {
    EXPECT_THROW(io::analyze_report(doc_from(R"({"eigenvalues": [{"re": 0, "im": 1}, {"re": 0, "im": -1}]})")),
                 SolvabilityError);
}

TEST(Roots, ReportsStability) {
    const auto rep = io::roots_report(doc_from(R"({"char_poly": [6, 11, 6, 1]})"));
    EXPECT_TRUE(rep["stable"].get<bool>());
    EXPECT_EQ(rep["roots"].size(), 3u);
}

TEST(Energy, ReportOfStableSystem) {
    const auto rep = io::energy_report(doc_from(R"({"char_poly": [6, 11, 6, 1]})"), Vector::Unit(3, 0));
    EXPECT_NEAR(rep["energy"].get<double>(), 132.0, 1e-9);
    EXPECT_TRUE(rep["interpretation_valid"].get<bool>());
    EXPECT_LT(rep["linear_closure"].get<double>(), 1e-12);
    EXPECT_LT(rep["quadrature"]["relative_difference"].get<double>(), 1e-4);
}

TEST(Energy, TimeSeriesCsv) {
    const auto csv = io::energy_time_series_csv(doc_from(R"({"char_poly": [1, 1]})"), Vector::Ones(1), -1.0, 0.0, 4);
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "t,u,re_u1,im_u1");
    int rows = 0;
    std::string last;
    while (std::getline(is, line)) {
        ++rows;
        last = line;
    }
    EXPECT_EQ(rows, 5);
    EXPECT_EQ(last.substr(0, 4), "0,2,");
    EXPECT_THROW(io::energy_time_series_csv(doc_from(R"({"char_poly": [-6, 11, -6, 1]})"), Vector::Ones(3), -1.0, 0.0, 4),
                 StabilityError);
}

TEST(Verify, ExamplesPass) {
    for (const char* text : {R"({"char_poly": [-6, 11, -6, 1]})",
                             R"({"eigenvalues": [{"re": 1, "multiplicity": 2}, {"re": 2, "multiplicity": 3}]})",
                             R"({"matrices": {"A": [[0, 1, 0], [-4, -0.8, 1], [0, 0, -2]], "B": [[0], [0], [1]]}})"}) {
        const auto rep = io::verify_report(doc_from(text), 7);
        EXPECT_TRUE(rep["passed"].get<bool>()) << rep.dump(2);
    }
}

// ----------------------------------------------------------------------------

TEST(Oracle, KroneckerSolvesLyapunov) {
    std::mt19937_64 rng(51);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = fx::matrix_with_spectrum(rng, fx::random_spectrum(rng, 5));
        const Matrix b = fx::random_matrix(rng, 5, 2);
        const Matrix q = b * b.transpose();
        const auto r = oracle::solve_lyapunov_dense(a, q);
        EXPECT_EQ(r.method, oracle::Method::kron);
        EXPECT_LT(oracle::residual_lyapunov(a, q, r.value), 1e-12);
    }
}

TEST(Oracle, KroneckerTwoByTwoByHand) {
    // A = diag(-1, -2), Q = I: P = diag(1/2, 1/4)
    const Matrix a = fx::mat(1.0, {{-1, 0}, {0, -2}});
    const auto r = oracle::solve_lyapunov_dense(a, Matrix::Identity(2, 2));
    EXPECT_LT(fx::rel(r.value, fx::mat(1.0, {{0.5, 0}, {0, 0.25}})), 1e-15);
}

TEST(Oracle, DenseCapThrows) {
    const int n = oracle::kDenseCap + 1;
    EXPECT_THROW(oracle::solve_lyapunov_dense(-Matrix::Identity(n, n), Matrix::Identity(n, n)), DimensionError);
}

TEST(Oracle, IntegratorsAgree) {
    std::mt19937_64 rng(52);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix a = fx::matrix_with_spectrum(rng, fx::random_spectrum(rng, 4, -2.0, -0.2, 1.0, 0.3));
        const Matrix b = fx::random_matrix(rng, 4, 1);
        const Matrix q = b * b.transpose();
        const double t = 1.3;
        const Matrix rk = oracle::integrate_lyapunov(a, q, Matrix::Zero(4, 4), t, 2000).value;
        const Matrix simpson = oracle::gramian_quadrature(a, b, t, 2000).value;
        EXPECT_LT(fx::rel(rk, simpson), 1e-9);
        // P(t) = P_inf - e^{At} P_inf e^{A^T t}
        const Matrix pinf = oracle::solve_lyapunov_dense(a, q).value;
        const Matrix e = oracle::matrix_exp_reference(a, t);
        EXPECT_LT(fx::rel(rk, Matrix(pinf - e * pinf * e.transpose())), 1e-9);
    }
}

TEST(Oracle, MatrixExponentialOfRotation) {
    const Matrix a = fx::mat(1.0, {{0, 1}, {-1, 0}});
    const Matrix e = oracle::matrix_exp_reference(a, 0.7);
    EXPECT_NEAR(e(0, 0), std::cos(0.7), 1e-15);
    EXPECT_NEAR(e(0, 1), std::sin(0.7), 1e-15);
}

TEST(Oracle, RiccatiResidualOfExactInverse) {
    const auto cr = build_companion(fx::poly3());
    EXPECT_LT(oracle::residual_riccati(cr.A, cr.b, fx::inverse3()), 1e-15);
}
