#pragma once

#include "gramspec/companion.hpp"
#include "gramspec/core.hpp"
#include "gramspec/energy.hpp"
#include "gramspec/gramian.hpp"
#include "gramspec/inverse.hpp"
#include "gramspec/oracle.hpp"
#include "gramspec/spectrum.hpp"

#include "json.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace gramspec::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// ============================================================================
// System documents
// ============================================================================

struct SystemDocument {
    enum class Kind { matrices, char_poly, eigenvalues };

    Kind kind = Kind::char_poly;
    std::optional<std::string> label;
    Matrix A;
    Matrix B;
    std::vector<double> coefficients;
    std::vector<SpectrumEntry> eigenvalues;
    std::optional<Matrix> initial_condition;
    Tolerances tolerances;

    [[nodiscard]] int n() const {
        switch (kind) {
        case Kind::matrices: return static_cast<int>(A.rows());
        case Kind::char_poly: return static_cast<int>(coefficients.size()) - 1;
        case Kind::eigenvalues: {
            int s = 0;
            for (const auto& e : eigenvalues) s += e.multiplicity;
            return s;
        }
        }
        return 0;
    }
    [[nodiscard]] int inputs() const { return kind == Kind::matrices ? static_cast<int>(B.cols()) : 1; }

    friend bool operator==(const SystemDocument& a, const SystemDocument& b) {
        auto same_entries = [](const std::vector<SpectrumEntry>& x, const std::vector<SpectrumEntry>& y) {
            if (x.size() != y.size()) return false;
            for (std::size_t k = 0; k < x.size(); ++k) {
                if (x[k].value != y[k].value || x[k].multiplicity != y[k].multiplicity) return false;
            }
            return true;
        };
        auto same_opt = [](const std::optional<Matrix>& x, const std::optional<Matrix>& y) {
            if (x.has_value() != y.has_value()) return false;
            return !x || (x->rows() == y->rows() && x->cols() == y->cols() && *x == *y);
        };
        auto same_mat = [](const Matrix& x, const Matrix& y) {
            return x.rows() == y.rows() && x.cols() == y.cols() && (x.size() == 0 || x == y);
        };
        return a.kind == b.kind && a.label == b.label && same_mat(a.A, b.A) && same_mat(a.B, b.B) &&
               a.coefficients == b.coefficients && same_entries(a.eigenvalues, b.eigenvalues) &&
               same_opt(a.initial_condition, b.initial_condition) && a.tolerances.root == b.tolerances.root &&
               a.tolerances.cluster == b.tolerances.cluster && a.tolerances.solve == b.tolerances.solve &&
               a.tolerances.condition == b.tolerances.condition;
    }
};

namespace detail {

inline double number_at(const json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw SchemaError(path, "expected a finite number");
    return v;
}

inline Matrix matrix_at(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw SchemaError(path, "expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    Eigen::Index cols = -1;
    Matrix m;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        const std::string rp = path + "/" + std::to_string(r);
        if (!row.is_array() || row.empty()) throw SchemaError(rp, "expected a non-empty array of numbers");
        if (cols < 0) {
            cols = static_cast<Eigen::Index>(row.size());
            m.resize(rows, cols);
        } else if (static_cast<Eigen::Index>(row.size()) != cols) {
            throw SchemaError(rp, "row length differs from row 0");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = number_at(row[static_cast<std::size_t>(c)], rp + "/" + std::to_string(c));
        }
    }
    return m;
}

inline json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw SchemaError(path + "/" + it.key(), "unknown field");
    }
}

} // namespace detail

inline SystemDocument parse_system(const json& j) {
    if (!j.is_object()) throw SchemaError("", "document must be a JSON object");
    detail::check_keys(j, "", {"schema", "label", "matrices", "char_poly", "eigenvalues", "initial_condition",
                               "tolerances"});
    if (j.contains("schema")) {
        if (!j["schema"].is_number_integer() || j["schema"].get<int>() != kSchemaVersion) {
            throw SchemaError("/schema", "unsupported schema version (expected 1)");
        }
    }
    const int present = static_cast<int>(j.contains("matrices")) + static_cast<int>(j.contains("char_poly")) +
                        static_cast<int>(j.contains("eigenvalues"));
    if (present != 1) throw SchemaError("", "exactly one of matrices, char_poly, eigenvalues is required");

    SystemDocument doc;
    if (j.contains("label")) {
        if (!j["label"].is_string()) throw SchemaError("/label", "expected a string");
        doc.label = j["label"].get<std::string>();
    }

    if (j.contains("matrices")) {
        const auto& m = j["matrices"];
        if (!m.is_object()) throw SchemaError("/matrices", "expected an object with A and B");
        detail::check_keys(m, "/matrices", {"A", "B"});
        if (!m.contains("A")) throw SchemaError("/matrices/A", "missing");
        if (!m.contains("B")) throw SchemaError("/matrices/B", "missing");
        doc.kind = SystemDocument::Kind::matrices;
        doc.A = detail::matrix_at(m["A"], "/matrices/A");
        doc.B = detail::matrix_at(m["B"], "/matrices/B");
        if (doc.A.rows() != doc.A.cols()) throw SchemaError("/matrices/A", "must be square");
        if (doc.B.rows() != doc.A.rows()) throw SchemaError("/matrices/B", "row count must equal the size of A");
    } else if (j.contains("char_poly")) {
        const auto& c = j["char_poly"];
        if (!c.is_array() || c.size() < 2) throw SchemaError("/char_poly", "expected at least two coefficients");
        doc.kind = SystemDocument::Kind::char_poly;
        for (std::size_t k = 0; k < c.size(); ++k) {
            doc.coefficients.push_back(detail::number_at(c[k], "/char_poly/" + std::to_string(k)));
        }
        if (doc.coefficients.back() != 1.0) {
            throw SchemaError("/char_poly/" + std::to_string(c.size() - 1), "leading coefficient must be 1 (monic)");
        }
    } else {
        const auto& e = j["eigenvalues"];
        if (!e.is_array() || e.empty()) throw SchemaError("/eigenvalues", "expected a non-empty array");
        doc.kind = SystemDocument::Kind::eigenvalues;
        for (std::size_t k = 0; k < e.size(); ++k) {
            const std::string p = "/eigenvalues/" + std::to_string(k);
            if (!e[k].is_object()) throw SchemaError(p, "expected an object {re, im, multiplicity}");
            detail::check_keys(e[k], p, {"re", "im", "multiplicity"});
            if (!e[k].contains("re")) throw SchemaError(p + "/re", "missing");
            SpectrumEntry entry;
            const double re = detail::number_at(e[k]["re"], p + "/re");
            const double im = e[k].contains("im") ? detail::number_at(e[k]["im"], p + "/im") : 0.0;
            entry.value = {re, im};
            if (e[k].contains("multiplicity")) {
                if (!e[k]["multiplicity"].is_number_integer() || e[k]["multiplicity"].get<int>() < 1) {
                    throw SchemaError(p + "/multiplicity", "expected a positive integer");
                }
                entry.multiplicity = e[k]["multiplicity"].get<int>();
            }
            for (const auto& prev : doc.eigenvalues) {
                if (prev.value == entry.value) throw SchemaError(p, "duplicate eigenvalue (use multiplicity)");
            }
            doc.eigenvalues.push_back(entry);
        }
        // a real system needs a conjugate-closed spectrum with matching multiplicities
        for (std::size_t k = 0; k < doc.eigenvalues.size(); ++k) {
            const auto& a = doc.eigenvalues[k];
            if (a.value.imag() == 0.0) continue;
            bool found = false;
            for (const auto& b : doc.eigenvalues) {
                found = found || (b.value == std::conj(a.value) && b.multiplicity == a.multiplicity);
            }
            if (!found) {
                throw SchemaError("/eigenvalues/" + std::to_string(k), "complex eigenvalue without its conjugate");
            }
        }
    }

    const int n = doc.n();
    if (j.contains("initial_condition")) {
        Matrix p0 = detail::matrix_at(j["initial_condition"], "/initial_condition");
        if (p0.rows() != n || p0.cols() != n) throw SchemaError("/initial_condition", "must be n x n");
        if ((p0 - p0.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, p0.cwiseAbs().maxCoeff())) {
            throw SchemaError("/initial_condition", "must be symmetric");
        }
        doc.initial_condition = std::move(p0);
    }

    if (j.contains("tolerances")) {
        const auto& t = j["tolerances"];
        if (!t.is_object()) throw SchemaError("/tolerances", "expected an object");
        detail::check_keys(t, "/tolerances", {"root", "cluster", "solve", "condition"});
        auto read = [&](const char* key, double& into) {
            if (!t.contains(key)) return;
            const double v = detail::number_at(t[key], std::string("/tolerances/") + key);
            if (!(v > 0.0)) throw SchemaError(std::string("/tolerances/") + key, "must be positive");
            into = v;
        };
        read("root", doc.tolerances.root);
        read("cluster", doc.tolerances.cluster);
        read("solve", doc.tolerances.solve);
        read("condition", doc.tolerances.condition);
    }
    return doc;
}

inline SystemDocument parse_system(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError("", std::string("malformed JSON: ") + e.what());
    }
    return parse_system(j);
}

inline json emit_system(const SystemDocument& doc) {
    json j;
    j["schema"] = kSchemaVersion;
    if (doc.label) j["label"] = *doc.label;
    switch (doc.kind) {
    case SystemDocument::Kind::matrices:
        j["matrices"] = {{"A", detail::matrix_json(doc.A)}, {"B", detail::matrix_json(doc.B)}};
        break;
    case SystemDocument::Kind::char_poly: j["char_poly"] = doc.coefficients; break;
    case SystemDocument::Kind::eigenvalues: {
        json arr = json::array();
        for (const auto& e : doc.eigenvalues) {
            arr.push_back({{"re", e.value.real()}, {"im", e.value.imag()}, {"multiplicity", e.multiplicity}});
        }
        j["eigenvalues"] = std::move(arr);
        break;
    }
    }
    if (doc.initial_condition) j["initial_condition"] = detail::matrix_json(*doc.initial_condition);
    const Tolerances defaults;
    json tol = json::object();
    if (doc.tolerances.root != defaults.root) tol["root"] = doc.tolerances.root;
    if (doc.tolerances.cluster != defaults.cluster) tol["cluster"] = doc.tolerances.cluster;
    if (doc.tolerances.solve != defaults.solve) tol["solve"] = doc.tolerances.solve;
    if (doc.tolerances.condition != defaults.condition) tol["condition"] = doc.tolerances.condition;
    if (!tol.empty()) j["tolerances"] = std::move(tol);
    return j;
}

// ============================================================================
// Resolution into the spectral pipeline
// ============================================================================

struct ResolvedSystem {
    Polynomial poly;
    Spectrum spectrum;
    CompanionRealization companion;
    std::optional<LtiSystem> original; // only for matrix input
    std::optional<SimilarityTransform> transform; // single-input matrix input
    std::vector<Complex> roots; // raw roots before clustering (empty for eigenvalue input)
    Tolerances tolerances;

    [[nodiscard]] int n() const { return companion.n(); }
    [[nodiscard]] bool single_input() const { return !original || original->inputs() == 1; }
};

inline ResolvedSystem resolve(const SystemDocument& doc) {
    ResolvedSystem r;
    r.tolerances = doc.tolerances;
    switch (doc.kind) {
    case SystemDocument::Kind::matrices:
        r.original = LtiSystem(doc.A, doc.B);
        r.poly = char_poly(doc.A);
        break;
    case SystemDocument::Kind::char_poly: r.poly = Polynomial(doc.coefficients); break;
    case SystemDocument::Kind::eigenvalues: {
        Spectrum s{doc.eigenvalues};
        std::sort(s.entries.begin(), s.entries.end(),
                  [](const SpectrumEntry& a, const SpectrumEntry& b) { return gramspec::detail::lexicographic_less(a.value, b.value); });
        r.spectrum = s;
        r.poly = polynomial_from_spectrum(s);
        break;
    }
    }
    if (doc.kind != SystemDocument::Kind::eigenvalues) {
        r.roots = find_roots(r.poly, doc.tolerances.root, doc.tolerances.max_sweeps);
        r.spectrum = cluster(r.roots, doc.tolerances.cluster);
    }
    r.companion = build_companion(r.poly);
    if (r.original && r.original->inputs() == 1) {
        r.transform = to_companion(*r.original, doc.tolerances).first;
    }
    return r;
}

// ============================================================================
// JSON rendering helpers
// ============================================================================

inline json complex_json(Complex z) { return {{"re", z.real()}, {"im", z.imag()}}; }

inline json cmatrix_json(const CMatrix& m) {
    return {{"re", detail::matrix_json(m.real())}, {"im", detail::matrix_json(m.imag())}};
}

inline json cmatrix_json(const CMatrix& m, double residual) {
    json j = cmatrix_json(m);
    j["residual"] = residual;
    return j;
}

inline json spectrum_json(const Spectrum& s) {
    json arr = json::array();
    for (const auto& e : s.entries) {
        arr.push_back({{"re", e.value.real()}, {"im", e.value.imag()}, {"multiplicity", e.multiplicity}});
    }
    return arr;
}

inline json solvability_json(const SolvabilityReport& r) {
    json pairs = json::array();
    for (const auto& [i, j] : r.violating_pairs) pairs.push_back({i, j});
    return {{"ok", r.ok}, {"violating_pairs", pairs}, {"min_pair_magnitude", r.min_pair_magnitude}};
}

inline json index_json(const ComponentIndex& idx) {
    return idx.is_pair() ? json{idx.i, idx.j} : json{idx.i};
}

inline const char* to_string(Coordinates c) { return c == Coordinates::companion ? "companion" : "original"; }
inline const char* to_string(Flavor f) { return f == Flavor::raw ? "raw" : "symmetrized"; }

// Renders a component set; residual_of(k) supplies the check for component k.
template <typename ResidualFn>
json component_set_json(const SpectralComponentSet& set, ResidualFn residual_of, double sum_residual) {
    json comps = json::array();
    for (std::size_t k = 0; k < set.components.size(); ++k) {
        const auto& c = set.components[k];
        comps.push_back({{"index", index_json(c.index)}, {"matrix", cmatrix_json(c.value, residual_of(k))}});
    }
    return {{"coordinates", to_string(set.coordinates)},
            {"flavor", to_string(set.flavor)},
            {"components", comps},
            {"sum", cmatrix_json(set.sum(), sum_residual)}};
}

// Scalar-scaled relative difference used throughout the reports.
inline double rel(const CMatrix& a, const CMatrix& b) { return relative_difference(a, b); }

// ============================================================================
// Reports
// ============================================================================

struct AnalyzeOptions {
    bool pairs = false;
    std::optional<double> finite_t;
    bool inverse = false;
    std::optional<Matrix> initial_condition; // overrides the document's
    bool raw = false;
};

namespace detail {

inline bool zero_plaid(const CMatrix& m, double tol = 1e-10) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if ((r + c) % 2 == 1 && std::abs(m(r, c)) > tol * scale) return false;
        }
    }
    return true;
}

inline std::vector<CMatrix> residues_of(const ResolvedSystem& rs) {
    std::vector<CMatrix> out;
    for (const auto& e : rs.spectrum.entries) out.push_back(residue_companion(e.value, rs.poly));
    return out;
}

// ‖A X + X A^T + K‖ / ‖K‖ for the pair Sylvester identity, K = {x_i x_j^* / (N'(λ_i) N'(λ_j^*))}_H
inline double pair_sylvester_residual(const CompanionRealization& cr, Complex li, Complex lj, const CMatrix& x,
                                      bool symmetrized) {
    CMatrix k = gramspec::detail::pair_kernel(cr.poly, li, lj);
    if (symmetrized) k = hermitian_part(k);
    const CMatrix a = cr.A.cast<Complex>();
    return (a * x + x * a.transpose() + k).norm() / std::max(k.norm(), 1e-300);
}

} // namespace detail

inline json analyze_report(const SystemDocument& doc, const AnalyzeOptions& opt = {}) {
    const auto rs = resolve(doc);
    const auto& tol = rs.tolerances;
    const auto& cr = rs.companion;
    const int n = rs.n();
    const Flavor flavor = opt.raw ? Flavor::raw : Flavor::symmetrized;

    json rep;
    rep["schema"] = kSchemaVersion;
    if (doc.label) rep["label"] = *doc.label;
    rep["n"] = n;
    rep["inputs"] = doc.inputs();
    rep["characteristic_polynomial"] = rs.poly.coeffs();
    rep["spectrum"] = spectrum_json(rs.spectrum);
    const auto solv = check_solvability(rs.spectrum, tol.solve);
    rep["solvability"] = solvability_json(solv);
    json warnings = json::array();
    warnings.push_back("sub-Gramian denominators use -N'(lambda) N(-lambda); the opposite sign does not solve the Lyapunov equation");
    if (!solv.ok) {
        std::ostringstream os;
        os << "Lyapunov equation is not uniquely solvable: lambda_i + lambda_j = 0 for pairs";
        for (auto [i, j] : solv.violating_pairs) os << " (" << i << "," << j << ")";
        throw SolvabilityError(os.str(), solv.violating_pairs);
    }
    if (!rs.spectrum.is_stable()) {
        warnings.push_back("spectrum is not stable: components solve the algebraic equations but carry no energy interpretation");
    }

    const Matrix q = cr.b * cr.b.transpose();
    std::optional<Matrix> oracle_p;
    if (n <= oracle::kDenseCap) oracle_p = oracle::solve_lyapunov_dense(cr.A, q).value;

    std::optional<Matrix> p0 = opt.initial_condition ? opt.initial_condition : doc.initial_condition;
    if (p0 && (p0->rows() != n || p0->cols() != n)) throw DimensionError("initial condition must be n x n");

    if (rs.spectrum.is_simple()) {
        rep["path"] = "simple";
        const auto gram_raw = infinite_subgramians(cr, rs.spectrum, Flavor::raw, tol);
        const auto gram = flavor == Flavor::raw ? gram_raw : gram_raw.symmetrized();
        const auto inv = inverse_pair_parts(cr, rs.spectrum, tol);
        const auto residues = detail::residues_of(rs);
        const auto pairs = infinite_pair_subgramians(cr, rs.spectrum, flavor, tol);

        // eigen part i: orthogonality row max_j |P̂_i P̂_j^{-C} - δ_ij R_i|
        auto orth_row = [&](std::size_t i) {
            double worst = 0.0;
            for (std::size_t j = 0; j < residues.size(); ++j) {
                CMatrix prod = gram_raw.components[i].value * inv.raw.components[j].value;
                if (i == j) prod -= residues[i];
                worst = std::max(worst, prod.cwiseAbs().maxCoeff() / std::max(1.0, residues[i].cwiseAbs().maxCoeff()));
            }
            return worst;
        };
        const double sum_res = oracle::residual_lyapunov(cr.A, q, gram.sum().real());
        json g = component_set_json(gram, orth_row, sum_res);
        if (oracle_p) g["oracle_difference"] = rel(gram.sum(), oracle_p->cast<Complex>());
        g["zero_plaid"] = detail::zero_plaid(gram.sum());
        rep["gramian"] = std::move(g);

        if (opt.pairs) {
            auto pair_res = [&](std::size_t k) {
                const auto& c = pairs.components[k];
                return detail::pair_sylvester_residual(cr, rs.spectrum.entries[c.index.i].value,
                                                      rs.spectrum.entries[c.index.j].value, c.value,
                                                      flavor == Flavor::symmetrized);
            };
            json pj = component_set_json(pairs, pair_res, oracle::residual_lyapunov(cr.A, q, pairs.sum().real()));
            const auto collisions = pair_rate_collisions(rs.spectrum, tol.solve);
            pj["rate_collisions"] = json::array();
            for (const auto& [a, b] : collisions) pj["rate_collisions"].push_back({index_json(a), index_json(b)});
            if (!collisions.empty()) {
                warnings.push_back("pair sums lambda_i + conj(lambda_j) collide; pair components are not uniquely determined by the time response");
            }
            rep["pairs"] = std::move(pj);
        }

        if (opt.inverse) {
            const auto& set = flavor == Flavor::raw ? inv.raw : inv.symmetrized;
            auto inv_res = [&](std::size_t j) {
                double worst = 0.0;
                for (std::size_t i = 0; i < residues.size(); ++i) {
                    CMatrix prod = gram_raw.components[i].value * inv.raw.components[j].value;
                    if (i == j) prod -= residues[i];
                    worst = std::max(worst, prod.cwiseAbs().maxCoeff() / std::max(1.0, residues[i].cwiseAbs().maxCoeff()));
                }
                return worst;
            };
            const Matrix pinv = inv.sum().real();
            json ij = component_set_json(set, inv_res, oracle::residual_riccati(cr.A, cr.b, pinv));
            if (oracle_p) ij["oracle_difference"] = rel(inv.sum(), oracle_p->inverse().cast<Complex>());
            ij["zero_plaid"] = detail::zero_plaid(inv.sum());
            if (opt.pairs) {
                const auto& ps = flavor == Flavor::raw ? inv.pair_raw : inv.pair_symmetrized;
                auto pres = [&](std::size_t k) {
                    const auto& c = inv.pair_raw.components[k];
                    const CMatrix expect = residues[c.index.i].adjoint() * inv.raw.components[c.index.j].value;
                    return rel(c.value, expect);
                };
                ij["pairs"] = component_set_json(ps, pres, rel(ps.sum(), set.sum()));
            }
            rep["inverse"] = std::move(ij);
        }

        if (opt.finite_t) {
            const double t = *opt.finite_t;
            const auto fd = finite_subgramians(cr, rs.spectrum, t, tol);
            const auto fp = finite_pair_subgramians(cr, rs.spectrum, t, tol);
            auto at = fd.evaluate(t, flavor);
            auto pat = fp.evaluate(t, flavor);
            CMatrix total = fd.sum_at(t);
            HomogeneousDecomposition hd;
            if (p0) {
                hd = homogeneous_decomposition(cr, rs.spectrum, *p0, t, tol);
                const auto ha = hd.eigen.evaluate(t, flavor);
                for (std::size_t k = 0; k < at.components.size(); ++k) at.components[k].value += ha.components[k].value;
                const auto hp = hd.pairs.evaluate(t, flavor);
                for (std::size_t k = 0; k < pat.components.size(); ++k) pat.components[k].value += hp.components[k].value;
                total += hd.eigen.sum_at(t);
            }
            const Matrix start = p0 ? *p0 : Matrix::Zero(n, n);
            const long steps = std::max<long>(200, static_cast<long>(std::ceil(t * (1.0 + rs.spectrum.spectral_radius()) * 200.0)));
            const Matrix rk = oracle::integrate_lyapunov(cr.A, q, start, t, std::min<long>(steps, 2000000)).value;
            // eigen part i at t versus the row sum of the pair parts
            auto row_res = [&](std::size_t i) {
                CMatrix rsum = CMatrix::Zero(n, n);
                for (const auto& c : pat.components) {
                    if (c.index.i == static_cast<int>(i)) rsum += c.value;
                }
                return rel(at.components[i].value, flavor == Flavor::raw ? rsum : CMatrix(hermitian_part(rsum)));
            };
            json fj = component_set_json(at, row_res, rel(total, rk.cast<Complex>()));
            fj["t"] = t;
            fj["initial_condition"] = p0 ? detail::matrix_json(*p0) : json(nullptr);
            if (opt.pairs) {
                auto pair_row = [&](std::size_t) { return rel(pat.sum(), at.sum()); };
                fj["pairs"] = component_set_json(pat, pair_row, rel(pat.sum(), CMatrix(rk.cast<Complex>())));
            }
            if (opt.inverse) {
                try {
                    const Matrix start_inv = p0 ? *p0 : Matrix::Zero(n, n);
                    auto [st, fi] = finite_inverse(cr, rs.spectrum, start_inv, t, tol);
                    const auto& set = flavor == Flavor::raw ? fi.raw : fi.symmetrized;
                    const CMatrix prod = fi.sum() * total;
                    const double id_res = (prod - CMatrix::Identity(n, n)).norm();
                    json fij = component_set_json(set, [&](std::size_t) { return id_res; }, id_res);
                    fij["normalization_condition"] = st.condition;
                    fij["normalization_inverse"] = cmatrix_json(st.G_inverse);
                    fj["inverse"] = std::move(fij);
                } catch (const ConditioningError& e) {
                    warnings.push_back(std::string("finite inverse unavailable: ") + e.what());
                }
            }
            rep["finite"] = std::move(fj);
        }

        if (rs.original) {
            const auto lifted = lift_to_original(gram, *rs.original, tol);
            const Matrix qo = rs.original->B * rs.original->B.transpose();
            json oj = component_set_json(lifted, [&](std::size_t) { return 0.0; },
                                         oracle::residual_lyapunov(rs.original->A, qo, lifted.sum().real()));
            if (rs.original->states() <= oracle::kDenseCap) {
                oj["oracle_difference"] =
                    rel(lifted.sum(), oracle::solve_lyapunov_dense(rs.original->A, qo).value.cast<Complex>());
            }
            // per-component residual: lifted part versus the component of the lifted pair set
            const auto lp = lift_to_original(infinite_pair_subgramians(cr, rs.spectrum, flavor, tol), *rs.original, tol);
            for (std::size_t i = 0; i < lifted.components.size(); ++i) {
                oj["components"][i]["matrix"]["residual"] = rel(lifted.components[i].value, flavor == Flavor::raw
                                                                    ? lp.row_sum(static_cast<int>(i))
                                                                    : CMatrix(hermitian_part(lp.row_sum(static_cast<int>(i)))));
            }
            rep["original"] = std::move(oj);
            if (opt.inverse) {
                if (rs.original->inputs() == 1) {
                    const auto ric = riccati_general(*rs.original, rs.spectrum, tol);
                    const auto& set = flavor == Flavor::raw ? ric.raw : ric.symmetrized;
                    const Matrix pinv = ric.sum().real();
                    const double res = oracle::residual_riccati(rs.original->A, rs.original->B, pinv);
                    const double id = (pinv * lifted.sum().real() - Matrix::Identity(n, n)).norm();
                    rep["original_inverse"] = component_set_json(set, [&](std::size_t) { return id; }, res);
                } else {
                    warnings.push_back("inverse decomposition in original coordinates is defined for single-input systems only");
                }
            }
        }
    } else {
        rep["path"] = "multiple";
        const auto chains = jordan_chains_companion(rs.spectrum, rs.poly, tol);
        rep["chain_condition"] = chains.condition;
        const auto gram_raw = multiple_eig_subgramians_companion(chains, Flavor::raw);
        const auto gram = flavor == Flavor::raw ? gram_raw : gram_raw.symmetrized();
        const auto inv = inverse_multiple_eig(cr, chains);
        const auto proj = chain_projectors(chains);
        auto orth_row = [&](std::size_t i) {
            double worst = 0.0;
            for (std::size_t j = 0; j < proj.size(); ++j) {
                CMatrix prod = gram_raw.components[i].value * inv.raw.components[j].value;
                if (i == j) prod -= proj[i];
                worst = std::max(worst, prod.cwiseAbs().maxCoeff() / std::max(1.0, proj[i].cwiseAbs().maxCoeff()));
            }
            return worst;
        };
        json g = component_set_json(gram, orth_row, oracle::residual_lyapunov(cr.A, q, gram.sum().real()));
        if (oracle_p) g["oracle_difference"] = rel(gram.sum(), oracle_p->cast<Complex>());
        g["zero_plaid"] = detail::zero_plaid(gram.sum());
        rep["gramian"] = std::move(g);
        if (opt.pairs) warnings.push_back("pair components are defined for simple spectra only");
        if (opt.inverse) {
            const auto& set = flavor == Flavor::raw ? inv.raw : inv.symmetrized;
            auto inv_res = [&](std::size_t j) {
                double worst = 0.0;
                for (std::size_t i = 0; i < proj.size(); ++i) {
                    CMatrix prod = gram_raw.components[i].value * inv.raw.components[j].value;
                    if (i == j) prod -= proj[i];
                    worst = std::max(worst, prod.cwiseAbs().maxCoeff() / std::max(1.0, proj[i].cwiseAbs().maxCoeff()));
                }
                return worst;
            };
            json ij = component_set_json(set, inv_res, oracle::residual_riccati(cr.A, cr.b, inv.sum().real()));
            ij["identity_residual"] = (inv.sum() * gram.sum() - CMatrix::Identity(n, n)).norm();
            rep["inverse"] = std::move(ij);
        }
        const Matrix& a = rs.original ? rs.original->A : cr.A;
        const Matrix b = rs.original ? rs.original->B : Matrix(cr.b);
        const auto md = multiple_eig_gramian(a, b, rs.spectrum, opt.finite_t, tol);
        if (opt.finite_t) {
            if (p0) warnings.push_back("initial condition is ignored on the multiple-eigenvalue path");
            const double t = *opt.finite_t;
            const auto at = md.evaluate(t, flavor);
            const Matrix rk = oracle::integrate_lyapunov(a, b * b.transpose(), Matrix::Zero(n, n), t,
                                                         std::max<long>(200, static_cast<long>(std::ceil(t * (1.0 + rs.spectrum.spectral_radius()) * 200.0))))
                                  .value;
            json fj = component_set_json(at, [&](std::size_t) { return rel(md.sum_at(t), rk.cast<Complex>()); },
                                         rel(md.sum_at(t), rk.cast<Complex>()));
            fj["t"] = t;
            fj["coordinates"] = to_string(md.coordinates);
            rep["finite"] = std::move(fj);
        }
        if (rs.original) {
            const auto st = md.static_part(flavor);
            const Matrix qo = b * b.transpose();
            const double res = oracle::residual_lyapunov(a, qo, st.sum().real());
            json oj = component_set_json(st, [&](std::size_t) { return res; }, res);
            rep["original"] = std::move(oj);
        }
    }
    rep["warnings"] = std::move(warnings);
    return rep;
}

inline json roots_report(const SystemDocument& doc) {
    const auto rs = resolve(doc);
    json rep;
    rep["schema"] = kSchemaVersion;
    if (doc.label) rep["label"] = *doc.label;
    rep["characteristic_polynomial"] = rs.poly.coeffs();
    json roots = json::array();
    for (Complex z : rs.roots) {
        json r = complex_json(z);
        r["residual"] = std::abs(eval(rs.poly, z)) / gramspec::detail::evaluation_scale(rs.poly, std::abs(z));
        roots.push_back(std::move(r));
    }
    rep["roots"] = std::move(roots);
    rep["spectrum"] = spectrum_json(rs.spectrum);
    rep["solvability"] = solvability_json(check_solvability(rs.spectrum, rs.tolerances.solve));
    rep["stable"] = rs.spectrum.is_stable();
    return rep;
}

// Target state mapped to companion coordinates.
inline Vector companion_target(const ResolvedSystem& rs, const Vector& x0) {
    if (x0.size() != rs.n()) throw DimensionError("x0 must have n entries");
    if (!rs.original) return x0;
    if (!rs.transform) throw DimensionError("energy analysis needs a single-input system");
    return rs.transform->T.partialPivLu().solve(x0);
}

inline json energy_report(const SystemDocument& doc, const Vector& x0) {
    const auto rs = resolve(doc);
    const auto& tol = rs.tolerances;
    if (!rs.single_input()) throw DimensionError("energy analysis needs a single-input system");
    require_solvable(rs.spectrum, tol.solve);
    require_simple(rs.spectrum);
    const Vector xc = companion_target(rs, x0);
    const auto inv = inverse_pair_parts(rs.companion, rs.spectrum, tol);
    const auto part = energy_partition(xc, inv);

    json rep;
    rep["schema"] = kSchemaVersion;
    if (doc.label) rep["label"] = *doc.label;
    rep["x0"] = std::vector<double>(x0.data(), x0.data() + x0.size());
    rep["spectrum"] = spectrum_json(rs.spectrum);
    rep["energy"] = part.total;
    rep["linear"] = part.linear;
    rep["quadratic"] = detail::matrix_json(part.quadratic);
    rep["linear_closure"] = std::abs(part.linear_sum() - part.total) / std::max(std::abs(part.total), 1e-300);
    rep["quadratic_closure"] = std::abs(part.quadratic_sum() - part.total) / std::max(std::abs(part.total), 1e-300);
    rep["max_imaginary"] = part.max_imaginary;
    rep["interpretation_valid"] = part.interpretation_valid;
    if (part.interpretation_valid) {
        const auto u = optimal_control(xc, rs.companion, rs.spectrum, tol);
        const double quad = control_energy_quadrature(u);
        rep["quadrature"] = {{"energy", quad},
                             {"horizon", u.horizon()},
                             {"relative_difference", std::abs(quad - part.total) / std::max(std::abs(part.total), 1e-300)}};
    }
    return rep;
}

// CSV rows t,u,re(u_1),im(u_1),... on an evenly spaced grid over [t0, t1].
inline std::string energy_time_series_csv(const SystemDocument& doc, const Vector& x0, double t0, double t1,
                                          long steps) {
    const auto rs = resolve(doc);
    if (!rs.single_input()) throw DimensionError("energy analysis needs a single-input system");
    if (!(t0 <= t1) || t1 > 0.0) throw DimensionError("time series needs t0 <= t1 <= 0");
    if (steps < 1) throw DimensionError("time series needs at least one step");
    const auto u = optimal_control(companion_target(rs, x0), rs.companion, rs.spectrum, rs.tolerances);
    std::ostringstream os;
    os.precision(17);
    os << "t,u";
    for (std::size_t i = 1; i <= u.eigenvalues().size(); ++i) os << ",re_u" << i << ",im_u" << i;
    os << "\n";
    for (long k = 0; k <= steps; ++k) {
        const double t = std::min(0.0, t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(steps));
        const auto m = u.modes(t);
        Complex s = 0.0;
        for (Complex z : m) s += z;
        os << t << "," << s.real();
        for (Complex z : m) os << "," << z.real() << "," << z.imag();
        os << "\n";
    }
    return os.str();
}

// ============================================================================
// Verification
// ============================================================================

struct Check {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    [[nodiscard]] bool passed() const { return std::isfinite(value) && value <= tolerance; }
};

inline json checks_json(const std::vector<Check>& checks) {
    json arr = json::array();
    for (const auto& c : checks) {
        arr.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"passed", c.passed()},
                       {"margin", c.tolerance - c.value}});
    }
    return arr;
}

inline std::vector<Check> verify_checks(const SystemDocument& doc, unsigned seed = 0) {
    const auto rs = resolve(doc);
    const auto& tol = rs.tolerances;
    const auto& cr = rs.companion;
    const int n = rs.n();
    if (n > oracle::kDenseCap) throw DimensionError("verify: system exceeds the dense oracle cap");
    require_solvable(rs.spectrum, tol.solve);
    std::vector<Check> out;
    const Matrix q = cr.b * cr.b.transpose();
    const Matrix p = oracle::solve_lyapunov_dense(cr.A, q).value;
    const Matrix pinv = p.inverse();
    auto add = [&](std::string name, double v, double t) { out.push_back({std::move(name), v, t}); };
    add("roots_residual", [&] {
        double w = 0.0;
        for (Complex z : rs.roots) w = std::max(w, std::abs(eval(rs.poly, z)) / gramspec::detail::evaluation_scale(rs.poly, std::abs(z)));
        return w;
    }(), 1e-10);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;

    if (rs.spectrum.is_simple()) {
        const auto gram_raw = infinite_subgramians(cr, rs.spectrum, Flavor::raw, tol);
        const auto gram = gram_raw.symmetrized();
        const auto pairs = infinite_pair_subgramians(cr, rs.spectrum, Flavor::symmetrized, tol);
        const auto inv = inverse_pair_parts(cr, rs.spectrum, tol);
        add("gramian_vs_kronecker", rel(gram.sum(), p.cast<Complex>()), 1e-8);
        add("pair_sum_vs_eigen_sum", rel(pairs.sum(), gram.sum()), 1e-8);
        add("inverse_vs_numerical_inverse", rel(inv.sum(), pinv.cast<Complex>()), 1e-7);
        add("inverse_pair_partition", rel(inv.pair_symmetrized.sum(), inv.sum()), 1e-8);
        add("riccati_residual", oracle::residual_riccati(cr.A, cr.b, inv.sum().real()), 1e-7);
        add("orthogonality", orthogonality_certificate(gram_raw, inv, rs.poly).max_violation, 1e-8);
        add("zero_plaid_gramian", detail::zero_plaid(gram.sum()) ? 0.0 : 1.0, 0.0);
        add("zero_plaid_inverse", detail::zero_plaid(inv.sum()) ? 0.0 : 1.0, 0.0);
        {
            const double t = 0.3;
            CMatrix s = CMatrix::Zero(n, n);
            for (const auto& e : rs.spectrum.entries) s += std::exp(e.value * t) * residue_companion(e.value, rs.poly);
            add("residue_expansion_vs_expm", rel(s, oracle::matrix_exp_reference(cr.A, t).cast<Complex>()), 1e-9);
        }
        for (double t : {0.1, 1.0}) {
            const Matrix start = doc.initial_condition ? *doc.initial_condition : Matrix::Zero(n, n);
            CMatrix closed = finite_subgramians(cr, rs.spectrum, t, tol).sum_at(t);
            if (doc.initial_condition) closed += homogeneous_decomposition(cr, rs.spectrum, start, t, tol).eigen.sum_at(t);
            const Matrix rk = oracle::integrate_lyapunov(cr.A, q, start, t, 4000).value;
            std::ostringstream name;
            name << "finite_vs_rk4_t" << t;
            add(name.str(), rel(closed, rk.cast<Complex>()), 1e-6);
        }
        if (rs.spectrum.is_stable()) {
            double worst = 0.0;
            for (const auto& c : pairs.components) {
                if (c.index.i != c.index.j) continue;
                Eigen::SelfAdjointEigenSolver<CMatrix> es(c.value);
                worst = std::max(worst, -es.eigenvalues().minCoeff() / std::max(1.0, c.value.norm()));
            }
            add("psd_diagonal_pairs", std::max(0.0, worst), 1e-10);
            double worst_inv = 0.0;
            for (const auto& c : inv.pair_symmetrized.components) {
                if (c.index.i != c.index.j) continue;
                Eigen::SelfAdjointEigenSolver<CMatrix> es(c.value);
                worst_inv = std::max(worst_inv, -es.eigenvalues().minCoeff() / std::max(1.0, c.value.norm()));
            }
            add("psd_diagonal_inverse_pairs", std::max(0.0, worst_inv), 1e-10);
        }
        // seeded energy closure
        Vector x0(n);
        for (int k = 0; k < n; ++k) x0(k) = normal(rng);
        const auto part = energy_partition(x0, inv);
        const double scale = std::max(std::abs(part.total), 1e-300);
        add("energy_linear_closure", std::abs(part.linear_sum() - part.total) / scale, 1e-9);
        add("energy_quadratic_closure", std::abs(part.quadratic_sum() - part.total) / scale, 1e-9);
        if (doc.initial_condition) {
            try {
                const double t = 1.0;
                auto [st, fi] = finite_inverse(cr, rs.spectrum, *doc.initial_condition, t, tol);
                CMatrix total = finite_subgramians(cr, rs.spectrum, t, tol).sum_at(t) +
                                homogeneous_decomposition(cr, rs.spectrum, *doc.initial_condition, t, tol).eigen.sum_at(t);
                add("finite_inverse_identity_t1", (fi.sum() * total - CMatrix::Identity(n, n)).norm(), 1e-6);
            } catch (const ConditioningError&) {
                add("finite_inverse_identity_t1", std::numeric_limits<double>::infinity(), 1e-6);
            }
        }
        if (rs.original && rs.original->states() <= oracle::kDenseCap) {
            const Matrix qo = rs.original->B * rs.original->B.transpose();
            const Matrix po = oracle::solve_lyapunov_dense(rs.original->A, qo).value;
            add("lifted_vs_kronecker", rel(lift_to_original(gram, *rs.original, tol).sum(), po.cast<Complex>()), 1e-7);
            if (rs.original->inputs() == 1) {
                add("riccati_general_vs_inverse",
                    rel(riccati_general(*rs.original, rs.spectrum, tol).sum(), po.inverse().cast<Complex>()), 1e-7);
            }
        }
    } else {
        const auto chains = jordan_chains_companion(rs.spectrum, rs.poly, tol);
        const auto gram_raw = multiple_eig_subgramians_companion(chains, Flavor::raw);
        const auto inv = inverse_multiple_eig(cr, chains);
        add("gramian_vs_kronecker", rel(gram_raw.symmetrized().sum(), p.cast<Complex>()), 1e-7);
        add("inverse_identity", (inv.sum() * p.cast<Complex>() - CMatrix::Identity(n, n)).norm(), 1e-7);
        add("orthogonality", orthogonality_certificate(gram_raw, inv.raw, chain_projectors(chains)).max_violation, 1e-7);
        add("riccati_residual", oracle::residual_riccati(cr.A, cr.b, inv.sum().real()), 1e-6);
        const auto md = multiple_eig_gramian(cr.A, cr.b, rs.spectrum, 1.0, tol);
        add("resolvent_gramian_vs_kronecker", rel(md.static_part().sum(), p.cast<Complex>()), 1e-7);
        const Matrix rk = oracle::integrate_lyapunov(cr.A, q, Matrix::Zero(n, n), 1.0, 4000).value;
        add("finite_vs_rk4_t1", rel(md.sum_at(1.0), rk.cast<Complex>()), 1e-6);
        if (rs.original && rs.original->states() <= oracle::kDenseCap) {
            const Matrix qo = rs.original->B * rs.original->B.transpose();
            const Matrix po = oracle::solve_lyapunov_dense(rs.original->A, qo).value;
            const auto mo = multiple_eig_gramian(rs.original->A, rs.original->B, rs.spectrum, std::nullopt, tol);
            add("original_vs_kronecker", rel(mo.static_part().sum(), po.cast<Complex>()), 1e-7);
        }
    }
    return out;
}

inline json verify_report(const SystemDocument& doc, unsigned seed = 0) {
    const auto checks = verify_checks(doc, seed);
    bool ok = true;
    for (const auto& c : checks) ok = ok && c.passed();
    json rep;
    rep["schema"] = kSchemaVersion;
    if (doc.label) rep["label"] = *doc.label;
    rep["seed"] = seed;
    rep["checks"] = checks_json(checks);
    rep["passed"] = ok;
    return rep;
}

} // namespace gramspec::io
