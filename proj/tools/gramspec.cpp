// gramspec command line: analyze | verify | energy | roots
//
// exit codes: 0 ok, 1 usage/schema, 2 solvability, 3 conditioning,
//             4 verification failed

#include "gramspec/gramspec.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using gramspec::io::json;

enum Exit { kOk = 0, kUsage = 1, kSolvability = 2, kConditioning = 3, kVerifyFailed = 4 };

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw gramspec::SchemaError("", "cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_out(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw gramspec::SchemaError("", "cannot write " + path);
    out << text;
}

json error_json(const std::string& kind, const std::string& message) {
    return {{"schema", gramspec::io::kSchemaVersion}, {"error", {{"kind", kind}, {"message", message}}}};
}

gramspec::Vector parse_vector(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw gramspec::SchemaError("--x0", "not a number: '" + item + "'");
        }
    }
    if (v.empty()) throw gramspec::SchemaError("--x0", "empty vector");
    return Eigen::Map<gramspec::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral decompositions of controllability Gramians and their inverses"};
    app.require_subcommand(1);

    std::string input, output, format = "json", initial_file, x0_text;
    double tol_root = 1e-12, tol_cluster = 1e-8, tol_solve = 1e-10;
    unsigned seed = 0;
    bool pairs = false, inverse = false, raw = false;
    double finite_t = -1.0;
    std::vector<double> series;

    auto common = [&](CLI::App* sub) {
        sub->add_option("system", input, "system document (JSON)")->required();
        sub->add_option("--tol-root", tol_root, "root residual tolerance");
        sub->add_option("--tol-cluster", tol_cluster, "root clustering tolerance");
        sub->add_option("--tol-solve", tol_solve, "solvability tolerance on |lambda_i + lambda_j|");
        sub->add_option("--output", output, "write the report to a file");
        sub->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    };

    auto* analyze = app.add_subcommand("analyze", "spectral decomposition report");
    common(analyze);
    analyze->add_flag("--pairs", pairs, "include pair-indexed components");
    analyze->add_option("--finite", finite_t, "finite horizon t")->check(CLI::NonNegativeNumber);
    analyze->add_flag("--inverse", inverse, "include inverse components");
    analyze->add_option("--initial", initial_file, "JSON file with the initial condition matrix");
    analyze->add_flag("--raw", raw, "emit raw instead of symmetrized components");

    auto* verify = app.add_subcommand("verify", "closed forms against brute-force oracles");
    common(verify);
    verify->add_option("--seed", seed, "seed for randomized checks");

    auto* energy = app.add_subcommand("energy", "minimum-energy partition");
    common(energy);
    energy->add_option("--x0", x0_text, "target state, comma separated")->required();
    energy->add_option("--time-series", series, "t0 t1 steps")->expected(3);

    auto* roots = app.add_subcommand("roots", "characteristic roots and clustering");
    common(roots);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    auto emit = [&](const json& j) { write_out(j.dump(2) + "\n", output); };
    std::optional<json> partial;
    try {
        auto doc = gramspec::io::parse_system(read_file(input));
        doc.tolerances.root = tol_root;
        doc.tolerances.cluster = tol_cluster;
        doc.tolerances.solve = tol_solve;

        if (analyze->parsed()) {
            gramspec::io::AnalyzeOptions opt;
            opt.pairs = pairs;
            opt.inverse = inverse;
            opt.raw = raw;
            if (finite_t >= 0.0) opt.finite_t = finite_t;
            if (!initial_file.empty()) {
                json j;
                try {
                    j = json::parse(read_file(initial_file));
                } catch (const json::parse_error& e) {
                    throw gramspec::SchemaError("--initial", e.what());
                }
                if (j.is_object() && j.contains("initial_condition")) j = j["initial_condition"];
                gramspec::Matrix p0 = gramspec::io::detail::matrix_at(j, "--initial");
                if ((p0 - p0.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, p0.cwiseAbs().maxCoeff())) {
                    throw gramspec::SchemaError("--initial", "must be symmetric");
                }
                opt.initial_condition = std::move(p0);
            }
            emit(gramspec::io::analyze_report(doc, opt));
            return kOk;
        }
        if (verify->parsed()) {
            const auto rep = gramspec::io::verify_report(doc, seed);
            emit(rep);
            return rep["passed"].get<bool>() ? kOk : kVerifyFailed;
        }
        if (energy->parsed()) {
            const auto x0 = parse_vector(x0_text);
            const auto rep = gramspec::io::energy_report(doc, x0);
            if (series.empty()) {
                emit(rep);
                return kOk;
            }
            if (series[2] < 1.0 || series[2] != std::floor(series[2])) {
                throw gramspec::SchemaError("--time-series", "steps must be a positive integer");
            }
            if (!rep["interpretation_valid"].get<bool>()) {
                partial = rep;
                throw gramspec::StabilityError("time series needs a stable spectrum (all Re(lambda) < 0)");
            }
            const auto csv = gramspec::io::energy_time_series_csv(doc, x0, series[0], series[1],
                                                                  static_cast<long>(series[2]));
            if (format == "csv") {
                write_out(csv, output);
            } else {
                json j = rep;
                j["time_series_csv"] = csv;
                emit(j);
            }
            return kOk;
        }
        if (roots->parsed()) {
            emit(gramspec::io::roots_report(doc));
            return kOk;
        }
    } catch (const gramspec::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::cout << error_json("schema", e.what()).dump(2) << "\n";
        return kUsage;
    } catch (const gramspec::DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::cout << error_json("dimension", e.what()).dump(2) << "\n";
        return kUsage;
    } catch (const gramspec::SolvabilityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        json j = error_json("solvability", e.what());
        json pairs_json = json::array();
        for (auto [i, k] : e.violating_pairs()) pairs_json.push_back({i, k});
        j["error"]["violating_pairs"] = pairs_json;
        if (partial) j["partition"] = *partial;
        std::cout << j.dump(2) << "\n";
        return kSolvability;
    } catch (const gramspec::ConditioningError& e) {
        std::cerr << "error: " << e.what() << "\n";
        json j = error_json("conditioning", e.what());
        j["error"]["condition"] = std::isfinite(e.condition()) ? json(e.condition()) : json(nullptr);
        std::cout << j.dump(2) << "\n";
        return kConditioning;
    } catch (const gramspec::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::cout << error_json("convergence", e.what()).dump(2) << "\n";
        return kConditioning;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
