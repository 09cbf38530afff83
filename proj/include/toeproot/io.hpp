#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "toeproot/convolve.hpp"
#include "toeproot/errors.hpp"
#include "toeproot/roots.hpp"
#include "toeproot/symbols.hpp"
#include "toeproot/toeplitz.hpp"

namespace toeproot {

inline std::string category_name(errc c) { return to_string(c); }

/// {"error": {"category": ..., "message": ...}} - the one error shape every
/// command emits.
inline nlohmann::json error_json(const error& e) {
    return {{"error", {{"category", category_name(e.category())}, {"message", e.what()}}}};
}

// ---------------------------------------------------------------------------
// Symbol input: {"p": int, "terms": [{"c", "a", "b"}...]} or
//               {"p": int, "rational": {"constant", "num_roots", "den_roots"}}
// ---------------------------------------------------------------------------

struct SymbolInput {
    int p = 1;
    RationalMellin mellin;
    std::optional<RadialTermSum> radial;
};

namespace detail {

inline double json_number(const nlohmann::json& j, const char* key, const char* where) {
    if (!j.contains(key) || !j.at(key).is_number())
        fail(errc::range, std::string(where) + ": missing or non-numeric field \"" + key + "\"");
    return j.at(key).get<double>();
}

inline std::vector<double> json_number_list(const nlohmann::json& j, const char* where) {
    if (!j.is_array()) fail(errc::range, std::string(where) + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) fail(errc::range, std::string(where) + ": non-numeric array entry");
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace detail

inline SymbolInput parse_symbol_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(errc::range, "symbol input: expected a JSON object");
    if (!j.contains("p") || !j.at("p").is_number_integer())
        fail(errc::range, "symbol input: missing integer field \"p\"");
    int p = j.at("p").get<int>();
    if (j.contains("terms")) {
        if (!j.at("terms").is_array() || j.at("terms").empty())
            fail(errc::range, "symbol input: \"terms\" must be a non-empty array");
        RadialTermSum sum;
        for (const auto& t : j.at("terms")) {
            RadialTerm term;
            term.c = detail::json_number(t, "c", "symbol term");
            term.a = detail::json_number(t, "a", "symbol term");
            double b = t.contains("b") ? detail::json_number(t, "b", "symbol term") : 0.0;
            if (b != std::floor(b) || b < 0.0)
                fail(errc::range, "symbol term: log power \"b\" must be a nonnegative integer");
            term.b = static_cast<int>(b);
            sum.terms.push_back(term);
        }
        sum.validate();
        return {p, mellin_of_terms(sum), std::move(sum)};
    }
    if (j.contains("rational")) {
        const auto& r = j.at("rational");
        double constant = detail::json_number(r, "constant", "rational symbol");
        std::vector<double> num, den;
        if (r.contains("num_roots")) num = detail::json_number_list(r.at("num_roots"), "num_roots");
        if (!r.contains("den_roots"))
            fail(errc::range, "rational symbol: missing \"den_roots\"");
        den = detail::json_number_list(r.at("den_roots"), "den_roots");
        return {p, RationalMellin(constant, num, den), std::nullopt};
    }
    fail(errc::range, "symbol input: need either \"terms\" or \"rational\"");
}

inline SymbolInput load_symbol_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::range, "cannot open input file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(errc::range, "invalid JSON in " + path + ": " + e.what());
    }
    return parse_symbol_json(j);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const TypeEnvelope& env) {
    return {{"a_list", env.a_list},
            {"beta_sum", env.beta_sum},
            {"alpha", env.alpha()},
            {"log_power", env.log_power()}};
}

inline nlohmann::json to_json(const GridFunction& g) {
    return {{"nodes", g.nodes()}, {"values", g.values()}, {"envelope", to_json(g.envelope())}};
}

inline nlohmann::json to_json(const VerifyReport& rep) {
    return {{"residuals", rep.residuals},
            {"max_residual", rep.max_residual},
            {"failed", rep.failed},
            {"tol", rep.tol},
            {"passed", rep.passed}};
}

inline nlohmann::json to_json(const RootResult& res) {
    return {{"p", res.p},
            {"constant", {{"re", res.constant.real()}, {"im", res.constant.imag()}}},
            {"psi", to_json(res.psi_profile)},
            {"envelope", to_json(res.psi_profile.envelope())},
            {"residuals", res.diagnostics.residuals},
            {"max_residual", res.diagnostics.max_residual},
            {"failed_k", res.diagnostics.failed_k},
            {"sup_abs_psi", res.diagnostics.sup_abs_psi},
            {"envelope_max_ratio", res.diagnostics.envelope_max_ratio},
            {"passed", res.diagnostics.passed}};
}

// ---------------------------------------------------------------------------
// Parsing stored grids and roots (the verify command reads these back)
// ---------------------------------------------------------------------------

inline TypeEnvelope envelope_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("a_list") || !j.contains("beta_sum"))
        fail(errc::range, "envelope record: need \"a_list\" and \"beta_sum\"");
    TypeEnvelope env;
    env.a_list = detail::json_number_list(j.at("a_list"), "a_list");
    env.beta_sum = j.at("beta_sum").get<double>();
    return env;
}

inline GridFunction grid_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("nodes") || !j.contains("values") || !j.contains("envelope"))
        fail(errc::range, "grid record: need \"nodes\", \"values\", \"envelope\"");
    auto nodes = detail::json_number_list(j.at("nodes"), "nodes");
    auto values = detail::json_number_list(j.at("values"), "values");
    return GridFunction(std::move(nodes), std::move(values), envelope_from_json(j.at("envelope")));
}

/// The part of a stored root needed to re-verify it: profile, constant, p.
/// (The factored transform is not serialized, so re-verification of a stored
/// root always integrates the profile, i.e. runs in numeric Mellin mode.)
struct StoredRoot {
    int p = 1;
    GridFunction psi;
    std::complex<double> constant;
};

inline StoredRoot root_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("p") || !j.contains("psi") || !j.contains("constant"))
        fail(errc::range, "root record: need \"p\", \"psi\", \"constant\"");
    const auto& c = j.at("constant");
    return {j.at("p").get<int>(), grid_from_json(j.at("psi")),
            {detail::json_number(c, "re", "constant"), detail::json_number(c, "im", "constant")}};
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::string csv_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

/// Two-column plot data: r, value.
inline void write_grid_csv(std::ostream& out, const GridFunction& g) {
    out << "r,value\n";
    for (std::size_t i = 0; i < g.nodes().size(); ++i)
        out << detail::csv_double(g.nodes()[i]) << ',' << detail::csv_double(g.values()[i])
            << '\n';
}

/// Three-column plot data of psi = constant * profile: r, Re psi, Im psi.
inline void write_root_csv(std::ostream& out, const RootResult& res) {
    out << "r,psi_re,psi_im\n";
    for (std::size_t i = 0; i < res.psi_profile.nodes().size(); ++i) {
        std::complex<double> v = res.constant * res.psi_profile.values()[i];
        out << detail::csv_double(res.psi_profile.nodes()[i]) << ','
            << detail::csv_double(v.real()) << ',' << detail::csv_double(v.imag()) << '\n';
    }
}

/// Sparse triplets of a complex matrix: row, col, re, im (nonzero entries in
/// row-major order).
inline void write_matrix_csv(std::ostream& out, const Eigen::MatrixXcd& m) {
    out << "row,col,re,im\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (m(i, j) != std::complex<double>(0.0, 0.0))
                out << i << ',' << j << ',' << detail::csv_double(m(i, j).real()) << ','
                    << detail::csv_double(m(i, j).imag()) << '\n';
}

}  // namespace toeproot
