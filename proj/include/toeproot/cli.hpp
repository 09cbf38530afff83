#pragma once

#include <cmath>
#include <complex>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "toeproot/convolve.hpp"
#include "toeproot/errors.hpp"
#include "toeproot/io.hpp"
#include "toeproot/roots.hpp"
#include "toeproot/symbols.hpp"
#include "toeproot/toeplitz.hpp"

namespace toeproot {

/// One CLI invocation, command plus overrides. Defaults follow the library:
/// grid 256, k_max 50, closed Mellin mode, optimized pairing, branch 0, and a
/// tolerance of 1e-6 for closed-mode checks / 1e-4 for numeric ones (applied
/// when tol is left at 0).
struct RunConfig {
    std::string command;            // root | verify | mellin | convolve | lemma-a | lemma-b
    std::string input;              // problem JSON path
    std::string out_prefix;         // artifact path prefix; empty = report to the log stream
    int p_override = 0;             // 0 = take p from the input file
    double tol = 0.0;               // 0 = mode default
    std::size_t grid_n = 256;
    int k_max = 50;
    PairingMode pairing = PairingMode::optimized;
    int branch = 0;
    MellinMode mode = MellinMode::closed;
    std::string psi_path;           // verify: stored root JSON
    std::vector<double> z_points;   // mellin: evaluation points (default 3,5,7,11)
};

namespace detail {

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) fail(errc::range, "cannot write output file: " + path);
    out << text;
}

inline void emit_json(const RunConfig& cfg, std::ostream& log, const std::string& suffix,
                      const nlohmann::json& j) {
    std::string text = j.dump(2) + "\n";
    if (cfg.out_prefix.empty())
        log << text;
    else
        write_text_file(cfg.out_prefix + suffix, text);
}

inline double tol_or_default(const RunConfig& cfg) {
    if (cfg.tol > 0.0) return cfg.tol;
    return cfg.mode == MellinMode::closed ? 1e-6 : 1e-4;
}

inline int resolve_p(const RunConfig& cfg, const SymbolInput& in) {
    int p = cfg.p_override > 0 ? cfg.p_override : in.p;
    if (p < 1) fail(errc::range, "command " + cfg.command + ": p must be >= 1");
    return p;
}

inline int run_root(const RunConfig& cfg, std::ostream& log) {
    SymbolInput in = load_symbol_file(cfg.input);
    RootOptions opt;
    opt.grid_n = cfg.grid_n;
    opt.pairing = cfg.pairing;
    opt.branch = cfg.branch;
    opt.k_max = cfg.k_max;
    opt.tolerance = tol_or_default(cfg);
    opt.mode = cfg.mode;
    RootProblem prob{resolve_p(cfg, in), std::move(in.mellin), std::move(in.radial), opt};
    RootResult res = construct_root(prob);
    emit_json(cfg, log, ".root.json", to_json(res));
    if (!cfg.out_prefix.empty()) {
        std::ostringstream csv;
        write_root_csv(csv, res);
        write_text_file(cfg.out_prefix + ".psi.csv", csv.str());
    }
    log << "root: p=" << res.p << " max_residual=" << res.diagnostics.max_residual
        << (res.diagnostics.passed ? " PASS" : " FAIL") << "\n";
    return res.diagnostics.passed ? 0 : 1;
}

inline int run_verify(const RunConfig& cfg, std::ostream& log) {
    SymbolInput in = load_symbol_file(cfg.input);
    int p = resolve_p(cfg, in);
    if (cfg.psi_path.empty()) fail(errc::range, "verify: a stored root file is required (--psi)");
    std::ifstream psi_in(cfg.psi_path);
    if (!psi_in) fail(errc::range, "cannot open stored root: " + cfg.psi_path);
    nlohmann::json j;
    try {
        psi_in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(errc::range, "invalid JSON in " + cfg.psi_path + ": " + e.what());
    }
    StoredRoot stored = root_from_json(j);
    if (stored.p != p)
        fail(errc::range, "verify: stored root has p = " + std::to_string(stored.p) +
                              ", expected " + std::to_string(p));

    // A stored root carries only the profile, so its transform is integrated
    // numerically; the tolerance default is the numeric one.
    double tol = cfg.tol > 0.0 ? cfg.tol : 1e-4;
    auto target = shift_of_symbol(p, in.mellin, cfg.k_max);
    auto eval = make_evaluable(stored.psi);
    QuadratureSpec spec;
    spec.endpoint_hints = {stored.psi.envelope().alpha(), stored.psi.envelope().beta_sum - 1.0};
    auto candidate = shift_of_symbol(
        1,
        [&](double z) { return stored.constant * mellin_numeric(eval, z, spec); },
        cfg.k_max + p - 1);
    VerifyReport rep = verify_identity(target, candidate, p, tol);
    emit_json(cfg, log, ".verify.json", to_json(rep));
    log << "verify: p=" << p << " max_residual=" << rep.max_residual
        << (rep.passed ? " PASS" : " FAIL") << "\n";
    return rep.passed ? 0 : 1;
}

inline int run_mellin(const RunConfig& cfg, std::ostream& log) {
    SymbolInput in = load_symbol_file(cfg.input);
    RadialTermSum phi = in.radial ? *in.radial : terms_of_mellin(in.mellin);
    std::vector<double> zs = cfg.z_points.empty()
                                 ? std::vector<double>{3.0, 5.0, 7.0, 11.0}
                                 : cfg.z_points;
    double tol = cfg.tol > 0.0 ? cfg.tol : 1e-6;
    nlohmann::json entries = nlohmann::json::array();
    bool ok = true;
    for (double z : zs) {
        double closed = mellin_eval(in.mellin, z);
        double numeric = mellin_numeric(phi, z);
        double rel = std::abs(numeric - closed) / std::max(std::abs(closed), 1e-300);
        ok = ok && rel <= tol;
        entries.push_back({{"z", z}, {"closed", closed}, {"numeric", numeric}, {"rel_diff", rel}});
    }
    emit_json(cfg, log, ".mellin.json",
              {{"points", entries}, {"tol", tol}, {"passed", ok}});
    log << "mellin: " << zs.size() << " points" << (ok ? " PASS" : " FAIL") << "\n";
    return ok ? 0 : 1;
}

/// Factors input for convolve / lemma commands:
/// {"factors": [{"c": 1, "a": 0.5, "b": 0.5}, [{...}, {...}], ...]} - each
/// entry is one convolution factor, either a single Beta term or an array of
/// them.
inline std::vector<BetaTermFunction> load_factors_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::range, "cannot open input file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(errc::range, "invalid JSON in " + path + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("factors") || !j.at("factors").is_array() ||
        j.at("factors").empty())
        fail(errc::range, "factors input: need a non-empty \"factors\" array");
    auto parse_term = [](const nlohmann::json& t) {
        BetaTerm term;
        term.c = t.contains("c") ? json_number(t, "c", "factor term") : 1.0;
        term.a = json_number(t, "a", "factor term");
        term.b = json_number(t, "b", "factor term");
        return term;
    };
    std::vector<BetaTermFunction> fs;
    for (const auto& entry : j.at("factors")) {
        BetaTermFunction f;
        if (entry.is_array()) {
            for (const auto& t : entry) f.terms.push_back(parse_term(t));
        } else {
            f.terms.push_back(parse_term(entry));
        }
        if (f.terms.empty()) fail(errc::range, "factors input: empty factor entry");
        fs.push_back(std::move(f));
    }
    return fs;
}

inline int run_convolve(const RunConfig& cfg, std::ostream& log) {
    auto fs = load_factors_file(cfg.input);
    GridFunction h = convolve_all(fs, graded_grid(cfg.grid_n));
    emit_json(cfg, log, ".convolve.json", to_json(h));
    if (!cfg.out_prefix.empty()) {
        std::ostringstream csv;
        write_grid_csv(csv, h);
        write_text_file(cfg.out_prefix + ".convolve.csv", csv.str());
    }
    log << "convolve: " << fs.size() << " factors on " << h.nodes().size() << " nodes\n";
    return 0;
}

inline int run_lemma(const RunConfig& cfg, std::ostream& log, std::vector<int> orders,
                     double drift_limit, const char* suffix) {
    auto fs = load_factors_file(cfg.input);
    GridFunction h = convolve_all(fs, graded_grid(cfg.grid_n));
    GridFunction h2 = convolve_all(fs, graded_grid(cfg.grid_n * 2));
    nlohmann::json entries = nlohmann::json::array();
    bool ok = true;
    for (int k : orders) {
        EnvelopeRatio er = envelope_ratio(h, k);
        EnvelopeRatio er2 = envelope_ratio(h2, k);
        double drift = std::abs(er2.max_ratio - er.max_ratio) / er.max_ratio;
        bool finite = std::isfinite(er.max_ratio) && std::isfinite(er2.max_ratio) &&
                      er.max_ratio > 0.0;
        ok = ok && finite && drift < drift_limit;
        entries.push_back({{"k", k},
                           {"max_ratio", er.max_ratio},
                           {"max_ratio_refined", er2.max_ratio},
                           {"drift", drift}});
        if (!cfg.out_prefix.empty()) {
            std::ostringstream csv;
            csv << "r,ratio\n";
            for (const auto& [r, ratio] : er.profile)
                csv << csv_double(r) << ',' << csv_double(ratio) << '\n';
            write_text_file(cfg.out_prefix + std::string(suffix) + ".k" + std::to_string(k) +
                                ".csv",
                            csv.str());
        }
    }
    emit_json(cfg, log, std::string(suffix) + ".json",
              {{"entries", entries}, {"drift_limit", drift_limit}, {"passed", ok}});
    log << (suffix + 1) << ": " << (ok ? "PASS" : "FAIL") << "\n";
    return ok ? 0 : 1;
}

}  // namespace detail

/// Executes one command; artifacts go next to out_prefix (or, with no prefix,
/// the JSON report goes to the log stream). Returns the process exit status:
/// 0 when every check passed, 1 otherwise. Library errors come back as
/// structured JSON on the log stream, never as uncaught exceptions.
inline int run(const RunConfig& cfg, std::ostream& log) {
    try {
        if (cfg.command == "root") return detail::run_root(cfg, log);
        if (cfg.command == "verify") return detail::run_verify(cfg, log);
        if (cfg.command == "mellin") return detail::run_mellin(cfg, log);
        if (cfg.command == "convolve") return detail::run_convolve(cfg, log);
        if (cfg.command == "lemma-a") return detail::run_lemma(cfg, log, {0}, 0.05, ".lemma-a");
        if (cfg.command == "lemma-b")
            return detail::run_lemma(cfg, log, {1, 2}, 0.10, ".lemma-b");
        fail(errc::range, "unknown command: " + cfg.command);
    } catch (const error& e) {
        log << error_json(e).dump(2) << "\n";
        return 1;
    } catch (const std::exception& e) {
        log << error_json(error(errc::range, e.what())).dump(2) << "\n";
        return 1;
    }
}

}  // namespace toeproot
