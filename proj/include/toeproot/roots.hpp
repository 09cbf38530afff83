#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "toeproot/convolve.hpp"
#include "toeproot/errors.hpp"
#include "toeproot/gammafactor.hpp"
#include "toeproot/specialfun.hpp"
#include "toeproot/symbols.hpp"

namespace toeproot {

enum class PairingMode { optimized, canonical };
enum class MellinMode { closed, numeric };

struct RootOptions {
    std::size_t grid_n = 256;
    QuadratureSpec quadrature{};
    PairingMode pairing = PairingMode::optimized;
    int branch = 0;        // which p-th root of the calibrated constant^p
    int k_max = 50;        // identity residuals checked for k = 0..k_max
    double tolerance = 1e-6;
    MellinMode mode = MellinMode::closed;
};

/// A p-th root construction problem: the operator degree p, the closed-form
/// Mellin transform of the radial symbol, optionally the radial symbol itself
/// (needed only to sample psi directly when p = 1), and options.
struct RootProblem {
    int p = 1;
    RationalMellin mellin;
    std::optional<RadialTermSum> radial{};
    RootOptions options{};
};

inline RootProblem make_problem(const QuasihomogeneousSymbol& s, RootOptions options = {}) {
    return RootProblem{s.degree, mellin_of_terms(s.radial), s.radial, std::move(options)};
}

struct RootDiagnostics {
    std::vector<double> residuals;  // relative identity residual per k
    double max_residual = 0.0;
    int failed_k = -1;              // first k whose residual exceeds the tolerance
    double sup_abs_psi = 0.0;
    double envelope_max_ratio = 0.0;
    bool passed = false;
};

/// Result of a root construction. psi(r) = constant * psi_profile(r): the
/// profile is real-valued by construction and the constant carries any phase
/// (it may be complex when the calibration equation forces a complex p-th
/// root).
struct RootResult {
    int p;
    RationalMellin mellin;
    GridFunction psi_profile;
    std::complex<double> constant;
    BetaFactorization factorization;  // empty (constant 1) when p = 1
    RootDiagnostics diagnostics;
};

namespace detail {

/// Nine-point Fornberg first-derivative slopes on an arbitrary monotone
/// abscissa. The wide stencil buys roughly four extra orders over the
/// five-point version; the operator route needs that headroom because its
/// output feeds another quadrature pass with a 1e-10 target.
inline std::vector<double> wide_slopes(const std::vector<double>& x,
                                       const std::vector<double>& v) {
    const std::size_t n = x.size();
    constexpr std::size_t width = 9;
    std::vector<double> m(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t lo = i >= width / 2 ? i - width / 2 : 0;
        if (lo + width > n) lo = n - width;
        auto w = fd_weights(x[i], x.data() + lo, width, 1);
        double s = 0.0;
        for (std::size_t j = 0; j < width; ++j) s += w[j] * v[lo + j];
        m[i] = s;
    }
    return m;
}

/// A' * G - r * G' on the grid: the Euler differential factor applied to a
/// partially built convolution. r G' = dG/d(ln r) is taken with nine-point
/// stencils in whichever logarithmic coordinate the grid is equispaced in
/// (ln r on the left half, ln(1-r) on the right), because the graded nodes
/// span decades there and a fractional power is an exponential - hence
/// smooth - in those coordinates but not in r itself. The Euler operator
/// preserves power behavior at 0, so the exponent list is kept; the (1-r)
/// budget drops by one.
inline GridFunction apply_euler_factor(double a_prime, const GridFunction& g) {
    const auto& nodes = g.nodes();
    const auto& v = g.values();
    const std::size_t n = nodes.size();
    std::vector<double> s(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = std::log(nodes[i]);
        w[i] = std::log1p(-nodes[i]);
    }
    auto ds = wide_slopes(s, v);
    auto dw = wide_slopes(w, v);
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        double r = nodes[i];
        double r_dg = r <= 0.5 ? ds[i] : -r / (1.0 - r) * dw[i];
        values[i] = a_prime * v[i] - r_dg;
    }
    TypeEnvelope env = g.envelope();
    env.beta_sum -= 1.0;
    return GridFunction(nodes, std::move(values), std::move(env));
}

}  // namespace detail

/// n-fold convolution of Beta-term factors with differential factors
/// (A'_j - rD) interleaved.
///
/// A differential factor may only act on a function that vanishes at 1
/// (otherwise the Mellin identity M((A'-rD)f) = (zeta+A') f_hat picks up a
/// boundary term), and no single Beta-term factor of the root pipeline does.
/// So the factors are folded until the running convolution has (1-r) budget
/// above 1, each operator is applied to that partial product on the grid, and
/// one held-back factor is convolved in after each operator to restore
/// accuracy before the next. With no operators this is exactly convolve_all.
inline GridFunction convolve_with_diff_factors(const std::vector<BetaTermFunction>& factors,
                                               const std::vector<double>& diff_factors,
                                               const std::vector<double>& nodes,
                                               const QuadratureSpec& spec = {}) {
    if (diff_factors.empty()) return convolve_all(factors, nodes, spec);
    const std::size_t d = diff_factors.size();
    if (factors.size() < d + 1)
        fail(errc::unsupported_symbol,
             "convolve_with_diff_factors: " + std::to_string(d) +
                 " differential factors need at least " + std::to_string(d + 1) +
                 " convolution factors, got " + std::to_string(factors.size()));

    std::vector<BetaTermFunction> fs = factors;
    std::stable_sort(fs.begin(), fs.end(),
                     [](const BetaTermFunction& x, const BetaTermFunction& y) {
                         return envelope_of(x).alpha() > envelope_of(y).alpha();
                     });
    QuadratureSpec inner = spec;
    inner.relative_tolerance = spec.relative_tolerance * 10.0;

    const std::size_t head = fs.size() - d;
    std::vector<BetaTermFunction> head_factors(fs.begin(), fs.begin() + head);
    GridFunction g = convolve_all(head_factors, nodes, inner);
    for (std::size_t j = 0; j < d; ++j) {
        if (!(g.envelope().beta_sum > 1.0))
            fail(errc::unsupported_symbol,
                 "convolve_with_diff_factors: partial convolution has (1-r) budget " +
                     std::to_string(g.envelope().beta_sum) +
                     " <= 1, so it does not vanish at 1 and the differential factor cannot "
                     "be applied");
        g = detail::apply_euler_factor(diff_factors[j], g);
        g = convolve_pair(to_factor(g), to_factor(fs[head + j]), nodes,
                          j + 1 == d ? spec : inner);
    }
    return g;
}

/// Solves the k = 0 instance of the root identity for the constant:
///   prod_{j=0}^{p-1} (2j+4) C u((2j+3)/(2p)) = (2p+2) phi_hat(p+2),
/// where u is the factored Mellin profile. The equation fixes C^p; the
/// principal p-th root is returned (complex when the ratio is negative or the
/// symbol's sign demands it).
inline std::complex<double> calibrate_constant(const BetaFactorization& bf,
                                               const RationalMellin& rm, int p) {
    if (p < 1) fail(errc::range, "calibrate_constant: p must be >= 1, got " + std::to_string(p));
    double coeff = 1.0;
    double uprod = 1.0;
    for (int j = 0; j < p; ++j) {
        coeff *= 2.0 * j + 4.0;
        uprod *= eval_factored(bf, (2.0 * j + 3.0) / (2.0 * p));
    }
    const double rhs = (2.0 * p + 2.0) * mellin_eval(rm, static_cast<double>(p + 2));
    const double denom = coeff * uprod;
    if (!(std::abs(denom) > 1e-300 * std::abs(rhs)) || !std::isfinite(denom))
        fail(errc::accuracy,
             "calibrate_constant: factored profile vanishes at a calibration point "
             "(degenerate calibration)");
    std::complex<double> cp(rhs / denom, 0.0);
    return std::pow(cp, 1.0 / p);
}

namespace detail {

// psi_hat on the half-line, by mode. closed uses the Gamma-factored form
// C*u(z/(2p)) (or C*phi_hat for p=1); numeric integrates the profile.
class PsiMellin {
  public:
    PsiMellin(const RootResult& res, MellinMode mode) : res_(res), mode_(mode) {
        if (mode == MellinMode::numeric) {
            eval_ = make_evaluable(res.psi_profile);
            hints_ = {res.psi_profile.envelope().alpha(),
                      res.psi_profile.envelope().beta_sum - 1.0};
        }
    }

    std::complex<double> operator()(double z) const {
        if (mode_ == MellinMode::closed) {
            if (res_.p == 1) return res_.constant * res_.mellin.eval(z);
            return res_.constant * eval_factored(res_.factorization, z / (2.0 * res_.p));
        }
        QuadratureSpec spec;
        spec.endpoint_hints = hints_;
        return res_.constant * mellin_numeric(eval_, z, spec);
    }

  private:
    const RootResult& res_;
    MellinMode mode_;
    std::function<double(double, double)> eval_;
    std::pair<double, double> hints_{0.0, 0.0};
};

}  // namespace detail

/// Relative residuals of the root identity
///   prod_{j=0}^{p-1} 2(k+j+2) psi_hat(2(k+j)+3) = 2(k+p+1) phi_hat(2k+p+2)
/// for k = 0..k_max. A quadrature failure in numeric mode marks the affected
/// residuals infinite instead of throwing, so a flagged result is always
/// produced.
inline std::vector<double> identity_residuals(const RootResult& res, int k_max, MellinMode mode) {
    if (k_max < 0) fail(errc::range, "identity_residuals: k_max must be >= 0");
    detail::PsiMellin psi_hat(res, mode);
    const int p = res.p;
    std::vector<std::complex<double>> s(static_cast<std::size_t>(k_max) + p);
    for (int k = 0; k < k_max + p; ++k) {
        try {
            s[k] = 2.0 * (k + 2.0) * psi_hat(2.0 * k + 3.0);
        } catch (const error& e) {
            if (e.category() != errc::accuracy) throw;
            s[k] = std::complex<double>(std::numeric_limits<double>::quiet_NaN(), 0.0);
        }
    }
    std::vector<double> residuals(static_cast<std::size_t>(k_max) + 1);
    for (int k = 0; k <= k_max; ++k) {
        std::complex<double> lhs(1.0, 0.0);
        for (int j = 0; j < p; ++j) lhs *= s[k + j];
        double rhs = 2.0 * (k + p + 1.0) * mellin_eval(res.mellin, 2.0 * k + p + 2.0);
        double denom = std::max(std::abs(rhs), 1e-300);
        double r = std::abs(lhs - rhs) / denom;
        residuals[k] = std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
    }
    return residuals;
}

namespace detail {

inline RootDiagnostics finish_diagnostics(RootResult& res, const RootOptions& opt) {
    RootDiagnostics d;
    d.residuals = identity_residuals(res, opt.k_max, opt.mode);
    for (std::size_t k = 0; k < d.residuals.size(); ++k) {
        d.max_residual = std::max(d.max_residual, d.residuals[k]);
        if (d.failed_k < 0 && !(d.residuals[k] <= opt.tolerance))
            d.failed_k = static_cast<int>(k);
    }
    double sup = 0.0;
    for (double v : res.psi_profile.values()) sup = std::max(sup, std::abs(v));
    d.sup_abs_psi = std::abs(res.constant) * sup;
    d.envelope_max_ratio = envelope_ratio(res.psi_profile, 0).max_ratio;
    d.passed = d.failed_k < 0 && std::isfinite(d.sup_abs_psi) &&
               std::isfinite(d.envelope_max_ratio);
    return d;
}

/// Real-space radial symbol for the p = 1 bypass: prefer the stored term sum;
/// otherwise invert the partial fractions of the transform (simple
/// denominator roots only).
inline RadialTermSum radial_for_identity_root(const RootProblem& prob) {
    if (prob.radial) return *prob.radial;
    return terms_of_mellin(prob.mellin);
}

}  // namespace detail

/// Builds the radial profile of a p-th root of the quasihomogeneous Toeplitz
/// operator with radial symbol phi:
///   p = 1: psi = phi (identity root), constant 1;
///   p >= 2: Gamma-quotient factorization -> Beta factors -> n-fold Mellin
///   convolution (differential factors interleaved) -> substitution t = r^{2p}
///   -> constant calibration, i.e. psi(r) = 2p C H(r^{2p}).
/// Factorization preconditions throw; a verification shortfall does not - the
/// result is returned with diagnostics flagged.
inline RootResult construct_root(const RootProblem& prob) {
    const RootOptions& opt = prob.options;
    if (prob.p < 1)
        fail(errc::range, "construct_root: p must be >= 1, got " + std::to_string(prob.p));
    if (opt.branch < 0 || opt.branch >= prob.p)
        fail(errc::range, "construct_root: branch must lie in [0, p), got " +
                              std::to_string(opt.branch));
    if (!(opt.tolerance > 0.0)) fail(errc::range, "construct_root: tolerance must be positive");
    auto nodes = graded_grid(opt.grid_n);

    if (prob.p == 1) {
        RadialTermSum phi = detail::radial_for_identity_root(prob);
        std::vector<double> values(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) values[i] = phi(nodes[i]);
        // Dominant term a_min with its log order sets the envelope law.
        double a_min = phi.terms.front().a;
        int log_order = phi.terms.front().b;
        for (const auto& t : phi.terms)
            if (t.a < a_min || (t.a == a_min && t.b > log_order)) {
                a_min = t.a;
                log_order = t.b;
            }
        TypeEnvelope env{std::vector<double>(static_cast<std::size_t>(log_order) + 1, a_min),
                         1.0};
        RootResult res{prob.p,
                       prob.mellin,
                       GridFunction(nodes, std::move(values), std::move(env)),
                       {1.0, 0.0},
                       BetaFactorization{},
                       {}};
        res.diagnostics = detail::finish_diagnostics(res, opt);
        return res;
    }

    auto quotients = build_quotients(prob.mellin, prob.p);
    if (opt.pairing == PairingMode::optimized) quotients = pair_optimize(quotients);
    auto bf = to_beta_factors(quotients);

    std::vector<BetaTermFunction> factors;
    factors.reserve(bf.beta_factors.size());
    for (const auto& f : bf.beta_factors) factors.push_back({{{1.0, f.a, f.b}}});
    GridFunction h = convolve_with_diff_factors(factors, bf.diff_factors, nodes, opt.quadrature);

    std::complex<double> c = calibrate_constant(bf, prob.mellin, prob.p);
    if (opt.branch != 0) {
        double theta = 2.0 * 3.141592653589793238 * opt.branch / prob.p;
        c *= std::complex<double>(std::cos(theta), std::sin(theta));
    }

    // psi(r) = 2p C H(r^{2p}): resample the convolution through the exact
    // substitution; the profile keeps the factorization constant so that
    // M(profile)(z) = u(z/(2p)) and psi_hat = C * M(profile).
    const double two_p = 2.0 * prob.p;
    auto h_eval = make_evaluable(h);
    std::vector<double> profile(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        double r = nodes[i];
        double t = std::pow(r, two_p);
        double omt = -std::expm1(two_p * std::log(r));
        profile[i] = two_p * bf.constant * h_eval(t, omt);
    }
    TypeEnvelope env = h.envelope();
    for (double& a : env.a_list) a *= two_p;
    RootResult res{prob.p,
                   prob.mellin,
                   GridFunction(nodes, std::move(profile), std::move(env)),
                   c,
                   std::move(bf),
                   {}};
    res.diagnostics = detail::finish_diagnostics(res, opt);
    return res;
}

/// Mellin transform of the constructed root at z > 0: closed mode evaluates
/// the Gamma-factored form C u(z/(2p)); numeric mode integrates the profile.
inline std::complex<double> psi_mellin(const RootResult& res, double z, MellinMode mode) {
    if (!(z > 0.0))
        fail(errc::range, "psi_mellin: z must be positive, got " + std::to_string(z));
    return detail::PsiMellin(res, mode)(z);
}

}  // namespace toeproot
