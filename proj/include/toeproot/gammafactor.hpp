#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "toeproot/errors.hpp"
#include "toeproot/specialfun.hpp"
#include "toeproot/symbols.hpp"

namespace toeproot {

/// One factor Gamma(zeta + num) / Gamma(zeta + den).
struct GammaQuotientPair {
    double num = 0.0;
    double den = 0.0;
};

/// constant * prod_i Gamma(zeta + pairs[i].num) / Gamma(zeta + pairs[i].den).
struct GammaQuotientProduct {
    double constant = 1.0;
    std::vector<GammaQuotientPair> pairs;
};

/// One factor B(zeta + a, b).
struct BetaFactor {
    double a = 0.0;
    double b = 0.0;
};

/// constant * prod B(zeta + a_i, b_i) * prod (zeta + A'_j). The linear
/// factors (diff_factors) are the Mellin shadows of (A' - rD) operators; the
/// constant absorbs 1/Gamma(b_i) per Beta factor so the product equals the
/// source Gamma-quotient product exactly.
struct BetaFactorization {
    double constant = 1.0;
    std::vector<BetaFactor> beta_factors;
    std::vector<double> diff_factors;
};

/// Gamma-quotient parameters of the normalized Mellin symbol of a p-th root.
///
/// For lambda(zeta) proportional to psi_hat(2p zeta), the rational data of
/// phi_hat contributes, per numerator root a_j and denominator root b_k:
///   base pair    (1/(2p), (2p-1)/(2p))
///   a_j pair     ((a_j+p+1)/(2p), (a_j+p-1)/(2p))
///   b_k pair     ((b_k+p-1)/(2p), (b_k+p+1)/(2p))
/// All parameters must be positive; p = 1 has a trivial root (psi = phi) and
/// is rejected here.
inline GammaQuotientProduct build_quotients(const RationalMellin& rm, int p) {
    if (p < 2)
        fail(errc::range, "build_quotients: requires p >= 2; p = 1 roots are the symbol itself");
    const double q = 2.0 * p;
    GammaQuotientProduct g;
    g.constant = rm.constant();
    g.pairs.push_back({1.0 / q, (q - 1.0) / q});
    for (double a : rm.num_roots()) {
        GammaQuotientPair pr{(a + p + 1.0) / q, (a + p - 1.0) / q};
        if (!(pr.num > 0.0) || !(pr.den > 0.0))
            fail(errc::positivity, "build_quotients: numerator root " + std::to_string(a) +
                                       " gives a nonpositive Gamma parameter at p = " +
                                       std::to_string(p));
        g.pairs.push_back(pr);
    }
    for (double b : rm.den_roots()) {
        GammaQuotientPair pr{(b + p - 1.0) / q, (b + p + 1.0) / q};
        if (!(pr.num > 0.0) || !(pr.den > 0.0))
            fail(errc::positivity, "build_quotients: denominator root " + std::to_string(b) +
                                       " gives a nonpositive Gamma parameter at p = " +
                                       std::to_string(p));
        g.pairs.push_back(pr);
    }
    return g;
}

/// Re-pairs numerator and denominator parameters by sorted matching. The
/// product of the quotients is unchanged; the sorted matching maximizes pairs
/// with num < den, which minimizes the differential factors the Beta
/// factorization needs downstream.
inline GammaQuotientProduct pair_optimize(const GammaQuotientProduct& g) {
    std::vector<double> nums, dens;
    nums.reserve(g.pairs.size());
    dens.reserve(g.pairs.size());
    for (const auto& pr : g.pairs) {
        nums.push_back(pr.num);
        dens.push_back(pr.den);
    }
    std::sort(nums.begin(), nums.end());
    std::sort(dens.begin(), dens.end());
    GammaQuotientProduct out;
    out.constant = g.constant;
    out.pairs.resize(nums.size());
    for (std::size_t i = 0; i < nums.size(); ++i) out.pairs[i] = {nums[i], dens[i]};
    return out;
}

/// Total (1-r) exponent the factorization of g must carry: sum of (den - num)
/// plus one per shifted pair (num in (den, den+1)).
inline double exponent_budget(const GammaQuotientProduct& g) {
    double budget = 0.0;
    for (const auto& pr : g.pairs) {
        budget += pr.den - pr.num;
        if (pr.num > pr.den + 1e-12 * std::max(1.0, std::abs(pr.num))) budget += 1.0;
    }
    return budget;
}

/// Rewrites each Gamma quotient as a Beta factor, possibly with a linear
/// shift factor:
///   num < den:          Gamma(z+num)/Gamma(z+den) = B(z+num, den-num)/Gamma(den-num)
///   num = den:          dropped
///   den < num < den+1:  Gamma(z+num)/Gamma(z+den)
///                         = (z+den) * B(z+num, den+1-num)/Gamma(den+1-num)
/// and folds every 1/Gamma(b) into the constant, so eval_factored of the
/// result equals eval_quotients of the input.
inline BetaFactorization to_beta_factors(const GammaQuotientProduct& g) {
    BetaFactorization bf;
    bf.constant = g.constant;
    for (const auto& pr : g.pairs) {
        const double tol = 1e-12 * std::max(1.0, std::abs(pr.num));
        if (std::abs(pr.num - pr.den) <= tol) continue;
        if (pr.num < pr.den) {
            double b = pr.den - pr.num;
            bf.beta_factors.push_back({pr.num, b});
            bf.constant /= std::exp(log_gamma(b));
        } else if (pr.num < pr.den + 1.0) {
            double b = pr.den + 1.0 - pr.num;
            bf.beta_factors.push_back({pr.num, b});
            bf.diff_factors.push_back(pr.den);
            bf.constant /= std::exp(log_gamma(b));
        } else {
            fail(errc::unsupported_symbol,
                 "to_beta_factors: pair (" + std::to_string(pr.num) + ", " +
                     std::to_string(pr.den) + ") has num >= den + 1; configuration unsupported");
        }
    }
    return bf;
}

/// Raw Gamma-quotient evaluation at zeta, in log space.
inline double eval_quotients(const GammaQuotientProduct& g, double zeta) {
    double log_sum = 0.0;
    for (const auto& pr : g.pairs)
        log_sum += log_gamma(zeta + pr.num) - log_gamma(zeta + pr.den);
    return g.constant * std::exp(log_sum);
}

/// Evaluates constant * prod B(zeta + a, b) * prod (zeta + A').
inline double eval_factored(const BetaFactorization& bf, double zeta) {
    double log_sum = 0.0;
    for (const auto& f : bf.beta_factors)
        log_sum += log_gamma(zeta + f.a) + log_gamma(f.b) - log_gamma(zeta + f.a + f.b);
    double v = bf.constant * std::exp(log_sum);
    for (double A : bf.diff_factors) v *= zeta + A;
    return v;
}

}  // namespace toeproot
