#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "toeproot/errors.hpp"
#include "toeproot/symbols.hpp"

namespace toeproot {

/// A quasihomogeneous Toeplitz operator acting on the monomial basis of the
/// Bergman space as a weighted shift: z^k -> weights[k] * z^{k+degree}. The
/// weights are stored in the raw monomial convention; the square-root
/// correction of the normalized basis appears only in truncated_matrix.
struct WeightedShift {
    int degree = 1;
    std::vector<std::complex<double>> weights;

    int k_max() const { return static_cast<int>(weights.size()) - 1; }
};

/// Weighted shift of the operator with symbol e^{i p theta} phi(r):
/// w_k = 2(k+p+1) phi_hat(2k+p+2), with phi_hat supplied as an evaluator so
/// the same routine serves rational transforms and constructed roots.
template <class F>
    requires std::invocable<F&, double>
WeightedShift shift_of_symbol(int p, F&& mellin, int k_max) {
    if (p < 1) fail(errc::range, "shift_of_symbol: degree must be >= 1, got " + std::to_string(p));
    if (k_max < 0) fail(errc::range, "shift_of_symbol: k_max must be >= 0");
    WeightedShift s;
    s.degree = p;
    s.weights.resize(static_cast<std::size_t>(k_max) + 1);
    for (int k = 0; k <= k_max; ++k)
        s.weights[k] = 2.0 * (k + p + 1.0) *
                       std::complex<double>(mellin(static_cast<double>(2 * k + p + 2)));
    return s;
}

inline WeightedShift shift_of_symbol(int p, const RationalMellin& rm, int k_max) {
    return shift_of_symbol(p, [&rm](double z) { return rm.eval(z); }, k_max);
}

/// p-fold composition of a degree-1 weighted shift:
/// (S^p) z^k = prod_{j=0}^{p-1} w_{k+j} * z^{k+p}.
inline WeightedShift compose_power(const WeightedShift& s, int p) {
    if (s.degree != 1)
        fail(errc::range, "compose_power: shift must have degree 1, got degree " +
                              std::to_string(s.degree));
    if (p < 1) fail(errc::range, "compose_power: power must be >= 1, got " + std::to_string(p));
    if (static_cast<int>(s.weights.size()) < p)
        fail(errc::range, "compose_power: shift carries " + std::to_string(s.weights.size()) +
                              " weights, fewer than the power " + std::to_string(p));
    WeightedShift out;
    out.degree = p;
    out.weights.resize(s.weights.size() - p + 1);
    for (std::size_t k = 0; k < out.weights.size(); ++k) {
        std::complex<double> w(1.0, 0.0);
        for (int j = 0; j < p; ++j) w *= s.weights[k + j];
        out.weights[k] = w;
    }
    return out;
}

/// Residual report of a weighted-shift identity check.
struct VerifyReport {
    std::vector<double> residuals;  // relative, absolute where the target is ~0
    double max_residual = 0.0;
    std::vector<int> failed;        // every k whose residual exceeds tol
    double tol = 0.0;
    bool passed = false;
};

/// Checks that the p-fold composition of a degree-1 candidate matches the
/// target degree-p shift weight by weight. Residuals are relative, switching
/// to absolute when the target weight is below 1e-12.
inline VerifyReport verify_identity(const WeightedShift& target, const WeightedShift& candidate,
                                    int p, double tol) {
    if (target.degree != p)
        fail(errc::range, "verify_identity: target degree " + std::to_string(target.degree) +
                              " does not match p = " + std::to_string(p));
    if (!(tol > 0.0)) fail(errc::range, "verify_identity: tolerance must be positive");
    WeightedShift composed = compose_power(candidate, p);
    std::size_t n = std::min(target.weights.size(), composed.weights.size());
    if (n == 0) fail(errc::range, "verify_identity: no overlapping weight range");
    VerifyReport rep;
    rep.tol = tol;
    rep.residuals.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        double denom = std::abs(target.weights[k]);
        double diff = std::abs(composed.weights[k] - target.weights[k]);
        double r = denom < 1e-12 ? diff : diff / denom;
        rep.residuals[k] = r;
        rep.max_residual = std::max(rep.max_residual, r);
        if (!(r <= tol)) rep.failed.push_back(static_cast<int>(k));
    }
    rep.passed = rep.failed.empty();
    return rep;
}

/// N x N finite section of the shift in the normalized basis
/// e_k = sqrt(k+1) z^k: entry (k+p, k) = w_k sqrt((k+1)/(k+p+1)).
inline Eigen::MatrixXcd truncated_matrix(const WeightedShift& s, int n) {
    if (n < 1) fail(errc::range, "truncated_matrix: size must be >= 1, got " + std::to_string(n));
    const int p = s.degree;
    const int needed = n - p;  // weights w_0..w_{N-p-1} fill the section
    if (needed > static_cast<int>(s.weights.size()))
        fail(errc::range, "truncated_matrix: size " + std::to_string(n) + " needs " +
                              std::to_string(needed) + " weights, shift carries " +
                              std::to_string(s.weights.size()));
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    for (int k = 0; k + p < n; ++k)
        m(k + p, k) = s.weights[k] * std::sqrt((k + 1.0) / (k + p + 1.0));
    return m;
}

}  // namespace toeproot
