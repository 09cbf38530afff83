#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <span>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "toeproot/errors.hpp"
#include "toeproot/specialfun.hpp"

namespace toeproot {

/// One radial term c * r^a * (ln r)^b on (0, 1).
struct RadialTerm {
    double c = 0.0;
    double a = 0.0;
    int b = 0;
};

/// Finite sum of radial terms. Bounded near 0 requires a > 0 whenever a log
/// factor is present, hence a = 0 forces b = 0.
struct RadialTermSum {
    std::vector<RadialTerm> terms;

    void validate() const {
        if (terms.empty())
            fail(errc::range, "RadialTermSum: at least one term required");
        for (const auto& t : terms) {
            if (!(t.a >= 0.0))
                fail(errc::range, "RadialTermSum: exponent a must be >= 0, got " +
                                      std::to_string(t.a));
            if (t.b < 0)
                fail(errc::range, "RadialTermSum: log power b must be >= 0");
            if (t.a == 0.0 && t.b > 0)
                fail(errc::range, "RadialTermSum: a = 0 requires b = 0 for boundedness");
        }
    }

    double operator()(double r) const {
        double v = 0.0;
        for (const auto& t : terms) {
            double term = t.c * std::pow(r, t.a);
            for (int j = 0; j < t.b; ++j) term *= std::log(r);
            v += term;
        }
        return v;
    }
};

/// Symbol e^{i p theta} * phi(r) with phi a radial term sum.
struct QuasihomogeneousSymbol {
    int degree = 1;  // p
    RadialTermSum radial;

    void validate() const {
        if (degree < 1) fail(errc::range, "QuasihomogeneousSymbol: degree p must be >= 1");
        radial.validate();
    }
};

namespace detail {

// Ascending-coefficient polynomial product.
inline std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

inline std::string format_complex(std::complex<double> z) {
    std::ostringstream os;
    os << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
    return os.str();
}

}  // namespace detail

/// Real roots of a polynomial given by ascending coefficients, via the
/// eigenvalues of the companion matrix. A root whose imaginary part exceeds
/// 1e-9 (relative to its size) is rejected with an unsupported-symbol error.
inline std::vector<double> real_poly_roots(std::vector<double> coeffs) {
    // Trim numerically vanishing leading coefficients.
    double scale = 0.0;
    for (double c : coeffs) scale = std::max(scale, std::abs(c));
    if (scale == 0.0) return {};
    while (coeffs.size() > 1 && std::abs(coeffs.back()) <= 1e-12 * scale) coeffs.pop_back();
    const std::size_t n = coeffs.size() - 1;
    if (n == 0) return {};

    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                      static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i + 1 < n; ++i)
        companion(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) = 1.0;
    for (std::size_t i = 0; i < n; ++i)
        companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n - 1)) =
            -coeffs[i] / coeffs.back();

    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
    std::vector<double> roots;
    roots.reserve(n);
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
        std::complex<double> z = solver.eigenvalues()(i);
        if (std::abs(z.imag()) > 1e-9 * std::max(1.0, std::abs(z)))
            fail(errc::unsupported_symbol,
                 "complex root " + detail::format_complex(z) + " outside the supported class");
        roots.push_back(z.real());
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

/// Strictly proper rational function
///   constant * prod_j (z + num_roots[j]) / prod_k (z + den_roots[k]),
/// the closed form of the Mellin transform of a radial term sum. Root lists
/// are stored sorted; common roots are cancelled on construction.
class RationalMellin {
public:
    RationalMellin(double constant, std::vector<double> num_roots, std::vector<double> den_roots)
        : constant_(constant), num_roots_(std::move(num_roots)), den_roots_(std::move(den_roots)) {
        if (constant_ == 0.0 || !std::isfinite(constant_))
            fail(errc::unsupported_symbol, "RationalMellin: constant must be finite and nonzero");
        std::sort(num_roots_.begin(), num_roots_.end());
        std::sort(den_roots_.begin(), den_roots_.end());
        cancel_common_roots();
        if (num_roots_.size() >= den_roots_.size())
            fail(errc::properness,
                 "RationalMellin: numerator degree " + std::to_string(num_roots_.size()) +
                     " must be below denominator degree " + std::to_string(den_roots_.size()));
    }

    double constant() const noexcept { return constant_; }
    std::span<const double> num_roots() const noexcept { return num_roots_; }
    std::span<const double> den_roots() const noexcept { return den_roots_; }

    template <class Z>
    Z eval(Z z) const {
        for (double b : den_roots_)
            if (std::abs(z + b) <= 1e-12 * std::max(1.0, std::abs(z)))
                fail(errc::range, "mellin_eval: z = " + detail::format_complex(std::complex<double>(z)) +
                                      " is at the pole -(" + std::to_string(b) + ")");
        Z v = Z(constant_);
        for (double a : num_roots_) v *= z + a;
        for (double b : den_roots_) v /= z + b;
        return v;
    }

private:
    void cancel_common_roots() {
        std::vector<double> keep_num;
        for (double a : num_roots_) {
            auto it = std::find_if(den_roots_.begin(), den_roots_.end(), [a](double b) {
                return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a));
            });
            if (it != den_roots_.end())
                den_roots_.erase(it);
            else
                keep_num.push_back(a);
        }
        num_roots_ = std::move(keep_num);
    }

    double constant_;
    std::vector<double> num_roots_;
    std::vector<double> den_roots_;
};

/// Closed-form Mellin transform of a term sum over (0, 1):
///   M(c r^a (ln r)^b)(z) = c * (-1)^b * b! / (z + a)^{b+1}.
/// The partial fractions are recombined over the least common denominator and
/// the numerator factored over the reals.
inline RationalMellin mellin_of_terms(const RadialTermSum& s) {
    s.validate();

    // Pole orders: multiplicity of (z + a) is max(b) + 1 over the terms at a.
    std::map<double, int> order;
    bool any = false;
    for (const auto& t : s.terms) {
        if (t.c == 0.0) continue;
        any = true;
        int& m = order[t.a];
        m = std::max(m, t.b + 1);
    }
    if (!any) fail(errc::unsupported_symbol, "mellin_of_terms: zero symbol");

    std::vector<double> den_roots;
    for (const auto& [a, m] : order)
        for (int i = 0; i < m; ++i) den_roots.push_back(a);

    // Numerator over the common denominator.
    std::vector<double> numerator(1, 0.0);
    numerator.resize(den_roots.size(), 0.0);
    for (const auto& t : s.terms) {
        if (t.c == 0.0) continue;
        double fact = 1.0;
        for (int j = 2; j <= t.b; ++j) fact *= j;
        double coeff = t.c * ((t.b % 2) ? -fact : fact);
        std::vector<double> part{coeff};
        for (const auto& [a, m] : order) {
            int power = (a == t.a) ? m - t.b - 1 : m;
            for (int i = 0; i < power; ++i) part = detail::poly_mul(part, {a, 1.0});
        }
        for (std::size_t i = 0; i < part.size(); ++i) numerator[i] += part[i];
    }

    double scale = 0.0;
    for (double c : numerator) scale = std::max(scale, std::abs(c));
    if (scale == 0.0) fail(errc::unsupported_symbol, "mellin_of_terms: zero symbol");
    while (numerator.size() > 1 && std::abs(numerator.back()) <= 1e-12 * scale)
        numerator.pop_back();

    std::vector<double> roots = real_poly_roots(numerator);
    std::vector<double> num_roots;
    num_roots.reserve(roots.size());
    for (double z : roots) num_roots.push_back(-z);  // factor (z + a_j) has zero at -a_j
    return RationalMellin(numerator.back(), std::move(num_roots), std::move(den_roots));
}

/// Inverse of mellin_of_terms for simple denominator roots: partial fractions
/// of the transform give phi(r) = sum_k res_k r^{b_k}. A repeated denominator
/// root would need logarithmic terms and is rejected.
inline RadialTermSum terms_of_mellin(const RationalMellin& rm) {
    const auto& dens = rm.den_roots();  // sorted by the constructor
    for (std::size_t i = 0; i + 1 < dens.size(); ++i)
        if (std::abs(dens[i] - dens[i + 1]) <= 1e-9 * std::max(1.0, std::abs(dens[i])))
            fail(errc::unsupported_symbol,
                 "terms_of_mellin: repeated denominator root " + std::to_string(dens[i]) +
                     " needs logarithmic terms; supply the radial terms directly");
    RadialTermSum s;
    for (std::size_t k = 0; k < dens.size(); ++k) {
        double res_k = rm.constant();
        for (double a : rm.num_roots()) res_k *= a - dens[k];
        for (std::size_t j = 0; j < dens.size(); ++j)
            if (j != k) res_k /= dens[j] - dens[k];
        s.terms.push_back({res_k, dens[k], 0});
    }
    return s;
}

template <class Z>
Z mellin_eval(const RationalMellin& rm, Z z) {
    return rm.eval(z);
}

/// Quadrature evaluation of the Mellin transform of f at real z > 0.
///
/// Integrates in the variable v = r^z, which absorbs the r^{z-1} law exactly:
/// the transform becomes (1/z) * integral of f(v^{1/z}) over (0,1). Without
/// this substitution the integrand concentrates against r = 1 as z grows and
/// quadrature accuracy collapses; with it the mass sits mid-interval for any
/// z. f's own endpoint laws (declared through spec) become r^{s0} -> v^{s0/z}
/// at 0 and keep exponent s1 at 1, since 1 - v^{1/z} ~ (1-v)/z there.
template <class F>
double mellin_numeric(F&& f, double z, QuadratureSpec spec = {}) {
    if (!(z > 0.0))
        fail(errc::range, "mellin_numeric: z must be positive, got " + std::to_string(z));
    double s0 = spec.endpoint_hints ? spec.endpoint_hints->first : 0.0;
    double s1 = spec.endpoint_hints ? spec.endpoint_hints->second : 0.0;
    spec.endpoint_hints = {{s0 / z, s1}};
    const double inv_z = 1.0 / z;
    if constexpr (endpoint_aware_integrand<F>) {
        return inv_z * integrate01(
                           [&f, inv_z](double v, double omv) {
                               double x = std::pow(v, inv_z);
                               double omx = -std::expm1(std::log1p(-omv) * inv_z);
                               return f(x, omx);
                           },
                           spec)
                           .value;
    } else {
        return inv_z * integrate01(
                           [&f, inv_z](double v) {
                               double x = std::pow(v, inv_z);
                               // Keep one-argument integrands off the exact
                               // endpoint their own law may blow up at.
                               if (x >= 1.0) x = std::nextafter(1.0, 0.0);
                               return f(x);
                           },
                           spec)
                           .value;
    }
}

}  // namespace toeproot
