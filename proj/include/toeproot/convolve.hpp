#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "toeproot/errors.hpp"
#include "toeproot/specialfun.hpp"

namespace toeproot {

/// One closed-form term c * r^a * (1-r)^(b-1).
struct BetaTerm {
    double c = 0.0;
    double a = 0.0;
    double b = 0.0;
};

/// Finite sum of Beta terms, evaluated with an explicit 1-r argument so the
/// (1-r)^(b-1) part stays accurate arbitrarily close to 1.
struct BetaTermFunction {
    std::vector<BetaTerm> terms;

    double operator()(double r, double omr) const {
        double s = 0.0;
        for (const auto& t : terms)
            s += t.c * std::pow(r, t.a) * std::pow(omr, t.b - 1.0);
        return s;
    }
    double operator()(double r) const { return (*this)(r, 1.0 - r); }
};

/// Envelope metadata of a convolution product: the leading exponents a_i of
/// the convolved factors and the total (1-r) exponent. The product behaves
/// like r^alpha * (1-r)^(beta_sum-1) * ln(e/r)^log_power near the endpoints,
/// where alpha = min(a_i) and log_power is one less than the multiplicity of
/// that minimum.
struct TypeEnvelope {
    std::vector<double> a_list;
    double beta_sum = 0.0;

    double alpha() const {
        if (a_list.empty()) fail(errc::range, "TypeEnvelope: empty exponent list");
        return *std::min_element(a_list.begin(), a_list.end());
    }
    int min_multiplicity() const {
        double m = alpha();
        int l = 0;
        for (double a : a_list)
            if (std::abs(a - m) <= 1e-9 * std::max(1.0, std::abs(m))) ++l;
        return l;
    }
    int log_power() const { return min_multiplicity() - 1; }
};

/// Dominant-term envelope of a Beta-term sum: smallest a wins; among equals
/// the smaller b (stronger singularity at 1) wins.
inline TypeEnvelope envelope_of(const BetaTermFunction& f) {
    if (f.terms.empty()) fail(errc::range, "envelope_of: zero function has no envelope");
    const BetaTerm* dom = &f.terms.front();
    for (const auto& t : f.terms) {
        if (t.a < dom->a - 1e-12 ||
            (std::abs(t.a - dom->a) <= 1e-12 && t.b < dom->b))
            dom = &t;
    }
    return TypeEnvelope{{dom->a}, dom->b};
}

/// Applies the operator (A' - r d/dr) to a Beta-term sum in closed form:
///   c r^a (1-r)^(b-1)  ->  c(A'-a) r^a (1-r)^(b-1) + c(b-1) r^(a+1) (1-r)^(b-2).
/// Like terms merge and zero terms drop, so annihilation (A' = a on a single
/// power) returns an empty function.
inline BetaTermFunction apply_diff_factor(double a_prime, const BetaTermFunction& f) {
    std::vector<BetaTerm> raw;
    raw.reserve(2 * f.terms.size());
    for (const auto& t : f.terms) {
        raw.push_back({t.c * (a_prime - t.a), t.a, t.b});
        raw.push_back({t.c * (t.b - 1.0), t.a + 1.0, t.b - 1.0});
    }
    double scale = 0.0;
    for (const auto& t : raw) scale = std::max(scale, std::abs(t.c));
    BetaTermFunction out;
    for (const auto& t : raw) {
        if (std::abs(t.c) <= 1e-14 * scale) continue;
        bool merged = false;
        for (auto& u : out.terms) {
            if (std::abs(u.a - t.a) <= 1e-12 && std::abs(u.b - t.b) <= 1e-12) {
                u.c += t.c;
                merged = true;
                break;
            }
        }
        if (!merged) out.terms.push_back(t);
    }
    std::erase_if(out.terms, [&](const BetaTerm& t) { return std::abs(t.c) <= 1e-14 * scale; });
    return out;
}

/// Nodes graded toward both endpoints by a quintic smoothstep, pinned to the
/// fixed hull [1e-6, 1 - 1e-6] for every n so refinement keeps the endpoint
/// coverage (and the endpoint nodes themselves) unchanged.
inline std::vector<double> graded_grid(std::size_t n) {
    if (n < 16) fail(errc::range, "graded_grid: need at least 16 nodes");
    const double delta = 1e-6;
    std::vector<double> nodes(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u = static_cast<double>(i) / static_cast<double>(n - 1);
        double s = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
        nodes[i] = delta + (1.0 - 2.0 * delta) * s;
    }
    return nodes;
}

namespace detail {

/// Finite-difference weights for the m-th derivative at z from the n nodes x.
inline std::vector<double> fd_weights(double z, const double* x, int n, int m) {
    std::vector<double> c(static_cast<std::size_t>(n) * (m + 1), 0.0);
    auto at = [&](int j, int k) -> double& { return c[static_cast<std::size_t>(j) * (m + 1) + k]; };
    double c1 = 1.0, c4 = x[0] - z;
    at(0, 0) = 1.0;
    for (int i = 1; i < n; ++i) {
        int mn = std::min(i, m);
        double c2 = 1.0, c5 = c4;
        c4 = x[i] - z;
        for (int j = 0; j < i; ++j) {
            double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    at(i, k) = c1 * (k * at(i - 1, k - 1) - c5 * at(i - 1, k)) / c2;
                at(i, 0) = -c1 * c5 * at(i - 1, 0) / c2;
            }
            for (int k = mn; k >= 1; --k) at(j, k) = (c4 * at(j, k) - k * at(j, k - 1)) / c3;
            at(j, 0) = c4 * at(j, 0) / c3;
        }
        c1 = c2;
    }
    std::vector<double> out(n);
    for (int j = 0; j < n; ++j) out[j] = at(j, m);
    return out;
}

/// Five-point finite-difference slope estimates at every node (fourth-order
/// accurate on smooth data; no monotonicity limiting, which would cost an
/// order of accuracy at interior extrema).
inline std::vector<double> fd_slopes(const std::vector<double>& x,
                                          const std::vector<double>& v) {
    const std::size_t n = x.size();
    std::vector<double> m(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t lo = i >= 2 ? i - 2 : 0;
        if (lo + 5 > n) lo = n - 5;
        auto w = fd_weights(x[i], x.data() + lo, 5, 1);
        double s = 0.0;
        for (int j = 0; j < 5; ++j) s += w[j] * v[lo + j];
        m[i] = s;
    }
    return m;
}

inline double hermite(double v0, double v1, double m0, double m1, double h, double t) {
    double t2 = t * t, t3 = t2 * t;
    return (2.0 * t3 - 3.0 * t2 + 1.0) * v0 + (t3 - 2.0 * t2 + t) * h * m0 +
           (-2.0 * t3 + 3.0 * t2) * v1 + (t3 - t2) * h * m1;
}

}  // namespace detail

/// Immutable sampled function on a graded grid, interpolated by a monotone
/// piecewise cubic (five-point slope estimates, clamped so the interpolant
/// cannot overshoot between nodes).
class GridFunction {
  public:
    GridFunction(std::vector<double> nodes, std::vector<double> values, TypeEnvelope envelope)
        : nodes_(std::move(nodes)), values_(std::move(values)), envelope_(std::move(envelope)) {
        if (nodes_.size() < 16) fail(errc::range, "GridFunction: need at least 16 nodes");
        if (nodes_.size() != values_.size())
            fail(errc::range, "GridFunction: node/value size mismatch");
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (!(nodes_[i] > 0.0) || !(nodes_[i] < 1.0))
                fail(errc::range, "GridFunction: nodes must lie strictly inside (0,1)");
            if (i > 0 && !(nodes_[i] > nodes_[i - 1]))
                fail(errc::range, "GridFunction: nodes must be strictly increasing");
            if (!std::isfinite(values_[i]))
                fail(errc::range, "GridFunction: non-finite value at node " + std::to_string(i));
        }
        compute_slopes();
    }

    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& slopes() const { return slopes_; }
    const TypeEnvelope& envelope() const { return envelope_; }

  private:
    void compute_slopes() { slopes_ = detail::fd_slopes(nodes_, values_); }

    std::vector<double> nodes_, values_;
    TypeEnvelope envelope_;
    std::vector<double> slopes_;
};

/// Cubic Hermite evaluation at r; r must lie within the node hull.
inline double grid_eval(const GridFunction& h, double r) {
    const auto& x = h.nodes();
    if (!(r >= x.front()) || !(r <= x.back()))
        fail(errc::range, "grid_eval: point " + std::to_string(r) + " outside node hull [" +
                              std::to_string(x.front()) + ", " + std::to_string(x.back()) + "]");
    auto it = std::upper_bound(x.begin(), x.end(), r);
    std::size_t k = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
    if (k + 1 >= x.size()) k = x.size() - 2;
    double hx = x[k + 1] - x[k];
    double t = (r - x[k]) / hx;
    double t2 = t * t, t3 = t2 * t;
    const auto& v = h.values();
    const auto& m = h.slopes();
    return (2.0 * t3 - 3.0 * t2 + 1.0) * v[k] + (t3 - 2.0 * t2 + t) * hx * m[k] +
           (-2.0 * t3 + 3.0 * t2) * v[k + 1] + (t3 - t2) * hx * m[k + 1];
}

/// Endpoint-aware callable view of a GridFunction.
///
/// Plain interpolation of the node values breaks down toward the endpoints:
/// the function behaves like r^alpha ln(e/r)^log_power near 0 and like
/// (1-r)^(beta_sum-1) near 1, and a cubic in r cannot track a fractional
/// power across nodes whose spacing is comparable to their distance from the
/// endpoint. So the callable divides the envelope law out and interpolates
/// the reduced (smooth, slowly varying) function instead, in coordinates
/// adapted to each end:
///   - intervals wholly inside (0, 0.1]: reduced function vs ln r,
///   - intervals wholly inside [0.9, 1): reduced function vs ln(1-r),
///   - elsewhere: plain cubic Hermite of the values vs r.
/// Beyond the first/last node the reduced function is frozen, which continues
/// the evaluator by the pure envelope laws, continuously with the edge zones.
inline std::function<double(double, double)> make_evaluable(const GridFunction& h) {
    struct Data {
        std::vector<double> x, v, m;      // nodes, values, d(value)/dr
        std::vector<double> s, w, rho;    // ln r, ln(1-r), reduced values
        std::vector<double> ms, mw;       // d(rho)/d(ln r), d(rho)/d(ln(1-r))
        double alpha = 0.0, beta = 1.0, lp = 0.0;
        std::size_t left_end = 0;    // intervals [k,k+1] with k+1 <= left_end use the s-scheme
        std::size_t right_begin = 0; // intervals with k >= right_begin use the w-scheme
    };
    auto d = std::make_shared<Data>();
    d->x = h.nodes();
    d->v = h.values();
    d->m = h.slopes();
    d->alpha = h.envelope().alpha();
    d->beta = h.envelope().beta_sum;
    d->lp = static_cast<double>(h.envelope().log_power());
    const std::size_t n = d->x.size();
    auto law = [d](double x, double omx) {
        double l = std::pow(x, d->alpha) * std::pow(omx, d->beta - 1.0);
        if (d->lp > 0.0) l *= std::pow(1.0 + std::log(1.0 / x), d->lp);
        return l;
    };
    d->s.resize(n);
    d->w.resize(n);
    d->rho.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double omx = 1.0 - d->x[i];
        d->s[i] = std::log(d->x[i]);
        d->w[i] = std::log(omx);
        d->rho[i] = d->v[i] / law(d->x[i], omx);
    }
    d->ms = detail::fd_slopes(d->s, d->rho);
    d->mw = detail::fd_slopes(d->w, d->rho);
    d->left_end = 0;
    while (d->left_end + 1 < n && d->x[d->left_end + 1] <= 0.1) ++d->left_end;
    d->right_begin = n - 1;
    while (d->right_begin > 0 && d->x[d->right_begin - 1] >= 0.9) --d->right_begin;
    return [d, law](double x, double omx) -> double {
        const auto& xs = d->x;
        if (x < xs.front()) {
            if (x <= 0.0) return d->alpha > 0.0 ? 0.0 : d->rho.front();
            return d->rho.front() * law(x, omx);
        }
        if (x > xs.back() || omx < 1.0 - xs.back()) {
            if (omx <= 0.0) return d->beta > 1.0 ? 0.0 : d->rho.back();
            return d->rho.back() * law(x, omx);
        }
        auto it = std::upper_bound(xs.begin(), xs.end(), x);
        std::size_t k = it == xs.begin() ? 0 : static_cast<std::size_t>(it - xs.begin()) - 1;
        if (k + 1 >= xs.size()) k = xs.size() - 2;
        if (k + 1 <= d->left_end) {
            double hs = d->s[k + 1] - d->s[k];
            double t = (std::log(x) - d->s[k]) / hs;
            double rho =
                detail::hermite(d->rho[k], d->rho[k + 1], d->ms[k], d->ms[k + 1], hs, t);
            return rho * law(x, omx);
        }
        if (k >= d->right_begin) {
            double hw = d->w[k + 1] - d->w[k];
            double t = (std::log(omx) - d->w[k]) / hw;
            if (!(t >= 0.0)) t = 0.0;
            if (!(t <= 1.0)) t = 1.0;
            double rho =
                detail::hermite(d->rho[k], d->rho[k + 1], d->mw[k], d->mw[k + 1], hw, t);
            return rho * law(x, omx);
        }
        double hx = xs[k + 1] - xs[k];
        double t = (x - xs[k]) / hx;
        return detail::hermite(d->v[k], d->v[k + 1], d->m[k], d->m[k + 1], hx, t);
    };
}

/// A factor that can enter a Mellin convolution: an endpoint-aware evaluator
/// plus its envelope.
struct ConvolutionFactor {
    std::function<double(double, double)> eval;
    TypeEnvelope envelope;
};

inline ConvolutionFactor to_factor(const BetaTermFunction& f) {
    return {f, envelope_of(f)};
}

inline ConvolutionFactor to_factor(const GridFunction& h) {
    return {make_evaluable(h), h.envelope()};
}

/// Mellin convolution (f*g)(r) = int_r^1 f(r/t) g(t) dt/t at each grid node,
/// via the substitution t = r + u(1-r):
///   value(r) = int_0^1 f(r/t, u(1-r)/t) g(t, (1-u)(1-r)) (1-r)/t du.
/// The envelope of the result concatenates the factor exponent lists and adds
/// the (1-r) budgets.
inline GridFunction convolve_pair(const ConvolutionFactor& f, const ConvolutionFactor& g,
                                  const std::vector<double>& nodes,
                                  const QuadratureSpec& spec = {}) {
    for (const ConvolutionFactor* c : {&f, &g})
        if (!(c->envelope.alpha() > -1.0) || !(c->envelope.beta_sum > 0.0))
            fail(errc::range, "convolve_pair: factor envelope not integrable on (0,1)");
    QuadratureSpec qs = spec;
    qs.endpoint_hints = std::make_pair(f.envelope.beta_sum - 1.0, g.envelope.beta_sum - 1.0);
    std::vector<double> values(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double r = nodes[i];
        const double omr = 1.0 - r;
        auto integrand = [&](double u, double omu) {
            double t = r + u * omr;
            double x1 = r / t;
            double omx1 = u * omr / t;
            double omt = omu * omr;
            return f.eval(x1, omx1) * g.eval(t, omt) * omr / t;
        };
        try {
            values[i] = integrate01(integrand, qs).value;
        } catch (const error& e) {
            if (e.category() != errc::accuracy) throw;
            fail(errc::accuracy, "convolve_pair: quadrature failed at node " + std::to_string(i) +
                                     " (r = " + std::to_string(r) + "): " + e.what());
        }
    }
    TypeEnvelope env = f.envelope;
    env.a_list.insert(env.a_list.end(), g.envelope.a_list.begin(), g.envelope.a_list.end());
    env.beta_sum += g.envelope.beta_sum;
    return GridFunction(nodes, std::move(values), std::move(env));
}

/// n-fold Mellin convolution as a left fold of convolve_pair, factors sorted
/// by descending leading exponent. Inner convolutions run at 10x looser
/// tolerance than the final one; a single factor is sampled directly.
inline GridFunction convolve_all(const std::vector<BetaTermFunction>& factors,
                                 const std::vector<double>& nodes,
                                 const QuadratureSpec& spec = {}) {
    if (factors.empty()) fail(errc::range, "convolve_all: need at least one factor");
    std::vector<BetaTermFunction> fs = factors;
    std::stable_sort(fs.begin(), fs.end(), [](const BetaTermFunction& x, const BetaTermFunction& y) {
        return envelope_of(x).alpha() > envelope_of(y).alpha();
    });
    if (fs.size() == 1) {
        std::vector<double> values(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) values[i] = fs[0](nodes[i]);
        return GridFunction(nodes, std::move(values), envelope_of(fs[0]));
    }
    QuadratureSpec inner = spec;
    inner.relative_tolerance = spec.relative_tolerance * 10.0;
    GridFunction h = convolve_pair(to_factor(fs[0]), to_factor(fs[1]), nodes,
                                   fs.size() == 2 ? spec : inner);
    for (std::size_t i = 2; i < fs.size(); ++i)
        h = convolve_pair(to_factor(h), to_factor(fs[i]), nodes,
                          i + 1 == fs.size() ? spec : inner);
    return h;
}

/// k-th derivative estimate (k <= 3) by five-point local differentiation.
/// The two nodes nearest each end are dropped so every stencil is centered;
/// the envelope shifts to (alpha - k, beta_sum - k) with the log power kept.
inline GridFunction grid_derivative(const GridFunction& h, int k) {
    if (k < 1 || k > 3) fail(errc::range, "grid_derivative: order must be 1, 2, or 3");
    const auto& x = h.nodes();
    const auto& v = h.values();
    if (x.size() < 20) fail(errc::range, "grid_derivative: need at least 20 nodes");
    std::vector<double> nodes(x.begin() + 2, x.end() - 2);
    std::vector<double> values(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        std::size_t lo = i;  // window [i, i+4] of the source grid centers node i+2
        auto w = detail::fd_weights(x[i + 2], x.data() + lo, 5, k);
        double d = 0.0;
        for (int j = 0; j < 5; ++j) d += w[j] * v[lo + j];
        values[i] = d;
    }
    TypeEnvelope env = h.envelope();
    for (double& a : env.a_list) a -= k;
    env.beta_sum -= k;
    return GridFunction(std::move(nodes), std::move(values), std::move(env));
}

/// Pointwise comparison of |h^(k)| against its envelope law
///   r^(alpha) (1-r)^(beta_sum-1) ln(e/r)^(log_power)
/// (exponents already shifted when k >= 1). Derivative estimates near the
/// endpoints are stencil-limited, so for k >= 1 the profile is restricted to
/// the trust window [1e-3, 1 - 1e-3].
struct EnvelopeRatio {
    double max_ratio = 0.0;
    std::vector<std::pair<double, double>> profile;
};

inline EnvelopeRatio envelope_ratio(const GridFunction& h, int k) {
    if (k < 0) fail(errc::range, "envelope_ratio: order must be >= 0");
    const GridFunction* hk = &h;
    GridFunction store = h;
    if (k >= 1) {
        store = grid_derivative(h, k);
        hk = &store;
    }
    const TypeEnvelope& env = hk->envelope();
    const double alpha = env.alpha();
    const double beta = env.beta_sum;
    const double lp = env.log_power();
    EnvelopeRatio out;
    for (std::size_t i = 0; i < hk->nodes().size(); ++i) {
        double r = hk->nodes()[i];
        if (k >= 1 && (r < 1e-3 || r > 1.0 - 1e-3)) continue;
        double denom = std::pow(r, alpha) * std::pow(1.0 - r, beta - 1.0) *
                       std::pow(1.0 + std::log(1.0 / r), lp);
        double ratio = std::abs(hk->values()[i]) / denom;
        out.profile.emplace_back(r, ratio);
        out.max_ratio = std::max(out.max_ratio, ratio);
    }
    return out;
}

}  // namespace toeproot
