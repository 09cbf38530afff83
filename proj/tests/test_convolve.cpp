#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "test_support.hpp"
#include "toeproot/convolve.hpp"
#include "toeproot/symbols.hpp"

using namespace toeproot;
using Catch::Approx;

namespace {

const BetaTermFunction kR{{{1.0, 1.0, 1.0}}};    // r
const BetaTermFunction kOne{{{1.0, 0.0, 1.0}}};  // 1

// |got - want| <= rel * max(|want|, floor): relative where the value is
// meaningful, absolute below the floor.
void check_close(double got, double want, double rel, double floor_abs) {
    CHECK(std::abs(got - want) <= rel * std::max(std::abs(want), floor_abs));
}

}  // namespace

TEST_CASE("graded_grid: pinned hull, monotone, validated size") {
    auto g = graded_grid(256);
    REQUIRE(g.size() == 256);
    CHECK(g.front() == 1e-6);
    CHECK(g.back() == Approx(1.0 - 1e-6).margin(1e-18));
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
    // Refinement keeps the endpoints pinned.
    auto g2 = graded_grid(512);
    CHECK(g2.front() == g.front());
    CHECK(g2.back() == g.back());
    CHECK(test_support::thrown_category([] { graded_grid(15); }) == errc::range);
}

TEST_CASE("finite-difference weights: classic stencils") {
    const double x3[] = {-1.0, 0.0, 1.0};
    auto w1 = detail::fd_weights(0.0, x3, 3, 1);
    CHECK(w1[0] == Approx(-0.5).margin(1e-15));
    CHECK(w1[1] == Approx(0.0).margin(1e-15));
    CHECK(w1[2] == Approx(0.5).margin(1e-15));

    const double x5[] = {-2.0, -1.0, 0.0, 1.0, 2.0};
    auto w2 = detail::fd_weights(0.0, x5, 5, 2);
    const double want[] = {-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12};
    for (int j = 0; j < 5; ++j) CHECK(w2[j] == Approx(want[j]).margin(1e-13));
}

TEST_CASE("BetaTermFunction: evaluation and dominant-term envelope") {
    BetaTermFunction f{{{2.0, 1.0, 1.0}, {1.0, 0.5, 1.5}}};  // 2r + r^0.5 (1-r)^0.5
    CHECK(f(0.25) == Approx(2.0 * 0.25 + 0.5 * std::sqrt(0.75)).epsilon(1e-14));
    CHECK(f(0.25, 0.75) == Approx(f(0.25)).epsilon(1e-15));

    auto env = envelope_of(f);
    REQUIRE(env.a_list.size() == 1);
    CHECK(env.a_list[0] == 0.5);
    CHECK(env.beta_sum == 1.5);

    // Tie on a: the smaller b (stronger singularity at 1) dominates.
    BetaTermFunction tie{{{1.0, 0.5, 1.5}, {1.0, 0.5, 0.4}}};
    CHECK(envelope_of(tie).beta_sum == 0.4);

    CHECK(test_support::thrown_category([] { return envelope_of(BetaTermFunction{}); }) ==
          errc::range);
}

TEST_CASE("TypeEnvelope: minimum, multiplicity, log power") {
    TypeEnvelope env{{1.0, 0.5, 0.5 + 1e-12, 2.0}, 3.0};
    CHECK(env.alpha() == 0.5);
    CHECK(env.min_multiplicity() == 2);
    CHECK(env.log_power() == 1);
    TypeEnvelope simple{{1.0}, 1.0};
    CHECK(simple.log_power() == 0);
}

TEST_CASE("apply_diff_factor: closed-form action of (A' - rD)") {
    SECTION("single power r") {
        auto out = apply_diff_factor(0.5, kR);
        REQUIRE(out.terms.size() == 1);
        CHECK(out.terms[0].c == Approx(-0.5));
        CHECK(out.terms[0].a == 1.0);
        CHECK(out.terms[0].b == 1.0);
    }
    SECTION("shifted Beta term splits into two terms") {
        BetaTermFunction f{{{1.0, 1.125, 0.5}}};  // r^1.125 (1-r)^(-0.5)
        auto out = apply_diff_factor(0.625, f);
        REQUIRE(out.terms.size() == 2);
        CHECK(out.terms[0].c == Approx(-0.5));
        CHECK(out.terms[0].a == Approx(1.125));
        CHECK(out.terms[0].b == Approx(0.5));
        CHECK(out.terms[1].c == Approx(-0.5));
        CHECK(out.terms[1].a == Approx(2.125));
        CHECK(out.terms[1].b == Approx(-0.5));
    }
    SECTION("annihilation leaves the zero function") {
        BetaTermFunction f{{{3.0, 0.7, 1.0}}};
        CHECK(apply_diff_factor(0.7, f).terms.empty());
    }
}

TEST_CASE("GridFunction: construction guards") {
    auto nodes = graded_grid(32);
    std::vector<double> vals(32, 1.0);
    CHECK_NOTHROW(GridFunction(nodes, vals, TypeEnvelope{{0.0}, 1.0}));

    CHECK(test_support::thrown_category([&] {
              return GridFunction(std::vector<double>(nodes.begin(), nodes.begin() + 8),
                                  std::vector<double>(8, 1.0), TypeEnvelope{{0.0}, 1.0});
          }) == errc::range);
    CHECK(test_support::thrown_category([&] {
              return GridFunction(nodes, std::vector<double>(31, 1.0), TypeEnvelope{{0.0}, 1.0});
          }) == errc::range);
    auto bad = nodes;
    std::swap(bad[3], bad[4]);
    CHECK(test_support::thrown_category(
              [&] { return GridFunction(bad, vals, TypeEnvelope{{0.0}, 1.0}); }) == errc::range);
    auto nan_vals = vals;
    nan_vals[7] = std::nan("");
    CHECK(test_support::thrown_category(
              [&] { return GridFunction(nodes, nan_vals, TypeEnvelope{{0.0}, 1.0}); }) ==
          errc::range);
}

TEST_CASE("grid_eval: exactness and hull checks") {
    auto nodes = graded_grid(64);
    SECTION("stored values reproduced at nodes") {
        std::vector<double> vals(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) vals[i] = std::cos(3.0 * nodes[i]);
        GridFunction h(nodes, vals, TypeEnvelope{{0.0}, 1.0});
        for (std::size_t i = 0; i < nodes.size(); i += 7)
            CHECK(grid_eval(h, nodes[i]) == vals[i]);
    }
    SECTION("linear data interpolates exactly between nodes") {
        std::vector<double> vals(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) vals[i] = 2.0 * nodes[i] + 0.25;
        GridFunction h(nodes, vals, TypeEnvelope{{0.0}, 1.0});
        for (std::size_t i = 0; i + 1 < nodes.size(); i += 5) {
            double mid = 0.5 * (nodes[i] + nodes[i + 1]);
            CHECK(grid_eval(h, mid) == Approx(2.0 * mid + 0.25).margin(1e-13));
        }
    }
    SECTION("smooth non-polynomial sampling: 1e-8 at an interior point") {
        auto big = graded_grid(256);
        std::vector<double> vals(big.size());
        for (std::size_t i = 0; i < big.size(); ++i) vals[i] = big[i] * std::log(1.0 / big[i]);
        GridFunction h(big, vals, TypeEnvelope{{1.0, 1.0}, 2.0});
        CHECK(grid_eval(h, 0.3) == Approx(0.3 * std::log(1.0 / 0.3)).margin(1e-8));
    }
    SECTION("outside the hull is a range error") {
        std::vector<double> vals(nodes.size(), 1.0);
        GridFunction h(nodes, vals, TypeEnvelope{{0.0}, 1.0});
        CHECK(test_support::thrown_category([&] { return grid_eval(h, 1e-9); }) == errc::range);
        CHECK(test_support::thrown_category([&] { return grid_eval(h, 1.0); }) == errc::range);
    }
}

TEST_CASE("convolve_pair: closed forms") {
    auto nodes = graded_grid(128);
    SECTION("r * r = r ln(1/r)") {
        auto h = convolve_pair(to_factor(kR), to_factor(kR), nodes);
        double sup = 0.0;
        for (double r : nodes) sup = std::max(sup, r * std::log(1.0 / r));
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            CAPTURE(nodes[i]);
            check_close(h.values()[i], nodes[i] * std::log(1.0 / nodes[i]), 1e-8, 1e-4 * sup);
        }
        CHECK(grid_eval(h, std::exp(-1.0)) == Approx(std::exp(-1.0)).margin(1e-8));
        // Envelope merge: both exponent lists, added (1-r) budgets.
        CHECK(h.envelope().a_list.size() == 2);
        CHECK(h.envelope().beta_sum == 2.0);
        CHECK(h.envelope().log_power() == 1);
    }
    SECTION("1 * 1 = ln(1/r)") {
        auto h = convolve_pair(to_factor(kOne), to_factor(kOne), nodes);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            CAPTURE(nodes[i]);
            check_close(h.values()[i], std::log(1.0 / nodes[i]), 1e-8, 1e-10);
        }
    }
}

TEST_CASE("convolve_pair: commutativity on all nodes") {
    auto nodes = graded_grid(96);
    BetaTermFunction f{{{1.0, 0.5, 1.0}}};
    BetaTermFunction g{{{1.0, 2.0, 0.3}}};
    auto fg = convolve_pair(to_factor(f), to_factor(g), nodes);
    auto gf = convolve_pair(to_factor(g), to_factor(f), nodes);
    double sup = 0.0;
    for (double v : fg.values()) sup = std::max(sup, std::abs(v));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        CAPTURE(nodes[i]);
        check_close(fg.values()[i], gf.values()[i], 1e-9, 1e-6 * sup);
    }
}

TEST_CASE("convolution is associative at interior nodes") {
    auto nodes = graded_grid(96);
    BetaTermFunction f1{{{1.0, 1.0, 1.0}}};
    BetaTermFunction f2{{{1.0, 0.5, 1.0}}};
    BetaTermFunction f3{{{1.0, 0.0, 0.5}}};
    auto h12 = convolve_pair(to_factor(f1), to_factor(f2), nodes);
    auto left = convolve_pair(to_factor(h12), to_factor(f3), nodes);
    auto h23 = convolve_pair(to_factor(f2), to_factor(f3), nodes);
    auto right = convolve_pair(to_factor(h23), to_factor(f1), nodes);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        double r = nodes[i];
        if (r < 0.01 || r > 0.99) continue;
        CAPTURE(r);
        CHECK(left.values()[i] == Approx(right.values()[i]).epsilon(1e-7));
    }
}

TEST_CASE("n-fold self-convolution of r has the factorial-log closed form") {
    auto nodes = graded_grid(256);
    for (int n = 2; n <= 5; ++n) {
        std::vector<BetaTermFunction> factors(n, kR);
        auto h = convolve_all(factors, nodes);
        double fact = 1.0;
        for (int j = 2; j < n; ++j) fact *= j;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            double r = nodes[i];
            double exact = r * std::pow(std::log(1.0 / r), n - 1) / fact;
            CAPTURE(n, r);
            if (r >= 0.01 && r <= 0.99)
                CHECK(std::abs(h.values()[i] - exact) <= 1e-8);  // interior: absolute
            else
                check_close(h.values()[i], exact, 1e-6, 1e-12);  // edge: relative guard
        }
        CHECK(h.envelope().alpha() == 1.0);
        CHECK(h.envelope().log_power() == n - 1);
        CHECK(h.envelope().beta_sum == Approx(static_cast<double>(n)));
    }
}

TEST_CASE("convolve_all: single factor is sampled directly") {
    auto nodes = graded_grid(64);
    BetaTermFunction f{{{1.0, 0.25, 0.375}}};
    auto h = convolve_all({f}, nodes);
    for (std::size_t i = 0; i < nodes.size(); ++i)
        CHECK(h.values()[i] == Approx(f(nodes[i])).epsilon(1e-14));
    CHECK(h.envelope().alpha() == 0.25);
    CHECK(h.envelope().beta_sum == 0.375);
    CHECK(test_support::thrown_category([&] { return convolve_all({}, nodes); }) == errc::range);
}

TEST_CASE("four singular factors with unit exponent budget convolve to a bounded function") {
    // Leading exponents {1/6, 1/2, 2/3, 11/12}, (1-r) budgets {5/12, 1/3, 1/6, 1/12}.
    std::vector<BetaTermFunction> factors = {
        {{{1.0, 1.0 / 6.0, 5.0 / 12.0}}},
        {{{1.0, 0.5, 1.0 / 3.0}}},
        {{{1.0, 2.0 / 3.0, 1.0 / 6.0}}},
        {{{1.0, 11.0 / 12.0, 1.0 / 12.0}}},
    };
    auto nodes = graded_grid(128);
    auto h = convolve_all(factors, nodes);
    double sup = 0.0;
    for (double v : h.values()) {
        REQUIRE(std::isfinite(v));
        sup = std::max(sup, std::abs(v));
    }
    // With the (1-r) budgets summing to exactly 1, the convolution tends to a
    // finite limit at r -> 1: the product of Gamma(b_i) (the iterated Beta
    // chain collapses, Gamma(sum b_i) = 1). The computed profile must stay
    // below that bound and reach it at the last node.
    double limit = std::exp(log_gamma(5.0 / 12.0) + log_gamma(1.0 / 3.0) +
                            log_gamma(1.0 / 6.0) + log_gamma(1.0 / 12.0));
    CHECK(sup <= limit * (1.0 + 1e-6));
    CHECK(h.values().back() == Approx(limit).epsilon(1e-5));
    CHECK(h.envelope().beta_sum == Approx(1.0));
    CHECK(h.envelope().alpha() == Approx(1.0 / 6.0));
}

TEST_CASE("Mellin transform turns convolution into a product") {
    auto nodes = graded_grid(192);
    SECTION("r * r against the closed transform") {
        auto h = convolve_pair(to_factor(kR), to_factor(kR), nodes);
        auto ev = make_evaluable(h);
        for (double z : {3.0, 5.0, 9.0}) {
            CAPTURE(z);
            double want = 1.0 / ((z + 1.0) * (z + 1.0));
            CHECK(mellin_numeric(ev, z) == Approx(want).epsilon(1e-8));
        }
    }
    SECTION("three mixed Beta-term factors") {
        std::vector<BetaTermFunction> factors = {
            {{{2.0, 0.5, 1.2}}},
            {{{1.0, 2.0, 0.3}}},
            {{{1.0, 1.0, 1.0}}},
        };
        auto h = convolve_all(factors, nodes);
        auto ev = make_evaluable(h);
        for (double z : {3.0, 5.0, 7.0, 11.0}) {
            double want = 1.0;
            for (const auto& f : factors)
                want *= f.terms[0].c * beta(z + f.terms[0].a, f.terms[0].b);
            CAPTURE(z);
            CHECK(mellin_numeric(ev, z) == Approx(want).epsilon(1e-7));
        }
    }
}

TEST_CASE("differential factor: closed-form push-through matches the grid route") {
    // (A' - rD)(f * g) computed (a) as (A' - rD)f * g with the operator applied
    // in closed form, and (b) as A' h - r h' on the grid with h = f * g.
    auto nodes = graded_grid(192);
    const double a_prime = 0.8;
    BetaTermFunction f{{{1.0, 1.0, 2.0}}};  // vanishes at 1, so the push-through is valid
    BetaTermFunction g{{{1.0, 0.5, 1.5}}};
    auto route_a = convolve_pair(to_factor(apply_diff_factor(a_prime, f)), to_factor(g), nodes);
    auto h = convolve_pair(to_factor(f), to_factor(g), nodes);
    auto dh = grid_derivative(h, 1);
    for (std::size_t i = 0; i < dh.nodes().size(); ++i) {
        double r = dh.nodes()[i];
        if (r < 0.01 || r > 0.99) continue;
        double grid_route = a_prime * h.values()[i + 2] - r * dh.values()[i];
        CAPTURE(r);
        CHECK(grid_eval(route_a, r) == Approx(grid_route).margin(1e-4 * (1.0 + std::abs(grid_route))));
    }
}

TEST_CASE("grid_derivative: stencil accuracy and envelope shift") {
    auto nodes = graded_grid(256);
    SECTION("powers are differentiated exactly") {
        std::vector<double> v2(nodes.size()), v3(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            v2[i] = nodes[i] * nodes[i];
            v3[i] = nodes[i] * nodes[i] * nodes[i];
        }
        GridFunction h2(nodes, v2, TypeEnvelope{{2.0}, 1.0});
        auto d1 = grid_derivative(h2, 1);
        for (std::size_t i = 0; i < d1.nodes().size(); ++i) {
            CAPTURE(d1.nodes()[i]);
            CHECK(d1.values()[i] == Approx(2.0 * d1.nodes()[i]).epsilon(1e-6));
        }
        GridFunction h3(nodes, v3, TypeEnvelope{{3.0}, 1.0});
        auto d2 = grid_derivative(h3, 2);
        for (std::size_t i = 0; i < d2.nodes().size(); ++i) {
            double r = d2.nodes()[i];
            // Second-difference roundoff (~eps/h^2) dominates in the last
            // ulp-spaced intervals; exactness is asserted away from them.
            if (r < 1e-3 || r > 1.0 - 1e-3) continue;
            CAPTURE(r);
            CHECK(d2.values()[i] == Approx(6.0 * r).epsilon(1e-6));
        }
    }
    SECTION("r ln(1/r): derivative within 1e-5 away from the edges") {
        std::vector<double> v(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) v[i] = nodes[i] * std::log(1.0 / nodes[i]);
        GridFunction h(nodes, v, TypeEnvelope{{1.0, 1.0}, 2.0});
        auto d = grid_derivative(h, 1);
        for (std::size_t i = 0; i < d.nodes().size(); ++i) {
            double r = d.nodes()[i];
            if (r < 0.02 || r > 0.98) continue;
            CAPTURE(r);
            CHECK(d.values()[i] == Approx(std::log(1.0 / r) - 1.0).epsilon(1e-5));
        }
    }
    SECTION("envelope shifts by the order, log power preserved") {
        std::vector<double> v(nodes.size(), 1.0);
        GridFunction h(nodes, v, TypeEnvelope{{1.0, 1.0}, 2.0});
        auto d = grid_derivative(h, 1);
        CHECK(d.envelope().alpha() == Approx(0.0).margin(1e-14));
        CHECK(d.envelope().min_multiplicity() == 2);
        CHECK(d.envelope().log_power() == 1);
        CHECK(d.envelope().beta_sum == Approx(1.0));
    }
    SECTION("order out of range") {
        std::vector<double> v(nodes.size(), 1.0);
        GridFunction h(nodes, v, TypeEnvelope{{1.0}, 2.0});
        CHECK(test_support::thrown_category([&] { return grid_derivative(h, 0); }) == errc::range);
        CHECK(test_support::thrown_category([&] { return grid_derivative(h, 4); }) == errc::range);
    }
}

TEST_CASE("envelope_ratio: law comparisons") {
    SECTION("r * r stays below its envelope law, saturating near 1") {
        auto nodes = graded_grid(256);
        auto h = convolve_pair(to_factor(kR), to_factor(kR), nodes);
        auto er = envelope_ratio(h, 0);
        CHECK(er.profile.size() == nodes.size());
        CHECK(er.max_ratio <= 1.0 + 1e-3);
        CHECK(er.max_ratio >= 0.9);
        // Refinement stability of the max.
        auto h2 = convolve_pair(to_factor(kR), to_factor(kR), graded_grid(512));
        auto er2 = envelope_ratio(h2, 0);
        CHECK(std::abs(er2.max_ratio - er.max_ratio) <= 0.05 * er.max_ratio);
    }
    SECTION("a pure Beta term matching its own envelope has ratio 1") {
        auto nodes = graded_grid(64);
        BetaTermFunction f{{{1.0, 0.6, 1.1}}};
        auto h = convolve_all({f}, nodes);
        auto er = envelope_ratio(h, 0);
        for (const auto& [r, ratio] : er.profile) {
            CAPTURE(r);
            CHECK(ratio == Approx(1.0).epsilon(1e-9));
        }
    }
    SECTION("derivative ratios are restricted to the trust window") {
        auto nodes = graded_grid(256);
        auto h = convolve_pair(to_factor(kR), to_factor(kR), nodes);
        auto er = envelope_ratio(h, 1);
        REQUIRE(!er.profile.empty());
        for (const auto& [r, ratio] : er.profile) {
            CHECK(r >= 1e-3);
            CHECK(r <= 1.0 - 1e-3);
            CHECK(std::isfinite(ratio));
        }
    }
}

TEST_CASE("convolve_pair: error paths") {
    auto nodes = graded_grid(32);
    SECTION("non-integrable factor envelope") {
        BetaTermFunction bad{{{1.0, 0.5, 0.0}}};  // (1-r)^(-1) is not integrable
        CHECK(test_support::thrown_category([&] {
                  return convolve_pair(to_factor(bad), to_factor(kR), nodes);
              }) == errc::range);
    }
    SECTION("quadrature exhaustion reports the node") {
        BetaTermFunction rough{{{1.0, 0.0, 0.05}}};
        QuadratureSpec qs;
        qs.relative_tolerance = 1e-14;
        qs.max_levels = 2;
        try {
            convolve_pair(to_factor(rough), to_factor(rough), nodes, qs);
            FAIL("expected an accuracy error");
        } catch (const error& e) {
            CHECK(e.category() == errc::accuracy);
            CHECK(std::string(e.what()).find("node") != std::string::npos);
        }
    }
}
