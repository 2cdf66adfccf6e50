#include "spinboson/error.hpp"
#include "spinboson/gfunction.hpp"
#include "spinboson/symmetry.hpp"
#include "spinboson/rootfind.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace spinboson;

namespace {

ModelParams make(std::vector<double> w, std::vector<double> g, double delta) {
    return validate(RawParams{std::move(w), std::move(g), delta, ModelKind::LinearSpinBoson});
}

ModelParams two_mode() { return make({1.0, 0.92}, {0.7, 0.78}, 0.68); }

double f_ref(const ModelParams& p, double x, const std::vector<int>& n) {
    double nw = 0.0, s = 0.0;
    for (std::size_t j = 0; j < n.size(); ++j) {
        nw += n[j] * p.omegas()[j];
        s += p.couplings()[j] * p.couplings()[j] / p.omegas()[j];
    }
    const double d = p.delta();
    return 2.0 * s + (nw - x + d * d / (x - nw)) / 2.0;
}

// Two-mode table straight from the raw recurrence: at each level the q+1
// recurrence rows plus the tie B_(q+1,0) = B_(0,q+1), solved densely.
std::vector<std::vector<double>> two_mode_table(const ModelParams& p, double x, int levels) {
    const double g1 = p.couplings()[0], g2 = p.couplings()[1];
    std::vector<std::vector<double>> b{{1.0}};
    auto at = [&](int a, int c) -> double {
        if (a < 0 || c < 0) return 0.0;
        return b[a + c][a];
    };
    for (int q = 0; q < levels; ++q) {
        const int unknowns = q + 2;
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(q + 2, unknowns);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(q + 2);
        for (int a = 0; a <= q; ++a) {
            const int c = q - a;
            // unknown index = first entry of the level q+1 multi-index
            m(a, a + 1) += g1 * (a + 1);
            m(a, a) += g2 * (c + 1);
            rhs(a) = f_ref(p, x, {a, c}) * at(a, c) - g1 * at(a - 1, c) - g2 * at(a, c - 1);
        }
        m(q + 1, q + 1) = 1.0;
        m(q + 1, 0) = -1.0;
        Eigen::VectorXd sol = m.fullPivLu().solve(rhs);
        b.emplace_back(sol.data(), sol.data() + unknowns);
    }
    return b;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

} // namespace

TEST_CASE("f_term matches its closed form and refuses poles") {
    const auto p = two_mode();
    for (double x : {-0.1, 0.5, 1.3}) {
        for (const auto& n : {std::vector<int>{0, 0}, {1, 0}, {2, 3}}) {
            CHECK(f_term(p, x, MultiIndex(n)) == doctest::Approx(f_ref(p, x, n)).epsilon(1e-14));
        }
    }
    CHECK_THROWS_AS(f_term(p, 1.92, MultiIndex({1, 1})), PoleProximity);
    CHECK_THROWS_AS(f_term(p, 1.0 + 1e-12, MultiIndex({1, 0})), PoleProximity);
}

TEST_CASE("zero coupling leaves 1 -+ Delta/X") {
    const auto p = make({1.0, 0.92}, {0.0, 0.0}, 0.68);
    for (double x : {-0.5, 0.3, 1.7, 2.9}) {
        CHECK(evaluate_G(p, ParitySector::Plus, x, 1e-12).value == doctest::Approx(1 - 0.68 / x));
        CHECK(evaluate_G(p, ParitySector::Minus, x, 1e-12).value ==
              doctest::Approx(1 + 0.68 / x));
    }
}

TEST_CASE("single mode coefficients follow the three-term recurrence") {
    const auto p = make({1.0}, {0.7}, 0.68);
    for (double x : {-0.3, 0.45, 1.6, 2.71}) {
        const auto table = build_coefficients(p, x, 25);
        const auto ref = oracle::rabi_coefficients(1.0, 0.7, 0.68, x, 25);
        for (int n = 0; n <= 25; ++n) {
            CHECK(rel(table.coefficient(MultiIndex({n})), double(ref[n])) < 1e-11);
        }
    }
}

TEST_CASE("single mode G agrees with the direct series") {
    const auto p = make({1.0}, {0.7}, 0.68);
    for (double x = -0.45; x < 4.0; x += 0.173) {
        for (auto s : {ParitySector::Plus, ParitySector::Minus}) {
            const auto ev = evaluate_G(p, s, x, 1e-14);
            REQUIRE(ev.converged);
            const double ref = oracle::rabi_G(1.0, 0.7, 0.68, x, sign_of(s));
            CHECK(rel(ev.value, ref) < 1e-10);
        }
    }
}

TEST_CASE("an uncoupled mode drops out") {
    const auto one = make({1.0}, {0.7}, 0.68);
    const auto two = make({1.0, 0.92}, {0.7, 0.0}, 0.68);
    const auto table = build_coefficients(two, 0.8, 6);
    CHECK(table.active_modes() == std::vector<std::size_t>{0});
    CHECK(table.coefficient(MultiIndex({2, 1})) == 0.0);
    for (double x : {-0.2, 0.37, 1.41, 2.5}) {
        const double a = evaluate_G(one, ParitySector::Minus, x, 1e-13).value;
        const double b = evaluate_G(two, ParitySector::Minus, x, 1e-13).value;
        CHECK(rel(a, b) < 1e-13);
    }
}

TEST_CASE("two mode coefficients match a dense solve of the raw recurrence") {
    const auto p = two_mode();
    for (double x : {-0.05, 0.5, 1.47, 2.33}) {
        const int levels = 10;
        const auto table = build_coefficients(p, x, levels);
        const auto ref = two_mode_table(p, x, levels);
        for (int q = 1; q <= levels; ++q) {
            double scale = 1.0;
            for (double v : ref[q]) scale = std::max(scale, std::abs(v));
            for (int a = 0; a <= q; ++a) {
                const double got = table.coefficient(MultiIndex({a, q - a}));
                CHECK(std::abs(got - ref[q][a]) / scale < 1e-9);
            }
        }
        for (int q = 1; q <= levels; ++q) {
            CHECK(table.coefficient(MultiIndex({q, 0})) ==
                  doctest::Approx(table.coefficient(MultiIndex({0, q}))).epsilon(1e-12));
        }
    }
}

TEST_CASE("three mode table satisfies the recurrence and its ties") {
    const auto p = make({1.0, 0.92, 0.81}, {0.31, 0.22, 0.17}, 0.55);
    const double x = 0.74;
    const int levels = 7;
    const auto table = build_coefficients(p, x, levels);
    for (const auto& d : table.diagnostics()) {
        CHECK(d.rank == d.unknowns);
        CHECK_FALSE(d.underdetermined);
        CHECK(d.residual < 1e-9);
    }
    auto b = [&](const std::vector<int>& n) {
        for (int e : n) {
            if (e < 0) return 0.0;
        }
        return table.coefficient(MultiIndex(n));
    };
    for (int q = 0; q < levels; ++q) {
        for (const auto& n : oracle::tuples_with_sum(3, q)) {
            double lhs = 0.0, rhs = f_ref(p, x, n) * b(n), scale = std::abs(rhs);
            for (std::size_t j = 0; j < 3; ++j) {
                auto up = n, down = n;
                ++up[j];
                --down[j];
                const double gj = p.couplings()[j];
                lhs += gj * (n[j] + 1) * b(up);
                rhs -= gj * b(down);
                scale = std::max({scale, std::abs(gj * b(up)), std::abs(gj * b(down))});
            }
            CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, scale));
        }
    }
    CHECK(b({4, 0, 0}) == doctest::Approx(b({0, 4, 0})).epsilon(1e-9));
    CHECK(b({0, 0, 4}) == doctest::Approx(b({0, 4, 0})).epsilon(1e-9));
}

TEST_CASE("both tie rules coincide for two modes") {
    const auto p = two_mode();
    GOptions all;
    all.tie_rule = TieRule::AllGroups;
    for (double x : {0.3, 1.7}) {
        const double a = evaluate_G(p, ParitySector::Plus, x, 1e-12).value;
        const double b = evaluate_G(p, ParitySector::Plus, x, 1e-12, all).value;
        CHECK(rel(a, b) < 1e-12);
    }
}

TEST_CASE("G is invariant under exchanging modes") {
    const auto p = two_mode();
    const auto q = swap_modes(p, 0, 1);
    for (double x = -0.09; x < 3.1; x += 0.0731) {
        for (auto s : {ParitySector::Plus, ParitySector::Minus}) {
            const auto a = evaluate_G(p, s, x, 1e-13);
            const auto b = evaluate_G(q, s, x, 1e-13);
            REQUIRE(a.converged);
            CHECK(std::abs(a.value - b.value) <= 1e-10 * std::max(1.0, std::abs(a.value)));
        }
    }
}

TEST_CASE("a runaway three-mode series is reported, not summed") {
    const auto p3 = make({1.0, 0.92, 0.81}, {0.31, 0.22, 0.17}, 0.55);
    for (double x : {-0.2, 0.6, 1.3}) {
        const auto ev = evaluate_G(p3, ParitySector::Minus, x, 1e-13);
        CHECK_FALSE(ev.converged);
        CHECK(ev.diverged);
        CHECK(ev.max_level < 40);
    }
    CHECK_THROWS_AS(refine_zero(p3, ParitySector::Minus, {0.5, 0.7}, ScanConfig{}), NotConverged);

    // at X = n + Delta one level cancels exactly; that is not a divergence
    const auto rabi = make({1.0}, {0.7}, 0.68);
    for (double x : {1.68, 2.68}) {
        const auto ev = evaluate_G(rabi, ParitySector::Plus, x, 1e-12);
        CHECK(ev.converged);
        CHECK(std::abs(ev.value - oracle::rabi_G(1.0, 0.7, 0.68, x, 1)) < 1e-10);
    }
}

TEST_CASE("series converges across the two-mode window in extended precision") {
    const auto p = two_mode();
    int deepest = 0;
    for (double x = -0.1; x <= 3.1; x += 0.0137) {
        for (auto s : {ParitySector::Plus, ParitySector::Minus}) {
            const auto ev = evaluate_G(p, s, x, 1e-12);
            CHECK(ev.converged);
            deepest = std::max(deepest, ev.max_level);
        }
    }
    CHECK(deepest < 120);
}

TEST_CASE("convergence gate") {
    const auto strong = make({1.0, 0.92}, {1.0, 0.2}, 0.68);
    CHECK_THROWS_AS(check_convergence_gate(strong, {}), ConvergenceGateError);
    CHECK_THROWS_AS(evaluate_G(strong, ParitySector::Plus, 0.5, 1e-12), ConvergenceGateError);
    try {
        evaluate_G(strong, ParitySector::Plus, 0.5, 1e-12);
    } catch (const ConvergenceGateError& e) {
        CHECK(e.max_ratio() == doctest::Approx(1.0));
    }
    GOptions forced;
    forced.force_convergence_gate = true;
    forced.level_cap = 40;
    CHECK_NOTHROW(evaluate_G(strong, ParitySector::Plus, 0.5, 1e-12, forced));
}

TEST_CASE("hitting the level cap reports non-convergence") {
    GOptions capped;
    capped.level_cap = 3;
    const auto ev = evaluate_G(two_mode(), ParitySector::Plus, 0.5, 1e-14, capped);
    CHECK_FALSE(ev.converged);
    CHECK(ev.max_level == 3);
}

TEST_CASE("evaluation at a pole is refused") {
    CHECK_THROWS_AS(evaluate_G(two_mode(), ParitySector::Plus, 0.0, 1e-12), PoleProximity);
    CHECK_THROWS_AS(evaluate_G(two_mode(), ParitySector::Plus, 1.84, 1e-12), PoleProximity);
    try {
        evaluate_G(two_mode(), ParitySector::Minus, 0.92, 1e-12);
    } catch (const PoleProximity& e) {
        CHECK(e.pole() == doctest::Approx(0.92));
    }
}

TEST_CASE("pole list for the two-mode window") {
    const auto list = poles(two_mode(), 3.1);
    const std::vector<std::pair<double, std::vector<int>>> want = {
        {0.0, {0, 0}},  {0.92, {0, 1}}, {1.0, {1, 0}},  {1.84, {0, 2}}, {1.92, {1, 1}},
        {2.0, {2, 0}},  {2.76, {0, 3}}, {2.84, {1, 2}}, {2.92, {2, 1}}, {3.0, {3, 0}},
    };
    REQUIRE(list.entries.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(list.entries[i].x_pole == doctest::Approx(want[i].first).epsilon(1e-14));
        REQUIRE(list.entries[i].indices.size() == 1);
        CHECK(list.entries[i].indices[0] == MultiIndex(want[i].second));
    }
}

TEST_CASE("degenerate poles cluster") {
    const auto p = make({1.0, 0.5}, {0.2, 0.1}, 0.3);
    const auto list = poles(p, 1.01);
    REQUIRE(list.entries.size() == 3);
    CHECK(list.entries[2].x_pole == doctest::Approx(1.0));
    CHECK(list.entries[2].indices.size() == 2);
    // an uncoupled mode contributes no poles
    const auto lone = poles(make({1.0, 0.5}, {0.2, 0.0}, 0.3), 2.5);
    CHECK(lone.entries.size() == 3);
}

TEST_CASE("identical modes act as one collective mode") {
    const auto pair = make({1.0, 1.0}, {0.2, 0.2}, 0.68);
    const auto single = make({1.0}, {0.2 * std::sqrt(2.0)}, 0.68);
    for (double x : {-0.8, -0.3, 0.4, 1.7}) {
        const auto a = evaluate_G(pair, ParitySector::Plus, x, 1e-13);
        const auto b = evaluate_G(single, ParitySector::Plus, x, 1e-13);
        REQUIRE(a.converged);
        CHECK(rel(a.value, b.value) < 1e-12);
    }
    const auto table = build_coefficients(pair, 0.4, 3);
    CHECK(table.active_modes() == std::vector<std::size_t>{0});
    CHECK(table.coefficient(MultiIndex({0, 1})) == 0.0);
}
