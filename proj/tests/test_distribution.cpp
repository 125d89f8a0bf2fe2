#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "catch2/catch_amalgamated.hpp"

#include "convex_tail/distribution.hpp"

using namespace convex_tail;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Independent route: tanh-sinh over the upper quantile, never touching the
// library's dyadic Gauss-Kronrod path. Returns int_0^v H*(w) dw.
double oracle_upper_integral(const Distribution& d, double v)
{
    boost::math::quadrature::tanh_sinh<double> ts(15);
    auto f = [&](double w) { return d.upper_quantile(w); };
    return ts.integrate(f, 0.0, v, 1e-12);
}

std::vector<Distribution> parametric_laws()
{
    return {Distribution::normal(0.3, 1.7), Distribution::exponential(2.0), Distribution::uniform(-1.0, 3.0),
            Distribution::pareto(3.0, 1.5), Distribution::lognormal(0.2, 0.6)};
}

std::vector<Distribution> all_laws()
{
    auto laws = parametric_laws();
    laws.push_back(Distribution::empirical({3.0, 1.0, 2.0, 2.0, 5.0}));
    laws.push_back(Distribution::atomic_mixture({{-1.0, 0.2}, {0.5, 0.3}, {4.0, 0.5}}));
    laws.push_back(Distribution::quantile_grid({0.1, 0.4, 0.6, 0.9}, {0.0, 1.0, 1.0, 4.0}));
    laws.push_back(Distribution::spliced(Distribution::exponential(1.0), 1.0, std::exp(-1.0), 2.0));
    laws.push_back(Distribution::shifted(Distribution::normal(0.0, 1.0), 2.5));
    return laws;
}

}  // namespace

TEST_CASE("quantile examples", "[distribution][quantile]")
{
    CHECK(Distribution::uniform(0.0, 1.0).quantile(0.25) == 0.25);
    CHECK_THAT(Distribution::exponential(1.0).quantile(1.0 - std::exp(-1.0)), WithinRel(1.0, 1e-14));
    const auto coin = Distribution::atomic_mixture({{0.0, 0.5}, {1.0, 0.5}});
    CHECK(coin.quantile(0.5) == 0.0);
    CHECK(coin.quantile(0.5000001) == 1.0);
}

TEST_CASE("quantile rejects arguments outside (0,1)", "[distribution][quantile]")
{
    const auto d = Distribution::normal(0.0, 1.0);
    for (double x : {0.0, 1.0, -0.1, 1.5, std::nan("")}) {
        CHECK_THROWS_AS(d.quantile(x), std::domain_error);
        CHECK_THROWS_AS(d.upper_quantile(x), std::domain_error);
    }
}

TEST_CASE("upper quantile examples", "[distribution][quantile]")
{
    const auto e = Distribution::exponential(1.0);
    const auto p = Distribution::pareto(2.0, 1.0);
    for (double x : {1e-9, 0.01, 0.3, 0.77}) {
        CHECK_THAT(e.upper_quantile(x), WithinRel(-std::log(x), 1e-14));
        CHECK_THAT(p.upper_quantile(x), WithinRel(std::pow(x, -0.5), 1e-14));
    }
    CHECK(Distribution::uniform(0.0, 1.0).upper_quantile(0.5) == 0.5);
}

TEST_CASE("cdf examples", "[distribution][cdf]")
{
    CHECK(Distribution::normal(0.0, 1.0).cdf(0.0) == 0.5);
    CHECK_THAT(Distribution::exponential(1.0).cdf(1.0), WithinRel(1.0 - std::exp(-1.0), 1e-15));
    CHECK_THAT(Distribution::empirical({1.0, 2.0, 3.0}).cdf(2.0), WithinAbs(2.0 / 3.0, 1e-15));
}

TEST_CASE("empirical quantile is the left-continuous step through order statistics", "[distribution]")
{
    const auto d = Distribution::empirical({4.0, 1.0, 3.0, 2.0});
    CHECK(d.quantile(0.25) == 1.0);
    CHECK(d.quantile(0.2500001) == 2.0);
    CHECK(d.quantile(0.5) == 2.0);
    CHECK(d.quantile(1.0 - 1e-12) == 4.0);
    CHECK(d.upper_quantile(0.25) == 3.0);
    CHECK(d.upper_quantile(0.2499) == 4.0);
}

TEST_CASE("tail expectation examples", "[distribution][tail]")
{
    const auto e = tail_expectation(Distribution::exponential(1.0), 1.0, true);
    CHECK_THAT(e.value, WithinRel(2.0, 1e-14));
    CHECK_THAT(e.tail_prob, WithinRel(std::exp(-1.0), 1e-15));

    const auto u = tail_expectation(Distribution::uniform(0.0, 1.0), 0.5, true);
    CHECK_THAT(u.value, WithinAbs(0.75, 1e-15));
    CHECK_THAT(u.tail_prob, WithinAbs(0.5, 1e-15));

    const auto coin = Distribution::atomic_mixture({{0.0, 0.5}, {1.0, 0.5}});
    const auto c = tail_expectation(coin, 1.0, false);
    CHECK(c.value == 1.0);
    CHECK(c.tail_prob == 0.5);
    CHECK_THROWS_AS(tail_expectation(coin, 1.0, true), empty_tail);
}

TEST_CASE("stop-loss examples", "[distribution][stop_loss]")
{
    const auto e = Distribution::exponential(1.0);
    for (double t : {0.0, 0.5, 3.0, 10.0}) {
        CHECK_THAT(e.stop_loss(t), WithinRel(std::exp(-t), 1e-14));
    }
    CHECK_THAT(Distribution::uniform(0.0, 1.0).stop_loss(0.0), WithinAbs(0.5, 1e-15));
    CHECK_THAT(Distribution::normal(0.0, 1.0).stop_loss(0.0), WithinRel(1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-14));
}

TEST_CASE("upper mean closed forms", "[distribution][upper_mean]")
{
    const auto u = Distribution::uniform(0.0, 1.0);
    const auto e = Distribution::exponential(1.0);
    const auto p = Distribution::pareto(2.0, 1.0);
    for (double x : {0.001, 0.1, 0.5, 0.9, 0.999}) {
        CHECK_THAT(upper_mean(u, x), WithinRel((1.0 + x) / 2.0, 1e-10));
        CHECK_THAT(upper_mean(e, x), WithinRel(1.0 - std::log1p(-x), 1e-10));
        // through H*: (1/v) int_0^v u^{-1/2} du = 2 v^{-1/2}
        const double v = x;
        CHECK_THAT(upper_average(p, v), WithinRel(2.0 / std::sqrt(v), 1e-10));
    }
}

TEST_CASE("sample is seeded and matches moments", "[distribution][sample]")
{
    const auto u = Distribution::uniform(0.0, 1.0);
    CHECK_THROWS_AS(sample(u, 0, 1), std::invalid_argument);
    const auto a = sample(u, 100000, 42);
    const auto b = sample(u, 100000, 42);
    CHECK(a == b);
    const double mean_u = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
    CHECK(std::abs(mean_u - 0.5) < 0.01);
    const auto e = sample(Distribution::exponential(1.0), 100000, 7);
    const double mean_e = std::accumulate(e.begin(), e.end(), 0.0) / e.size();
    CHECK(std::abs(mean_e - 1.0) < 0.02);
}

TEST_CASE("quantile is monotone on a probe grid", "[distribution][property]")
{
    for (const auto& d : all_laws()) {
        INFO(d.describe());
        double prev_q = -std::numeric_limits<double>::infinity();
        double prev_u = std::numeric_limits<double>::infinity();
        for (int i = 1; i < 1000; ++i) {
            const double x = i / 1000.0;
            const double qv = d.quantile(x);
            const double uv = d.upper_quantile(x);
            CHECK(qv >= prev_q);
            CHECK(uv <= prev_u);
            prev_q = qv;
            prev_u = uv;
        }
    }
}

TEST_CASE("stop-loss agrees with the integral of the quantile above F(t)", "[distribution][property]")
{
    std::mt19937_64 rng(11);
    for (const auto& d : parametric_laws()) {
        INFO(d.describe());
        std::uniform_real_distribution<double> level(0.02, 0.98);
        for (int i = 0; i < 50; ++i) {
            const double t = d.quantile(level(rng));
            const double tail = d.survival(t);
            const double oracle = oracle_upper_integral(d, tail) - t * tail;
            CHECK_THAT(d.stop_loss(t), WithinAbs(oracle, 1e-8 * std::max(1.0, std::abs(oracle))));
        }
    }
}

TEST_CASE("stop-loss generic route matches atom sums", "[distribution][property]")
{
    for (const auto& d : all_laws()) {
        INFO(d.describe());
        for (int i = 1; i < 50; ++i) {
            const double t = d.quantile(i / 50.0);
            const double tail = d.survival(t);
            const double via_integral = d.upper_integral(tail) - t * tail;
            CHECK_THAT(d.stop_loss(t), WithinAbs(via_integral, 1e-9 * std::max(1.0, std::abs(t))));
        }
    }
}

TEST_CASE("upper mean dominates the quantile", "[distribution][property]")
{
    for (const auto& d : all_laws()) {
        INFO(d.describe());
        for (int i = 1; i < 100; ++i) {
            const double x = i / 100.0;
            CHECK(upper_mean(d, x) >= d.quantile(x) - 1e-12 * std::max(1.0, std::abs(d.quantile(x))));
        }
    }
}

TEST_CASE("inverse transform round trip", "[distribution][property]")
{
    for (const auto& d : parametric_laws()) {
        INFO(d.describe());
        for (int i = 1; i <= 100; ++i) {
            const double x = (i - 0.5) / 100.0;
            CHECK_THAT(d.cdf(d.quantile(x)), WithinAbs(x, 1e-9));
        }
    }
}

TEST_CASE("total expectation decomposition", "[distribution][property]")
{
    for (const auto& d : parametric_laws()) {
        INFO(d.describe());
        for (double level : {0.05, 0.3, 0.5, 0.8, 0.97}) {
            const double s = d.quantile(level);
            const auto upper = tail_expectation(d, s, true);
            const double below_prob = d.cdf(s);
            const double below_mean = d.lower_integral(below_prob) / below_prob;
            CHECK_THAT(upper.value * upper.tail_prob + below_mean * below_prob,
                       WithinAbs(d.mean(), 1e-9 * std::max(1.0, std::abs(d.mean()))));
        }
    }
}

TEST_CASE("integrals of the quantile reproduce the mean", "[distribution]")
{
    for (const auto& d : all_laws()) {
        INFO(d.describe());
        const double m = d.mean();
        CHECK_THAT(d.upper_integral(1.0), WithinAbs(m, 1e-10 * std::max(1.0, std::abs(m))));
        CHECK_THAT(d.lower_integral(1.0), WithinAbs(m, 1e-10 * std::max(1.0, std::abs(m))));
        CHECK_THAT(d.lower_integral(0.3) + d.upper_integral(0.7), WithinAbs(m, 1e-10 * std::max(1.0, std::abs(m))));
    }
}

TEST_CASE("construction rejects invalid laws", "[distribution]")
{
    CHECK_THROWS_AS(Distribution::pareto(1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Distribution::normal(0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(Distribution::uniform(1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Distribution::atomic_mixture({{0.0, 0.5}, {1.0, 0.4}}), std::invalid_argument);
    CHECK_THROWS_AS(Distribution::atomic_mixture({{0.0, 1.0}, {1.0, 0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(Distribution::quantile_grid({0.5, 0.4}, {0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(Distribution::quantile_grid({0.4, 0.5}, {1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(Distribution::empirical({}), std::invalid_argument);
}

TEST_CASE("quantile grid interpolates and extends linearly", "[distribution][grid]")
{
    const auto g = Distribution::quantile_grid({0.25, 0.75}, {1.0, 2.0});
    // slope 2 extends to H(0) = 0.5, H(1) = 2.5: uniform on [0.5, 2.5]
    CHECK_THAT(g.quantile(0.5), WithinAbs(1.5, 1e-15));
    CHECK_THAT(g.quantile(0.1), WithinAbs(0.7, 1e-15));
    CHECK_THAT(g.mean(), WithinAbs(1.5, 1e-15));
    CHECK_THAT(g.cdf(2.0), WithinAbs(0.75, 1e-15));
    CHECK_THAT(g.stop_loss(2.0), WithinAbs(0.0625, 1e-15));
    CHECK_FALSE(g.has_atoms());

    const auto flat = Distribution::quantile_grid({0.1, 0.4, 0.6, 0.9}, {0.0, 1.0, 1.0, 4.0});
    const auto atoms = flat.atoms();
    REQUIRE(atoms.size() == 1);
    CHECK(atoms[0].value == 1.0);
    CHECK_THAT(atoms[0].probability, WithinAbs(0.2, 1e-15));
    CHECK_THAT(flat.survival(1.0), WithinAbs(0.4, 1e-15));
    CHECK_THAT(flat.survival_inclusive(1.0), WithinAbs(0.6, 1e-15));
}

TEST_CASE("spliced law keeps the body and collapses the tail", "[distribution]")
{
    const double tail = std::exp(-1.0);
    const auto x = Distribution::spliced(Distribution::exponential(1.0), 1.0, tail, 2.0);
    CHECK(x.survival_inclusive(2.0) == tail);
    CHECK(x.survival(2.0) == 0.0);
    CHECK_THAT(x.mean(), WithinAbs(1.0, 1e-15));
    CHECK_THAT(x.cdf(0.5), WithinAbs(1.0 - std::exp(-0.5), 1e-15));
    CHECK(x.quantile(0.9) == 2.0);
}
