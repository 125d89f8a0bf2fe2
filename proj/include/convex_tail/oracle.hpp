#pragma once

// Independent verification: every inequality is evaluated on the exact laws
// and again by Monte Carlo, plus two pair generators (random mean-preserving
// contractions and the log-space blow-up counterexample).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "convex_tail/distribution.hpp"
#include "convex_tail/envelope.hpp"
#include "convex_tail/errors.hpp"
#include "convex_tail/majorization.hpp"

namespace convex_tail {

enum class Method { quadrature, monte_carlo };

inline const char* to_string(Method m) { return m == Method::quadrature ? "quadrature" : "monte_carlo"; }

struct VerificationReport {
    std::string check_name;
    bool passed;
    double lhs;
    double rhs;
    double slack;  // rhs - lhs
    Method method;
    std::size_t samples;  // Monte Carlo only
    std::uint64_t seed;   // Monte Carlo only
    double tolerance;
    /// the threshold s, level x, or (x, R) the check was run at
    double parameter;
    double ratio;  // R for tail-ratio checks, 0 otherwise
};

inline VerificationReport make_report(std::string name, double lhs, double rhs, double tolerance, Method method,
                                      double parameter, double ratio = 0.0, std::size_t samples = 0,
                                      std::uint64_t seed = 0)
{
    return {std::move(name), lhs <= rhs + tolerance, lhs, rhs, rhs - lhs, method, samples, seed, tolerance,
            parameter, ratio};
}

/// Four binomial standard errors.
inline double binomial_tolerance(double p, std::size_t n)
{
    p = std::clamp(p, 0.0, 1.0);
    return 4.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

enum class Check { prop2, prop4, prop7 };

struct VerifyParams {
    /// thresholds s for the conditional tail bound; default: deciles of Y
    std::vector<double> thresholds;
    /// levels x for the quantile envelope; default: 0.1, ..., 0.9
    std::vector<double> levels;
    /// (x, R) pairs for the tail-ratio bound; default: x in {0.1, 0.5, 0.9}, R = 4
    std::vector<std::pair<double, double>> ratio_points;
    std::size_t mc_samples = 1'000'000;
};

/// Sorted Monte Carlo sample with tail counting.
class SortedSample {
public:
    SortedSample(const Distribution& d, std::size_t n, std::uint64_t seed) : values_(draw(d, n, seed))
    {
        std::sort(values_.begin(), values_.end());
    }

    std::size_t size() const { return values_.size(); }
    double fraction_above(double t) const { return count_from(std::upper_bound(values_.begin(), values_.end(), t)); }
    double fraction_at_least(double t) const
    {
        return count_from(std::lower_bound(values_.begin(), values_.end(), t));
    }
    double fraction_at_most(double t) const { return 1.0 - fraction_above(t); }

    /// Batches of 2^16 draws, each from its own engine seeded by (seed, batch),
    /// so the output does not depend on how batches are scheduled.
    static std::vector<double> draw(const Distribution& d, std::size_t n, std::uint64_t seed)
    {
        constexpr std::size_t batch = std::size_t{1} << 16;
        const std::size_t batches = (n + batch - 1) / batch;
        std::vector<double> out(n);
        auto work = [&](std::size_t first, std::size_t stride) {
            for (std::size_t b = first; b < batches; b += stride) {
                std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                                  static_cast<std::uint32_t>(b)};
                std::mt19937_64 engine(seq);
                const std::size_t end = std::min(n, (b + 1) * batch);
                for (std::size_t i = b * batch; i < end; ++i) {
                    out[i] = d.quantile(open_unit(engine()));
                }
            }
        };
        const std::size_t workers =
            std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), batches));
        std::vector<std::future<void>> jobs;
        for (std::size_t w = 1; w < workers; ++w) {
            jobs.push_back(std::async(std::launch::async, work, w, workers));
        }
        work(0, workers);
        for (auto& j : jobs) {
            j.get();
        }
        return out;
    }

private:
    double count_from(std::vector<double>::const_iterator it) const
    {
        return static_cast<double>(values_.end() - it) / static_cast<double>(values_.size());
    }

    std::vector<double> values_;
};

/// Evaluates the selected inequalities for the pair (X, Y), each by exact
/// evaluation on the laws and by Monte Carlo on X. Failures are reported,
/// never thrown. The first report certifies the order premise itself.
inline std::vector<VerificationReport> verify_bound(const Distribution& x_law, const Distribution& y_law,
                                                    const std::vector<Check>& checks, VerifyParams params,
                                                    std::uint64_t seed)
{
    if (params.thresholds.empty()) {
        for (int k = 1; k <= 9; ++k) {
            params.thresholds.push_back(y_law.quantile(k / 10.0));
        }
    }
    if (params.levels.empty()) {
        for (int k = 1; k <= 9; ++k) {
            params.levels.push_back(k / 10.0);
        }
    }
    if (params.ratio_points.empty()) {
        params.ratio_points = {{0.1, 4.0}, {0.5, 4.0}, {0.9, 4.0}};
    }
    const std::size_t n = params.mc_samples;

    std::vector<VerificationReport> reports;
    const OrderCheckReport order = icx_dominates(x_law, y_law);
    reports.push_back(
        make_report("icx_order", order.worst_slack, 0.0, order.tolerance, Method::quadrature, order.worst_t));

    const SortedSample mc(x_law, n, seed);
    auto has = [&](Check c) { return std::find(checks.begin(), checks.end(), c) != checks.end(); };

    if (has(Check::prop2)) {
        for (double s : params.thresholds) {
            const SharpBound b = sharp_tail_bound(y_law, s);
            const double lhs = b.degenerate ? x_law.survival(s) : x_law.survival_inclusive(b.threshold);
            const double lhs_mc = b.degenerate ? mc.fraction_above(s) : mc.fraction_at_least(b.threshold);
            reports.push_back(make_report("prop2", lhs, b.bound, 1e-9, Method::quadrature, s));
            reports.push_back(make_report("prop2", lhs_mc, b.bound, binomial_tolerance(b.bound, n),
                                          Method::monte_carlo, s, 0.0, n, seed));
        }
    }
    if (has(Check::prop4)) {
        for (double x : params.levels) {
            const double envelope = upper_mean(y_law, x);
            reports.push_back(make_report("prop4", x_law.quantile(x), envelope,
                                          1e-9 * std::max(1.0, std::abs(envelope)), Method::quadrature, x));
            // H_X(x) <= envelope  <=>  P{X <= envelope} >= x
            reports.push_back(make_report("prop4", x, mc.fraction_at_most(envelope), binomial_tolerance(x, n),
                                          Method::monte_carlo, x, 0.0, n, seed));
        }
    }
    if (has(Check::prop7)) {
        for (const auto& [x, R] : params.ratio_points) {
            const double t = upper_average(y_law, x);
            const double level = y_law.upper_quantile(x / R);
            if (level < t - 1e-9 * std::max(1.0, std::abs(t))) {
                // hypothesis not met: reported as its own failed check
                reports.push_back(make_report("prop7_hypothesis", t, level, 1e-9 * std::max(1.0, std::abs(t)),
                                              Method::quadrature, x, R));
                continue;
            }
            const double rhs = R * y_law.survival_inclusive(t);
            reports.push_back(make_report("prop7", x_law.survival(t), rhs, 1e-9, Method::quadrature, x, R));
            reports.push_back(make_report("prop7", mc.fraction_above(t), rhs,
                                          binomial_tolerance(std::min(1.0, rhs), n), Method::monte_carlo, x, R, n,
                                          seed));
        }
    }
    return reports;
}

/// Replaces the quantile function of d by its average on each cell of the
/// partition of (0,1) at the given sorted interior cut points. The result is a
/// conditional expectation of d, hence below d in the convex order.
inline Distribution contract_on_cells(const Distribution& d, const std::vector<double>& cuts)
{
    const double mean = d.mean();
    // G(a) = int_0^a H, computed in the coordinate that keeps the singular end at 0
    auto cumulative = [&](double a) {
        if (a <= 0.0) {
            return 0.0;
        }
        if (a >= 1.0) {
            return mean;
        }
        return a <= 0.5 ? d.lower_integral(a) : mean - d.upper_integral(1.0 - a);
    };
    std::vector<Atom> atoms;
    double prev_cut = 0.0;
    double prev_g = 0.0;
    for (std::size_t i = 0; i <= cuts.size(); ++i) {
        const double cut = i < cuts.size() ? cuts[i] : 1.0;
        const double width = cut - prev_cut;
        if (width <= 0.0) {
            continue;
        }
        const double g = cumulative(cut);
        // last cell: go through upper_integral directly so heavy tails keep precision
        const double integral = i < cuts.size() ? g - prev_g : d.upper_integral(1.0 - prev_cut);
        atoms.push_back({integral / width, width});
        prev_cut = cut;
        prev_g = g;
    }
    // widths telescope to 1 up to rounding; renormalize the last one exactly
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < atoms.size(); ++i) {
        total += atoms[i].probability;
    }
    atoms.back().probability = 1.0 - total;
    // a monotone H gives non-decreasing averages; enforce it against rounding
    for (std::size_t i = 1; i < atoms.size(); ++i) {
        atoms[i].value = std::max(atoms[i].value, atoms[i - 1].value);
    }
    return Distribution::atomic_mixture(std::move(atoms));
}

struct ContractionPair {
    Distribution x_law;
    Distribution y_law;
    std::vector<double> cuts;
};

/// Random mean-preserving contraction of y: (0,1) split at `cuts` uniform
/// points, H_Y averaged on each cell.
inline ContractionPair contraction_pair(const Distribution& y_law, std::size_t cuts, std::uint64_t seed)
{
    std::mt19937_64 engine(seed);
    std::vector<double> points(cuts);
    for (double& p : points) {
        p = open_unit(engine());
    }
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    return {contract_on_cells(y_law, points), y_law, points};
}

// ---------------------------------------------------------------------------
// Blow-up counterexample: Y(v) = v^{-1} (log(e/v))^{-2} on (0,1), averaged on
// the cells E_n = [e^{-n^2}, e^{-(n-1)^2}). The cell means increase with n, so
// they are H*_X on the cells. Y itself decreases only on (0, 1/e); past that
// H*_Y is its rearrangement.

/// log Y(v) for log v given, so that tiny v never underflows.
inline double counterexample_log_value(double log_v)
{
    return -log_v - 2.0 * std::log(1.0 - log_v);
}

inline double counterexample_value(double v) { return std::exp(counterexample_log_value(std::log(v))); }

/// log H*_Y(v) for log v given. Y decreases on (0, 1/e) and increases on
/// (1/e, 1) with Y(1) = 1, so below 1 the rearrangement collects both
/// branches: P{Y > y} = a(y) + 1 - b(y), where Y(a) = Y(b) = y.
inline double counterexample_log_upper_quantile(double log_v)
{
    const double log_y = counterexample_log_value(log_v);
    if (log_v < -1.0 && log_y >= 0.0) {
        return log_y;  // above every value of the increasing branch
    }
    // root of a monotone predicate on [lo, hi] by bisection, in log coordinates
    auto solve = [](double lo, double hi, auto above) {
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (above(mid) ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    auto tail = [&](double ly) {
        // decreasing branch: Y(a) = y with log a in (-inf, -1]
        const double la = solve(-50.0, -1.0, [&](double l) { return counterexample_log_value(l) > ly; });
        // increasing branch: Y(b) = y with log b in [-1, 0]
        const double lb = solve(-1.0, 0.0, [&](double l) { return counterexample_log_value(l) < ly; });
        return std::exp(la) + 1.0 - std::exp(lb);
    };
    const double v = std::exp(log_v);
    // H*(v) = y with tail(y) = v; tail decreases in y over [log Y(1/e), 0]
    return solve(counterexample_log_value(-1.0), 0.0, [&](double ly) { return tail(ly) > v; });
}

struct CounterexamplePair {
    int n_max;
    /// log |E_n|, n = 1..n_max
    std::vector<double> log_masses;
    /// int_{E_n} Y, exact
    std::vector<double> cell_integrals;
    /// log of the conditional mean of Y on E_n
    std::vector<double> log_cell_means;
    /// log Y at the cell ends e^{-(n-1)^2} and e^{-n^2}
    std::vector<double> log_cell_low;
    std::vector<double> log_cell_high;
    /// probe levels x = 1 - e^{-(n-1)^2}(1 - 1e-6), as log(1 - x)
    std::vector<double> log_probe_tail;
    /// H_X(x) / H_Y(x) at the probe levels
    std::vector<double> ratio_curve;
    /// log of the residual mass e^{-n_max^2} below the last cell
    double log_residual_mass;

    double partial_integral() const
    {
        double s = 0.0;
        for (double v : cell_integrals) {
            s += v;
        }
        return s;
    }
    /// log of (sum of cell masses + residual), evaluated by log-sum-exp
    double log_total_mass() const
    {
        double top = log_residual_mass;
        for (double l : log_masses) {
            top = std::max(top, l);
        }
        double acc = std::exp(log_residual_mass - top);
        for (double l : log_masses) {
            acc += std::exp(l - top);
        }
        return top + std::log(acc);
    }
    double max_ratio() const { return *std::max_element(ratio_curve.begin(), ratio_curve.end()); }
};

inline CounterexamplePair counterexample(int n_max)
{
    if (n_max < 2) {
        throw std::invalid_argument("counterexample: n_max must be at least 2");
    }
    if (static_cast<double>(n_max) * n_max > 1e8) {
        throw std::domain_error("counterexample: n_max^2 exceeds 1e8");
    }
    CounterexamplePair out{};
    out.n_max = n_max;
    out.log_residual_mass = -static_cast<double>(n_max) * n_max;
    for (int n = 1; n <= n_max; ++n) {
        const double a = static_cast<double>(n - 1) * (n - 1);  // -log of the cell's right end
        const double b = static_cast<double>(n) * n;            // -log of the cell's left end
        // log(e^{-a} - e^{-b}) = -a + log1p(-e^{-(b - a)})
        const double log_mass = -a + std::log1p(-std::exp(-(b - a)));
        // int Y over the cell, via u = log(e/v): 1/(1 + a) - 1/(1 + b)
        const double integral = (b - a) / ((1.0 + a) * (1.0 + b));
        const double log_mean = std::log(integral) - log_mass;
        out.log_masses.push_back(log_mass);
        out.cell_integrals.push_back(integral);
        out.log_cell_means.push_back(log_mean);
        out.log_cell_low.push_back(counterexample_log_value(-a));
        out.log_cell_high.push_back(counterexample_log_value(-b));
        const double log_probe = -a + std::log1p(-1e-6);
        out.log_probe_tail.push_back(log_probe);
        out.ratio_curve.push_back(std::exp(log_mean - counterexample_log_upper_quantile(log_probe)));
    }
    return out;
}

}  // namespace convex_tail
